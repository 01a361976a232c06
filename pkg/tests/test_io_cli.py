import json
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from generators import random_nilpotent, random_solvable
from solsoliton.algebra import Bracket
from solsoliton.cli import main, render
from solsoliton.config import RunConfig
from solsoliton.curvature import ricci_operator
from solsoliton.errors import InvalidGram, ParseError, SplittingMismatch
from solsoliton.io import parse_algebra, serialize

H3_JSON = '{"dim": 3, "brackets": [[1, 2, 3, 1]]}'
R31_JSON = '{"dim": 3, "brackets": [[1, 2, 2, 1], [1, 3, 3, 1]], "a_indices": [1]}'
NON_LIE = '{"dim": 3, "brackets": [[1, 2, 3, 1], [1, 3, 2, 1], [2, 3, 2, 1]]}'


def change_of_basis(mu, gram):
    """Structure constants in a Gram-Schmidt frame, written out by hand."""
    n = mu.dim
    lower = np.linalg.cholesky(gram)
    p = np.linalg.inv(lower).T          # columns: new frame in old coordinates
    assert np.allclose(p.T @ gram @ p, np.eye(n))
    p_inv = np.linalg.inv(p)
    c = np.zeros((n, n, n))
    for a in range(n):
        for b in range(n):
            c[a, b] = p_inv @ mu(p[:, a], p[:, b])
    return Bracket(c)


def test_parse_h3():
    mu, split = parse_algebra(H3_JSON)
    assert split is None
    assert mu.coeffs[0, 1, 2] == 1.0 and mu.coeffs[1, 0, 2] == -1.0


def test_parse_with_split():
    mu, split = parse_algebra(R31_JSON)
    assert split.a_idx == (0,) and split.n_idx == (1, 2)


def test_gram_diagonal():
    mu, _ = parse_algebra('{"dim": 3, "brackets": [[1, 2, 3, 1]], "gram": [[4,0,0],[0,1,0],[0,0,1]]}')
    assert mu.coeffs[0, 1, 2] == pytest.approx(0.5)
    assert mu.norm() ** 2 == pytest.approx(0.5)


def test_gram_matches_change_of_basis(rng):
    for _ in range(10):
        h = rng.normal(size=(3, 3))
        gram = h @ h.T + 0.5 * np.eye(3)
        text = json.dumps({"dim": 3, "brackets": [[1, 2, 3, 1]], "gram": gram.tolist()})
        mu, _ = parse_algebra(text)
        ref = change_of_basis(Bracket.from_entries(3, [(0, 1, 2, 1.0)]), gram)
        assert mu.allclose(ref, 1e-10)
        spectrum = lambda b: np.sort(np.linalg.eigvalsh(ricci_operator(b).Ric))
        assert np.allclose(spectrum(mu), spectrum(ref), atol=1e-10)


@pytest.mark.parametrize("text,where", [
    ('{"dim": 3, "brackets": [[1, 2, 3, 1], [1, 2, 3, 2]]}', "brackets[1]"),
    ('{"dim": 3, "brackets": [[1, 2, 3, 1], [2, 1, 3, 2]]}', "brackets[1]"),
    ('{"dim": 3, "brackets": [[1, 1, 3, 1]]}', "brackets[0]"),
    ('{"dim": 3, "brackets": [[1, 4, 3, 1]]}', "brackets[0]"),
    ('{"dim": 3, "brackets": [[1, 2, 3]]}', "brackets[0]"),
    ('{"dim": 3, "dim": 3}', "dim"),
    ('{"dim": 3, "extra": 1}', "extra"),
    ('{"brackets": []}', "dim"),
    ('[1, 2]', "$"),
])
def test_parse_errors(text, where):
    with pytest.raises(ParseError) as exc:
        parse_algebra(text)
    assert exc.value.location == where


def test_invalid_json_location():
    with pytest.raises(ParseError) as exc:
        parse_algebra('{"dim": 3,')
    assert "line 1" in exc.value.location


def test_invalid_gram():
    with pytest.raises(InvalidGram):
        parse_algebra('{"dim": 2, "gram": [[1, 2], [2, 1]]}')
    with pytest.raises(InvalidGram):
        parse_algebra('{"dim": 2, "gram": [[1, 0.5], [0, 1]]}')


def test_splitting_mismatch():
    with pytest.raises(SplittingMismatch):
        parse_algebra('{"dim": 3, "brackets": [[1, 2, 2, 1], [1, 3, 3, 1]], "a_indices": [2]}')


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.booleans())
def test_serialize_round_trip(seed, solvable):
    rng = np.random.default_rng(seed)
    if solvable:
        mu, split = random_solvable(rng, shear=False)
    else:
        mu, split = random_nilpotent(rng), None
    back, split2 = parse_algebra(serialize(mu, split))
    assert np.max(np.abs(back.coeffs - mu.coeffs)) <= 1e-15
    assert split2 == split


def test_run_config_validation():
    with pytest.raises(ValueError):
        RunConfig(tol_rank=0.0)
    with pytest.raises(ValueError):
        RunConfig(format="xml")


def test_render_formats():
    rep = {"a": 1, "b": {"c": [1, 2]}}
    assert json.loads(render(rep, "json")) == rep
    assert render(rep, "csv").splitlines()[0] == "key,value"
    assert "| b.c | [1, 2] |" in render(rep, "md")


@pytest.fixture
def files(tmp_path):
    out = {}
    for name, text in [("h3", H3_JSON), ("r31", R31_JSON), ("nonlie", NON_LIE),
                       ("dup", '{"dim": 3, "brackets": [[1, 2, 3, 1], [1, 2, 3, 2]]}'),
                       ("s4", '{"dim": 4, "brackets": [[1, 2, 2, 1], [1, 3, 3, -1], [2, 3, 4, 1]]}'),
                       ("r4", '{"dim": 4, "brackets": [[1, 2, 2, 1], [1, 3, 2, 1], [1, 3, 3, 1],'
                              ' [1, 4, 3, 1], [1, 4, 4, 1]]}')]:
        p = tmp_path / f"{name}.json"
        p.write_text(text)
        out[name] = str(p)
    return out


def run(capsys, argv):
    code = main(argv)
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def test_cli_check(capsys, files):
    code, out, _ = run(capsys, ["check", files["h3"]])
    assert code == 0
    assert json.loads(out)["c"] == pytest.approx(-1.5)
    code, _, err = run(capsys, ["check", files["nonlie"]])
    assert code == 2 and "NotLieAlgebra" in err
    code, _, err = run(capsys, ["check", files["dup"]])
    assert code == 2 and "brackets[1]" in err
    code, _, _ = run(capsys, ["check", files["r4"]])
    assert code == 1


def test_cli_missing_file(capsys, tmp_path):
    code, _, err = run(capsys, ["check", str(tmp_path / "nope.json")])
    assert code == 2 and "cannot read" in err


def test_cli_global_flags_either_side(capsys, files):
    a = run(capsys, ["--format", "csv", "check", files["h3"]])
    b = run(capsys, ["check", files["h3"], "--format", "csv"])
    assert a == b and a[1].startswith("key,value")


def test_cli_curvature_blockwise(capsys, files):
    code, out, _ = run(capsys, ["curvature", "--blockwise", files["r31"]])
    rep = json.loads(out)
    assert code == 0 and rep["blockwise"]["max_difference"] <= 1e-12
    assert np.allclose(rep["Ric"], -2 * np.eye(3))


def test_cli_derivations(capsys, files):
    code, out, _ = run(capsys, ["derivations", "--exact", files["h3"]])
    assert code == 0 and json.loads(out)["dim"] == 6


def test_cli_construct(capsys, files):
    code, out, _ = run(capsys, ["construct", files["h3"], "--derivation", "[[1,0,0],[0,1,0],[0,0,2]]"])
    rep = json.loads(out)
    assert code == 0 and rep["certificate"]["verdict"] == "Einstein"
    assert rep["bracket"]["a_indices"] == [1]
    code, _, err = run(capsys, ["construct", files["h3"], "--derivation", "[[1,0,0],[0,1,0],[0,0,1]]"])
    assert code == 2 and "NotDerivation" in err
    code, _, _ = run(capsys, ["construct", files["h3"]])
    assert code == 2


def test_cli_conditions(capsys, files):
    code, out, _ = run(capsys, ["conditions", files["r4"]])
    rep = json.loads(out)
    assert code == 0 and rep["agrees"] and not rep["iii_ad_normal"]["holds"]


def test_cli_flow_beta_strata(capsys, files):
    code, out, _ = run(capsys, ["flow", files["h3"], "--starts", "2", "--seed", "3"])
    traces = json.loads(out)
    assert code == 0 and len(traces) == 2
    assert all(abs(t["F"] - 3.0) <= 1e-6 for t in traces)
    code, out, _ = run(capsys, ["beta", files["h3"]])
    assert code == 0 and json.loads(out)["beta"] == [-1.0, -1.0, 1.0]
    code, out, _ = run(capsys, ["strata-check", files["h3"]])
    assert code == 0 and json.loads(out)["gate"]["holds"]
    code, out, _ = run(capsys, ["strata-check", files["h3"], "--beta=-0.5,-0.5,0"])
    assert code == 1 and not json.loads(out)["gate"]["holds"]
    code, _, _ = run(capsys, ["strata-check", files["h3"], "--beta", "1,0,0"])
    assert code == 2


def test_cli_catalog(capsys):
    code, out, _ = run(capsys, ["catalog", "--table", "dim3"])
    assert code == 0 and json.loads(out)["mismatches"] == 0
    code, out, _ = run(capsys, ["catalog", "--table", "dim4", "--format", "md"])
    assert code == 0 and out.startswith("| entry |")
    code, out, _ = run(capsys, ["catalog", "--entry", "s4l", "--param", "lambda=0.5"])
    assert code == 0 and json.loads(out)["rows"][0]["computed"]["einstein"] is True
    code, _, _ = run(capsys, ["catalog", "--entry", "s4l", "--param", "lambda=0.1"])
    assert code == 2
    code, out, _ = run(capsys, ["catalog", "--entry", "affc"])
    assert code == 0 and json.loads(out)["existence"][0] is True


def test_cli_example62(capsys):
    code, out, _ = run(capsys, ["example62"])
    assert code == 0 and json.loads(out)["ok"]


def test_cli_bad_arguments(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["nonsense"])
    assert exc.value.code == 2
    code, _, _ = run(capsys, ["--tol", "-1", "example62"])
    assert code == 2


def test_cli_output_is_byte_identical(files):
    env = dict(os.environ, SOLS_NO_COLOR="1")
    cmd = [sys.executable, "-m", "solsoliton.cli", "flow", files["h3"], "--starts", "2"]
    a = subprocess.run(cmd, capture_output=True, env=env, check=True).stdout
    b = subprocess.run(cmd, capture_output=True, env=env, check=True).stdout
    assert a == b and a
