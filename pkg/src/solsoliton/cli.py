"""``sols`` command line.

Exit codes: 0 success, 1 a checked verdict failed (non-soliton, table
mismatch, non-convergence), 2 bad input.  Reports go to stdout, diagnostics
to stderr.
"""
from __future__ import annotations

import argparse
import csv
import io as _stdio
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import catalog
from .algebra import Splitting, derivations, split_frame
from .config import DEFAULT_SEED, FORMATS, RunConfig
from .curvature import ricci_blockwise, ricci_operator
from .errors import InputError, MaxIterExceeded, ReportedUngated, SolsError
from .io import parse_algebra, serialize
from .soliton import (
    ConstructionInput,
    construct_solsoliton,
    nilsoliton_data,
    soliton_decompose,
    theorem_main_check,
)
from .strata import StratumLabel, beta_mu, multi_start, strata_checks

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


def _style(text: str, code: str) -> str:
    if os.environ.get("SOLS_NO_COLOR") or not sys.stderr.isatty():
        return text
    return f"\033[{code}m{text}\033[0m"


def _err(msg: str) -> None:
    print(_style("error: ", "31") + msg, file=sys.stderr)


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    return obj


def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        for k, v in obj.items():
            yield from _flatten(v, f"{prefix}.{k}" if prefix else str(k))
    else:
        yield prefix, obj


def render(report, fmt: str) -> str:
    report = _clean(report)
    if fmt == "json":
        return json.dumps(report, indent=2)
    rows = list(_flatten(report)) if isinstance(report, dict) else [("value", report)]
    if fmt == "csv":
        buf = _stdio.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["key", "value"])
        for k, v in rows:
            w.writerow([k, json.dumps(v)])
        return buf.getvalue().rstrip("\n")
    lines = ["| key | value |", "|---|---|"]
    lines += [f"| {k} | {json.dumps(v)} |" for k, v in rows]
    return "\n".join(lines)


def _read_algebra(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    return parse_algebra(text)


def _json_arg(value: str):
    p = Path(value)
    text = p.read_text() if p.exists() else value
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON argument: {exc.msg}") from None


def _adapted(mu, split):
    if split is not None:
        return mu, split
    new, split, _ = split_frame(mu)
    return new, split


# ---------------------------------------------------------------------------
# Commands; each returns (report, exit code)
# ---------------------------------------------------------------------------

def cmd_check(args, cfg: RunConfig):
    mu, _ = _read_algebra(args.file)
    cert = soliton_decompose(mu, cfg.tol_residual, cfg.tol_rank, exact=cfg.exact)
    return cert.as_dict(), EXIT_OK if cert.verdict.is_soliton else EXIT_FAIL


def cmd_curvature(args, cfg):
    mu, split = _read_algebra(args.file)
    rep = ricci_operator(mu)
    out = rep.as_dict()
    if args.blockwise:
        mu2, split2 = _adapted(mu, split)
        block = ricci_blockwise(mu2, split2)
        direct = ricci_operator(mu2).Ric
        out["blockwise"] = {"frame_changed": split is None and not mu2.allclose(mu, 0.0),
                            "Ric": block, "max_difference": float(np.max(np.abs(block - direct)))}
    return out, EXIT_OK


def cmd_derivations(args, cfg):
    mu, _ = _read_algebra(args.file)
    der = derivations(mu, cfg.tol_rank, exact=cfg.exact)
    return {"dim": der.dim, "basis": der.elements()}, EXIT_OK


def cmd_construct(args, cfg):
    mu, _ = _read_algebra(args.file)
    mats = [_json_arg(m) for m in (args.derivation or [])]
    if args.derivations:
        mats += list(_json_arg(args.derivations))
    if not mats:
        raise InputError("supply at least one --derivation matrix")
    try:
        a_basis = [np.array(m, dtype=float) for m in mats]
    except (TypeError, ValueError):
        raise InputError("derivations must be numeric square matrices") from None
    nil = nilsoliton_data(mu, args.c, cfg.tol_residual)
    bracket, split, cert = construct_solsoliton(ConstructionInput(nil, a_basis), cfg.tol_residual)
    report = {"bracket": json.loads(serialize(bracket, split, tol=1e-15)), "certificate": cert.as_dict()}
    return report, EXIT_OK if cert.verdict.is_soliton else EXIT_FAIL


def cmd_conditions(args, cfg):
    mu, split = _read_algebra(args.file)
    mu, split = _adapted(mu, split)
    rep = theorem_main_check(mu, split, cfg.tol_residual)
    return rep.as_dict(), EXIT_OK if rep.agrees else EXIT_FAIL


def cmd_flow(args, cfg):
    mu, _ = _read_algebra(args.file)
    try:
        traces = multi_start(mu, args.starts, cfg.seed, tol=cfg.tol_flow, max_iter=args.max_iter,
                             raise_on_max=False)
    except MaxIterExceeded as exc:  # pragma: no cover - raise_on_max is off
        traces = [exc.trace]
    report = [t.summary() for t in traces]
    return report, EXIT_OK if all(t.converged for t in traces) else EXIT_FAIL


def cmd_beta(args, cfg):
    mu, _ = _read_algebra(args.file)
    b = beta_mu(mu)
    out = b.as_dict()
    out["weyl_chamber"] = b.in_weyl_chamber()
    return out, EXIT_OK


def cmd_strata_check(args, cfg):
    mu, _ = _read_algebra(args.file)
    if args.beta:
        try:
            vals = [float(x) for x in args.beta.split(",")]
        except ValueError:
            raise InputError("--beta expects comma separated numbers") from None
        beta = StratumLabel(vals)
    else:
        beta = beta_mu(mu)
    rep = strata_checks(mu, beta, tol=max(cfg.tol_residual * 0.1, 1e-12))
    out = {"beta": beta.diag, **rep.as_dict()}
    asserted = [rep.betapos, rep.bmu] + ([rep.adbeta, rep.betaort, rep.delta] if rep.gate.holds else [])
    return out, EXIT_OK if all(c.holds for c in asserted) else EXIT_FAIL


def _param_dict(items):
    out = {}
    for item in items or []:
        if "=" not in item:
            raise InputError(f"--param expects name=value, got {item!r}")
        k, v = item.split("=", 1)
        try:
            out[k.strip()] = float(v)
        except ValueError:
            raise InputError(f"--param value for {k!r} is not a number") from None
    return out


def _table_text(rows: list[dict], fmt: str) -> str:
    cols = ["entry", "params", "unimodular", "solsoliton", "einstein", "verdict", "residual", "match"]

    def cells(r):
        e, c = r["expected"], r["computed"]
        pair = lambda k: f"{_mark(e[k])}/{_mark(c[k])}"
        params = ",".join(f"{k}={v:g}" for k, v in r["params"].items()) or "-"
        return [r["entry"], params, pair("unimodular"), pair("solsoliton"), pair("einstein"),
                r["verdict"], f"{r['residual']:.2e}", "yes" if not r["mismatches"] else "NO"]

    if fmt == "csv":
        buf = _stdio.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow(cells(r))
        return buf.getvalue().rstrip("\n")
    lines = ["| " + " | ".join(cols) + " |", "|" + "---|" * len(cols)]
    lines += ["| " + " | ".join(cells(r)) + " |" for r in rows]
    lines.append("")
    lines.append("Columns show expected/computed; '?' marks an oracle and metric-check disagreement.")
    return "\n".join(lines)


def _mark(v) -> str:
    return "?" if v is None else ("yes" if v else "-")


def cmd_catalog(args, cfg):
    if args.entry:
        key = catalog.resolve(args.entry)
        params = _param_dict(args.param)
        if key in catalog.SPECIAL:
            ex = catalog.existence_oracle(key, params)
            mu, split = catalog.instantiate(key, params)
            cert = soliton_decompose(mu, cfg.tol_residual)
            report = {"entry": key, "existence": list(ex.as_tuple()), "certificate": cert.as_dict()}
            return report, EXIT_OK
        row = catalog.classify_entry(key, params)
        rows = [row.as_dict()]
        bad = bool(row.mismatches)
    else:
        rep = catalog.classify_table(args.table if args.table == "all" else int(args.table[-1]))
        rows = [r.as_dict() for r in rep.rows]
        bad = not rep.ok
    if cfg.format == "json":
        return {"rows": rows, "mismatches": sum(len(r["mismatches"]) for r in rows)}, \
            EXIT_FAIL if bad else EXIT_OK
    return _table_text(rows, cfg.format), EXIT_FAIL if bad else EXIT_OK


def cmd_example62(args, cfg):
    rep = catalog.example62_verify()
    return rep.as_dict(), EXIT_OK if rep.ok else EXIT_FAIL


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=argparse.SUPPRESS,
                        help="residual tolerance (default 1e-9)")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help=f"random seed (default {DEFAULT_SEED})")
    common.add_argument("--exact", action="store_true", default=argparse.SUPPRESS,
                        help="exact rational arithmetic where supported")
    common.add_argument("--format", choices=FORMATS, default=argparse.SUPPRESS,
                        help="output format (default json)")

    p = argparse.ArgumentParser(prog="sols", parents=[common],
                                description="Ricci solitons on solvable Lie groups.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_, file=True):
        sp = sub.add_parser(name, parents=[common], help=help_)
        if file:
            sp.add_argument("file", help="algebra JSON file")
        sp.set_defaults(func=func)
        return sp

    add("check", cmd_check, "decide Ric = cI + D for the given metric")
    add("curvature", cmd_curvature, "Ricci operator and its pieces").add_argument(
        "--blockwise", action="store_true", help="also assemble Ric from the a/n block formulas")
    add("derivations", cmd_derivations, "basis of the derivation algebra")
    sp = add("construct", cmd_construct, "solsoliton from a nilsoliton and commuting derivations")
    sp.add_argument("--derivation", action="append", default=None,
                    help="symmetric derivation as a JSON matrix (literal or file path), repeatable")
    sp.add_argument("--derivations", default=None,
                    help="JSON list of matrices (literal or file path)")
    sp.add_argument("--c", type=float, default=None, help="nilsoliton constant (needed for abelian n)")
    add("conditions", cmd_conditions, "nilsoliton, abelian a, normal ad a and metric conditions versus the direct verdict")
    sp = add("flow", cmd_flow, "multi-start descent of F on the orbit")
    sp.add_argument("--starts", type=int, default=4)
    sp.add_argument("--max-iter", type=int, default=10_000)
    add("beta", cmd_beta, "minimum-norm stratum label")
    add("strata-check", cmd_strata_check, "stratum inequalities for a label").add_argument(
        "--beta", default=None, help="comma separated diagonal of the label")
    sp = add("catalog", cmd_catalog, "reproduce the classification tables", file=False)
    sp.add_argument("--table", choices=("dim3", "dim4", "all"), default="all")
    sp.add_argument("--entry", default=None)
    sp.add_argument("--param", action="append", default=None, help="name=value, repeatable")
    add("example62", cmd_example62, "lattice example without solsoliton", file=False)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = RunConfig(
            tol_residual=getattr(args, "tol", 1e-9),
            seed=getattr(args, "seed", DEFAULT_SEED),
            exact=getattr(args, "exact", False),
            format=getattr(args, "format", "json"),
        )
    except ValueError as exc:
        _err(str(exc))
        return EXIT_INPUT
    try:
        report, code = args.func(args, cfg)
    except InputError as exc:
        _err(f"{type(exc).__name__}: {exc}")
        return EXIT_INPUT
    except ReportedUngated as exc:
        _err(str(exc))
        return EXIT_FAIL
    except SolsError as exc:
        _err(f"{type(exc).__name__}: {exc}")
        return EXIT_FAIL
    text = report if isinstance(report, str) else render(report, cfg.format)
    print(text)
    if code != EXIT_OK:
        print(_style("check failed", "33"), file=sys.stderr)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
