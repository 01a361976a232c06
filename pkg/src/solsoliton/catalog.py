"""Low-dimensional solvable Lie algebras with known solsoliton behaviour.

Every entry is a rank-one extension ``RA + n`` with ``n = R^2``, ``R^3`` or
the Heisenberg algebra ``[X1, X2] = X3``, except ``affc`` (rank two) and
``example62`` (``n = R^4``).  The matrix ``M`` of ``ad A|n`` acts on
columns: ``[A, X_j] = sum_i M[i, j] X_i``.  Frames put ``A`` first.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np
import sympy

from .algebra import Bracket, Splitting, certify_splitting, jacobi_residual
from .curvature import sym
from .errors import ParamOutOfRange, UnsupportedEntry
from .exact import is_diagonalizable_exact
from .soliton import Verdict, soliton_decompose, theorem_main_check

H3 = Bracket.from_entries(3, [(0, 1, 2, 1.0)])
# nilsoliton constant of h3 in the frame [X1, X2] = X3
H3_C = -1.5


def _rot(lam: float) -> np.ndarray:
    return np.array([[lam, 1.0], [-1.0, lam]])


def _block(*blocks) -> np.ndarray:
    blocks = [np.atleast_2d(np.asarray(b, dtype=float)) for b in blocks]
    n = sum(b.shape[0] for b in blocks)
    out = np.zeros((n, n))
    k = 0
    for b in blocks:
        out[k:k + b.shape[0], k:k + b.shape[0]] = b
        k += b.shape[0]
    return out


def _close(a: float, b: float) -> bool:
    return math.isclose(a, b, rel_tol=0.0, abs_tol=1e-12)


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    label: str
    params: tuple[str, ...]
    nil: str                      # "abelian" or "h3"
    ad_a: Callable[..., np.ndarray]
    constraint: Callable[..., bool]
    constraint_text: str
    unimodular: Callable[..., bool]
    solsoliton: Callable[..., bool]
    einstein: Callable[..., bool]
    table: int
    grid: tuple = field(default=((),))

    def matrix(self, p: dict) -> np.ndarray:
        return self.ad_a(*[p[k] for k in self.params])

    def expected(self, p: dict) -> dict:
        args = [p[k] for k in self.params]
        return {
            "unimodular": bool(self.unimodular(*args)),
            "solsoliton": bool(self.solsoliton(*args)),
            "einstein": bool(self.einstein(*args)),
        }


_NEVER = lambda *a: False
_ALWAYS = lambda *a: True

ENTRIES: dict[str, CatalogEntry] = {}


def _add(e: CatalogEntry) -> None:
    ENTRIES[e.name] = e


_add(CatalogEntry("r3", "r_3", (), "abelian", lambda: np.array([[1.0, 1.0], [0.0, 1.0]]),
                  _ALWAYS, "-", _NEVER, _NEVER, _NEVER, 1))
_add(CatalogEntry("r3l", "r_3,lambda", ("lambda",), "abelian", lambda l: np.diag([1.0, l]),
                  lambda l: -1 <= l <= 1, "-1 <= lambda <= 1",
                  lambda l: _close(l, -1), _ALWAYS, lambda l: _close(l, 1), 1,
                  tuple((l,) for l in (-1.0, -0.5, 0.0, 0.5, 1.0))))
_add(CatalogEntry("r3lp", "r'_3,lambda", ("lambda",), "abelian", _rot,
                  lambda l: l >= 0, "0 <= lambda",
                  lambda l: _close(l, 0), _ALWAYS, _ALWAYS, 1,
                  tuple((l,) for l in (0.0, 0.5, 1.0, 2.0))))
_add(CatalogEntry("r4", "r_4", (), "abelian",
                  lambda: np.array([[1.0, 1.0, 0.0], [0.0, 1.0, 1.0], [0.0, 0.0, 1.0]]),
                  _ALWAYS, "-", _NEVER, _NEVER, _NEVER, 2))
_add(CatalogEntry("r4l", "r_4,lambda", ("lambda",), "abelian",
                  lambda l: _block(1.0, [[l, 1.0], [0.0, l]]),
                  lambda l: math.isfinite(l), "-inf < lambda < inf",
                  lambda l: _close(l, -0.5), _NEVER, _NEVER, 2,
                  tuple((l,) for l in (-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0))))


def _r4ml_ok(m, l):
    return (-1 < m <= l <= 1) or (m == -1 and -1 <= l < 0)


_R4ML_GRID = tuple(
    (m, l) for m in (-1.0, -0.75, -0.5, 0.0, 0.5, 1.0) for l in (-0.5, -0.25, 0.0, 0.5, 1.0)
    if _r4ml_ok(m, l)
) + ((-0.6, -0.4),)
_add(CatalogEntry("r4ml", "r_4,mu,lambda", ("mu", "lambda"), "abelian",
                  lambda m, l: np.diag([1.0, m, l]), _r4ml_ok,
                  "-1 < mu <= lambda <= 1; -1 = mu <= lambda < 0",
                  lambda m, l: _close(m, -1 - l), _ALWAYS,
                  lambda m, l: _close(m, 1) and _close(l, 1), 2, _R4ML_GRID))
_add(CatalogEntry("r4mlp", "r'_4,mu,lambda", ("mu", "lambda"), "abelian",
                  lambda m, l: _block(m, _rot(l)), lambda m, l: m > 0, "0 < mu",
                  lambda m, l: _close(m, -2 * l), _ALWAYS, lambda m, l: _close(m, l), 2,
                  tuple((m, l) for m in (0.5, 1.0, 2.0) for l in (-1.0, -0.5, 0.0, 0.5, 1.0, 2.0))))
_add(CatalogEntry("s4", "s_4", (), "h3", lambda: np.diag([1.0, -1.0, 0.0]),
                  _ALWAYS, "-", _ALWAYS, _ALWAYS, _NEVER, 2))
_add(CatalogEntry("s4l", "s_4,lambda", ("lambda",), "h3", lambda l: np.diag([l, 1.0 - l, 1.0]),
                  lambda l: l >= 0.5, "1/2 <= lambda",
                  _NEVER, _ALWAYS, lambda l: _close(l, 0.5), 2,
                  tuple((l,) for l in (0.5, 0.75, 1.0, 2.0, 5.0))))
_add(CatalogEntry("s4lp", "s'_4,lambda", ("lambda",), "h3", lambda l: _block(_rot(l), 2.0 * l),
                  lambda l: l >= 0, "0 <= lambda",
                  lambda l: _close(l, 0), lambda l: not _close(l, 0), lambda l: not _close(l, 0), 2,
                  tuple((l,) for l in (0.0, 0.3, 0.5, 1.0, 2.0))))
_add(CatalogEntry("h4", "h_4", (), "h3", lambda: _block([[1.0, 1.0], [0.0, 1.0]], 2.0),
                  _ALWAYS, "-", _NEVER, _NEVER, _NEVER, 2))

ALIASES = {
    "r3lambda": "r3l", "r3,l": "r3l", "r3lprime": "r3lp", "r'3l": "r3lp",
    "r4lambda": "r4l", "r4mulambda": "r4ml", "r4mlprime": "r4mlp", "r'4ml": "r4mlp",
    "s4lambda": "s4l", "s4lprime": "s4lp", "s'4l": "s4lp", "affC": "affc", "aff(c)": "affc",
    "ex62": "example62", "example6.2": "example62",
}

SPECIAL = ("affc", "example62")
ALL_NAMES = tuple(ENTRIES) + SPECIAL
PARAM_ALIASES = {"l": "lambda", "m": "mu", "lam": "lambda"}


def resolve(name: str) -> str:
    key = ALIASES.get(name, ALIASES.get(name.lower(), name.lower()))
    if key not in ENTRIES and key not in SPECIAL:
        raise UnsupportedEntry(f"unknown catalog entry {name!r}")
    return key


def _params(entry: CatalogEntry, params: dict | None) -> dict:
    params = {PARAM_ALIASES.get(k, k): float(v) for k, v in (params or {}).items()}
    missing = [k for k in entry.params if k not in params]
    extra = [k for k in params if k not in entry.params]
    if missing or extra:
        raise ParamOutOfRange(f"{entry.name} takes parameters {entry.params}, got {sorted(params)}")
    if not entry.constraint(*[params[k] for k in entry.params]):
        raise ParamOutOfRange(f"{entry.name}: constraint violated: {entry.constraint_text}")
    return params


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------

EXAMPLE62_LAMBDA = (3.0 + math.sqrt(5.0)) / 2.0


def example62_ad() -> np.ndarray:
    ln = math.log(EXAMPLE62_LAMBDA)
    return _block([[0.0, 1.0], [0.0, 0.0]], ln, -ln)


def affc_bracket() -> tuple[Bracket, Splitting]:
    mu = Bracket.semidirect([np.eye(2), np.array([[0.0, -1.0], [1.0, 0.0]])], Bracket.zero(2))
    return mu, Splitting((0, 1), (2, 3))


def _extension(ad_a: np.ndarray, nil: str, a_norm: float = 1.0) -> tuple[Bracket, Splitting]:
    m = ad_a.shape[0]
    base = H3 if nil == "h3" else Bracket.zero(m)
    mu = Bracket.semidirect([ad_a / a_norm], base)
    return mu, Splitting((0,), tuple(range(1, m + 1)))


def instantiate(name: str, params: dict | None = None) -> tuple[Bracket, Splitting]:
    """Bracket in the frame ``{A, X_1, ...}`` declared orthonormal."""
    key = resolve(name)
    if key == "affc":
        _params_none(key, params)
        return affc_bracket()
    if key == "example62":
        _params_none(key, params)
        return _extension(example62_ad(), "abelian")
    entry = ENTRIES[key]
    p = _params(entry, params)
    return _extension(entry.matrix(p), entry.nil)


def _params_none(key: str, params: dict | None) -> None:
    if params:
        raise ParamOutOfRange(f"{key} takes no parameters")


def soliton_a_norm(ad_a: np.ndarray, nil: str) -> float:
    """Length of ``A`` that makes the orthonormal-frame metric a solsoliton.

    For ``n = h3`` the metric on ``a`` is pinned to
    ``|A|^2 = -tr S(ad A|n)^2 / c`` with ``c`` the nilsoliton constant of
    the frame.  For abelian ``n`` any length works and 1 is kept; likewise
    when ``S(ad A|n) = 0``, where no length works.
    """
    if nil != "h3":
        return 1.0
    s = sym(ad_a)
    t = float(np.trace(s @ s))
    if t <= 1e-14:
        return 1.0
    return math.sqrt(-t / H3_C)


def standard_metric(name: str, params: dict | None = None) -> tuple[Bracket, Splitting]:
    """Like :func:`instantiate` but with ``A`` rescaled by :func:`soliton_a_norm`."""
    key = resolve(name)
    if key in SPECIAL:
        return instantiate(key, params)
    entry = ENTRIES[key]
    p = _params(entry, params)
    m = entry.matrix(p)
    return _extension(m, entry.nil, soliton_a_norm(m, entry.nil))


def s_beta_normal(beta: float) -> Bracket:
    """``s_beta`` (``0 <= beta < 2``) in the frame where ``ad A|n`` is normal.

    ``|A|^2 = tr S(ad A)^2 = beta^2 / 2``; at ``beta = 0`` the length is left at 1.
    """
    if not 0 <= beta < 2:
        raise ParamOutOfRange("s_beta needs 0 <= beta < 2")
    w = math.sqrt(1.0 - beta**2 / 4.0)
    m = np.array([[beta / 2.0, -w], [w, beta / 2.0]])
    norm = beta / math.sqrt(2.0) if beta > 0 else 1.0
    return Bracket.semidirect([m / norm], Bracket.zero(2))


# ---------------------------------------------------------------------------
# Existence oracle
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Existence:
    solsoliton: bool
    einstein: bool
    reason: str

    def as_tuple(self) -> tuple[bool, bool, str]:
        return (self.solsoliton, self.einstein, self.reason)


def _d1_spectrum(nil: str, m: int) -> np.ndarray:
    """Sorted spectrum of the nilsoliton derivation, up to scale."""
    return np.array([1.0, 1.0, 2.0]) if nil == "h3" else np.ones(m)


def _proportional(x: np.ndarray, y: np.ndarray, tol: float = 1e-9) -> bool:
    """``x = t y`` for some real ``t`` (``x`` already sorted, ``y`` sorted positive)."""
    for cand in (np.sort(x), np.sort(-x)):
        t = float(cand @ y / (y @ y))
        if t >= 0 and np.linalg.norm(cand - t * y) <= tol * max(1.0, np.linalg.norm(x)):
            return True
    return False


def rank_one_existence(ad_a: np.ndarray, nil: str) -> Existence:
    """Group-level existence for ``RA + n`` with ``ad A|n`` given.

    A solsoliton needs ``ad A|n`` normal for some inner product, i.e.
    diagonalizable over C.  Making it normal leaves the symmetric part with
    the real parts of the eigenvalues, so the metric condition on ``a`` needs one
    of them nonzero unless ``n`` is abelian (then c may be 0, the flat case).
    Einstein needs the nilsoliton derivation in ``span{S(ad A)}``, i.e. the
    real parts proportional to its spectrum (1,1,2) for h3, (1,..,1) abelian.
    """
    exact_ok = is_diagonalizable_exact(ad_a)
    if not exact_ok:
        return Existence(False, False, "ad A|n not diagonalizable over C")
    re = np.sort(np.linalg.eigvals(ad_a).real)
    all_zero = bool(np.all(np.abs(re) <= 1e-12))
    if all_zero and nil != "abelian":
        return Existence(False, False, "eigenvalues of ad A|n purely imaginary, n nonabelian")
    einstein = _proportional(re, _d1_spectrum(nil, ad_a.shape[0]))
    if all_zero:
        return Existence(True, True, "flat")
    return Existence(True, einstein, "diagonalizable with nonzero real parts" if nil != "abelian"
                     else "diagonalizable, n abelian")


def existence_oracle(name: str, params: dict | None = None) -> Existence:
    key = resolve(name)
    if key == "affc":
        _params_none(key, params)
        # [a, a] = 0 and ad A normal, so symmetrizing gives an isometric
        # r_3,1 + R, a solsoliton; on aff(C) itself S(ad A2) = 0 breaks the metric condition.
        return Existence(True, False, "isometric to the solsoliton r_3,1 + R (H^3 x R)")
    if key == "example62":
        _params_none(key, params)
        return Existence(False, False, "ad A|n not diagonalizable over C (Jordan block)")
    entry = ENTRIES[key]
    p = _params(entry, params)
    return rank_one_existence(entry.matrix(p), entry.nil)


# ---------------------------------------------------------------------------
# Table regression
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Row:
    entry: str
    params: dict
    expected: dict
    computed: dict
    verdict: str
    residual: float
    c: float

    @property
    def mismatches(self) -> list[str]:
        return [k for k in self.expected if self.expected[k] != self.computed[k]]

    def as_dict(self) -> dict:
        return {"entry": self.entry, "params": self.params, "expected": self.expected,
                "computed": self.computed, "verdict": self.verdict,
                "residual": self.residual, "c": self.c, "mismatches": self.mismatches}


@dataclass(frozen=True)
class TableReport:
    rows: list

    @property
    def mismatches(self) -> list[tuple[str, dict, str]]:
        return [(r.entry, r.params, col) for r in self.rows for col in r.mismatches]

    @property
    def ok(self) -> bool:
        return not self.mismatches


def classify_entry(name: str, params: dict | None = None) -> Row:
    """Compute the three table columns for one entry and compare with the table.

    A column counts as computed-true only when the group-level oracle and
    the metric check on the standard metric agree; any disagreement shows
    up as a mismatch.
    """
    key = resolve(name)
    entry = ENTRIES[key]
    p = _params(entry, params)
    mu, split = instantiate(key, p)
    if jacobi_residual(mu) > 1e-12:
        raise AssertionError(f"{key} builder violates Jacobi")
    certify_splitting(mu, split)
    ad_a = entry.matrix(p)
    unimod = abs(float(np.trace(ad_a))) <= 1e-12
    oracle = existence_oracle(key, p)
    std, std_split = standard_metric(key, p)
    cert = soliton_decompose(std)
    is_sol = cert.verdict.is_soliton
    is_ein = cert.verdict in (Verdict.EINSTEIN, Verdict.FLAT)
    main = theorem_main_check(std, std_split)
    sol_agree = oracle.solsoliton == is_sol and main.agrees
    ein_agree = oracle.einstein == (is_ein and is_sol)
    # None marks a disagreement between oracle and metric check
    computed = {
        "unimodular": unimod,
        "solsoliton": oracle.solsoliton if sol_agree else None,
        "einstein": oracle.einstein if ein_agree else None,
    }
    return Row(key, p, entry.expected(p), computed, cert.verdict.value, cert.residual_rel, cert.c)


def default_grid(name: str) -> list[dict]:
    entry = ENTRIES[resolve(name)]
    return [dict(zip(entry.params, point)) for point in entry.grid]


def classify_table(dim: int | str, grids: dict | None = None) -> TableReport:
    """Reproduce the 3-dimensional (``dim=3``) or 4-dimensional (``dim=4``) table; ``"all"`` for both."""
    if dim == "all":
        names = list(ENTRIES)
    else:
        table = {3: 1, 4: 2}.get(int(dim))
        if table is None:
            raise UnsupportedEntry(f"no table for dimension {dim}")
        names = [k for k, e in ENTRIES.items() if e.table == table]
    rows = []
    for name in sorted(names):
        points = (grids or {}).get(name)
        points = default_grid(name) if points is None else points
        for p in points:
            rows.append(classify_entry(name, p))
    return TableReport(rows)


# ---------------------------------------------------------------------------
# Example with a lattice but no solsoliton
# ---------------------------------------------------------------------------

EXAMPLE62_INTEGER = ((1, 1, 0, 0), (0, 1, 0, 0), (0, 0, 2, 1), (0, 0, 1, 1))


@dataclass(frozen=True)
class Example62Report:
    determinant: int
    eigenvalues: dict          # exact eigenvalue -> algebraic multiplicity
    jordan_block_at_one: int
    exp_matches_integer: bool
    ad_diagonalizable: bool
    existence: Existence
    verdict: str

    @property
    def ok(self) -> bool:
        golden = {sympy.Integer(1): 2, (3 + sympy.sqrt(5)) / 2: 1, (3 - sympy.sqrt(5)) / 2: 1}
        eig_ok = {sympy.nsimplify(k): v for k, v in self.eigenvalues.items()} == golden
        return (self.determinant == 1 and eig_ok and self.jordan_block_at_one == 2
                and self.exp_matches_integer and not self.ad_diagonalizable
                and not self.existence.solsoliton and self.verdict == Verdict.NOT_SOLITON.value)

    def as_dict(self) -> dict:
        return {
            "determinant": self.determinant,
            "eigenvalues": {str(k): v for k, v in self.eigenvalues.items()},
            "jordan_block_at_one": self.jordan_block_at_one,
            "exp_matches_integer": self.exp_matches_integer,
            "ad_diagonalizable": self.ad_diagonalizable,
            "existence": list(self.existence.as_tuple()),
            "verdict": self.verdict,
            "ok": self.ok,
        }


def example62_verify() -> Example62Report:
    m = sympy.Matrix(EXAMPLE62_INTEGER)
    det = int(m.det())
    eig = {sympy.simplify(k): int(v) for k, v in m.eigenvals().items()}
    shifted = m - sympy.eye(4)
    # size of the Jordan block at 1: rank drops 4 -> 3 -> 2 -> 2
    ranks = [shifted.rank(), (shifted**2).rank()]
    block = 2 if ranks == [3, 2] else (1 if ranks[0] == 2 else 0)

    # exp(ad A|n) has the same Jordan structure as the integer matrix
    ad = example62_ad()
    exp_ad = _exp_block(ad)
    exp_eigs = np.sort(np.linalg.eigvals(exp_ad).real)
    int_eigs = np.sort(np.array([float(k) for k, v in eig.items() for _ in range(v)]))
    exp_rank = np.linalg.matrix_rank(exp_ad - np.eye(4), tol=1e-9)
    matches = bool(np.allclose(exp_eigs, int_eigs, atol=1e-12) and exp_rank == 3)

    # the nilpotent part of ad A|n is rational, so the exact test applies to it
    nil_block = [[Fraction(0), Fraction(1)], [Fraction(0), Fraction(0)]]
    # the other two blocks are 1x1, so the whole map is diagonalizable iff this is
    diag_ok = is_diagonalizable_exact(nil_block)
    mu, _ = instantiate("example62")
    cert = soliton_decompose(mu)
    return Example62Report(det, eig, block, matches, bool(diag_ok),
                           existence_oracle("example62"), cert.verdict.value)


def _exp_block(ad: np.ndarray) -> np.ndarray:
    from scipy.linalg import expm
    return expm(ad)
