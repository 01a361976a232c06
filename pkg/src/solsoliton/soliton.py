"""Deciding ``Ric = cI + D`` and building solsolitons from nilsoliton data.

Only the algebraic condition ``Ric = cI + D`` with ``D`` a derivation is
decided here.  Whether every left-invariant Ricci soliton satisfies it is
an open problem, so a ``NotSoliton`` verdict means exactly that this
condition fails for the given metric, nothing more.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .algebra import (
    TOL_RANK,
    Bracket,
    Splitting,
    act,
    certify_splitting,
    derivations,
    derived_series,
    is_derivation,
    is_nilpotent,
    is_solvable,
    jacobi_residual,
    nilradical,
    pi,
    pi_matrix,
    split_frame,
)
from .curvature import CurvatureReport, R_operator, ricci_operator, sym
from .errors import (
    BadSplitting,
    DegenerateMetric,
    NotCommuting,
    NotDerivation,
    NotLieAlgebra,
    NotNilsoliton,
    NotSolvable,
    NotSymmetric,
    PreconditionFailed,
)

TOL_RESIDUAL = 1e-9


class Verdict(str, enum.Enum):
    EINSTEIN = "Einstein"
    SOLSOLITON = "Solsoliton"
    FLAT = "Flat"
    NOT_SOLITON = "NotSoliton"

    @property
    def is_soliton(self) -> bool:
        return self is not Verdict.NOT_SOLITON


@dataclass(frozen=True)
class SolitonCertificate:
    c: float
    D: np.ndarray
    residual_rel: float
    verdict: Verdict
    extras: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        out = {
            "verdict": self.verdict.value,
            "c": self.c,
            "D": np.asarray(self.D).tolist(),
            "residual_rel": self.residual_rel,
        }
        if self.extras:
            out["extras"] = {k: _jsonable(v) for k, v in self.extras.items()}
        return out


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    if isinstance(v, enum.Enum):
        return v.value
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def flat_threshold(mu: Bracket, tol: float = TOL_RESIDUAL) -> float:
    return tol * max(1.0, mu.norm() ** 2)


def _require_lie(mu: Bracket) -> None:
    if jacobi_residual(mu) > 1e-9 * max(1.0, mu.norm() ** 2):
        raise NotLieAlgebra("bracket violates the Jacobi identity")


def soliton_decompose(mu: Bracket, tol: float = TOL_RESIDUAL, rank_tol: float = TOL_RANK,
                      exact: bool = False) -> SolitonCertificate:
    """Project Ric onto ``span{I} + Der(mu)`` and classify the metric.

    ``I`` lies in Der only for the abelian bracket; otherwise the split
    ``Ric = cI + D`` of the projection is unique.  In the abelian case
    ``c = tr(Ric) / n`` and D absorbs the rest.
    """
    _require_lie(mu)
    if not is_solvable(mu, rank_tol, exact=exact):
        raise NotSolvable("soliton decomposition requires a solvable bracket")
    n = mu.dim
    ric = ricci_operator(mu).Ric
    der = derivations(mu, rank_tol, exact=exact)
    eye = np.eye(n)
    p_ric = der.project(ric)
    i_perp = eye - der.project(eye)
    if np.linalg.norm(i_perp) > 1e-8 * np.sqrt(n):
        c = float(np.sum(ric * i_perp) / np.sum(i_perp * i_perp))
        d = p_ric - c * der.project(eye)
    else:
        c = float(np.trace(ric) / n)
        d = p_ric - c * eye
    resid = np.linalg.norm(ric - c * eye - d)
    ric_norm = float(np.linalg.norm(ric))
    residual_rel = float(resid / max(ric_norm, 1e-300)) if ric_norm > 0 else float(resid)
    if ric_norm <= flat_threshold(mu, tol):
        verdict = Verdict.FLAT
    elif residual_rel <= tol:
        verdict = Verdict.EINSTEIN if np.linalg.norm(d) <= tol * ric_norm * 10 else Verdict.SOLSOLITON
    else:
        verdict = Verdict.NOT_SOLITON
    return SolitonCertificate(c=c, D=d, residual_rel=residual_rel, verdict=verdict,
                              extras={"der_dim": der.dim})


# ---------------------------------------------------------------------------
# Construction from nilsoliton data
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NilsolitonData:
    bracket: Bracket
    c: float
    D1: np.ndarray

    def validate(self, tol: float = TOL_RESIDUAL) -> None:
        mu = self.bracket
        if not is_nilpotent(mu):
            raise NotNilsoliton("bracket is not nilpotent")
        abelian = mu.norm() <= 1e-14
        if self.c >= 0 and not abelian:
            raise NotNilsoliton(f"nilsoliton constant must be negative, got c={self.c}")
        if abelian and self.c >= 0:
            raise NotNilsoliton("for abelian n supply a constant c < 0")
        ric = ricci_operator(mu).Ric
        scale = max(1.0, np.linalg.norm(ric), abs(self.c))
        if np.linalg.norm(ric - self.c * np.eye(mu.dim) - self.D1) > tol * scale:
            raise NotNilsoliton("Ric != cI + D1")
        if not is_derivation(self.D1, mu):
            raise NotNilsoliton("D1 is not a derivation")


def nilsoliton_data(mu: Bracket, c: float | None = None, tol: float = TOL_RESIDUAL) -> NilsolitonData:
    """Read (c, D1) off a nilpotent metric Lie algebra.

    For abelian ``mu`` every ``c < 0`` works with ``D1 = -cI``; the caller
    must choose it.
    """
    if mu.norm() <= 1e-14:
        if c is None or c >= 0:
            raise NotNilsoliton("abelian nilradical: choose a constant c < 0")
        return NilsolitonData(mu, float(c), -float(c) * np.eye(mu.dim))
    if not is_nilpotent(mu):
        raise NotNilsoliton("bracket is not nilpotent")
    cert = soliton_decompose(mu, tol)
    if not cert.verdict.is_soliton:
        raise NotNilsoliton(f"metric is not a nilsoliton (residual {cert.residual_rel:.3g})")
    if c is not None and abs(c - cert.c) > tol * max(1.0, abs(c)):
        raise NotNilsoliton(f"requested c={c} but the metric has c={cert.c}")
    return NilsolitonData(mu, cert.c, cert.D)


@dataclass(frozen=True)
class ConstructionInput:
    nil: NilsolitonData
    a_basis: tuple

    def __post_init__(self):
        object.__setattr__(self, "a_basis", tuple(np.asarray(a, dtype=float) for a in self.a_basis))


def _check_construction(inp: ConstructionInput, tol: float) -> None:
    inp.nil.validate(tol)
    mu = inp.nil.bracket
    mats = inp.a_basis
    for i, a in enumerate(mats):
        if a.shape != (mu.dim, mu.dim):
            raise NotDerivation(f"a_basis[{i}] has shape {a.shape}")
        if np.linalg.norm(a - a.T) > tol * max(1.0, np.linalg.norm(a)):
            raise NotSymmetric(f"a_basis[{i}] is not symmetric")
        if not is_derivation(a, mu):
            raise NotDerivation(f"a_basis[{i}] is not a derivation of n")
    for i, j in itertools.combinations(range(len(mats)), 2):
        comm = mats[i] @ mats[j] - mats[j] @ mats[i]
        if np.linalg.norm(comm) > tol * max(1.0, np.linalg.norm(mats[i]) * np.linalg.norm(mats[j])):
            raise NotCommuting(f"a_basis[{i}] and a_basis[{j}] do not commute")


def construct_solsoliton(inp: ConstructionInput, tol: float = TOL_RESIDUAL
                         ) -> tuple[Bracket, Splitting, SolitonCertificate]:
    """Semidirect product ``a + n`` with ``<A, A'> = -(1/c) tr(A A')`` on ``a``.

    The a-frame comes first in the returned bracket.
    """
    _check_construction(inp, tol)
    nil = inp.nil
    c = nil.c
    mats = np.array(inp.a_basis).reshape(len(inp.a_basis), nil.bracket.dim, nil.bracket.dim)
    k, m = len(mats), nil.bracket.dim
    if k:
        gram = -np.einsum("rij,sji->rs", mats, mats) / c
        evals = np.linalg.eigvalsh(gram)
        if evals[0] <= tol * max(1.0, evals[-1]):
            raise DegenerateMetric("-(1/c) tr(A A') is not positive definite on a")
        lower = np.linalg.cholesky(gram)
        ortho = np.einsum("rs,sij->rij", np.linalg.inv(lower), mats)
    else:
        ortho = np.zeros((0, m, m))
    mu = Bracket.semidirect(list(ortho), nil.bracket) if k else nil.bracket
    split = Splitting(tuple(range(k)), tuple(range(k, k + m)))
    cert = soliton_decompose(mu, tol)

    from .curvature import mean_curvature
    h = mean_curvature(mu)[:k]
    ad_h_n = np.einsum("r,rij->ij", h, ortho) if k else np.zeros((m, m))
    d_pred = np.zeros((k + m, k + m))
    d_pred[k:, k:] = nil.D1 - ad_h_n
    if k:
        coef = np.linalg.lstsq(mats.reshape(k, -1).T, nil.D1.ravel(), rcond=None)[0]
        d1_resid = float(np.linalg.norm(nil.D1.ravel() - mats.reshape(k, -1).T @ coef))
    else:
        d1_resid = float(np.linalg.norm(nil.D1))
    einstein_pred = d1_resid <= tol * max(1.0, np.linalg.norm(nil.D1)) * 10
    extras = dict(cert.extras)
    extras.update({
        "c_expected": c,
        "c_error": abs(cert.c - c),
        "D_predicted_error": float(np.linalg.norm(cert.D - d_pred)),
        "D1_in_a_residual": d1_resid,
        "einstein_predicted": bool(einstein_pred),
    })
    cert = SolitonCertificate(cert.c, cert.D, cert.residual_rel, cert.verdict, extras)
    return mu, split, cert


# ---------------------------------------------------------------------------
# Structural conditions
# ---------------------------------------------------------------------------

def _ad_full(mu: Bracket, i: int) -> np.ndarray:
    return mu.ad_matrices()[i]


def _rel(x: float, scale: float) -> float:
    return float(x / scale) if scale > 1e-300 else float(x)


@dataclass(frozen=True)
class Condition:
    holds: bool
    residual: float


@dataclass(frozen=True)
class MainConditionReport:
    c: float | None
    nilsoliton: Condition
    abelian_a: Condition
    normal_ad: Condition
    metric_on_a: Condition
    aggregate: bool
    decompose_verdict: Verdict
    decompose_c: float
    agrees: bool

    def as_dict(self) -> dict:
        cond = lambda x: {"holds": x.holds, "residual": x.residual}
        return {
            "c": self.c,
            "i_nilsoliton": cond(self.nilsoliton),
            "ii_a_abelian": cond(self.abelian_a),
            "iii_ad_normal": cond(self.normal_ad),
            "iv_metric_on_a": cond(self.metric_on_a),
            "aggregate": self.aggregate,
            "decompose_verdict": self.decompose_verdict.value,
            "decompose_c": self.decompose_c,
            "agrees": self.agrees,
        }


def _abelian_a(mu: Bracket, split: Splitting, tol: float) -> Condition:
    a = list(split.a_idx)
    r = float(np.linalg.norm(mu.coeffs[np.ix_(a, a, range(mu.dim))])) if a else 0.0
    r = _rel(r, max(1.0, mu.norm()))
    return Condition(r <= tol, r)


def _normal_ad(mu: Bracket, split: Splitting, tol: float) -> Condition:
    worst = 0.0
    for i in split.a_idx:
        m = _ad_full(mu, i)
        worst = max(worst, _rel(np.linalg.norm(m @ m.T - m.T @ m), max(1.0, np.linalg.norm(m) ** 2)))
    return Condition(worst <= tol, worst)


def theorem_main_check(mu: Bracket, split: Splitting, tol: float = TOL_RESIDUAL) -> MainConditionReport:
    """Evaluate the four structural conditions characterizing solsolitons (c < 0)."""
    certify_splitting(mu, split)
    cert = soliton_decompose(mu, tol)
    n_idx, a_idx = list(split.n_idx), list(split.a_idx)
    mu_n = mu.restrict(n_idx)
    nil_abelian = mu_n.norm() <= 1e-12 * max(1.0, mu.norm())

    if nil_abelian:
        cond_i = Condition(True, 0.0)
        c = None
    else:
        cn = soliton_decompose(mu_n, tol)
        cond_i = Condition(cn.verdict.is_soliton and cn.c < 0, cn.residual_rel)
        c = cn.c

    cond_ii = _abelian_a(mu, split, tol)
    cond_iii = _normal_ad(mu, split, tol)

    k = len(a_idx)
    s_blocks = np.array([sym(_ad_full(mu, i)) for i in a_idx]).reshape(k, mu.dim, mu.dim)
    gram = np.einsum("rij,sji->rs", s_blocks, s_blocks)
    if c is None:
        # abelian n: c is pinned by the metric condition on a
        c = -float(np.trace(gram)) / k if k else 0.0
    if k == 0:
        cond_iv = Condition(True, 0.0)
    elif c < 0:
        r = float(np.max(np.abs(np.eye(k) + gram / c)))
        cond_iv = Condition(r <= tol * 10, r)
    else:
        cond_iv = Condition(False, float("inf"))

    aggregate = all(x.holds for x in (cond_i, cond_ii, cond_iii, cond_iv)) and c is not None and c < 0
    says = cert.verdict in (Verdict.SOLSOLITON, Verdict.EINSTEIN) and cert.c < 0
    return MainConditionReport(c, cond_i, cond_ii, cond_iii, cond_iv, aggregate,
                               cert.verdict, cert.c, aggregate == says)


def _set_antisym(c: np.ndarray, i: int, j: int, vec: np.ndarray) -> None:
    c[i, j] = vec
    c[j, i] = -vec


def symmetrize(mu: Bracket, split: Splitting, tol: float = TOL_RESIDUAL) -> Bracket:
    """Replace each ``ad A|n`` by its symmetric part; keeps ``[n, n]``.

    Requires ``[a, a] = 0`` and normal ``ad A``; under those the result is
    isometric to the input.
    """
    failed = []
    if not _abelian_a(mu, split, tol).holds:
        failed.append("[a,a] = 0")
    if not _normal_ad(mu, split, tol).holds:
        failed.append("ad A normal")
    if failed:
        raise PreconditionFailed(failed)
    c = np.array(mu.coeffs)
    n_idx = list(split.n_idx)
    for r in split.a_idx:
        block = _ad_full(mu, r)[np.ix_(n_idx, n_idx)]
        s = sym(block)
        for x_pos, x in enumerate(n_idx):
            vec = np.zeros(mu.dim)
            vec[n_idx] = s[:, x_pos]
            _set_antisym(c, r, x, vec)
    return Bracket(c)


def normality_equiv_check(mu: Bracket, split: Splitting, a_index: int,
                          tol: float = 1e-8) -> tuple[bool, bool]:
    """(``(ad A)^T`` is a derivation, ``ad A`` is normal) for the frame vector ``A``."""
    if a_index not in split.a_idx:
        raise BadSplitting(f"index {a_index} is not an a-index")
    m = _ad_full(mu, a_index)
    scale = max(1e-300, np.linalg.norm(m))
    is_der = pi(m.T, mu).norm() <= tol * scale * max(1.0, mu.norm())
    normal = np.linalg.norm(m @ m.T - m.T @ m) <= tol * scale**2
    return bool(is_der), bool(normal)


def cneg_check(cert: SolitonCertificate, report: CurvatureReport, tol: float = TOL_RESIDUAL) -> bool:
    """``c >= 0`` must force ``Ric = 0``; returns whether that held."""
    if cert.c < 0:
        return True
    return float(np.linalg.norm(report.Ric)) <= tol * max(1.0, np.linalg.norm(report.R))


@dataclass(frozen=True)
class TraceIdentityReport:
    einstein_residual: float
    c_identity_residual: float

    @property
    def max_residual(self) -> float:
        return max(self.einstein_residual, self.c_identity_residual)


def trace_identities_check(mu: Bracket, split: Splitting | None, cert: SolitonCertificate,
                           tol: float = TOL_RESIDUAL) -> TraceIdentityReport:
    """Residuals of ``tr((cI + B/2 + F) E) = 1/4 <pi(E)mu, mu>`` and ``c trF + trF^2 = 0``.

    ``F = S(ad H) + D``.  Residuals are divided by ``max(1, |mu|^2)`` and
    ``max(1, |mu|^4)`` respectively so they are scale free.
    """
    if cert.residual_rel > tol:
        raise PreconditionFailed(["certificate residual"], "metric is not a solsoliton")
    n = mu.dim
    rep = ricci_operator(mu)
    ad_h = np.einsum("i,ikj->kj", rep.H, mu.ad_matrices())
    f = sym(ad_h) + cert.D
    lhs = cert.c * np.eye(n) + 0.5 * rep.B + f
    rhs = 0.25 * (pi_matrix(mu).T @ mu.coeffs.ravel()).reshape(n, n)
    # tr(M E_pq) = M[q, p]
    ein = float(np.max(np.abs(lhs.T - rhs))) / max(1.0, mu.norm() ** 2)
    cid = abs(cert.c * np.trace(f) + np.trace(f @ f)) / max(1.0, mu.norm() ** 4)
    return TraceIdentityReport(ein, float(cid))


# ---------------------------------------------------------------------------
# Isometry invariants and conjugacy
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IsometryInvariants:
    ricci_normalized: tuple[float, ...]
    r_norm_ratio: float
    derived_dims: tuple[int, ...]
    nilradical_dim: int
    symmetrized: bool

    @property
    def vector(self) -> np.ndarray:
        return np.array(list(self.ricci_normalized) + [self.r_norm_ratio]
                        + list(self.derived_dims) + [self.nilradical_dim], dtype=float)

    def consistent_with(self, other: "IsometryInvariants", tol: float = 1e-8) -> bool:
        a, b = self.vector, other.vector
        return a.shape == b.shape and bool(np.max(np.abs(a - b)) <= tol)


def isometry_invariants(mu: Bracket, tol: float = TOL_RESIDUAL) -> IsometryInvariants:
    """Scale-normalized quantities that isometric solsolitons share.

    R depends on the bracket and not only on the metric, so it is evaluated
    on the symmetrized representative whenever ``[a, a] = 0`` and every
    ``ad A`` is normal (that representative is isometric to ``mu``).
    Equality is evidence of isometry, never proof.
    """
    if not is_solvable(mu):
        raise NotSolvable("isometry invariants need a solvable bracket")
    adapted, split, _ = split_frame(mu)
    target = mu
    symmetrized = False
    if _abelian_a(adapted, split, tol).holds and _normal_ad(adapted, split, 1e-8).holds:
        target = symmetrize(adapted, split, 1e-8)
        symmetrized = True
    rep = ricci_operator(target)
    scal = rep.scalar
    evals = np.sort(np.linalg.eigvalsh(rep.Ric))
    if abs(scal) > 1e-12 * max(1.0, mu.norm() ** 2):
        ric_n = evals / abs(scal)
        r_ratio = float(np.sum(rep.R**2) / scal**2)
    else:
        ric_n = evals * 0.0
        r_ratio = 0.0
    return IsometryInvariants(tuple(float(x) for x in ric_n), r_ratio,
                              tuple(derived_series(mu)), len(split.n_idx), symmetrized)


class Conjugacy(str, enum.Enum):
    CONJUGATE = "Conjugate"
    NOT_CONJUGATE = "NotConjugate"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class ConjugacyResult:
    verdict: Conjugacy
    h: np.ndarray | None = None
    reason: str = ""


def _trace_orthonormal(mats: Sequence[np.ndarray]) -> np.ndarray:
    m = np.array([np.asarray(a, dtype=float) for a in mats])
    if not len(m):
        return m
    flat = m.reshape(len(m), -1)
    q, _ = np.linalg.qr(flat.T)
    return q.T[: len(m)].reshape(m.shape)


def _spans_equal(a1: np.ndarray, a2: np.ndarray, tol: float) -> bool:
    if len(a1) != len(a2):
        return False
    if not len(a1):
        return True
    b2 = a2.reshape(len(a2), -1)
    proj = a1.reshape(len(a1), -1) @ b2.T @ b2
    return bool(np.max(np.abs(proj - a1.reshape(len(a1), -1))) <= tol)


def _joint_eigenbasis(mats: np.ndarray, rng_seed: int = 12345) -> tuple[np.ndarray, np.ndarray]:
    """Common orthonormal eigenbasis of commuting symmetric matrices.

    Returns (Q, joint) where columns of Q are eigenvectors and ``joint[i]``
    is the joint eigenvalue vector on column i.
    """
    n = mats.shape[-1]
    if not len(mats):
        return np.eye(n), np.zeros((n, 0))
    weights = np.random.default_rng(rng_seed).normal(size=len(mats))
    generic = np.einsum("r,rij->ij", weights, mats)
    _, q = np.linalg.eigh(sym(generic))
    joint = np.einsum("ia,rij,ja->ar", q, mats, q)
    return q, joint


def conjugacy_check(nil: NilsolitonData, a1: Sequence, a2: Sequence,
                    tol: float = 1e-8) -> ConjugacyResult:
    """Search ``h`` in Aut(n) ∩ O(n) with ``h a1 h^-1 = a2``.

    Exhaustive (signed permutations between joint eigenbases) when the
    joint eigenspaces are lines and ``dim n <= 4``; Inconclusive otherwise.
    """
    mu = nil.bracket
    n = mu.dim
    b1, b2 = _trace_orthonormal(a1), _trace_orthonormal(a2)
    if len(b1) != len(b2):
        return ConjugacyResult(Conjugacy.NOT_CONJUGATE, reason="dimensions differ")

    def verify(h):
        if np.max(np.abs(h @ h.T - np.eye(n))) > tol:
            return False
        if not act(h, mu).allclose(mu, atol=tol * max(1.0, mu.norm())):
            return False
        moved = np.einsum("ij,rjk,lk->ril", h, b1, h)
        return _spans_equal(moved, b2, tol)

    if verify(np.eye(n)):
        return ConjugacyResult(Conjugacy.CONJUGATE, np.eye(n), "identity")

    # necessary invariants
    if len(b1) == 1:
        e1 = np.sort(np.linalg.eigvalsh(sym(b1[0])))
        e2 = np.sort(np.linalg.eigvalsh(sym(b2[0])))
        if not (np.allclose(e1, e2, atol=1e-8) or np.allclose(e1, np.sort(-e2), atol=1e-8)):
            return ConjugacyResult(Conjugacy.NOT_CONJUGATE, reason="spectra differ")
    elif len(b1):
        c1 = np.linalg.eigvalsh(sym(np.einsum("rij,rjk->ik", b1, b1)))
        c2 = np.linalg.eigvalsh(sym(np.einsum("rij,rjk->ik", b2, b2)))
        if not np.allclose(c1, c2, atol=1e-8):
            return ConjugacyResult(Conjugacy.NOT_CONJUGATE, reason="Casimir spectra differ")

    q1, j1 = _joint_eigenbasis(b1)
    q2, j2 = _joint_eigenbasis(b2)
    lines = all(
        min((np.linalg.norm(j[a] - j[b]) for a in range(n) for b in range(n) if a != b), default=1.0) > 1e-6
        for j in (j1, j2)
    )
    if n > 4:
        return ConjugacyResult(Conjugacy.INCONCLUSIVE, reason="search limited to dim n <= 4")
    for perm in itertools.permutations(range(n)):
        p = np.eye(n)[:, list(perm)]
        for signs in itertools.product((1.0, -1.0), repeat=n):
            h = q2 @ p @ np.diag(signs) @ q1.T
            if verify(h):
                return ConjugacyResult(Conjugacy.CONJUGATE, h, "signed permutation of joint eigenbases")
    if lines:
        return ConjugacyResult(Conjugacy.NOT_CONJUGATE, reason="exhaustive search found no conjugator")
    return ConjugacyResult(Conjugacy.INCONCLUSIVE, reason="degenerate joint eigenspaces")
