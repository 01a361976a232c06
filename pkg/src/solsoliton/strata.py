"""Moment map, the functional ``F = |m|^2``, its descent flow and stratum labels.

The group is ``GL(n)`` acting on brackets, with ``K = O(n)`` and the
symmetric matrices as the tangent directions.  The stratification itself is
never constructed; a label ``beta`` is checked against the properties it must
satisfy.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .algebra import (
    Bracket,
    Splitting,
    act,
    derivations,
    inner_V,
    is_nilpotent,
    pi,
)
from .curvature import R_operator, mean_curvature, sym
from .errors import (
    GateFailed,
    InputError,
    MaxIterExceeded,
    NotNilpotent,
    PreconditionFailed,
    ReportedUngated,
    ZeroBracket,
)
from .minnorm import min_norm_point
from .soliton import SolitonCertificate, Verdict, soliton_decompose

ZERO_TOL = 1e-12


def _require_nonzero(mu: Bracket) -> float:
    norm = mu.norm()
    if norm <= ZERO_TOL:
        raise ZeroBracket("the zero bracket has no moment map")
    return norm


@dataclass(frozen=True)
class StratumLabel:
    diag: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.diag, dtype=float).ravel()
        object.__setattr__(self, "diag", d)
        if abs(d.sum() + 1.0) > 1e-12 * max(1.0, np.abs(d).sum()):
            raise InputError(f"stratum label must have trace -1, got {d.sum():.15g}")

    @property
    def norm2(self) -> float:
        return float(self.diag @ self.diag)

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(self.diag)

    def shifted(self) -> np.ndarray:
        """``beta + |beta|^2 I``, the nilpotent-part block of ``E_beta``."""
        return np.diag(self.diag + self.norm2)

    def in_weyl_chamber(self, tol: float = 1e-12) -> bool:
        return bool(np.all(np.diff(self.diag) >= -tol))

    def as_dict(self) -> dict:
        return {"beta": self.diag.tolist(), "norm2": self.norm2}


# ---------------------------------------------------------------------------
# Moment map and F
# ---------------------------------------------------------------------------

def moment_map(mu: Bracket) -> np.ndarray:
    """``m(mu) = 4 R(mu) / |mu|^2``; characterized by ``<m, a>|mu|^2 = <pi(a)mu, mu>``."""
    norm = _require_nonzero(mu)
    return 4.0 * R_operator(mu) / norm**2


def F_value(mu: Bracket) -> float:
    m = moment_map(mu)
    return float(np.sum(m * m))


def eigen_residual(mu: Bracket) -> float:
    """``|pi(m)mu - lambda mu| / |mu|`` with ``lambda`` the Rayleigh quotient."""
    norm = _require_nonzero(mu)
    v = pi(moment_map(mu), mu)
    lam = inner_V(v, mu) / norm**2
    return (v - mu * lam).norm() / norm


def F_gradient_sphere(mu: Bracket) -> Bracket:
    """Gradient of F restricted to the sphere through ``mu``.

    ``dF[nu] = 4/|mu|^2 <pi(m)mu - F mu, nu>``; the vector is already
    orthogonal to ``mu``.
    """
    norm = _require_nonzero(mu)
    m = moment_map(mu)
    f = float(np.sum(m * m))
    return (pi(m, mu) - mu * f) * (4.0 / norm**2)


# ---------------------------------------------------------------------------
# Descent
# ---------------------------------------------------------------------------

@dataclass
class FlowTrace:
    iterates: list = field(default_factory=list)  # (Bracket, F, residual)
    converged: bool = False
    final: Bracket | None = None

    @property
    def F_values(self) -> list[float]:
        return [f for _, f, _ in self.iterates]

    def summary(self) -> dict:
        _, f, r = self.iterates[-1]
        return {
            "converged": self.converged,
            "iterations": len(self.iterates) - 1,
            "F": f,
            "residual": r,
            "final": self.final.entries(1e-14) if self.final is not None else None,
            "moment_eigenvalues": np.linalg.eigvalsh(moment_map(self.final)).tolist(),
        }


def _strip_stabilizer(m: np.ndarray, mu: Bracket) -> np.ndarray:
    """Remove from ``m`` its component along ``span{I} + Der(mu)``.

    Those directions only rescale ``mu`` to first order.  Near a critical
    point ``m`` lies almost entirely in them, and stepping along them would
    amplify rounding off the orbit, where critical points are saddles.
    """
    n = m.shape[0]
    basis = np.vstack([np.eye(n).ravel(), derivations(mu).elements().reshape(-1, n * n)])
    q, r = np.linalg.qr(basis.T)
    q = q[:, np.abs(np.diag(r)) > 1e-10]
    flat = m.ravel()
    return (flat - q @ (q.T @ flat)).reshape(n, n)


def descend_to_critical(mu0: Bracket, max_iter: int = 100_000, tol: float = 1e-8,
                        nilpotent: bool = False, armijo: float = 1e-4,
                        raise_on_max: bool = True) -> FlowTrace:
    """Backtracking descent of F on the unit sphere, staying in the GL-orbit.

    Each step is ``mu <- exp(-s a).mu`` renormalized, where ``a`` is ``m(mu)``
    with its ``span{I} + Der(mu)`` part removed: to first order this moves
    along ``-(pi(m)mu - F mu)``, the negative sphere gradient up to the
    factor 4, so fixed points are exactly the critical points of F.
    """
    mu = mu0 / _require_nonzero(mu0)
    if nilpotent and not is_nilpotent(mu):
        raise NotNilpotent("starting bracket is not nilpotent")
    trace = FlowTrace()
    for _ in range(max_iter + 1):
        m = moment_map(mu)
        f = float(np.sum(m * m))
        res = eigen_residual(mu)
        trace.iterates.append((mu, f, res))
        if res <= tol:
            trace.converged = True
            break
        direction = _strip_stabilizer(m, mu)
        # Near a critical point the decrease of F drops below rounding;
        # there the residual itself decides, with F allowed a few ulps.
        slack = 8.0 * np.finfo(float).eps * max(1.0, f)
        step = 1.0
        accepted = False
        while step >= 1e-12:
            cand = act(expm(-step * direction), mu)
            cand = cand / cand.norm()
            f_new = F_value(cand)
            expected = armijo * step * 4.0 * res**2
            if f_new <= f - expected:
                accepted = True
            elif expected <= slack and f_new <= f + slack and eigen_residual(cand) < res:
                accepted = True
            if accepted:
                break
            step *= 0.5
        if not accepted:
            break
        mu = cand
    trace.final = mu
    if nilpotent and not is_nilpotent(mu):
        raise NotNilpotent("descent left the nilpotent variety")
    if not trace.converged and raise_on_max:
        raise MaxIterExceeded(f"no critical point within {max_iter} iterations", trace)
    return trace


def multi_start(mu: Bracket, starts: int, seed: int, spread: float = 0.3,
                **kwargs) -> list[FlowTrace]:
    """Independent descents from ``g.mu`` with ``g = exp(spread * X)``, X Gaussian."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(starts):
        g = expm(spread * rng.normal(size=(mu.dim, mu.dim)))
        out.append(descend_to_critical(act(g, mu), **kwargs))
    return out


# ---------------------------------------------------------------------------
# Weights and the min-norm label
# ---------------------------------------------------------------------------

def weights_present(mu: Bracket, eps: float | None = None) -> list[tuple[int, ...]]:
    """Distinct ``e_k - e_i - e_j`` over nonzero ``mu_ij^k`` with ``i < j``."""
    if eps is None:
        eps = ZERO_TOL * max(1.0, mu.norm())
    n = mu.dim
    out = set()
    for i, j in itertools.combinations(range(n), 2):
        for k in range(n):
            if abs(mu.coeffs[i, j, k]) > eps:
                w = [0] * n
                w[k] += 1
                w[i] -= 1
                w[j] -= 1
                out.add(tuple(w))
    return sorted(out)


def beta_mu(mu: Bracket) -> StratumLabel:
    """Minimum-norm point of the convex hull of the present weights."""
    _require_nonzero(mu)
    weights = weights_present(mu)
    if not weights:
        raise ZeroBracket("no structure constants above the zero threshold")
    res = min_norm_point(weights)
    return StratumLabel(res.point)


def gate_margin(mu: Bracket, beta: StratumLabel) -> float:
    """``min <beta, alpha> - |beta|^2`` over present weights; zero when the gate holds."""
    weights = np.array(weights_present(mu), dtype=float)
    return float(np.min(weights @ beta.diag) - beta.norm2)


def gate_holds(mu: Bracket, beta: StratumLabel, tol: float = 1e-10) -> bool:
    return abs(gate_margin(mu, beta)) <= tol * max(1.0, beta.norm2)


@dataclass(frozen=True)
class Check:
    holds: bool
    margin: float
    equality: bool = False


@dataclass(frozen=True)
class StrataReport:
    gate: Check
    betapos: Check
    bmu: Check
    adbeta: Check | None = None
    betaort: Check | None = None
    delta: Check | None = None

    @property
    def all_hold(self) -> bool:
        return all(c.holds for c in (self.gate, self.betapos, self.bmu, self.adbeta,
                                     self.betaort, self.delta) if c is not None) and self.gate.holds

    def as_dict(self) -> dict:
        out = {}
        for name in ("gate", "betapos", "bmu", "adbeta", "betaort", "delta"):
            c = getattr(self, name)
            out[name] = None if c is None else {"holds": c.holds, "margin": c.margin,
                                                "equality": c.equality}
        return out


def strata_checks(mu: Bracket, beta: StratumLabel, tol: float = 1e-10) -> StrataReport:
    """Evaluate the stratum inequalities for ``(mu, beta)``, each with its margin.

    The derivation-dependent inequalities are only asserted when the gate
    ``min <beta, alpha> = |beta|^2`` holds; otherwise they are reported as
    ``None``.
    """
    _require_nonzero(mu)
    if not is_nilpotent(mu):
        raise NotNilpotent("stratum checks need a nilpotent bracket")
    if beta.diag.size != mu.dim:
        raise InputError("label dimension does not match the bracket")
    gm = gate_margin(mu, beta)
    gate = Check(abs(gm) <= tol * max(1.0, beta.norm2), gm)

    pos = float(np.min(beta.diag) + beta.norm2)
    betapos = Check(pos > 0, pos)

    m = moment_map(mu)
    bm = float(np.linalg.norm(m) - np.sqrt(beta.norm2))
    conj = np.allclose(np.linalg.eigvalsh(m), np.sort(beta.diag), atol=1e-8)
    bmu = Check(bm >= -tol, bm, equality=bool(conj))

    if not gate.holds:
        return StrataReport(gate, betapos, bmu)

    der = derivations(mu).elements()
    b = beta.diag
    weight = b[:, None] - b[None, :]
    if len(der):
        # <[beta, D], D> = sum (b_i - b_j) D_ij^2, a quadratic form on Der
        q = np.einsum("ij,aij,bij->ab", weight, der, der)
        qmin = float(np.min(np.linalg.eigvalsh(sym(q))))
        comm_zero = bool(np.all(np.abs(np.einsum("ij,aij->a", weight, der**2)) <= 1e-10))
        ort = float(np.max(np.abs(np.einsum("i,aii->a", b, der))))
    else:
        qmin, comm_zero, ort = 0.0, True, 0.0
    adbeta = Check(qmin >= -tol, qmin, equality=comm_zero)
    betaort = Check(ort <= tol * max(1.0, np.linalg.norm(b)), ort)

    e = beta.shifted()
    dval = inner_V(pi(e, mu), mu)
    deriv = pi(e, mu).norm() <= 1e-9 * max(1.0, mu.norm())
    delta = Check(dval >= -tol * max(1.0, mu.norm() ** 2), dval, equality=bool(deriv))
    return StrataReport(gate, betapos, bmu, adbeta, betaort, delta)


# ---------------------------------------------------------------------------
# Solsoliton structure from the label
# ---------------------------------------------------------------------------

def _frame_candidates(m: np.ndarray):
    """Identity first, then the eigenbasis of ``m`` under signed permutations."""
    n = m.shape[0]
    yield np.eye(n)
    _, q = np.linalg.eigh(m)
    seen = set()
    for perm in itertools.permutations(range(n)):
        for signs in itertools.product((1.0, -1.0), repeat=n):
            cand = q[:, list(perm)] * np.array(signs)
            key = tuple(np.round(cand, 10).ravel())
            if key in seen:
                continue
            seen.add(key)
            yield cand
        if n > 4:
            break


def _embed(split: Splitting, q: np.ndarray) -> np.ndarray:
    """Orthogonal map of the whole algebra: identity on ``a``, ``q`` on ``n``."""
    n_idx = list(split.n_idx)
    dim = len(split.a_idx) + len(n_idx)
    g = np.eye(dim)
    g[np.ix_(n_idx, n_idx)] = q
    return g


@dataclass(frozen=True)
class ExtrasReport:
    beta: StratumLabel
    frame: np.ndarray
    gated: bool
    c: float
    c_formula_error: float     # |c + 1/4 |mu_n|^2 |beta|^2| / |c|
    moment_error: float        # |m(mu_n) - beta|
    e_beta_derivation: float   # |pi(E_beta) mu_s| / |mu_s|
    f_identity_error: float    # |S(ad H) + D - (|mu_n|^2/4) E_beta|
    e_beta_orthogonal: bool

    def holds(self, tol: float = 1e-8) -> bool:
        return (self.c_formula_error <= tol and self.moment_error <= tol
                and self.e_beta_derivation <= tol and self.f_identity_error <= tol)

    def as_dict(self) -> dict:
        return {
            "beta": self.beta.diag.tolist(),
            "gated": self.gated,
            "c": self.c,
            "c_formula_error": self.c_formula_error,
            "moment_error": self.moment_error,
            "e_beta_derivation": self.e_beta_derivation,
            "f_identity_error": self.f_identity_error,
        }


def e_beta(split: Splitting, beta_shift: np.ndarray) -> np.ndarray:
    """Endomorphism that vanishes on ``a`` and is ``beta_shift`` on ``n``."""
    n_idx = list(split.n_idx)
    dim = len(split.a_idx) + len(n_idx)
    e = np.zeros((dim, dim))
    e[np.ix_(n_idx, n_idx)] = beta_shift
    return e


def _extras_in_frame(mu_s: Bracket, split: Splitting, q: np.ndarray, beta: StratumLabel,
                     gated: bool) -> ExtrasReport:
    g = _embed(split, q)
    mu_t = act(g.T, mu_s)
    mu_n = mu_t.restrict(list(split.n_idx))
    cert = soliton_decompose(mu_t)
    c = cert.c
    nn2 = mu_n.norm() ** 2
    c_err = abs(c + 0.25 * nn2 * beta.norm2) / abs(c)
    m_err = float(np.linalg.norm(moment_map(mu_n) - beta.matrix))
    e = e_beta(split, beta.shifted())
    der_err = pi(e, mu_t).norm() / max(1.0, mu_t.norm())
    h = mean_curvature(mu_t)
    ad_h = np.einsum("i,ikj->kj", h, mu_t.ad_matrices())
    f_err = float(np.linalg.norm(sym(ad_h) + cert.D - 0.25 * nn2 * e))
    return ExtrasReport(beta, q, gated, c, float(c_err), m_err, float(der_err), f_err,
                        bool(abs(np.trace(e @ cert.D) - beta.norm2 * np.trace(cert.D)) <= 1e-8))


def extras_check(mu_s: Bracket, split: Splitting, cert: SolitonCertificate) -> ExtrasReport:
    """Structure identities of a solsoliton with nonabelian nilradical.

    Searches orthogonal frames of ``n`` (identity, then eigenbases of
    ``m(mu_n)``) for one where the min-norm label equals ``m(mu_n)``, and
    evaluates the identities there.
    """
    if cert.verdict not in (Verdict.SOLSOLITON, Verdict.EINSTEIN) or cert.c >= 0:
        raise PreconditionFailed(["solsoliton with c < 0"])
    mu_n = mu_s.restrict(list(split.n_idx))
    if mu_n.norm() <= ZERO_TOL:
        raise PreconditionFailed(["nonabelian nilradical"])
    m = moment_map(mu_n)
    for q in _frame_candidates(m):
        cand = act(q.T, mu_n)
        b = beta_mu(cand)
        if np.linalg.norm(moment_map(cand) - b.matrix) <= 1e-8:
            return _extras_in_frame(mu_s, split, q, b, gated=True)
    _, q = np.linalg.eigh(m)
    fallback = _extras_in_frame(mu_s, split, q, StratumLabel(np.linalg.eigvalsh(m)), gated=False)
    raise ReportedUngated("no tested frame achieves the gate", fallback)


@dataclass(frozen=True)
class EstTerms:
    bracket_a: float   # 1/4 sum <(beta + |beta|^2) [A_i, A_j], [A_i, A_j]>
    commutator: float  # 1/2 sum <[beta, ad A_i], ad A_i>
    delta: float       # 1/4 <pi(beta + |beta|^2) mu_n, mu_n>
    total: float       # <pi(E_beta) mu_s, mu_s>

    @property
    def terms(self) -> tuple[float, float, float]:
        return (self.bracket_a, self.commutator, self.delta)


def lemma_est_terms(mu_s: Bracket, split: Splitting, beta: StratumLabel) -> EstTerms:
    """The three nonnegative pieces of ``<pi(E_beta) mu_s, mu_s>``.

    Sums run over ordered index pairs, matching :func:`inner_V`; with that
    convention the pieces add up to ``total / 4``.
    """
    a_idx, n_idx = list(split.a_idx), list(split.n_idx)
    mu_n = mu_s.restrict(n_idx)
    if mu_n.norm() > ZERO_TOL and not gate_holds(mu_n, beta):
        raise GateFailed("gate condition fails for the nilradical bracket")
    shift = beta.shifted()
    ads = mu_s.ad_matrices()
    aa = mu_s.coeffs[np.ix_(a_idx, a_idx, n_idx)]
    t1 = 0.25 * float(np.einsum("rsx,xy,rsy->", aa, shift, aa))
    t2 = 0.0
    for r in a_idx:
        block = ads[r][np.ix_(n_idx, n_idx)]
        t2 += 0.5 * float(np.sum((beta.matrix @ block - block @ beta.matrix) * block))
    t3 = 0.25 * inner_V(pi(shift, mu_n), mu_n)
    total = inner_V(pi(e_beta(split, shift), mu_s), mu_s)
    return EstTerms(t1, t2, t3, float(total))
