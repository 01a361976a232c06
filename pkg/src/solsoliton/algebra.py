"""Structure-constant tensors and the GL(n)-action on them.

A :class:`Bracket` stores the full antisymmetric tensor ``C[i, j, k] =
<mu(e_i, e_j), e_k>`` in a frame that is declared orthonormal.  Only the
entries with ``i < j`` are authoritative; the rest are filled in by
antisymmetry on construction, so antisymmetry is exact.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import exact as _exact
from .errors import BadSplitting, DimensionMismatch, NotSolvable, SingularMap

TOL_RANK = 1e-9
MAX_COND = 1e12


def _antisymmetrize(c: np.ndarray) -> np.ndarray:
    n = c.shape[0]
    upper = np.triu(np.ones((n, n), dtype=bool), k=1)
    out = np.where(upper[:, :, None], c, 0.0)
    return out - out.transpose(1, 0, 2)


@dataclass(frozen=True, eq=False)
class Bracket:
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        if c.ndim != 3 or not (c.shape[0] == c.shape[1] == c.shape[2]):
            raise DimensionMismatch(f"bracket tensor must be n x n x n, got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("bracket has non-finite structure constants")
        c = _antisymmetrize(c)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zero(cls, n: int) -> "Bracket":
        return cls(np.zeros((n, n, n)))

    @classmethod
    def from_entries(cls, n: int, entries: Iterable[Sequence], one_based: bool = False) -> "Bracket":
        """Build from ``(i, j, k, value)`` meaning ``mu(e_i, e_j) += value * e_k``."""
        c = np.zeros((n, n, n))
        off = 1 if one_based else 0
        for i, j, k, v in entries:
            i, j, k = i - off, j - off, k - off
            if i == j:
                if v != 0:
                    raise ValueError(f"mu(e_{i + off}, e_{i + off}) must vanish")
                continue
            if i < j:
                c[i, j, k] += v
            else:
                c[j, i, k] -= v
        return cls(c)

    @classmethod
    def semidirect(cls, ad_blocks: Sequence[np.ndarray], nil: "Bracket | None" = None,
                   a_brackets: np.ndarray | None = None) -> "Bracket":
        """Bracket on ``a + n`` with a-frame first.

        ``ad_blocks[r]`` is the matrix of ``ad A_r`` restricted to ``n``
        (column convention: ``[A_r, X_j] = sum_i M[i, j] X_i``).
        ``a_brackets[r, s]`` optionally gives ``[A_r, A_s]`` as an n-vector.
        """
        k = len(ad_blocks)
        m = nil.dim if nil is not None else np.asarray(ad_blocks[0]).shape[0]
        n = k + m
        c = np.zeros((n, n, n))
        for r, block in enumerate(ad_blocks):
            block = np.asarray(block, dtype=float)
            c[r, k:, k:] = block.T
        if nil is not None:
            c[k:, k:, k:] = nil.coeffs
        if a_brackets is not None:
            c[:k, :k, k:] = a_brackets
        return cls(c)

    @property
    def dim(self) -> int:
        return self.coeffs.shape[0]

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.coeffs**2)))

    def ad_matrices(self) -> np.ndarray:
        """``ad[i]`` is the matrix of ``ad e_i``; ``ad[i][k, j] = C[i, j, k]``."""
        return self.coeffs.transpose(0, 2, 1)

    def __call__(self, x, y) -> np.ndarray:
        return np.einsum("i,j,ijk->k", x, y, self.coeffs)

    def __add__(self, other: "Bracket") -> "Bracket":
        _check_dims(self, other)
        return Bracket(self.coeffs + other.coeffs)

    def __sub__(self, other: "Bracket") -> "Bracket":
        _check_dims(self, other)
        return Bracket(self.coeffs - other.coeffs)

    def __mul__(self, s: float) -> "Bracket":
        return Bracket(self.coeffs * float(s))

    __rmul__ = __mul__

    def __truediv__(self, s: float) -> "Bracket":
        return Bracket(self.coeffs / float(s))

    def __neg__(self) -> "Bracket":
        return Bracket(-self.coeffs)

    def allclose(self, other: "Bracket", atol: float = 1e-12) -> bool:
        return self.dim == other.dim and bool(np.allclose(self.coeffs, other.coeffs, rtol=0, atol=atol))

    def restrict(self, idx: Sequence[int]) -> "Bracket":
        """Bracket of the coordinate subspace ``span(e_i, i in idx)``, projected onto it."""
        idx = list(idx)
        return Bracket(self.coeffs[np.ix_(idx, idx, idx)])

    def entries(self, tol: float = 0.0) -> list[tuple[int, int, int, float]]:
        """Nonzero ``(i, j, k, value)`` with ``i < j``, 0-based, lexicographic."""
        n = self.dim
        return [(i, j, k, float(self.coeffs[i, j, k]))
                for i in range(n) for j in range(i + 1, n) for k in range(n)
                if abs(self.coeffs[i, j, k]) > tol]

    def __repr__(self) -> str:
        terms = ", ".join(f"[e{i + 1},e{j + 1}]{'+' if v >= 0 else '-'}={abs(v):g}e{k + 1}"
                          for i, j, k, v in self.entries())
        return f"Bracket(dim={self.dim}, {terms or 'abelian'})"


def _check_dims(*objs) -> int:
    dims = {o.dim if isinstance(o, Bracket) else np.asarray(o).shape[0] for o in objs}
    if len(dims) != 1:
        raise DimensionMismatch(f"dimension mismatch: {sorted(dims)}")
    return dims.pop()


@dataclass(frozen=True)
class Splitting:
    """Frame indices spanning the complement ``a`` and the nilradical ``n``."""

    a_idx: tuple[int, ...]
    n_idx: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "a_idx", tuple(int(i) for i in self.a_idx))
        object.__setattr__(self, "n_idx", tuple(int(i) for i in self.n_idx))

    @classmethod
    def from_a(cls, n: int, a_idx: Sequence[int]) -> "Splitting":
        a = tuple(sorted(a_idx))
        return cls(a, tuple(i for i in range(n) if i not in a))

    @property
    def dim(self) -> int:
        return len(self.a_idx) + len(self.n_idx)


@dataclass(frozen=True)
class Subspace:
    """Orthonormal basis (rows of ``basis``, flattened) of a subspace."""

    ambient_dim: int
    basis: np.ndarray
    shape: tuple[int, ...] = field(default=())

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=float)
        shape = self.shape or b.shape[1:] or (self.ambient_dim,)
        b = b.reshape(-1, int(np.prod(shape)))
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)
        object.__setattr__(self, "shape", tuple(shape))

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def elements(self) -> np.ndarray:
        return self.basis.reshape((self.dim,) + self.shape)

    def project(self, x) -> np.ndarray:
        v = np.asarray(x, dtype=float).ravel()
        return (self.basis.T @ (self.basis @ v)).reshape(self.shape)

    def coordinates(self, x) -> np.ndarray:
        return self.basis @ np.asarray(x, dtype=float).ravel()

    def residual(self, x) -> float:
        v = np.asarray(x, dtype=float)
        return float(np.linalg.norm(v - self.project(v)))

    def contains(self, x, tol: float = 1e-9) -> bool:
        v = np.asarray(x, dtype=float)
        return self.residual(v) <= tol * max(1.0, float(np.linalg.norm(v)))

    def complement(self) -> "Subspace":
        total = int(np.prod(self.shape))
        if self.dim == 0:
            return Subspace(self.ambient_dim, np.eye(total), self.shape)
        _, s, vt = np.linalg.svd(self.basis, full_matrices=True)
        return Subspace(self.ambient_dim, vt[self.dim:], self.shape)


def orth(vectors, scale: float = 1.0, tol: float = TOL_RANK) -> np.ndarray:
    """Orthonormal rows spanning ``vectors``.

    Singular values below ``tol * max(largest, scale)`` count as zero, so
    rounding noise in an otherwise-empty span does not register as rank.
    """
    v = np.asarray(vectors, dtype=float)
    if v.size == 0:
        width = v.shape[-1] if v.ndim > 1 else 0
        return np.zeros((0, width))
    v = v.reshape(v.shape[0], -1)
    _, s, vt = np.linalg.svd(v, full_matrices=False)
    cut = tol * max(s[0] if s.size else 0.0, scale)
    return vt[s > cut]


def _scale(mu: Bracket) -> float:
    return max(mu.norm(), 1e-300)


# ---------------------------------------------------------------------------
# Inner products
# ---------------------------------------------------------------------------

def inner_V(mu1: Bracket, mu2: Bracket) -> float:
    """Sum over all ordered pairs (i, j) of <mu1(e_i, e_j), mu2(e_i, e_j)>."""
    _check_dims(mu1, mu2)
    return float(np.sum(mu1.coeffs * mu2.coeffs))


def inner_g(a, b) -> float:
    """Trace form tr(a b^T)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shape mismatch {a.shape} vs {b.shape}")
    return float(np.sum(a * b))


# ---------------------------------------------------------------------------
# Predicates
# ---------------------------------------------------------------------------

def jacobi_tensor(mu: Bracket) -> np.ndarray:
    """``J[i, j, k] = [[e_i, e_j], e_k] + [[e_j, e_k], e_i] + [[e_k, e_i], e_j]``."""
    c = mu.coeffs
    t = np.einsum("ijl,lkm->ijkm", c, c)
    return t + t.transpose(2, 0, 1, 3) + t.transpose(1, 2, 0, 3)


def jacobi_residual(mu: Bracket, exact: bool = False):
    """Largest norm of a cyclic Jacobi sum over basis triples.

    With ``exact=True`` the computation runs over the rationals and the
    result is a :class:`~fractions.Fraction` (the largest squared norm is
    exact; its square root is returned as a float only when nonzero).
    """
    if not exact:
        j = jacobi_tensor(mu)
        return float(np.max(np.linalg.norm(j, axis=-1))) if mu.dim else 0.0
    n = mu.dim
    c = [[[_exact.to_fraction(mu.coeffs[i, j, k]) for k in range(n)] for j in range(n)] for i in range(n)]
    worst = Fraction(0)
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                acc = [Fraction(0)] * n
                for a, b, d in ((i, j, k), (j, k, i), (k, i, j)):
                    for l in range(n):
                        f = c[a][b][l]
                        if f:
                            row = c[l][d]
                            for m in range(n):
                                acc[m] += f * row[m]
                worst = max(worst, sum(x * x for x in acc))
    return Fraction(0) if worst == 0 else float(np.sqrt(float(worst)))


def _series(mu: Bracket, step, tol: float) -> list[int]:
    n = mu.dim
    cur = np.eye(n)
    dims = [n]
    for _ in range(n + 1):
        nxt = orth(step(cur), scale=_scale(mu), tol=tol) if cur.shape[0] else np.zeros((0, n))
        dims.append(nxt.shape[0])
        if nxt.shape[0] == 0 or nxt.shape[0] == cur.shape[0]:
            break
        cur = nxt
    return dims


def lower_central_series(mu: Bracket, tol: float = TOL_RANK) -> list[int]:
    """Dimensions of s, [s,s], [s,[s,s]], ... until zero or stationary."""
    c = mu.coeffs
    return _series(mu, lambda basis: np.einsum("ijk,bj->bik", c, basis).reshape(-1, mu.dim), tol)


def derived_series(mu: Bracket, tol: float = TOL_RANK) -> list[int]:
    """Dimensions of s, [s,s], [[s,s],[s,s]], ... until zero or stationary."""
    c = mu.coeffs
    return _series(mu, lambda basis: np.einsum("ijk,ai,bj->abk", c, basis, basis).reshape(-1, mu.dim), tol)


def _exact_series(mu: Bracket, derived: bool) -> list[int]:
    n = mu.dim
    c = [[[_exact.to_fraction(mu.coeffs[i, j, k]) for k in range(n)] for j in range(n)] for i in range(n)]

    def br(x, y):
        out = [Fraction(0)] * n
        for i, xi in enumerate(x):
            if xi:
                for j, yj in enumerate(y):
                    if yj:
                        f = xi * yj
                        for k in range(n):
                            out[k] += f * c[i][j][k]
        return out

    cur = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    dims = [n]
    for _ in range(n + 1):
        left = cur if derived else [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
        vecs = [br(x, y) for x in left for y in cur]
        red, piv = _exact.rref(vecs) if vecs else ([], [])
        dims.append(len(piv))
        if not piv or len(piv) == len(cur):
            break
        cur = red
    return dims


def is_nilpotent(mu: Bracket, tol: float = TOL_RANK, exact: bool = False) -> bool:
    dims = _exact_series(mu, derived=False) if exact else lower_central_series(mu, tol)
    return dims[-1] == 0


def is_solvable(mu: Bracket, tol: float = TOL_RANK, exact: bool = False) -> bool:
    dims = _exact_series(mu, derived=True) if exact else derived_series(mu, tol)
    return dims[-1] == 0


# ---------------------------------------------------------------------------
# Maps and the action
# ---------------------------------------------------------------------------

def ad(mu: Bracket, x) -> np.ndarray:
    """Matrix of ``Y -> mu(X, Y)``."""
    x = np.asarray(x, dtype=float)
    _check_dims(mu, x)
    return np.einsum("i,ikj->kj", x, mu.ad_matrices())


def act(g, mu: Bracket, max_cond: float = MAX_COND) -> Bracket:
    """``g.mu(X, Y) = g mu(g^-1 X, g^-1 Y)``."""
    g = np.asarray(g, dtype=float)
    _check_dims(mu, g)
    if not np.all(np.isfinite(g)) or np.linalg.cond(g) > max_cond:
        raise SingularMap("g is not (numerically) invertible")
    h = np.linalg.inv(g)
    return Bracket(np.einsum("ia,jb,ijk,lk->abl", h, h, mu.coeffs, g, optimize=True))


def pi(alpha, mu: Bracket) -> Bracket:
    """Derivative of the action: ``alpha mu(., .) - mu(alpha ., .) - mu(., alpha .)``."""
    a = np.asarray(alpha, dtype=float)
    _check_dims(mu, a)
    c = mu.coeffs
    out = (np.einsum("lk,abk->abl", a, c)
           - np.einsum("ia,ibl->abl", a, c)
           - np.einsum("jb,ajl->abl", a, c))
    return Bracket(out)


def pi_matrix(mu: Bracket) -> np.ndarray:
    """Matrix of ``alpha -> pi(alpha) mu`` acting on row-major flattened alpha.

    Rows are indexed by ``(a, b, l)`` over *all* ordered pairs, so the
    Euclidean norm of the image equals the inner_V norm.
    """
    n = mu.dim
    c = mu.coeffs
    eye = np.eye(n)
    t = (np.einsum("lp,abq->ablpq", eye, c)
         - np.einsum("qa,pbl->ablpq", eye, c)
         - np.einsum("qb,apl->ablpq", eye, c))
    return t.reshape(n**3, n**2)


def derivations(mu: Bracket, tol: float = TOL_RANK, exact: bool = False) -> Subspace:
    """Orthonormal basis (trace form) of Der(mu) = ker(alpha -> pi(alpha) mu)."""
    n = mu.dim
    m = pi_matrix(mu)
    if exact:
        rows = [[_exact.to_fraction(x) for x in row] for row in m if np.any(row)]
        null = _exact.nullspace(rows, n * n)
        if not null:
            return Subspace(n, np.zeros((0, n, n)), (n, n))
        q, _ = np.linalg.qr(np.array([[float(x) for x in v] for v in null]).T)
        return Subspace(n, q.T.reshape(-1, n, n), (n, n))
    _, s, vt = np.linalg.svd(m, full_matrices=True)
    smax = s[0] if s.size else 0.0
    if smax <= 1e-300:
        return Subspace(n, np.eye(n * n).reshape(-1, n, n), (n, n))
    rank = int(np.sum(s > tol * smax))
    return Subspace(n, vt[rank:].reshape(-1, n, n), (n, n))


def is_derivation(d, mu: Bracket, tol: float = TOL_RANK) -> bool:
    d = np.asarray(d, dtype=float)
    return pi(d, mu).norm() <= tol * max(1.0, np.linalg.norm(d)) * max(1.0, mu.norm())


# ---------------------------------------------------------------------------
# Nilradical
# ---------------------------------------------------------------------------

def associative_envelope(mats: np.ndarray, scale: float = 1.0, tol: float = TOL_RANK) -> np.ndarray:
    """Orthonormal basis of the unital associative algebra generated by ``mats``."""
    n = mats.shape[-1]
    basis = np.eye(n).reshape(1, n * n) / np.sqrt(n)
    for _ in range(n * n):
        prods = np.einsum("ikl,blm->bikm", mats, basis.reshape(-1, n, n)).reshape(-1, n * n)
        new = orth(np.vstack([basis, prods]), scale=max(scale, 1.0), tol=tol)
        if new.shape[0] == basis.shape[0]:
            break
        basis = new
    return basis.reshape(-1, n, n)


@dataclass(frozen=True)
class NilradicalResult:
    space: Subspace
    ideal_residual: float
    nilpotent: bool
    maximal: bool
    min_complement_sv: float

    @property
    def certified(self) -> bool:
        return self.nilpotent and self.maximal and self.ideal_residual <= 1e-8


def nilradical(mu: Bracket, tol: float = TOL_RANK) -> NilradicalResult:
    """Nilradical of a solvable algebra as ``{X : ad X nilpotent}``.

    For solvable ``s`` the ad-operators are simultaneously triangularizable
    over C (Lie's theorem), so within the unital associative algebra ``A``
    they generate, ``tr(ad X . P) = sum_r lambda_r(X) p_r``.  Hence ``ad X``
    is nilpotent iff ``tr(ad X . P) = 0`` for every ``P`` in ``A`` (take
    ``P = (ad X)^k`` for one direction, triangularity for the other).  The
    nilradical is the kernel of ``X -> (tr(ad X . P_j))_j``.
    """
    if not is_solvable(mu, tol):
        raise NotSolvable("derived series does not reach zero")
    n = mu.dim
    ads = mu.ad_matrices()
    scale = _scale(mu)
    env = associative_envelope(ads / scale, tol=tol)
    lmat = np.einsum("ikj,pjk->pi", ads / scale, env)
    _, s, vt = np.linalg.svd(lmat, full_matrices=True)
    smax = max(s[0] if s.size else 0.0, 1.0)
    rank = int(np.sum(s > tol * smax))
    space = Subspace(n, vt[rank:], (n,))
    comp = vt[:rank]

    # certificate
    if space.dim:
        imgs = np.einsum("ijk,bj->bik", mu.coeffs, space.basis).reshape(-1, n)
        ideal_res = max(space.residual(v) for v in imgs) / scale
        sub_c = np.einsum("ijk,ai,bj,ck->abc", mu.coeffs, space.basis, space.basis, space.basis)
        # rounding relative to the parent bracket, not to the (possibly tiny) restriction
        sub_c[np.abs(sub_c) <= 1e-12 * scale] = 0.0
        sub = Bracket(sub_c)
        nil_ok = is_nilpotent(sub, tol)
    else:
        ideal_res, nil_ok = 0.0, True
    min_sv = float(np.min(np.linalg.svd(lmat @ comp.T, compute_uv=False))) if rank else np.inf
    return NilradicalResult(space, float(ideal_res), nil_ok, rank == 0 or min_sv > tol * smax, min_sv)


def split_frame(mu: Bracket, tol: float = TOL_RANK) -> tuple[Bracket, Splitting, np.ndarray]:
    """Rotate to an orthonormal frame ``(a-frame, n-frame)`` adapted to the nilradical.

    Returns ``(mu', split, Q)`` where columns of ``Q`` are the new frame
    vectors in old coordinates and ``mu' = act(Q^T, mu)``.  When the
    nilradical is already a coordinate subspace the old frame is kept (with
    a-indices moved first).
    """
    res = nilradical(mu, tol)
    n = mu.dim
    k = res.space.dim
    coord = [i for i in range(n) if np.linalg.norm(res.space.project(np.eye(n)[i]) - np.eye(n)[i]) <= 1e-10]
    if len(coord) == k:
        a_idx = [i for i in range(n) if i not in coord]
        q = np.eye(n)[:, a_idx + coord]
    else:
        q = np.hstack([res.space.complement().basis.T, res.space.basis.T])
    new = act(q.T, mu)
    return new, Splitting(tuple(range(n - k)), tuple(range(n - k, n))), q


def certify_splitting(mu: Bracket, split: Splitting, tol: float = 1e-9) -> NilradicalResult:
    """Check a user splitting against the computed nilradical; raise BadSplitting."""
    n = mu.dim
    if split.dim != n or sorted(split.a_idx + split.n_idx) != list(range(n)):
        raise BadSplitting("a- and n-indices must partition the frame")
    try:
        res = nilradical(mu)
    except NotSolvable as exc:
        raise BadSplitting(str(exc)) from exc
    if res.space.dim != len(split.n_idx):
        raise BadSplitting(f"nilradical has dimension {res.space.dim}, splitting claims {len(split.n_idx)}")
    for i in split.n_idx:
        if not res.space.contains(np.eye(n)[i], tol=1e-8):
            raise BadSplitting(f"frame vector e_{i + 1} is not in the nilradical")
    return res
