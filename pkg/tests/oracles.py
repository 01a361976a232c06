"""Independent reference computations used by the tests."""
from __future__ import annotations

import itertools

import numpy as np

from solsoliton.algebra import Bracket, inner_V


def _simplex_lattice(k, total):
    """All nonnegative integer k-vectors summing to ``total``."""
    for cuts in itertools.combinations(range(total + k - 1), k - 1):
        prev, out = -1, []
        for c in cuts:
            out.append(c - prev - 1)
            prev = c
        out.append(total + k - 1 - prev - 1)
        yield out


def grid_min_norm(points, step=1e-3, coarse=0.05):
    """Smallest ``|sum w_i p_i|`` over convex weights on the lattice of spacing ``step``.

    An exhaustive lattice is too large beyond three points, so the search is
    multi-resolution: the full simplex at spacing ``coarse``, then zero-sum
    mass transfers at spacings shrinking to ``step``.  The objective is a
    convex quadratic, so a point no transfer improves is within one lattice
    cell of the lattice optimum.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    k = pts.shape[0]
    units = int(round(1.0 / step))
    if k == 1:
        return pts[0].copy()
    gram = pts @ pts.T
    f = lambda w: float(w @ gram @ w)
    coarse_units = int(round(1.0 / coarse))
    grid = np.array(list(_simplex_lattice(k, coarse_units)), dtype=float) / coarse_units
    vals = np.einsum("ai,ij,aj->a", grid, gram, grid)
    w = np.round(grid[int(np.argmin(vals))] * units).astype(int)
    w[-1] += units - w.sum()
    best = f(w / units)
    # every zero-sum move with entries in {-1, 0, 1}; pairwise moves alone stall
    moves = [np.array(d) for d in itertools.product((-1, 0, 1), repeat=k) if sum(d) == 0 and any(d)]
    for size in (25, 10, 5, 2, 1):
        improved = True
        while improved:
            improved = False
            for d in moves:
                cand = w + size * d
                if cand.min() < 0:
                    continue
                val = f(cand / units)
                if val < best - 1e-15:
                    w, best, improved = cand, val, True
    return (w / units) @ pts


def random_weight_subset(rng, n=None, size=None):
    if n is None:
        n = int(rng.integers(3, 7))
    pool = sorted({tuple(np.eye(n, dtype=int)[k] - np.eye(n, dtype=int)[i] - np.eye(n, dtype=int)[j])
                   for i, j in itertools.combinations(range(n), 2) for k in range(n)})
    if size is None:
        size = int(rng.integers(1, 7))
    idx = rng.choice(len(pool), size=min(size, len(pool)), replace=False)
    return [pool[i] for i in sorted(idx)]


def bracket_basis(n):
    """Orthonormal basis of the bracket space under ``inner_V``."""
    out = []
    for i, j in itertools.combinations(range(n), 2):
        for k in range(n):
            c = np.zeros((n, n, n))
            c[i, j, k] = 1.0 / np.sqrt(2.0)
            out.append(Bracket(c))
    return out


def fd_gradient_error(func, grad, mu, h=1e-5):
    """Max relative error between ``grad`` and central differences of ``func``."""
    worst_abs, scale = 0.0, 0.0
    for e in bracket_basis(mu.dim):
        fd = (func(mu + e * h) - func(mu - e * h)) / (2 * h)
        an = inner_V(grad, e)
        worst_abs = max(worst_abs, abs(fd - an))
        scale = max(scale, abs(an))
    return worst_abs / max(scale, 1e-300)


def random_unit_bracket(rng, n):
    mu = Bracket(rng.normal(size=(n, n, n)))
    return mu / mu.norm()
