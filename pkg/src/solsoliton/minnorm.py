"""Minimum-norm point of a finite point set's convex hull (Wolfe's method).

Points are first deduplicated and sorted lexicographically, and every
``argmin`` takes the first minimizer, so the run is deterministic.  When all
points are rational the final corral is re-solved over the rationals and the
optimality condition ``<x, p> >= |x|^2`` is verified exactly.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import exact as _exact


@dataclass(frozen=True)
class MinNormResult:
    point: np.ndarray
    weights: np.ndarray          # convex coefficients over ``points``
    points: np.ndarray           # deduplicated, sorted input
    support: tuple[int, ...]
    exact: tuple[Fraction, ...] | None = None
    iterations: int = 0

    @property
    def norm2(self) -> float:
        return float(self.point @ self.point)


def _affine_minimizer(pts: np.ndarray) -> np.ndarray:
    """Coefficients (summing to 1) of the min-norm point of the affine hull."""
    k = pts.shape[0]
    gram = pts @ pts.T
    system = np.zeros((k + 1, k + 1))
    system[:k, :k] = gram
    system[:k, k] = 1.0
    system[k, :k] = 1.0
    rhs = np.zeros(k + 1)
    rhs[k] = 1.0
    sol = np.linalg.lstsq(system, rhs, rcond=None)[0]
    return sol[:k]


def _exact_affine(pts: list[list[Fraction]]) -> list[Fraction] | None:
    k = len(pts)
    rows = []
    for i in range(k):
        rows.append([sum(a * b for a, b in zip(pts[i], pts[j])) for j in range(k)] + [Fraction(1), Fraction(0)])
    rows.append([Fraction(1)] * k + [Fraction(0), Fraction(1)])
    red, piv = _exact.rref(rows)
    if piv != list(range(k + 1)):
        return None
    return [red[i][k + 1] for i in range(k)]


def min_norm_point(points, tol: float = 1e-12, max_iter: int = 1000) -> MinNormResult:
    raw = np.atleast_2d(np.asarray(points, dtype=float))
    if raw.size == 0:
        raise ValueError("empty point set")
    pts = np.unique(raw, axis=0)  # sorted lexicographically
    m = pts.shape[0]
    scale = max(1.0, float(np.max(np.sum(pts**2, axis=1))))
    eps = tol * scale

    first = int(np.argmin(np.sum(pts**2, axis=1)))
    support = [first]
    lam = np.array([1.0])
    x = pts[first].copy()
    it = 0
    for it in range(1, max_iter + 1):
        scores = pts @ x
        j = int(np.argmin(scores))
        if scores[j] >= x @ x - eps or j in support:
            break
        support.append(j)
        lam = np.append(lam, 0.0)
        while True:
            alpha = _affine_minimizer(pts[support])
            if np.all(alpha > tol):
                lam = alpha
                break
            neg = alpha <= tol
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = np.where(neg, lam / (lam - alpha), np.inf)
            theta = float(np.min(ratios))
            lam = theta * alpha + (1 - theta) * lam
            keep = lam > tol
            if not np.any(keep):
                keep[int(np.argmax(lam))] = True
            support = [s for s, k in zip(support, keep) if k]
            lam = lam[keep] / lam[keep].sum()
        x = lam @ pts[support]

    weights = np.zeros(m)
    weights[support] = lam
    exact_point = None
    if _exact.is_rational_array(pts):
        fpts = [[_exact.to_fraction(v) for v in row] for row in pts]
        coeffs = _exact_affine([fpts[s] for s in support])
        if coeffs is not None and all(c > 0 for c in coeffs):
            d = pts.shape[1]
            xq = [sum(c * fpts[s][t] for c, s in zip(coeffs, support)) for t in range(d)]
            nq = sum(v * v for v in xq)
            if all(sum(a * b for a, b in zip(xq, p)) >= nq for p in fpts):
                exact_point = tuple(xq)
                x = np.array([float(v) for v in xq])
                weights = np.zeros(m)
                weights[support] = [float(c) for c in coeffs]
    order = np.argsort(support)
    return MinNormResult(point=x, weights=weights, points=pts,
                         support=tuple(int(support[i]) for i in order),
                         exact=exact_point, iterations=it)
