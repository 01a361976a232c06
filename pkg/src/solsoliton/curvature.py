"""Curvature of a solvmanifold read off its structure constants."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import Bracket, Splitting, certify_splitting


def sym(m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    return 0.5 * (m + m.T)


@dataclass(frozen=True)
class CurvatureReport:
    R: np.ndarray
    B: np.ndarray
    H: np.ndarray
    Ric: np.ndarray
    scalar: float

    def as_dict(self) -> dict:
        return {
            "R": self.R.tolist(),
            "B": self.B.tolist(),
            "H": self.H.tolist(),
            "Ric": self.Ric.tolist(),
            "scalar": self.scalar,
            "ricci_eigenvalues": np.linalg.eigvalsh(self.Ric).tolist(),
        }


def R_operator(mu: Bracket) -> np.ndarray:
    """``R = 1/4 (-2 sum (ad e_i)^T ad e_i + sum ad e_i (ad e_i)^T)``."""
    ads = mu.ad_matrices()
    r = 0.25 * (-2.0 * np.einsum("ikj,ikl->jl", ads, ads) + np.einsum("ijk,ilk->jl", ads, ads))
    return sym(r)


def R_quadratic_form(mu: Bracket, x) -> float:
    """``<RX, X> = -1/2 sum <[X, e_i], e_j>^2 + 1/4 sum <[e_i, e_j], X>^2`` evaluated directly."""
    x = np.asarray(x, dtype=float)
    n = mu.dim
    first = sum(mu(x, np.eye(n)[i])[j] ** 2 for i in range(n) for j in range(n))
    second = sum(float(mu(np.eye(n)[i], np.eye(n)[j]) @ x) ** 2 for i in range(n) for j in range(n))
    return -0.5 * first + 0.25 * second


def killing_operator(mu: Bracket) -> np.ndarray:
    """``B_ij = tr(ad e_i ad e_j)``."""
    ads = mu.ad_matrices()
    return sym(np.einsum("ikl,jlk->ij", ads, ads))


def mean_curvature(mu: Bracket) -> np.ndarray:
    """``H = sum_i tr(ad e_i) e_i``; zero iff unimodular."""
    return np.einsum("ikk->i", mu.ad_matrices()).copy()


def ricci_operator(mu: Bracket) -> CurvatureReport:
    r = R_operator(mu)
    b = killing_operator(mu)
    h = mean_curvature(mu)
    ad_h = np.einsum("i,ikj->kj", h, mu.ad_matrices())
    ric = sym(r - 0.5 * b - sym(ad_h))
    return CurvatureReport(R=r, B=b, H=h, Ric=ric, scalar=float(np.trace(ric)))


def ricci_blockwise(mu: Bracket, split: Splitting, certify: bool = True) -> np.ndarray:
    """Assemble Ric from the separate a-a, a-n and n-n block formulas.

    Only valid in a frame where ``a`` is orthogonal to the nilradical ``n``;
    the splitting is certified first unless ``certify=False``.
    """
    if certify:
        certify_splitting(mu, split)
    a_idx, n_idx = list(split.a_idx), list(split.n_idx)
    n = mu.dim
    c = mu.coeffs
    ads = mu.ad_matrices()
    h = mean_curvature(mu)
    ad_h_n = np.einsum("i,ikj->kj", h, ads)[np.ix_(n_idx, n_idx)]
    ad_n = ads[:, n_idx][:, :, n_idx]  # ad X restricted to n, any X
    ric = np.zeros((n, n))

    # <[A, A_i], [A', A_i]> summed over the a-frame
    aa = c[np.ix_(a_idx, a_idx, range(n))]  # [A_r, A_s]
    s_blocks = np.array([sym(ad_n[r]) for r in a_idx]).reshape(len(a_idx), len(n_idx), len(n_idx))

    # a-a block
    g_aa = np.einsum("ris,tis->rt", aa, aa)
    ric[np.ix_(a_idx, a_idx)] = -0.5 * g_aa - np.einsum("rij,tji->rt", s_blocks, s_blocks)

    # a-n block
    xa = c[np.ix_(n_idx, a_idx, range(n))]  # [X, A_i]
    cross = (-0.5 * np.einsum("ris,xis->rx", aa, xa)
             - 0.5 * np.einsum("rji,xji->rx", ad_n[a_idx], ad_n[n_idx]))
    h_a = mu.coeffs[np.ix_(range(n), a_idx, n_idx)]  # [e, A] projected to n
    ad_h_a = np.einsum("i,irx->rx", h, h_a)  # <[H, A], X>
    cross += -0.5 * ad_h_a
    ric[np.ix_(a_idx, n_idx)] = cross
    ric[np.ix_(n_idx, a_idx)] = cross.T

    # n-n block
    aa_n = c[np.ix_(a_idx, a_idx, n_idx)]
    nn = c[np.ix_(n_idx, n_idx, n_idx)]
    block = 0.25 * np.einsum("rsx,rsy->xy", aa_n, aa_n)
    for r in a_idx:
        m = ad_n[r]
        block += 0.5 * sym(m @ m.T - m.T @ m)
    block += -0.5 * np.einsum("xij,yij->xy", nn, nn) + 0.25 * np.einsum("ijx,ijy->xy", nn, nn)
    block -= sym(ad_h_n)
    ric[np.ix_(n_idx, n_idx)] = block
    return ric
