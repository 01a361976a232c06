"""Exact rational arithmetic helpers.

Floats are promoted to the rational the user most plausibly meant: a small
denominator (at most 10**9) is taken when it reproduces the float to within
a few ulps, otherwise the exact binary value is used.  Both choices are
genuine rationals, so every exact computation below is exact for *some*
rational input within rounding of the float.
"""
from __future__ import annotations

from fractions import Fraction
from numbers import Rational

import numpy as np
import sympy

MAX_DENOMINATOR = 10**9


def to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer, Rational)):
        return Fraction(int(x)) if isinstance(x, (int, np.integer)) else Fraction(x)
    x = float(x)
    if not np.isfinite(x):
        raise ValueError(f"non-finite value {x!r} has no rational form")
    guess = Fraction(x).limit_denominator(MAX_DENOMINATOR)
    if abs(float(guess) - x) <= 4 * np.finfo(float).eps * max(abs(x), 1e-300):
        return guess
    return Fraction(x)


def is_rational_array(a) -> bool:
    """True when every entry has a short rational form (see module doc)."""
    for x in np.asarray(a, dtype=float).ravel():
        if not np.isfinite(x):
            return False
        f = Fraction(x).limit_denominator(MAX_DENOMINATOR)
        if abs(float(f) - x) > 4 * np.finfo(float).eps * max(abs(x), 1e-300):
            return False
    return True


def fraction_array(a) -> list:
    arr = np.asarray(a, dtype=float)
    return [[to_fraction(x) for x in row] for row in arr.reshape(arr.shape[0], -1)]


def rref(rows: list[list[Fraction]]) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form over the rationals; returns (rows, pivot columns)."""
    m = [list(r) for r in rows]
    if not m:
        return m, []
    ncols = len(m[0])
    pivots = []
    r = 0
    for col in range(ncols):
        pivot = next((i for i in range(r, len(m)) if m[i][col] != 0), None)
        if pivot is None:
            continue
        m[r], m[pivot] = m[pivot], m[r]
        inv = 1 / m[r][col]
        m[r] = [v * inv for v in m[r]]
        for i in range(len(m)):
            if i != r and m[i][col] != 0:
                f = m[i][col]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(col)
        r += 1
        if r == len(m):
            break
    return m[:r], pivots


def rank(rows) -> int:
    return len(rref(rows)[1])


def nullspace(rows: list[list[Fraction]], ncols: int) -> list[list[Fraction]]:
    """Basis of {x : A x = 0} for the rational matrix with the given rows."""
    if not rows:
        return [[Fraction(int(i == j)) for i in range(ncols)] for j in range(ncols)]
    red, pivots = rref(rows)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for row, p in zip(red, pivots):
            v[p] = -row[f]
        basis.append(v)
    return basis


def sympy_matrix(a) -> sympy.Matrix:
    arr = np.asarray(a, dtype=float)
    return sympy.Matrix(arr.shape[0], arr.shape[1],
                        [sympy.Rational(f.numerator, f.denominator)
                         for f in map(to_fraction, arr.ravel())])


def is_diagonalizable_exact(m) -> bool:
    """Diagonalizability over C of a rational (or sympy) matrix.

    M is diagonalizable iff its minimal polynomial is squarefree, i.e. iff
    the squarefree part q = p / gcd(p, p') of the characteristic polynomial
    already annihilates M.  When gcd(p, p') = 1 this is immediate.
    """
    M = m if isinstance(m, sympy.MatrixBase) else sympy_matrix(m)
    x = sympy.Symbol("x")
    p = M.charpoly(x).as_expr()
    p = sympy.Poly(p, x)
    g = sympy.gcd(p, p.diff(x))
    if g.degree() == 0:
        return True
    q = sympy.div(p, g)[0]
    # Horner evaluation of q at M.
    n = M.shape[0]
    acc = sympy.zeros(n, n)
    for coeff in q.all_coeffs():
        acc = acc * M + coeff * sympy.eye(n)
    return acc.is_zero_matrix
