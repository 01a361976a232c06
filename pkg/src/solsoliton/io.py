"""JSON input and output for brackets.

Schema::

    {"dim": 3,
     "brackets": [[1, 2, 3, 1.0]],     # [i, j, k, value]: [e_i, e_j] += value e_k, 1-based
     "a_indices": [1],                 # optional, complement of the nilradical
     "gram": [[...]]}                  # optional inner product of the e_i

Without ``gram`` the ``e_i`` are orthonormal.  With it, the bracket is
rewritten in the orthonormal frame produced by Cholesky, taken in the
order nilradical first, so the nilradical stays a coordinate subspace.
"""
from __future__ import annotations

import json

import numpy as np

from .algebra import Bracket, Splitting, act, certify_splitting, nilradical
from .errors import BadSplitting, InvalidGram, ParseError, SplittingMismatch


def _no_duplicate_keys(pairs):
    out = {}
    for k, v in pairs:
        if k in out:
            raise ParseError(f"duplicate key {k!r}", location=k)
        out[k] = v
    return out


def _load(text: str) -> dict:
    try:
        data = json.loads(text, object_pairs_hook=_no_duplicate_keys)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", location=f"line {exc.lineno} column {exc.colno}") from None
    if not isinstance(data, dict):
        raise ParseError("top level must be an object", location="$")
    return data


def _int(x, where: str) -> int:
    if isinstance(x, bool) or not isinstance(x, (int, float)) or int(x) != x:
        raise ParseError(f"expected an integer, got {x!r}", location=where)
    return int(x)


def _parse_brackets(data: dict, n: int) -> np.ndarray:
    rows = data.get("brackets", [])
    if not isinstance(rows, list):
        raise ParseError("brackets must be a list", location="brackets")
    c = np.zeros((n, n, n))
    seen = {}
    for pos, row in enumerate(rows):
        where = f"brackets[{pos}]"
        if not isinstance(row, list) or len(row) != 4:
            raise ParseError("each bracket entry is [i, j, k, value]", location=where)
        i, j, k = (_int(x, where) for x in row[:3])
        v = row[3]
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not np.isfinite(v):
            raise ParseError(f"value must be a finite number, got {v!r}", location=where)
        if not all(1 <= t <= n for t in (i, j, k)):
            raise ParseError(f"index out of range 1..{n}", location=where)
        if i == j:
            raise ParseError("[e_i, e_i] must be zero", location=where)
        key = (min(i, j), max(i, j), k)
        if key in seen:
            raise ParseError(f"duplicate entry for [e_{key[0]}, e_{key[1]}] component {k}"
                             f" (first at brackets[{seen[key]}])", location=where)
        seen[key] = pos
        sign = 1.0 if i < j else -1.0
        c[key[0] - 1, key[1] - 1, k - 1] = sign * float(v)
    return c


def _parse_gram(data: dict, n: int) -> np.ndarray | None:
    if "gram" not in data or data["gram"] is None:
        return None
    try:
        g = np.array(data["gram"], dtype=float)
    except (TypeError, ValueError):
        raise ParseError("gram must be a numeric matrix", location="gram") from None
    if g.shape != (n, n):
        raise ParseError(f"gram must be {n}x{n}", location="gram")
    if not np.allclose(g, g.T, atol=1e-12 * max(1.0, np.abs(g).max())):
        raise InvalidGram("gram matrix is not symmetric")
    return 0.5 * (g + g.T)


def orthonormalize(mu: Bracket, gram: np.ndarray, order: list[int]) -> Bracket:
    """Rewrite ``mu`` in the Gram-Schmidt frame of ``gram`` taken in ``order``."""
    gp = gram[np.ix_(order, order)]
    try:
        lower = np.linalg.cholesky(gp)
    except np.linalg.LinAlgError:
        raise InvalidGram("gram matrix is not positive definite") from None
    if np.min(np.diag(lower)) <= 1e-12 * max(1.0, np.max(np.diag(lower))):
        raise InvalidGram("gram matrix is numerically singular")
    # coordinates change by L^T in the permuted order
    g = np.zeros_like(gram)
    g[np.ix_(order, order)] = lower.T
    return act(g, mu)


def parse_algebra(text: str) -> tuple[Bracket, Splitting | None]:
    data = _load(text)
    if "dim" not in data:
        raise ParseError("missing 'dim'", location="dim")
    n = _int(data["dim"], "dim")
    if n < 1:
        raise ParseError("dim must be positive", location="dim")
    unknown = set(data) - {"dim", "brackets", "a_indices", "gram", "name", "comment"}
    if unknown:
        raise ParseError(f"unknown keys {sorted(unknown)}", location=sorted(unknown)[0])
    mu = Bracket(_parse_brackets(data, n))

    split = None
    if data.get("a_indices") is not None:
        raw = data["a_indices"]
        if not isinstance(raw, list):
            raise ParseError("a_indices must be a list", location="a_indices")
        a_idx = sorted({_int(x, "a_indices") - 1 for x in raw})
        if len(a_idx) != len(raw) or any(not 0 <= a < n for a in a_idx):
            raise ParseError("a_indices must be distinct indices in 1..dim", location="a_indices")
        split = Splitting.from_a(n, a_idx)

    gram = _parse_gram(data, n)
    if gram is not None:
        if split is not None:
            order = list(split.n_idx) + list(split.a_idx)
        else:
            order = _nil_first_order(mu)
        mu = orthonormalize(mu, gram, order)

    if split is not None:
        try:
            certify_splitting(mu, split)
        except BadSplitting as exc:
            raise SplittingMismatch(f"a_indices do not complement the nilradical: {exc}") from None
    return mu, split


def _nil_first_order(mu: Bracket) -> list[int]:
    """Nilradical coordinates first when the nilradical is a coordinate subspace."""
    n = mu.dim
    try:
        nr = nilradical(mu)
    except Exception:
        return list(range(n))
    basis = nr.space.elements().reshape(nr.space.dim, n) if nr.space.dim else np.zeros((0, n))
    support = [i for i in range(n) if np.any(np.abs(basis[:, i]) > 1e-12)]
    if len(support) == nr.space.dim:
        return support + [i for i in range(n) if i not in support]
    return list(range(n))


def serialize(mu: Bracket, split: Splitting | None = None, tol: float = 0.0) -> str:
    """Inverse of :func:`parse_algebra` (orthonormal frame, no gram)."""
    data = {
        "dim": mu.dim,
        "brackets": [[i + 1, j + 1, k + 1, float(v)] for i, j, k, v in mu.entries(tol)],
    }
    if split is not None:
        data["a_indices"] = [a + 1 for a in split.a_idx]
    return json.dumps(data)
