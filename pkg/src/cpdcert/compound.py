"""Compound matrices and the identities built on them.

``C_k(A)`` holds every k x k minor of ``A`` with row and column index sets in
lexicographic order. Exact minors are produced level by level: each order-j
minor is expanded along its last column into order-(j-1) minors that are
already tabulated, so shared sub-minors are computed once.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .combinatorics import MultiIndex, as_vector, product_vector, subset_positions, subsets
from .errors import DomainError, check_size, checked_comb
from .linalg import EXACT, FLOAT, Matrix, diag, khatri_rao, to_fraction, vec


@dataclass(frozen=True)
class CompoundMatrix:
    data: Matrix
    source_rows: int
    source_cols: int
    order: int

    def row_label(self, i: int) -> MultiIndex:
        return MultiIndex.from_zero_based(subsets(self.source_rows, self.order)[i], self.source_rows)

    def column_label(self, j: int) -> MultiIndex:
        return MultiIndex.from_zero_based(subsets(self.source_cols, self.order)[j], self.source_cols)

    def column_index(self, label: MultiIndex) -> int:
        """0-based column position of a 1-based multi-index."""
        return subset_positions(self.source_cols, self.order)[label.zero_based()]

    def column(self, label: MultiIndex) -> np.ndarray:
        return self.data.column(self.column_index(label))


def _check_order(rows: int, cols: int, k: int) -> None:
    if not 1 <= k <= min(rows, cols):
        raise DomainError(f"compound order k={k} must satisfy 1 <= k <= min({rows}, {cols})")
    nr = checked_comb(rows, k, "compound rows")
    nc = checked_comb(cols, k, "compound columns")
    check_size(nr * nc, f"compound size C({rows},{k})*C({cols},{k})")


def minors_table(arr: np.ndarray, k: int) -> np.ndarray:
    """All k x k minors of an object array, lexicographically arranged.

    Works for any entries supporting ``+``, ``-`` and ``*`` (Fractions, ints,
    sympy expressions).
    """
    I, R = arr.shape
    _check_order(I, R, k)
    level = np.array(arr, dtype=object)
    for j in range(2, k + 1):
        check_size(comb(I, j) * comb(R, j), f"intermediate minors C({I},{j})*C({R},{j})")
        rows_prev = subset_positions(I, j - 1)
        cols_prev = subset_positions(R, j - 1)
        row_sets = subsets(I, j)
        col_sets = subsets(R, j)
        last = np.array([t[-1] for t in col_sets])
        prefix = np.array([cols_prev[t[:-1]] for t in col_sets])
        out = np.empty((len(row_sets), len(col_sets)), dtype=object)
        for a, S in enumerate(row_sets):
            acc = None
            for p, row in enumerate(S):
                sub = rows_prev[S[:p] + S[p + 1:]]
                term = arr[row, last] * level[sub, prefix]
                if (j - 1 - p) % 2:
                    term = -term
                acc = term if acc is None else acc + term
            out[a] = acc
        level = out
    return level


def _float_minors(arr: np.ndarray, k: int) -> np.ndarray:
    I, R = arr.shape
    _check_order(I, R, k)
    rs = np.array(subsets(I, k), dtype=int)
    cs = np.array(subsets(R, k), dtype=int)
    blocks = arr[rs[:, None, :, None], cs[None, :, None, :]]
    return np.linalg.det(blocks)


def compound(A: Matrix, k: int) -> CompoundMatrix:
    """The k-th compound matrix of ``A``."""
    if A.is_exact:
        table = minors_table(A.data, k)
        data = Matrix._trusted(table, EXACT, A.tol)
    else:
        data = Matrix._trusted(_float_minors(A.data.astype(float), k), FLOAT, A.tol)
    return CompoundMatrix(data, A.rows, A.cols, k)


def compound_diag(d, k: int) -> np.ndarray:
    """Diagonal of ``C_k(Diag(d))``, which equals the product vector of ``d``."""
    R = len(as_vector(d))
    if not 1 <= k <= R:
        raise DomainError(f"need 1 <= k <= R={R}, got k={k}")
    return product_vector(d, k)


def khatri_rao_compound(A: Matrix, B: Matrix, m: int) -> Matrix:
    """``C_m(A) ⊙ C_m(B)``, shape C(I,m)C(J,m) x C(R,m)."""
    if A.cols != B.cols:
        raise DomainError(f"factor matrices need equal column counts, got {A.cols} and {B.cols}")
    if not 1 <= m <= min(A.rows, B.rows, A.cols):
        raise DomainError(f"m={m} must satisfy 1 <= m <= min(I, J, R) = {min(A.rows, B.rows, A.cols)}")
    key = ("krc", m, id(B))
    cached = A._cache.get(key)
    if cached is not None and cached[0] is B:
        return cached[1]
    check_size(comb(A.rows, m) * comb(B.rows, m) * comb(A.cols, m), "compound Khatri-Rao entries")
    if m == 1:
        out = khatri_rao(A, B)
    else:
        out = khatri_rao(compound(A, m).data, compound(B, m).data)
    A._cache[key] = (B, out)
    return out


@dataclass(frozen=True)
class PhiMap:
    """Matrix expressing ``C_m([A x])`` as a linear image of ``C_{m-1}(A)``."""

    data: Matrix
    source_vector_length: int
    order: int


def phi_table(x, m: int) -> np.ndarray:
    """Generic (object) entries of the expansion map, for any scalar type.

    Row (i_1..i_m) has ``(-1)^(m-1-p) x_{i_p}`` in the column of the tuple
    with ``i_p`` removed: the last-column Laplace expansion signs. For m = 1
    the single column corresponds to the empty minor, taken as 1.
    """
    xs = as_vector(x)
    I = len(xs)
    if not 1 <= m <= I:
        raise DomainError(f"need 1 <= m <= I={I}, got m={m}")
    rows = subsets(I, m)
    cols = subset_positions(I, m - 1)
    out = np.zeros((len(rows), len(cols)), dtype=object)
    for a, S in enumerate(rows):
        for p, i in enumerate(S):
            entry = xs[i] if (m - 1 - p) % 2 == 0 else -xs[i]
            out[a, cols[S[:p] + S[p + 1:]]] = entry
    return out


def phi_map(x, m: int) -> PhiMap:
    xs = as_vector(x)
    if xs.dtype == object:
        data = Matrix(phi_table([to_fraction(v) for v in xs], m), EXACT)
    else:
        data = Matrix(phi_table(xs, m), FLOAT)
    return PhiMap(data, len(xs), m)


def vec_compound_identity_check(A: Matrix, B: Matrix, d, k: int) -> bool:
    """``vec(C_k(B Diag(d) A^T)) == [C_k(A) ⊙ C_k(B)] d_hat`` for the given data."""
    if A.cols != B.cols or len(as_vector(d)) != A.cols:
        raise DomainError("A, B and d must share the column count R")
    backend = EXACT if (A.is_exact and B.is_exact and as_vector(d).dtype == object) else FLOAT
    D = diag(d, backend, min(A.tol, B.tol))
    M = B @ D @ A.T
    lhs = vec(compound(M, k).data)
    rhs = khatri_rao_compound(A, B, k) @ product_vector(
        [to_fraction(v) for v in as_vector(d)] if backend == EXACT else as_vector(d).astype(float), k
    )
    if backend == EXACT:
        return bool(np.all(lhs == rhs))
    lhs = lhs.astype(float)
    rhs = np.asarray(rhs, dtype=float)
    scale = max(1.0, float(np.max(np.abs(lhs), initial=0.0)), float(np.max(np.abs(rhs), initial=0.0)))
    return bool(np.allclose(lhs, rhs, rtol=0.0, atol=1e-9 * scale))
