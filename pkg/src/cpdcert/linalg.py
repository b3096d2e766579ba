"""Dense matrices over the rationals (exact) or floats (with a rank tolerance).

The exact backend stores :class:`fractions.Fraction` entries in an object
array, so every operation is normalized by construction. Rank uses
fraction-free (Bareiss) elimination on integer rows; the float backend uses
the singular-value rule ``s > tol * s_max * max(rows, cols)``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import lcm
from numbers import Rational
from typing import Iterable, Sequence

import numpy as np

from .combinatorics import as_vector
from .errors import DomainError, checked_comb

EXACT = "exact"
FLOAT = "float"
BACKENDS = (EXACT, FLOAT)
DEFAULT_TOL = 1e-10


def to_fraction(value) -> Fraction:
    """Exact rational from int, Fraction, 'p/q' or decimal strings, or floats.

    Floats go through their shortest repr, so ``0.1`` becomes ``1/10``.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (bool, np.bool_)):
        raise DomainError(f"boolean {value!r} is not a matrix entry")
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, Rational):
        return Fraction(value.numerator, value.denominator)
    if isinstance(value, (float, np.floating)):
        if not np.isfinite(value):
            raise DomainError(f"non-finite entry {value!r}")
        return Fraction(repr(float(value)))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise DomainError(f"cannot parse {value!r} as a rational") from exc
    raise DomainError(f"unsupported entry type {type(value).__name__}")


def format_scalar(value) -> str:
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


@dataclass(frozen=True, eq=False)
class Matrix:
    """Immutable dense matrix tagged with its scalar backend."""

    data: np.ndarray
    backend: str = EXACT
    tol: float = DEFAULT_TOL
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.backend not in BACKENDS:
            raise DomainError(f"unknown backend {self.backend!r}")
        if not self.tol > 0:
            raise DomainError(f"tolerance must be positive, got {self.tol}")
        raw = np.array(self.data, dtype=object)
        if raw.ndim != 2:
            raise DomainError(f"a matrix needs 2 dimensions, got shape {raw.shape}")
        if self.backend == EXACT:
            arr = np.empty(raw.shape, dtype=object)
            for idx, v in np.ndenumerate(raw):
                arr[idx] = to_fraction(v)
        else:
            try:
                arr = raw.astype(float)
            except (TypeError, ValueError) as exc:
                raise DomainError("entries are not convertible to float") from exc
            if not np.all(np.isfinite(arr)):
                raise DomainError("non-finite entry in float matrix")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    # construction -------------------------------------------------------

    @classmethod
    def _trusted(cls, arr: np.ndarray, backend: str, tol: float = DEFAULT_TOL) -> "Matrix":
        # Skips entry conversion; callers guarantee Fraction/float entries.
        obj = object.__new__(cls)
        arr = np.asarray(arr, dtype=object if backend == EXACT else float)
        if arr.ndim != 2:
            raise DomainError(f"a matrix needs 2 dimensions, got shape {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(obj, "data", arr)
        object.__setattr__(obj, "backend", backend)
        object.__setattr__(obj, "tol", tol)
        object.__setattr__(obj, "_cache", {})
        return obj

    @classmethod
    def exact(cls, rows) -> "Matrix":
        return cls(rows, EXACT)

    @classmethod
    def floating(cls, rows, tol: float = DEFAULT_TOL) -> "Matrix":
        return cls(rows, FLOAT, tol)

    @classmethod
    def identity(cls, n: int, backend: str = EXACT, tol: float = DEFAULT_TOL) -> "Matrix":
        return cls(np.eye(n, dtype=int).astype(object), backend, tol)

    @classmethod
    def zeros(cls, rows: int, cols: int, backend: str = EXACT, tol: float = DEFAULT_TOL) -> "Matrix":
        return cls(np.zeros((rows, cols), dtype=int).astype(object), backend, tol)

    @classmethod
    def from_columns(cls, columns: Sequence, rows: int | None = None,
                     backend: str = EXACT, tol: float = DEFAULT_TOL) -> "Matrix":
        cols = [as_vector(c) for c in columns]
        if not cols:
            return cls(np.zeros((rows or 0, 0), dtype=object), backend, tol)
        return cls(np.column_stack(cols), backend, tol)

    # shape and access ---------------------------------------------------

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    @property
    def is_exact(self) -> bool:
        return self.backend == EXACT

    @property
    def T(self) -> "Matrix":
        return Matrix._trusted(self.data.T, self.backend, self.tol)

    def column(self, j: int) -> np.ndarray:
        return self.data[:, j].copy()

    def select_columns(self, idx: Iterable[int]) -> "Matrix":
        idx = list(idx)
        return Matrix._trusted(self.data[:, idx].reshape(self.rows, len(idx)), self.backend, self.tol)

    def select_rows(self, idx: Iterable[int]) -> "Matrix":
        idx = list(idx)
        return Matrix._trusted(self.data[idx, :].reshape(len(idx), self.cols), self.backend, self.tol)

    def like(self, arr) -> "Matrix":
        """A matrix with this backend and tolerance."""
        return Matrix(arr, self.backend, self.tol)

    def to_float(self, tol: float | None = None) -> "Matrix":
        return Matrix(self.data.astype(float), FLOAT, self.tol if tol is None else tol)

    def to_exact(self) -> "Matrix":
        return Matrix(self.data, EXACT, self.tol)

    def tolist(self) -> list[list]:
        return self.data.tolist()

    def to_strings(self) -> list[list[str]]:
        return [[format_scalar(v) for v in row] for row in self.data]

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(f"{self.backend}:{self.rows}x{self.cols}:".encode())
        h.update(";".join(",".join(r) for r in self.to_strings()).encode())
        return h.hexdigest()

    # arithmetic ---------------------------------------------------------

    def _combine_backend(self, other: "Matrix") -> tuple[str, float]:
        if self.is_exact and other.is_exact:
            return EXACT, self.tol
        return FLOAT, min(self.tol, other.tol)

    def __matmul__(self, other):
        if isinstance(other, Matrix):
            if self.cols != other.rows:
                raise DomainError(f"cannot multiply {self.shape} by {other.shape}")
            backend, tol = self._combine_backend(other)
            if backend == EXACT:
                if self.cols == 0:
                    return Matrix.zeros(self.rows, other.cols)
                return Matrix._trusted(self.data.dot(other.data), EXACT, tol)
            return Matrix._trusted(self.data.astype(float) @ other.data.astype(float), FLOAT, tol)
        vec = as_vector(other)
        if len(vec) != self.cols:
            raise DomainError(f"cannot multiply {self.shape} by vector of length {len(vec)}")
        if self.is_exact and vec.dtype == object:
            vec = np.array([to_fraction(v) for v in vec], dtype=object)
            if self.cols == 0:
                return np.array([Fraction(0)] * self.rows, dtype=object)
            return self.data.dot(vec)
        return self.data.astype(float) @ vec.astype(float)

    def _elementwise(self, other: "Matrix", op) -> "Matrix":
        if self.shape != other.shape:
            raise DomainError(f"shape mismatch {self.shape} vs {other.shape}")
        backend, tol = self._combine_backend(other)
        if backend == EXACT:
            return Matrix._trusted(op(self.data, other.data), EXACT, tol)
        return Matrix._trusted(op(self.data.astype(float), other.data.astype(float)), FLOAT, tol)

    def __add__(self, other: "Matrix") -> "Matrix":
        return self._elementwise(other, np.add)

    def __sub__(self, other: "Matrix") -> "Matrix":
        return self._elementwise(other, np.subtract)

    def scale(self, factor) -> "Matrix":
        if self.is_exact:
            return Matrix._trusted(self.data * to_fraction(factor), EXACT, self.tol)
        return Matrix._trusted(self.data * float(factor), FLOAT, self.tol)

    def scale_columns(self, factors) -> "Matrix":
        vec = as_vector(factors)
        if len(vec) != self.cols:
            raise DomainError("one scale factor per column is required")
        if self.is_exact:
            vec = np.array([to_fraction(v) for v in vec], dtype=object)
            return Matrix._trusted(self.data * vec[None, :], EXACT, self.tol)
        return Matrix._trusted(self.data * vec.astype(float)[None, :], FLOAT, self.tol)

    def equals(self, other: "Matrix") -> bool:
        """Exact equality, or closeness within tolerance when a float is involved."""
        if self.shape != other.shape:
            return False
        if self.is_exact and other.is_exact:
            return bool(np.all(self.data == other.data))
        a = self.data.astype(float)
        b = other.data.astype(float)
        scale = max(1.0, float(np.max(np.abs(a), initial=0.0)), float(np.max(np.abs(b), initial=0.0)))
        tol = min(self.tol, other.tol) if not (self.is_exact or other.is_exact) else max(self.tol, other.tol)
        return bool(np.all(np.abs(a - b) <= tol * scale * max(self.shape + (1,))))

    def is_zero(self) -> bool:
        if self.is_exact:
            return all(v == 0 for v in self.data.flat)
        return self.data.size == 0 or float(np.max(np.abs(self.data))) <= self.tol

    def __repr__(self) -> str:
        return f"Matrix({self.to_strings()!r}, backend={self.backend!r})"


def vector_is_zero(v, like: Matrix | None = None, scale: float = 1.0) -> bool:
    vec = as_vector(v)
    if vec.dtype == object and (like is None or like.is_exact):
        return all(x == 0 for x in vec)
    tol = DEFAULT_TOL if like is None else like.tol
    return vec.size == 0 or float(np.max(np.abs(vec.astype(float)))) <= tol * max(1.0, scale)


@dataclass(frozen=True)
class RankReport:
    rank: int
    kernel_basis: tuple[np.ndarray, ...]
    pivot_columns: tuple[int, ...]

    def kernel_matrix(self, backend: str = EXACT, rows: int | None = None) -> Matrix:
        n = rows if rows is not None else (len(self.kernel_basis[0]) if self.kernel_basis else 0)
        return Matrix.from_columns(self.kernel_basis, rows=n, backend=backend)


# exact elimination ------------------------------------------------------


def _integer_rows(arr: np.ndarray) -> list[list[int]]:
    """Scale each row by the lcm of its denominators (rank preserving)."""
    out = []
    for row in arr:
        den = lcm(*(f.denominator for f in row)) if len(row) else 1
        out.append([f.numerator * (den // f.denominator) for f in row])
    return out


def _bareiss_echelon(rows: list[list[int]], ncols: int) -> tuple[int, list[int], list[list[int]]]:
    """Fraction-free row echelon form. Returns (rank, pivot columns, echelon rows)."""
    M = [r[:] for r in rows]
    nr = len(M)
    r = 0
    prev = 1
    pivots: list[int] = []
    for c in range(ncols):
        if r == nr:
            break
        piv = next((i for i in range(r, nr) if M[i][c] != 0), None)
        if piv is None:
            continue
        if piv != r:
            M[r], M[piv] = M[piv], M[r]
        top = M[r]
        p = top[c]
        for i in range(r + 1, nr):
            row = M[i]
            a = row[c]
            if a == 0:
                if p != prev:
                    for j in range(c + 1, ncols):
                        row[j] = (p * row[j]) // prev
                continue
            row[c] = 0
            for j in range(c + 1, ncols):
                row[j] = (p * row[j] - a * top[j]) // prev
        prev = p
        pivots.append(c)
        r += 1
    return r, pivots, M


def _int_rank(rows: list[list[int]], ncols: int) -> int:
    return _bareiss_echelon(rows, ncols)[0]


def _exact_report(M: Matrix) -> RankReport:
    nr, nc = M.shape
    rows = _integer_rows(M.data)
    r, pivots, ech = _bareiss_echelon(rows, nc)
    # Back-substitute the r pivot rows in Fractions to get reduced form.
    red = [[Fraction(v) for v in ech[i]] for i in range(r)]
    for i in range(r - 1, -1, -1):
        c = pivots[i]
        p = red[i][c]
        red[i] = [v / p for v in red[i]]
        for k in range(i):
            f = red[k][c]
            if f != 0:
                red[k] = [a - f * b for a, b in zip(red[k], red[i])]
    free = [c for c in range(nc) if c not in set(pivots)]
    basis = []
    for f in free:
        v = [Fraction(0)] * nc
        v[f] = Fraction(1)
        for i, c in enumerate(pivots):
            v[c] = -red[i][f]
        basis.append(np.array(v, dtype=object))
    return RankReport(r, tuple(basis), tuple(pivots))


def _float_rank_value(arr: np.ndarray, tol: float) -> int:
    if arr.size == 0:
        return 0
    s = np.linalg.svd(arr, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > tol * s[0] * max(arr.shape)))


def _float_report(M: Matrix) -> RankReport:
    import scipy.linalg

    arr = M.data.astype(float)
    nr, nc = arr.shape
    if arr.size == 0:
        basis = tuple(np.eye(nc)[:, j] for j in range(nc))
        return RankReport(0, basis, ())
    r = _float_rank_value(arr, M.tol)
    _, _, vh = np.linalg.svd(arr)
    basis = tuple(vh[i].copy() for i in range(r, nc))
    _, _, piv = scipy.linalg.qr(arr, pivoting=True, mode="economic")
    return RankReport(r, basis, tuple(sorted(int(p) for p in piv[:r])))


def rank(M: Matrix) -> RankReport:
    """Rank, a kernel basis, and pivot columns."""
    key = "rank_report"
    if key not in M._cache:
        M._cache[key] = _exact_report(M) if M.is_exact else _float_report(M)
        M._cache["rank"] = M._cache[key].rank
    return M._cache[key]


def matrix_rank(M: Matrix) -> int:
    """Rank only; cheaper than :func:`rank` for the exact backend."""
    if "rank" not in M._cache:
        if M.is_exact:
            M._cache["rank"] = _int_rank(_integer_rows(M.data), M.cols)
        else:
            M._cache["rank"] = _float_rank_value(M.data.astype(float), M.tol)
    return M._cache["rank"]


def kernel(M: Matrix) -> list[np.ndarray]:
    return list(rank(M).kernel_basis)


def column_rank(M: Matrix, columns: Sequence[int]) -> int:
    """Rank of a column subset, memoized on ``M``."""
    key = ("colrank", tuple(columns))
    cache = M._cache
    if key not in cache:
        if not columns:
            cache[key] = 0
        elif M.is_exact:
            colrows = _column_integer_rows(M)
            cache[key] = _int_rank([colrows[j] for j in columns], M.rows)
        else:
            cache[key] = _float_rank_value(M.data[:, list(columns)].astype(float), M.tol)
    return cache[key]


def _column_integer_rows(M: Matrix) -> list[list[int]]:
    if "colrows" not in M._cache:
        M._cache["colrows"] = _integer_rows(M.data.T)
    return M._cache["colrows"]


def has_zero_column(M: Matrix) -> int | None:
    """Index of the first zero column, or None."""
    for j in range(M.cols):
        if column_rank(M, (j,)) == 0:
            return j
    return None


def k_rank(M: Matrix) -> int:
    """Largest k such that every k columns are linearly independent."""
    if "k_rank" in M._cache:
        return M._cache["k_rank"]
    value, witness = _k_rank_with_witness(M)
    M._cache["k_rank"] = value
    M._cache["k_rank_witness"] = witness
    return value


def dependent_subset(M: Matrix) -> tuple[int, ...] | None:
    """Lexicographically first dependent column set of size k_rank + 1 (0-based)."""
    k_rank(M)
    return M._cache["k_rank_witness"]


def _k_rank_with_witness(M: Matrix) -> tuple[int, tuple[int, ...] | None]:
    R = M.cols
    if R == 0:
        return 0, None
    zero = has_zero_column(M)
    if zero is not None:
        return 0, (zero,)
    r = matrix_rank(M)
    for k in range(2, r + 1):
        checked_comb(R, k, "k-rank subset enumeration")
        for subset in combinations(range(R), k):
            if column_rank(M, subset) < k:
                return k - 1, subset
    if r < R:
        # every r columns are independent, so any r+1 are dependent
        return r, tuple(range(r + 1))
    return r, None


def kron(a, b) -> np.ndarray:
    va, vb = as_vector(a), as_vector(b)
    return np.multiply.outer(va, vb).reshape(-1)


def khatri_rao(A: Matrix, B: Matrix) -> Matrix:
    """Columnwise Kronecker product, shape (A.rows * B.rows) x R."""
    if A.cols != B.cols:
        raise DomainError(f"Khatri-Rao product needs equal column counts, got {A.cols} and {B.cols}")
    backend, tol = A._combine_backend(B)
    a = A.data if backend == EXACT else A.data.astype(float)
    b = B.data if backend == EXACT else B.data.astype(float)
    out = (a[:, None, :] * b[None, :, :]).reshape(A.rows * B.rows, A.cols)
    return Matrix._trusted(out, backend, tol)


def vec(M: Matrix) -> np.ndarray:
    """Stack the columns of ``M``."""
    return M.data.reshape(-1, order="F").copy()


def diag(d, backend: str = EXACT, tol: float = DEFAULT_TOL) -> Matrix:
    vecd = as_vector(d)
    out = np.zeros((len(vecd), len(vecd)), dtype=object)
    out[:] = 0
    for i, v in enumerate(vecd):
        out[i, i] = v
    return Matrix(out, backend, tol)


def hstack(*blocks: Matrix) -> Matrix:
    backend = EXACT if all(b.is_exact for b in blocks) else FLOAT
    return Matrix(np.hstack([b.data for b in blocks]), backend, min(b.tol for b in blocks))


def exact_vector(values) -> np.ndarray:
    return np.array([to_fraction(v) for v in as_vector(values)], dtype=object)


def solve(M: Matrix, b) -> np.ndarray | None:
    """Some x with ``M x = b``, or None when the system is inconsistent."""
    rhs = as_vector(b)
    if len(rhs) != M.rows:
        raise DomainError(f"right-hand side has length {len(rhs)}, expected {M.rows}")
    if M.is_exact:
        aug = Matrix(np.column_stack([M.data, [to_fraction(v) for v in rhs]]) if M.rows else
                     np.zeros((0, M.cols + 1), dtype=object), EXACT)
        for v in rank(aug).kernel_basis:
            if v[-1] != 0:
                return np.array([-x / v[-1] for x in v[:-1]], dtype=object)
        if all(v == 0 for v in rhs):
            return np.array([Fraction(0)] * M.cols, dtype=object)
        return None
    arr = M.data.astype(float)
    x, *_ = np.linalg.lstsq(arr, rhs.astype(float), rcond=None)
    resid = arr @ x - rhs.astype(float)
    scale = max(1.0, float(np.max(np.abs(rhs.astype(float)), initial=0.0)))
    if float(np.max(np.abs(resid), initial=0.0)) > M.tol * scale * max(M.shape + (1,)) * 1e3:
        return None
    return x


def kernel_columns(M: Matrix) -> Matrix:
    """Kernel basis arranged as the columns of a matrix (cols x dim)."""
    basis = rank(M).kernel_basis
    if not basis:
        return Matrix._trusted(np.zeros((M.cols, 0), dtype=object if M.is_exact else float),
                               M.backend, M.tol)
    return Matrix._trusted(np.column_stack(basis), M.backend, M.tol)
