"""Third-order tensors built from factor matrices, and factor equivalence.

Layout: entry t_ijk (1-based) sits at flat position (i-1)JK + (j-1)K + k and
at row (i-1)J + j, column k of the IJ x K unfolding. Both are C-order
reshapes of the (I, J, K) array.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import DomainError
from .linalg import EXACT, FLOAT, Matrix, format_scalar


@dataclass(frozen=True)
class Tensor3:
    data: np.ndarray  # shape (I, J, K)
    backend: str = EXACT

    def __post_init__(self) -> None:
        if np.ndim(self.data) != 3:
            raise DomainError(f"a third-order tensor needs 3 dimensions, got {np.ndim(self.data)}")

    @property
    def dims(self) -> tuple[int, int, int]:
        return tuple(self.data.shape)

    def __add__(self, other: "Tensor3") -> "Tensor3":
        if self.dims != other.dims:
            raise DomainError(f"dimension mismatch {self.dims} vs {other.dims}")
        backend = EXACT if self.backend == other.backend == EXACT else FLOAT
        return Tensor3(self.data + other.data, backend)


@dataclass(frozen=True)
class FactorTriple:
    A: Matrix
    B: Matrix
    C: Matrix

    def __post_init__(self) -> None:
        if not self.A.cols == self.B.cols == self.C.cols:
            raise DomainError(
                f"factor matrices need equal column counts, got {self.A.cols}, {self.B.cols}, {self.C.cols}")

    @property
    def R(self) -> int:
        return self.A.cols

    @property
    def dims(self) -> tuple[int, int, int]:
        return (self.A.rows, self.B.rows, self.C.rows)

    @property
    def is_exact(self) -> bool:
        return self.A.is_exact and self.B.is_exact and self.C.is_exact

    def factors(self) -> tuple[Matrix, Matrix, Matrix]:
        return (self.A, self.B, self.C)


@dataclass(frozen=True)
class EquivalenceReport:
    """``permutation[j]`` (1-based) is the column of the first triple that column j of the second matches.

    ``scalings`` holds one vector per factor with
    ``second[:, j] = first[:, permutation[j]] * scalings[f][j]``.
    """

    matched: bool
    permutation: tuple[int, ...] | None = None
    scalings: tuple[np.ndarray, ...] | None = None
    reason: str = ""

    def to_dict(self) -> dict:
        return {
            "matched": self.matched,
            "permutation": None if self.permutation is None else list(self.permutation),
            "scalings": None if self.scalings is None else [[format_scalar(v) for v in s] for s in self.scalings],
            "reason": self.reason,
        }


def _numeric(M: Matrix) -> np.ndarray:
    return M.data if M.is_exact else M.data.astype(float)


def build_tensor(f: FactorTriple) -> Tensor3:
    """Sum over r of a_r outer b_r outer c_r."""
    A, B, C = (_numeric(M) for M in f.factors())
    I, J, K = f.dims
    out = np.zeros((I, J, K), dtype=object if f.is_exact else float)
    if f.is_exact:
        out[...] = Fraction(0)
    for r in range(f.R):
        out = out + np.multiply.outer(np.multiply.outer(A[:, r], B[:, r]), C[:, r])
    return Tensor3(out, EXACT if f.is_exact else FLOAT)


def matricize(t: Tensor3) -> Matrix:
    I, J, K = t.dims
    return Matrix(t.data.reshape(I * J, K), t.backend)


def unmatricize(M: Matrix, I: int, J: int) -> Tensor3:
    if M.rows != I * J:
        raise DomainError(f"{M.rows} rows cannot be split as {I} x {J}")
    return Tensor3(np.array(M.data).reshape(I, J, M.cols), M.backend)


def vectorize_tensor(t: Tensor3) -> np.ndarray:
    return t.data.reshape(-1).copy()


def unvectorize_tensor(v, dims: tuple[int, int, int], backend: str = EXACT) -> Tensor3:
    arr = np.asarray(v)
    if arr.size != dims[0] * dims[1] * dims[2]:
        raise DomainError(f"vector of length {arr.size} does not fit dims {dims}")
    return Tensor3(arr.reshape(dims), backend)


# matching ------------------------------------------------------------------


def _first_nonzero(col: np.ndarray, exact: bool, tol: float) -> int:
    if exact:
        return next(i for i, v in enumerate(col) if v != 0)
    mags = np.abs(col.astype(float))
    return int(np.flatnonzero(mags > tol * max(1.0, mags.max()))[0])


def _check_no_zero_columns(M: Matrix, label: str) -> None:
    for j in range(M.cols):
        col = M.column(j)
        if M.is_exact:
            zero = all(v == 0 for v in col)
        else:
            zero = float(np.max(np.abs(col.astype(float)), initial=0.0)) <= M.tol
        if zero:
            raise DomainError(f"factor {label} has a zero column {j + 1}; rank-1 terms must be nonzero")


def _rank_one_terms(f: FactorTriple) -> list[np.ndarray]:
    A, B, C = (_numeric(M) for M in f.factors())
    return [np.multiply.outer(np.multiply.outer(A[:, r], B[:, r]), C[:, r]).reshape(-1) for r in range(f.R)]


def _assign(cost: np.ndarray) -> tuple[int, ...]:
    rows, cols = linear_sum_assignment(cost)
    # rows index columns of the second triple
    perm = [0] * len(rows)
    for j, i in zip(rows, cols):
        perm[j] = int(i)
    return tuple(perm)


def _term_cost(t1: list[np.ndarray], t2: list[np.ndarray], exact: bool) -> np.ndarray:
    R = len(t1)
    cost = np.zeros((R, R))
    for j in range(R):
        for i in range(R):
            if exact:
                cost[j, i] = 0.0 if np.all(t1[i] == t2[j]) else 1.0 + float(
                    np.sum(np.abs((t1[i] - t2[j]).astype(float))))
            else:
                cost[j, i] = float(np.linalg.norm(t1[i].astype(float) - t2[j].astype(float)))
    return cost


def match_factors(f1: FactorTriple, f2: FactorTriple) -> EquivalenceReport:
    """Whether ``f2`` equals ``f1`` up to a column permutation and scalings with product 1."""
    if f1.dims != f2.dims or f1.R != f2.R:
        raise DomainError(f"triples differ in shape: {f1.dims} R={f1.R} vs {f2.dims} R={f2.R}")
    for f in (f1, f2):
        for label, M in zip("ABC", f.factors()):
            _check_no_zero_columns(M, label)
    exact = f1.is_exact and f2.is_exact
    tol = min(M.tol for f in (f1, f2) for M in f.factors())
    # equivalent triples have identical rank-1 terms up to the permutation
    t1, t2 = _rank_one_terms(f1), _rank_one_terms(f2)
    perm = _assign(_term_cost(t1, t2, exact))
    scalings = _scalings(f1, f2, perm, exact, tol)
    if scalings is None:
        return EquivalenceReport(False, reason="no column assignment reproduces the rank-1 terms")
    if not _verify(f1, f2, perm, scalings):
        return EquivalenceReport(False, reason="best assignment fails exact verification")
    return EquivalenceReport(True, tuple(p + 1 for p in perm), scalings, "verified")


def _scalings(f1, f2, perm, exact, tol):
    out = []
    for M1, M2 in zip(f1.factors()[:2], f2.factors()[:2]):
        s = []
        for j, i in enumerate(perm):
            c2 = _numeric(M2)[:, j]
            c1 = _numeric(M1)[:, i]
            p = _first_nonzero(c2, exact, tol)
            if (c1[p] == 0) if exact else abs(float(c1[p])) <= tol:
                return None
            s.append(c2[p] / c1[p])
        out.append(np.array(s, dtype=object if exact else float))
    lam_c = np.array([1 / (a * b) for a, b in zip(*out)], dtype=object if exact else float)
    return (out[0], out[1], lam_c)


def _verify(f1, f2, perm, scalings) -> bool:
    idx = list(perm)
    for M1, M2, s in zip(f1.factors(), f2.factors(), scalings):
        if not M1.select_columns(idx).scale_columns(s).equals(M2):
            return False
    return True


def match_single_factor(C1: Matrix, C2: Matrix) -> EquivalenceReport:
    """Whether ``C2 = C1 P L`` for a permutation ``P`` and nonsingular diagonal ``L``."""
    if C1.shape != C2.shape:
        raise DomainError(f"shape mismatch {C1.shape} vs {C2.shape}")
    exact = C1.is_exact and C2.is_exact
    tol = min(C1.tol, C2.tol)
    R = C1.cols
    a1, a2 = _numeric(C1), _numeric(C2)

    def proportional(i: int, j: int):
        c1, c2 = a1[:, i], a2[:, j]
        if exact:
            z1 = [v == 0 for v in c1]
            if z1 != [v == 0 for v in c2] or all(z1):
                return None
            p = z1.index(False)
            lam = c2[p] / c1[p]
            return lam if all(c1 * lam == c2) else None
        n1, n2 = np.linalg.norm(c1.astype(float)), np.linalg.norm(c2.astype(float))
        if n1 <= tol or n2 <= tol:
            return None
        p = int(np.argmax(np.abs(c1.astype(float))))
        lam = float(c2[p]) / float(c1[p])
        return lam if np.linalg.norm(c1.astype(float) * lam - c2.astype(float)) <= tol * max(1.0, n2) * R else None

    cost = np.full((R, R), 1.0)
    lam = {}
    for j in range(R):
        for i in range(R):
            value = proportional(i, j)
            if value is not None:
                cost[j, i] = 0.0
                lam[(j, i)] = value
    perm = _assign(cost)
    if any((j, i) not in lam for j, i in enumerate(perm)):
        return EquivalenceReport(False, reason="columns cannot be paired proportionally")
    scale = np.array([lam[(j, i)] for j, i in enumerate(perm)], dtype=object if exact else float)
    if not C1.select_columns(list(perm)).scale_columns(scale).equals(C2):
        return EquivalenceReport(False, reason="pairing fails verification")
    return EquivalenceReport(True, tuple(p + 1 for p in perm), (scale,), "verified")


def exhaustive_match(f1: FactorTriple, f2: FactorTriple) -> bool:
    """Brute force over all permutations (small R only)."""
    exact = f1.is_exact and f2.is_exact
    tol = min(M.tol for f in (f1, f2) for M in f.factors())
    for perm in permutations(range(f1.R)):
        s = _scalings(f1, f2, perm, exact, tol)
        if s is not None and _verify(f1, f2, perm, s):
            return True
    return False
