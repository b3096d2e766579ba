"""The conditions (Km), (Hm), (Cm), (Um) and (Wm) on a pair of factor matrices.

(Km), (Hm) and (Cm) are rank statements and are always decided. (Um) and
(Wm) quantify over every vector ``d`` and are answered three-valued: every
``HOLDS`` names the sound rule that proved it, every ``FAILS`` carries a
witness that has been re-verified along two independent routes before it
is returned, and anything else is ``UNDETERMINED``.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from itertools import combinations
from math import comb

import numpy as np

from . import patterns
from .combinatorics import MultiIndex, product_vector, subsets, support_size
from .compound import khatri_rao_compound
from .errors import DomainError, InternalError, ResourceError, checked_comb
from .linalg import (
    EXACT,
    Matrix,
    column_rank,
    dependent_subset,
    diag,
    format_scalar,
    k_rank,
    kernel,
    matrix_rank,
    rank,
    solve,
    vector_is_zero,
)

log = logging.getLogger(__name__)

# Supports are enumerated exhaustively only up to this many candidates.
MAX_SUPPORTS = 4096
DEFAULT_RESTARTS = 200


class Status(str, enum.Enum):
    HOLDS = "holds"
    FAILS = "fails"
    UNDETERMINED = "undetermined"


class Condition(str, enum.Enum):
    K = "K"
    H = "H"
    C = "C"
    U = "U"
    W = "W"


@dataclass(frozen=True)
class Witness:
    """Evidence attached to a failing verdict. Subsets are 1-based."""

    d: np.ndarray | None = None
    x: np.ndarray | None = None
    subset: MultiIndex | None = None
    delta: int | None = None
    kernel_vector: np.ndarray | None = None

    def to_dict(self) -> dict:
        out = {}
        if self.d is not None:
            out["d"] = [format_scalar(v) for v in self.d]
        if self.x is not None:
            out["x"] = [format_scalar(v) for v in self.x]
        if self.subset is not None:
            out["subset"] = list(self.subset.entries)
        if self.delta is not None:
            out["delta"] = self.delta
        if self.kernel_vector is not None:
            out["kernel_vector"] = [format_scalar(v) for v in self.kernel_vector]
        return out


@dataclass(frozen=True)
class ConditionVerdict:
    condition: Condition
    m: int
    status: Status
    witness: Witness | None = None
    provenance: tuple[str, ...] = ()
    details: dict = field(default_factory=dict)

    @property
    def name(self) -> str:
        return f"{self.condition.value}{self.m}"

    @property
    def holds(self) -> bool:
        return self.status is Status.HOLDS

    @property
    def fails(self) -> bool:
        return self.status is Status.FAILS

    def to_dict(self) -> dict:
        return {
            "condition": self.name,
            "status": self.status.value,
            "witness": None if self.witness is None else self.witness.to_dict(),
            "provenance": list(self.provenance),
            "details": _jsonable(self.details),
        }


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (bool, int, str)) or value is None:
        return value
    if isinstance(value, (np.integer,)):
        return int(value)
    return format_scalar(value)


@dataclass(frozen=True)
class HProfile:
    """H(delta) for delta = 1..R with the lexicographically first minimizer."""

    values: tuple[int, ...]
    minimizers: tuple[MultiIndex, ...]

    def __getitem__(self, delta: int) -> int:
        return self.values[delta - 1]


# validation ----------------------------------------------------------------


def _check_pair(A: Matrix, B: Matrix) -> int:
    if A.cols != B.cols:
        raise DomainError(f"A and B need the same number of columns, got {A.cols} and {B.cols}")
    if A.cols < 1:
        raise DomainError("factor matrices need at least one column")
    return A.cols


def _check_m_positive(m: int) -> None:
    if not isinstance(m, (int, np.integer)) or m < 1:
        raise DomainError(f"m must be a positive integer, got {m!r}")


def _check_compound_order(A: Matrix, B: Matrix, m: int) -> int:
    R = _check_pair(A, B)
    _check_m_positive(m)
    if m > min(A.rows, B.rows, R):
        raise DomainError(f"m={m} must satisfy m <= min(I, J, R) = {min(A.rows, B.rows, R)}")
    return R


# decidable conditions -------------------------------------------------------


def check_Km(A: Matrix, B: Matrix, m: int) -> ConditionVerdict:
    R = _check_pair(A, B)
    _check_m_positive(m)
    rA, rB, kA, kB = matrix_rank(A), matrix_rank(B), k_rank(A), k_rank(B)
    first = rA + kB >= R + m and kA >= m
    second = rB + kA >= R + m and kB >= m
    details = {
        "r_A": rA, "r_B": rB, "k_A": kA, "k_B": kB, "R": R,
        "r_A + k_B >= R + m": rA + kB >= R + m, "k_A >= m": kA >= m,
        "r_B + k_A >= R + m": rB + kA >= R + m, "k_B >= m": kB >= m,
    }
    fired = []
    if first:
        fired.append("r_A + k_B >= R + m and k_A >= m")
    if second:
        fired.append("r_B + k_A >= R + m and k_B >= m")
    if fired:
        return ConditionVerdict(Condition.K, m, Status.HOLDS, provenance=tuple(fired), details=details)
    return ConditionVerdict(Condition.K, m, Status.FAILS,
                            provenance=("both rank/k-rank inequality pairs violated",), details=details)


def h_profile(A: Matrix, B: Matrix) -> HProfile:
    """Exhaustive minimum of r(A_S) + r(B_S) - |S| over column subsets of each size."""
    R = _check_pair(A, B)
    values, minimizers = [], []
    for delta in range(1, R + 1):
        checked_comb(R, delta, "H profile subsets")
        best, arg = None, None
        for S in combinations(range(R), delta):
            value = column_rank(A, S) + column_rank(B, S) - delta
            if best is None or value < best:
                best, arg = value, S
        values.append(best)
        minimizers.append(MultiIndex.from_zero_based(arg, R))
    return HProfile(tuple(values), tuple(minimizers))


def check_Hm(A: Matrix, B: Matrix, m: int) -> ConditionVerdict:
    _check_pair(A, B)
    _check_m_positive(m)
    prof = h_profile(A, B)
    details = {"H": list(prof.values)}
    for delta, value in enumerate(prof.values, start=1):
        if value < min(delta, m):
            w = Witness(subset=prof.minimizers[delta - 1], delta=delta)
            return ConditionVerdict(Condition.H, m, Status.FAILS, w,
                                    (f"H({delta}) = {value} < min({delta}, {m})",), details)
    return ConditionVerdict(Condition.H, m, Status.HOLDS,
                            provenance=("H(delta) >= min(delta, m) for every delta",), details=details)


def check_Cm(A: Matrix, B: Matrix, m: int) -> ConditionVerdict:
    R = _check_compound_order(A, B, m)
    U = khatri_rao_compound(A, B, m)
    target = comb(R, m)
    r = matrix_rank(U)
    details = {"rank": r, "columns": target, "shape": list(U.shape)}
    if r == target:
        return ConditionVerdict(Condition.C, m, Status.HOLDS, provenance=("compound Khatri-Rao rank test",),
                                details=details)
    details["deficit"] = target - r
    v = kernel(U)[0]
    return ConditionVerdict(Condition.C, m, Status.FAILS, Witness(kernel_vector=v),
                            ("compound Khatri-Rao rank test",), details)


def m_for_C(R: int, C: Matrix) -> int:
    """R - r_C + 2."""
    if C.cols != R:
        raise DomainError(f"C has {C.cols} columns, expected R={R}")
    return R - matrix_rank(C) + 2


# witnesses -------------------------------------------------------------------


def verify_witness(A: Matrix, B: Matrix, m: int, d, C: Matrix | None = None, x=None) -> bool:
    """Re-check a (Um)/(Wm) counterexample.

    Requires ``U d_hat = 0`` with ``d_hat != 0`` and, independently, that
    ``B Diag(d) A^T`` has rank at most m - 1 while ``d`` has at least m nonzero
    entries. With ``C`` given, also ``C^T x = d``.
    """
    d = np.asarray(d)
    U = khatri_rao_compound(A, B, m)
    dh = product_vector(d, m)
    scale = float(np.max(np.abs(dh.astype(float)), initial=1.0))
    if vector_is_zero(dh, U, scale):
        return False
    if not vector_is_zero(U @ dh, U, scale * max(1.0, float(np.max(np.abs(U.data.astype(float)), initial=1.0)))):
        return False
    backend = EXACT if (A.is_exact and B.is_exact) else "float"
    M = B @ diag(d, backend, min(A.tol, B.tol)) @ A.T
    if support_size(d) < m or matrix_rank(M) > m - 1:
        return False
    if C is not None:
        if x is None:
            return False
        if not vector_is_zero(np.asarray(C.T @ x) - d, C, scale):
            return False
    return True


def _require_verified(A, B, m, d, C=None, x=None) -> None:
    if not verify_witness(A, B, m, d, C, x):
        raise InternalError(f"counterexample for m={m} failed re-verification: d={list(d)}")


def _floor_witness(A: Matrix, B: Matrix, m: int, R: int) -> np.ndarray | None:
    """Indicator of an m-set containing dependent columns of A or B, if k < m."""
    for M in (A, B):
        if k_rank(M) < m:
            dep = dependent_subset(M)
            extra = [i for i in range(R) if i not in dep][: m - len(dep)]
            support = set(dep) | set(extra)
            return np.array([1 if i in support else 0 for i in range(R)], dtype=object)
    return None


def _floor_supports(A: Matrix, B: Matrix, m: int, R: int):
    """Every m-set that contains a dependent column set of A or B of size <= m."""
    seen = set()
    for M in (A, B):
        k = k_rank(M)
        if k >= m:
            continue
        for T in subsets(R, m):
            if T in seen:
                continue
            for size in range(1, k + 2):
                if any(column_rank(M, D) < size for D in combinations(T, size)):
                    seen.add(T)
                    yield T
                    break


def _sound_holds(A: Matrix, B: Matrix, m: int, condition: Condition, trail: list[str]) -> ConditionVerdict | None:
    """Km, then Hm, then Cm; the first that holds proves (Um)."""
    K = check_Km(A, B, m)
    if K.holds:
        trail.append(f"K{m} holds, which implies C{m} and hence U{m}")
        return ConditionVerdict(condition, m, Status.HOLDS, provenance=tuple(trail), details={"K": K.to_dict()})
    trail.append(f"K{m} fails")
    try:
        H = check_Hm(A, B, m)
    except ResourceError as exc:
        trail.append(f"H{m} skipped: {exc}")
    else:
        if H.holds:
            trail.append(f"H{m} holds, which implies U{m}")
            return ConditionVerdict(condition, m, Status.HOLDS, provenance=tuple(trail), details={"H": H.to_dict()})
        trail.append(f"H{m} fails")
    Cv = check_Cm(A, B, m)
    if Cv.holds:
        trail.append(f"C{m} holds, which implies U{m}")
        return ConditionVerdict(condition, m, Status.HOLDS, provenance=tuple(trail), details={"C": Cv.to_dict()})
    trail.append(f"C{m} fails (rank {Cv.details['rank']} of {Cv.details['columns']})")
    return None


def _support_plan(R: int, m: int, seed: int, limit: int):
    total = sum(comb(R, s) for s in range(m, R + 1))
    if total <= limit:
        return None, total
    rng = np.random.default_rng(seed)
    per_size = max(1, limit // max(1, R - m + 1))
    return list(patterns.random_supports(R, m, rng, per_size)), total


def _structural(A, B, m, R, G, seed, restarts, support_limit, groebner_max_vars, trail, details):
    """Support analysis and search. Returns (status, d) with d exact or None."""
    U = khatri_rao_compound(A, B, m)
    supports, total = _support_plan(R, m, seed, support_limit)
    report = patterns.enumerate_supports(U, R, m, G, supports=supports, groebner_max_vars=groebner_max_vars)
    details["supports"] = {"candidates": total, "exhaustive": report.exhaustive, **report.counts()}
    if report.witness_d is not None:
        trail.append(f"support analysis found a witness on support {_one_based(report.witness_support)}")
        return Status.FAILS, report.witness_d
    if report.all_refuted:
        trail.append(f"exhaustive support analysis refuted all {total} supports")
        return Status.HOLDS, None
    if report.exhaustive:
        trail.append(f"support analysis left {len(report.open_supports)} supports open")
    else:
        trail.append(f"{total} supports exceed the enumeration limit {support_limit}; sampled {len(report.results)}")
    if restarts > 0 and patterns.search_witness(report, G, m, seed=seed, restarts=restarts):
        trail.append(f"randomized search found a witness on support {_one_based(report.witness_support)}")
        return Status.FAILS, report.witness_d
    if restarts > 0:
        trail.append("randomized search found no witness")
    return Status.UNDETERMINED, None


def _one_based(S) -> str:
    return "(" + ",".join(str(i + 1) for i in S) + ")"


# three-valued conditions --------------------------------------------------


def check_Um(A: Matrix, B: Matrix, m: int, *, seed: int = 0, restarts: int = DEFAULT_RESTARTS,
             support_limit: int = MAX_SUPPORTS, groebner_max_vars: int = 4) -> ConditionVerdict:
    R = _check_compound_order(A, B, m)
    trail: list[str] = []
    kA, kB = k_rank(A), k_rank(B)
    details = {"k_A": kA, "k_B": kB}
    if min(kA, kB) < m:
        d = _floor_witness(A, B, m, R)
        _require_verified(A, B, m, d)
        trail.append(f"min(k_A, k_B) = {min(kA, kB)} < {m}: indicator of an m-set with dependent columns")
        return ConditionVerdict(Condition.U, m, Status.FAILS, Witness(d=d), tuple(trail), details)
    verdict = _sound_holds(A, B, m, Condition.U, trail)
    if verdict is not None:
        return verdict
    if not (A.is_exact and B.is_exact):
        trail.append("structural analysis needs the exact backend")
        return ConditionVerdict(Condition.U, m, Status.UNDETERMINED, provenance=tuple(trail), details=details)
    G = Matrix.identity(R)
    status, d = _structural(A, B, m, R, G, seed, restarts, support_limit, groebner_max_vars, trail, details)
    witness = None
    if status is Status.FAILS:
        _require_verified(A, B, m, d)
        witness = Witness(d=d)
    return ConditionVerdict(Condition.U, m, status, witness, tuple(trail), details)


def check_Wm(A: Matrix, B: Matrix, C: Matrix, m: int, *, seed: int = 0, restarts: int = DEFAULT_RESTARTS,
             support_limit: int = MAX_SUPPORTS, groebner_max_vars: int = 4) -> ConditionVerdict:
    R = _check_compound_order(A, B, m)
    if C.cols != R:
        raise DomainError(f"C has {C.cols} columns, expected R={R}")
    trail: list[str] = []
    kA, kB = k_rank(A), k_rank(B)
    details = {"k_A": kA, "k_B": kB, "r_C": matrix_rank(C)}
    exact = A.is_exact and B.is_exact and C.is_exact
    if min(kA, kB) >= m:
        verdict = _sound_holds(A, B, m, Condition.W, trail)
        if verdict is not None:
            trail_w = verdict.provenance + (f"U{m} implies W{m}",)
            return ConditionVerdict(Condition.W, m, Status.HOLDS, provenance=trail_w, details=verdict.details)
    else:
        trail.append(f"min(k_A, k_B) = {min(kA, kB)} < {m}, so U{m} fails; looking inside range(C^T)")
        for T in _floor_supports(A, B, m, R):
            d = np.array([1 if i in T else 0 for i in range(R)], dtype=object)
            x = solve(C.T, d)
            if x is not None:
                _require_verified(A, B, m, d, C, x)
                trail.append(f"indicator of {_one_based(T)} lies in range(C^T)")
                return ConditionVerdict(Condition.W, m, Status.FAILS, Witness(d=d, x=x), tuple(trail), details)
    if not exact:
        trail.append("structural analysis needs the exact backend")
        return ConditionVerdict(Condition.W, m, Status.UNDETERMINED, provenance=tuple(trail), details=details)
    CT = C.T
    G = CT.select_columns(rank(CT).pivot_columns)
    status, d = _structural(A, B, m, R, G, seed, restarts, support_limit, groebner_max_vars, trail, details)
    witness = None
    if status is Status.FAILS:
        x = solve(CT, d)
        _require_verified(A, B, m, d, C, x)
        witness = Witness(d=d, x=x)
    return ConditionVerdict(Condition.W, m, status, witness, tuple(trail), details)
