"""Support-pattern analysis for the structured-kernel conditions.

The question is whether some ``d`` (optionally restricted to a subspace
``d = G y``) with at least ``m`` nonzero entries satisfies ``U d_hat = 0``
where ``d_hat`` is the m-fold product vector. Every candidate support ``S``
is handled separately: a vector with support exactly ``S`` makes every
coordinate of ``d_hat`` indexed by an m-subset of ``S`` nonzero and every
other coordinate zero, so ``d_hat`` restricted to ``S`` must lie in the
kernel of the corresponding columns of ``U``.

Per support the outcomes are

* ``skip``: no vector of the subspace has exactly this support;
* ``refuted``: an exact argument shows no such ``d`` exists;
* ``witness``: an exact vector was found;
* ``open``: none of the above.

Refutation uses, in order, forced-zero coordinates of the restricted kernel,
a closed-form answer when the system is linear (m = 1) or one-dimensional
(the subspace of admissible ``d`` is a line), and a Groebner-basis
infeasibility certificate for small systems. Open supports are handed to a
randomized Gauss-Newton search whose candidates are rounded to rationals
and verified exactly.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

import numpy as np

from .combinatorics import product_vector, subset_positions
from .linalg import EXACT, Matrix, kernel_columns

log = logging.getLogger(__name__)

SKIP, REFUTED, WITNESS, OPEN = "skip", "refuted", "witness", "open"


@dataclass
class SupportResult:
    support: tuple[int, ...]
    outcome: str
    reason: str
    y: np.ndarray | None = None
    # data kept for the numeric search on open supports
    M: Matrix | None = None
    L: Matrix | None = None


@dataclass
class PatternReport:
    exhaustive: bool
    results: list[SupportResult] = field(default_factory=list)
    witness_d: np.ndarray | None = None
    witness_x: np.ndarray | None = None
    witness_support: tuple[int, ...] | None = None
    method: str = ""

    @property
    def open_supports(self) -> list[SupportResult]:
        return [r for r in self.results if r.outcome == OPEN]

    @property
    def all_refuted(self) -> bool:
        return self.exhaustive and all(r.outcome in (SKIP, REFUTED) for r in self.results)

    def counts(self) -> dict[str, int]:
        out = {SKIP: 0, REFUTED: 0, WITNESS: 0, OPEN: 0}
        for r in self.results:
            out[r.outcome] += 1
        return out


def _rows_nonzero(M: Matrix) -> bool:
    return all(any(v != 0 for v in row) for row in M.data)


def _generic_combination(Z: Matrix, M: Matrix) -> np.ndarray:
    """Integer combination y = Z c with every entry of M y nonzero.

    Uses c = (1, t, t^2, ...); each entry of M Z c is a nonzero polynomial in
    t of degree < Z.cols, so some t <= rows * cols + 1 works.
    """
    q = Z.cols
    MZ = M @ Z
    for t in range(1, MZ.rows * max(q, 1) + 2):
        c = np.array([Fraction(t) ** i for i in range(q)], dtype=object)
        if all(v != 0 for v in MZ @ c):
            return Z @ c
    raise AssertionError("no generic combination found")  # unreachable by the degree bound


def _groebner_refutes(M: Matrix, L: Matrix, m: int) -> bool:
    """True when the polynomial system has no solution with M y fully nonzero.

    Homogeneity lets the first coordinate of ``M y`` be fixed to 1; the
    remaining nonvanishing conditions enter through one saturation variable.
    The reduced basis equals {1} exactly when no complex solution exists.
    """
    import sympy

    p = M.cols
    ys = sympy.symbols(f"y0:{p}")
    t = sympy.Symbol("t_sat")
    forms = [sum(sympy.Rational(v.numerator, v.denominator) * y for v, y in zip(row, ys)) for row in M.data]
    s = len(forms)
    local = list(combinations(range(s), m))
    products = [sympy.Mul(*(forms[i] for i in T)) for T in local]
    polys = []
    for row in L.data:
        expr = sum(sympy.Rational(v.numerator, v.denominator) * P for v, P in zip(row, products) if v != 0)
        expr = sympy.expand(expr)
        if expr != 0:
            polys.append(expr)
    polys.append(sympy.expand(forms[0] - 1))
    polys.append(sympy.expand(t * sympy.Mul(*forms[1:]) - 1))
    basis = sympy.groebner(polys, *ys, t, order="grevlex", domain="QQ")
    return list(basis.exprs) == [1]


def analyze_support(
    S: tuple[int, ...],
    G: Matrix,
    N: Matrix,
    positions: dict[tuple[int, ...], int],
    m: int,
    groebner_max_vars: int,
) -> SupportResult:
    """Decide one support pattern. ``G`` parametrizes admissible d; ``N`` spans ker U."""
    R = G.rows
    inside = set(S)
    outside = [i for i in range(R) if i not in inside]
    if outside:
        W = kernel_columns(G.select_rows(outside))
    else:
        W = Matrix.identity(G.cols)
    if W.cols == 0:
        return SupportResult(S, SKIP, "subspace forces d = 0")
    M = G.select_rows(S) @ W
    if not _rows_nonzero(M):
        return SupportResult(S, SKIP, "subspace forces a zero inside the support")
    local = list(combinations(range(len(S)), m))
    idx = [positions[tuple(S[i] for i in T)] for T in local]
    chosen = set(idx)
    other = [j for j in range(N.rows) if j not in chosen]
    Y = kernel_columns(N.select_rows(other)) if other else Matrix.identity(N.cols)
    if Y.cols == 0:
        return SupportResult(S, REFUTED, "restricted kernel is trivial")
    KS = N.select_rows(idx) @ Y
    for r, row in enumerate(KS.data):
        if all(v == 0 for v in row):
            T = tuple(S[i] + 1 for i in local[r])
            return SupportResult(S, REFUTED, f"kernel forces coordinate {T} to zero")
    L = kernel_columns(KS.T).T  # rows annihilate the restricted kernel
    p = M.cols
    if L.rows == 0:
        y = _generic_combination(Matrix.identity(p), M)
        return SupportResult(S, WITNESS, "every vector with this support works", y)
    if m == 1:
        Z = kernel_columns(L @ M)
        if Z.cols == 0:
            return SupportResult(S, REFUTED, "linear system has only the zero solution")
        if not _rows_nonzero(M @ Z):
            return SupportResult(S, REFUTED, "linear system forces a zero inside the support")
        return SupportResult(S, WITNESS, "linear system admits full support", _generic_combination(Z, M))
    if p == 1:
        y = np.array([Fraction(1)], dtype=object)
        dh = product_vector(M @ y, m)
        if all(v == 0 for v in L @ dh):
            return SupportResult(S, WITNESS, "one-dimensional family satisfies the system", y)
        return SupportResult(S, REFUTED, "one-dimensional family violates the system")
    y0 = _generic_combination(Matrix.identity(p), M)
    if all(v == 0 for v in L @ product_vector(M @ y0, m)):
        return SupportResult(S, WITNESS, "generic point satisfies the system", y0)
    if p <= groebner_max_vars:
        if _groebner_refutes(M, L, m):
            return SupportResult(S, REFUTED, "Groebner basis certifies infeasibility")
        return SupportResult(S, OPEN, "polynomial system is feasible over C", M=M, L=L)
    return SupportResult(S, OPEN, f"{p} free parameters exceed the Groebner limit", M=M, L=L)


def enumerate_supports(
    U: Matrix,
    R: int,
    m: int,
    G: Matrix,
    *,
    supports=None,
    groebner_max_vars: int = 4,
) -> PatternReport:
    """Run :func:`analyze_support` over ``supports`` (all of size >= m by default).

    Stops at the first exact witness. ``G`` is R x p with independent columns.
    """
    exhaustive = supports is None
    if supports is None:
        supports = (S for s in range(m, R + 1) for S in combinations(range(R), s))
    N = kernel_columns(U)
    positions = subset_positions(R, m)
    report = PatternReport(exhaustive=exhaustive, method="support enumeration")
    for S in supports:
        if N.cols == 0:
            report.results.append(SupportResult(tuple(S), REFUTED, "kernel is trivial"))
            continue
        res = analyze_support(tuple(S), G, N, positions, m, groebner_max_vars)
        report.results.append(res)
        if res.outcome == WITNESS:
            report.witness_d = _full_vector(G, S, res.y)
            report.witness_support = tuple(S)
            break
    return report


def _full_vector(G: Matrix, S, y) -> np.ndarray:
    R = G.rows
    inside = set(S)
    outside = [i for i in range(R) if i not in inside]
    W = kernel_columns(G.select_rows(outside)) if outside else Matrix.identity(G.cols)
    return G @ (W @ y)


def preimage(G: Matrix, d: np.ndarray) -> np.ndarray:
    """Coefficients y with G y = d for G of full column rank."""
    from .linalg import solve

    y = solve(G, d)
    assert y is not None
    return y


# numeric search ------------------------------------------------------------


def _search_one(M: np.ndarray, L: np.ndarray, m: int, rng: np.random.Generator,
                restarts: int, iters: int = 60) -> list[np.ndarray]:
    """Batched damped Gauss-Newton on the unit sphere; returns converged y's."""
    s, p = M.shape
    local = np.array(list(combinations(range(s), m)), dtype=int)
    Ln = L / np.maximum(np.linalg.norm(L, axis=1, keepdims=True), 1e-300)
    Y = rng.standard_normal((restarts, p))
    Y /= np.linalg.norm(Y, axis=1, keepdims=True)
    eye = np.eye(p)
    for _ in range(iters):
        D = Y @ M.T                                   # (B, s)
        Dc = D[:, local]                              # (B, nT, m)
        res = np.prod(Dc, axis=2) @ Ln.T              # (B, l)
        JD = np.zeros((restarts, len(local), s))
        for q in range(m):
            others = np.prod(np.delete(Dc, q, axis=2), axis=2)
            np.add.at(JD, (slice(None), np.arange(len(local)), local[:, q]), others)
        J = np.einsum("lt,bts,sp->blp", Ln, JD, M)
        JtJ = np.einsum("blp,blq->bpq", J, J)
        mu = 1e-10 + 1e-6 * np.trace(JtJ, axis1=1, axis2=2)
        step = np.linalg.solve(JtJ + mu[:, None, None] * eye, -np.einsum("blp,bl->bp", J, res)[..., None])[..., 0]
        step -= np.sum(step * Y, axis=1, keepdims=True) * Y
        Y = Y + step
        Y /= np.linalg.norm(Y, axis=1, keepdims=True)
    D = Y @ M.T
    res = np.prod(D[:, local], axis=2) @ Ln.T
    rnorm = np.linalg.norm(res, axis=1)
    absd = np.abs(D)
    good = (rnorm < 1e-10) & (absd.min(axis=1) > 1e-6 * absd.max(axis=1))
    return [Y[b] for b in np.flatnonzero(good)]


def _rationalize(y: np.ndarray, bound: int) -> list[np.ndarray]:
    out = []
    for j in np.argsort(-np.abs(y)):
        if abs(y[j]) < 1e-9:
            continue
        z = y / y[j]
        out.append(np.array([Fraction(float(v)).limit_denominator(bound) for v in z], dtype=object))
        if len(out) == 3:
            break
    return out


def search_witness(
    report: PatternReport,
    G: Matrix,
    m: int,
    *,
    seed: int,
    restarts: int = 200,
    denominator_bound: int = 10**6,
) -> bool:
    """Numeric search on the open supports of ``report``; records an exact witness."""
    rng = np.random.default_rng(seed)
    for res in report.open_supports:
        M = res.M.data.astype(float)
        L = res.L.data.astype(float)
        for y in _search_one(M, L, m, rng, restarts):
            for cand in _rationalize(y, denominator_bound):
                d_S = res.M @ cand
                if any(v == 0 for v in d_S):
                    continue
                if all(v == 0 for v in res.L @ product_vector(d_S, m)):
                    report.witness_d = _full_vector(G, res.support, cand)
                    report.witness_support = res.support
                    report.method = "randomized search with exact verification"
                    return True
    return False


def random_supports(R: int, m: int, rng: np.random.Generator, per_size: int):
    """Random supports of every size m..R (used when enumeration is too large)."""
    seen = set()
    for s in range(m, R + 1):
        for _ in range(per_size):
            S = tuple(sorted(rng.choice(R, size=s, replace=False).tolist()))
            if S not in seen:
                seen.add(S)
                yield S


def exact_identity(p: int) -> Matrix:
    return Matrix.identity(p, EXACT)
