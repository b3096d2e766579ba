"""Uniqueness certificates assembled from condition verdicts.

A certificate lists every rule that was tried, in the order tried, with its
verdict. Rules are tried cheapest first: rank and k-rank arithmetic, then
compound ranks, then the structural and randomized analyses.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import __version__
from .conditions import (
    DEFAULT_RESTARTS,
    ConditionVerdict,
    check_Cm,
    check_Hm,
    check_Km,
    check_Um,
    check_Wm,
    m_for_C,
)
from .errors import DomainError, InternalError, ResourceError
from .linalg import Matrix, format_scalar, k_rank, khatri_rao, kernel, matrix_rank
from .tensor import FactorTriple, build_tensor, match_single_factor


class Conclusion(str, enum.Enum):
    OVERALL_UNIQUE = "overall_unique"
    THIRD_FACTOR_UNIQUE = "third_factor_unique"
    NOT_UNIQUE = "not_unique"
    UNDETERMINED = "undetermined"


@dataclass(frozen=True)
class ChainStep:
    rule: str
    basis: str
    status: str
    detail: str = ""

    def to_dict(self) -> dict:
        return {"rule": self.rule, "basis": self.basis, "status": self.status, "detail": self.detail}


@dataclass
class UniquenessCertificate:
    conclusion: Conclusion
    target_mode: int
    m_used: int | None
    chain: list[ChainStep] = field(default_factory=list)
    witnesses: dict = field(default_factory=dict)
    reproducibility: dict = field(default_factory=dict)
    kind: str = "third"

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "conclusion": self.conclusion.value,
            "target_mode": self.target_mode,
            "m": self.m_used,
            "chain": [s.to_dict() for s in self.chain],
            "witnesses": self.witnesses,
            "reproducibility": self.reproducibility,
        }

    @property
    def final_rule(self) -> str | None:
        return self.chain[-1].rule if self.chain else None


def mode_rotate(f: FactorTriple, target: int) -> FactorTriple:
    """Cyclic relabeling that puts factor ``target`` in third position.

    target 3 is the identity, 1 gives (B, C, A), 2 gives (C, A, B).
    """
    if target == 3:
        return f
    if target == 1:
        return FactorTriple(f.B, f.C, f.A)
    if target == 2:
        return FactorTriple(f.C, f.A, f.B)
    raise DomainError(f"target mode must be 1, 2 or 3, got {target!r}")


def rotate_tensor_axes(target: int) -> tuple[int, int, int]:
    """Axis order that matches :func:`mode_rotate` on built tensors."""
    return {3: (0, 1, 2), 1: (1, 2, 0), 2: (2, 0, 1)}[target]


def _reproducibility(f: FactorTriple, seed: int, restarts: int, target: int) -> dict:
    return {
        "hashes": {k: M.fingerprint() for k, M in zip("ABC", f.factors())},
        "backend": "exact" if f.is_exact else "float",
        "exact": f.is_exact,
        "tol": min(M.tol for M in f.factors()),
        "seed": seed,
        "restarts": restarts,
        "target": target,
        "version": __version__,
        "inputs": {k: M.to_strings() for k, M in zip("ABC", f.factors())},
    }


def _step(rule: str, basis: str, verdict: ConditionVerdict | None = None, status: str | None = None,
          detail: str = "") -> ChainStep:
    if verdict is not None:
        status = verdict.status.value
        detail = detail or "; ".join(verdict.provenance)
    return ChainStep(rule, basis, status or "", detail)


def _validate(f: FactorTriple) -> None:
    if f.R < 1:
        raise DomainError("R must be at least 1")


# third factor ---------------------------------------------------------------


def _alternative_third_factor(f: FactorTriple):
    """C + x d^T with (A ⊙ B) d = 0, chosen non-equivalent to C and free of zero columns."""
    KR = khatri_rao(f.A, f.B)
    basis = kernel(KR)
    if not basis:
        return None
    d = basis[0]
    K = f.C.rows
    for scale in (1, 2, 3, -1):
        for k in range(K):
            x = np.zeros(K, dtype=object if f.C.is_exact else float)
            x[:] = 0
            x[k] = Fraction(scale) if f.C.is_exact else float(scale)
            shift = np.multiply.outer(x, d)
            Cbar = f.C.like(f.C.data + shift)
            if any(Cbar.like(Cbar.data[:, [j]]).is_zero() for j in range(Cbar.cols)):
                continue
            if match_single_factor(f.C, Cbar).matched:
                continue
            if not _same_tensor(f, FactorTriple(f.A, f.B, Cbar)):
                raise InternalError("alternative third factor changes the tensor")
            return Cbar, d, x
    return None


def _same_tensor(f1: FactorTriple, f2: FactorTriple) -> bool:
    t1, t2 = build_tensor(f1), build_tensor(f2)
    if f1.is_exact and f2.is_exact:
        return bool(np.all(t1.data == t2.data))
    a, b = t1.data.astype(float), t2.data.astype(float)
    return bool(np.allclose(a, b, atol=1e-9 * max(1.0, float(np.max(np.abs(a), initial=0.0)))))


def certify_third_factor(A: Matrix, B: Matrix, C: Matrix, *, target: int = 3, seed: int = 0,
                         restarts: int = DEFAULT_RESTARTS) -> UniquenessCertificate:
    """Prove or refute that the factor in mode ``target`` is unique (and r_T = R)."""
    original = FactorTriple(A, B, C)
    _validate(original)
    f = mode_rotate(original, target)
    A, B, C = f.factors()
    R = f.R
    m = m_for_C(R, C)
    cert = UniquenessCertificate(Conclusion.UNDETERMINED, target, m, kind="third",
                                 reproducibility=_reproducibility(original, seed, restarts, target))
    chain = cert.chain
    kC = k_rank(C)
    kA, kB = k_rank(A), k_rank(B)
    chain.append(ChainStep("m = R - r_C + 2", "rank of the target factor", "computed",
                           f"R={R}, r_C={matrix_rank(C)}, m={m}, k_A={kA}, k_B={kB}, k_C={kC}"))
    applicable = kC >= 1 and m <= min(A.rows, B.rows)
    if not applicable:
        reason = "k_C = 0" if kC < 1 else f"m={m} exceeds min(I, J) = {min(A.rows, B.rows)}"
        chain.append(ChainStep("sufficient rules", "need k_C >= 1 and m <= min(I, J)", "skipped", reason))
    else:
        done = _third_sufficient(A, B, C, m, seed, restarts, chain)
        if done:
            cert.conclusion = Conclusion.THIRD_FACTOR_UNIQUE
            return cert
    KR = khatri_rao(A, B)
    rKR = matrix_rank(KR)
    if rKR < R:
        alt = _alternative_third_factor(f)
        if alt is not None:
            Cbar, d, x = alt
            chain.append(ChainStep("A ⊙ B full column rank", "necessary for a unique third factor", "fails",
                                   f"rank(A ⊙ B) = {rKR} < {R}; C + x d^T with (A ⊙ B) d = 0 gives another decomposition"))
            cert.witnesses["alternative_third_factor"] = {
                "C_bar": Cbar.to_strings(),
                "d": [format_scalar(v) for v in d],
                "x": [format_scalar(v) for v in x],
            }
            cert.conclusion = Conclusion.NOT_UNIQUE
            return cert
        chain.append(ChainStep("A ⊙ B full column rank", "necessary for a unique third factor", "fails",
                               "no non-equivalent alternative found among the tried shifts"))
    else:
        chain.append(ChainStep("A ⊙ B full column rank", "necessary for a unique third factor", "holds",
                               f"rank {rKR}"))
    return cert


def _third_sufficient(A, B, C, m, seed, restarts, chain) -> bool:
    basis_u = "U_m with k_C >= 1 and m <= min(I, J) gives r_T = R and a unique third factor"
    K = check_Km(A, B, m)
    chain.append(_step(f"K{m}", "K_m implies C_m and H_m, each of which implies U_m", K))
    if K.holds:
        for check in (check_Hm, check_Cm):
            try:
                other = check(A, B, m)
            except ResourceError:
                continue
            if other.fails:
                raise InternalError(f"K{m} holds but {other.name} fails: implication violated")
        return True
    try:
        H = check_Hm(A, B, m)
    except ResourceError as exc:
        chain.append(ChainStep(f"H{m}", "H_m implies U_m", "skipped", str(exc)))
    else:
        chain.append(_step(f"H{m}", "H_m implies U_m", H))
        if H.holds:
            return True
    Cv = check_Cm(A, B, m)
    chain.append(_step(f"C{m}", "C_m implies U_m", Cv))
    if Cv.holds:
        return True
    U = check_Um(A, B, m, seed=seed, restarts=restarts)
    chain.append(_step(f"U{m}", basis_u, U))
    if U.holds:
        return True
    kA, kB = k_rank(A), k_rank(B)
    rKR = matrix_rank(khatri_rao(A, B))
    R = A.cols
    rule = f"W{m}-route"
    basis_w = "W_m with min(k_A, k_B) >= m - 1 and A ⊙ B of full column rank gives a unique third factor"
    if min(kA, kB) < m - 1 or rKR < R:
        chain.append(ChainStep(rule, basis_w, "skipped",
                               f"min(k_A, k_B) = {min(kA, kB)}, m - 1 = {m - 1}, rank(A ⊙ B) = {rKR}, R = {R}"))
        return False
    W = check_Wm(A, B, C, m, seed=seed, restarts=restarts)
    chain.append(_step(rule, basis_w, W))
    return W.holds


# overall -------------------------------------------------------------------


def certify_overall(A: Matrix, B: Matrix, C: Matrix, *, seed: int = 0,
                    restarts: int = DEFAULT_RESTARTS) -> UniquenessCertificate:
    """Prove or refute uniqueness of the whole decomposition."""
    f = FactorTriple(A, B, C)
    _validate(f)
    R = f.R
    cert = UniquenessCertificate(Conclusion.UNDETERMINED, 3, None, kind="overall",
                                 reproducibility=_reproducibility(f, seed, restarts, 3))
    chain = cert.chain
    ks = [k_rank(M) for M in f.factors()]
    rs = [matrix_rank(M) for M in f.factors()]
    chain.append(ChainStep("ranks", "input summary", "computed", f"r = {rs}, k = {ks}, R = {R}"))
    if R == 1:
        if min(ks) >= 1:
            chain.append(ChainStep("single nonzero term", "a nonzero rank-1 tensor fixes its factors up to scaling",
                                   "holds"))
            cert.conclusion = Conclusion.OVERALL_UNIQUE
        else:
            chain.append(ChainStep("single nonzero term", "a zero column makes the term vanish", "fails"))
            cert.conclusion = Conclusion.NOT_UNIQUE
        return cert
    if min(ks) < 2:
        mode = ks.index(min(ks)) + 1
        chain.append(ChainStep("min k-rank >= 2", "necessary for overall uniqueness", "fails",
                               f"k-rank of factor {mode} is {min(ks)}"))
        cert.witnesses["k_rank_screen"] = {"mode": mode, "k_rank": min(ks)}
        cert.conclusion = Conclusion.NOT_UNIQUE
        return cert
    kruskal = sum(ks) >= 2 * R + 2
    kruskal_step = ChainStep("Kruskal bound", "k_A + k_B + k_C >= 2R + 2", "holds" if kruskal else "fails",
                             f"{sum(ks)} vs {2 * R + 2}")
    for target in (3, 1, 2):
        g = mode_rotate(f, target)
        if rs[target - 1] != R:
            continue
        if 2 > min(g.A.rows, g.B.rows):
            continue
        verdict = _pair_U2(g.A, g.B, seed, restarts, chain, target)
        if verdict:
            chain.append(kruskal_step)
            chain.append(ChainStep(f"full column rank of factor {target} with U2",
                                   "a full-column-rank factor together with U2 for the other pair gives overall uniqueness",
                                   "holds", f"Kruskal bound {'also holds' if kruskal else 'does not apply'}"))
            cert.conclusion = Conclusion.OVERALL_UNIQUE
            cert.target_mode = target
            cert.m_used = 2
            return cert
    chain.append(kruskal_step)
    if kruskal:
        cert.conclusion = Conclusion.OVERALL_UNIQUE
        return cert
    # necessary conditions
    for target, label in ((3, "A ⊙ B"), (1, "B ⊙ C"), (2, "C ⊙ A")):
        g = mode_rotate(f, target)
        KR = khatri_rao(g.A, g.B)
        r = matrix_rank(KR)
        ok = r == R
        chain.append(ChainStep(f"{label} full column rank", "necessary for overall uniqueness",
                               "holds" if ok else "fails", f"rank {r} of {R}"))
        if not ok:
            cert.witnesses["khatri_rao_kernel"] = {
                "pair": label, "d": [format_scalar(v) for v in kernel(KR)[0]]}
            cert.conclusion = Conclusion.NOT_UNIQUE
            return cert
    for target, label in ((3, "(A, B)"), (1, "(B, C)"), (2, "(C, A)")):
        g = mode_rotate(f, target)
        if 2 > min(g.A.rows, g.B.rows):
            continue
        U = check_Um(g.A, g.B, 2, seed=seed, restarts=restarts)
        chain.append(_step(f"U2 for {label}", "necessary for overall uniqueness", U))
        if U.fails:
            cert.witnesses["U2_counterexample"] = {"pair": label, **U.witness.to_dict()}
            cert.conclusion = Conclusion.NOT_UNIQUE
            return cert
    return cert


def _pair_U2(A, B, seed, restarts, chain, target) -> bool:
    K = check_Km(A, B, 2)
    chain.append(_step(f"K2 (factor {target} full column rank)", "K_2 implies C_2 and U_2", K))
    if K.holds:
        return True
    Cv = check_Cm(A, B, 2)
    chain.append(_step(f"C2 (factor {target} full column rank)", "C_2 implies U_2", Cv))
    if Cv.holds:
        return True
    U = check_Um(A, B, 2, seed=seed, restarts=restarts)
    chain.append(_step(f"U2 (factor {target} full column rank)", "direct U_2 analysis", U))
    return U.holds


# replay ------------------------------------------------------------------------


def certificate_inputs(cert: dict) -> FactorTriple:
    rep = cert["reproducibility"]
    exact = rep["exact"]
    tol = rep["tol"]
    mats = []
    for k in "ABC":
        rows = rep["inputs"][k]
        mats.append(Matrix(rows, "exact", tol) if exact else Matrix([[float(v) for v in r] for r in rows], "float", tol))
    return FactorTriple(*mats)


def replay(cert: dict) -> UniquenessCertificate:
    """Re-run the certifier on the inputs stored in an emitted certificate."""
    f = certificate_inputs(cert)
    rep = cert["reproducibility"]
    for k, M in zip("ABC", f.factors()):
        if M.fingerprint() != rep["hashes"][k]:
            raise DomainError(f"stored hash of {k} does not match its stored entries")
    if cert["kind"] == "overall":
        return certify_overall(*f.factors(), seed=rep["seed"], restarts=rep["restarts"])
    return certify_third_factor(*f.factors(), target=rep["target"], seed=rep["seed"], restarts=rep["restarts"])
