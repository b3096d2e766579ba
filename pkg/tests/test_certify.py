import json
from fractions import Fraction

import numpy as np
import pytest

from cpdcert.certify import (
    Conclusion,
    certificate_inputs,
    certify_overall,
    certify_third_factor,
    mode_rotate,
    replay,
    rotate_tensor_axes,
)
from cpdcert.conditions import check_Um
from cpdcert.errors import DomainError
from cpdcert.linalg import Matrix, k_rank
from cpdcert.tensor import FactorTriple, build_tensor, match_single_factor

from conftest import low_k_rank


def test_w5_third_factor_unique(w5_example):
    cert = certify_third_factor(*w5_example)
    assert cert.conclusion is Conclusion.THIRD_FACTOR_UNIQUE
    assert cert.m_used == 5
    assert cert.final_rule == "W5-route"
    rules = [s.rule for s in cert.chain]
    assert rules.index("K5") < rules.index("H5") < rules.index("C5") < rules.index("U5")


def test_w5_overall_not_unique(w5_example):
    cert = certify_overall(*w5_example)
    assert cert.conclusion is Conclusion.NOT_UNIQUE
    assert cert.witnesses["k_rank_screen"] == {"mode": 3, "k_rank": 1}


def test_identity_factors():
    I = Matrix.identity(2)
    third = certify_third_factor(I, I, I)
    assert third.conclusion is Conclusion.THIRD_FACTOR_UNIQUE and third.final_rule == "K2"
    overall = certify_overall(I, I, I)
    assert overall.conclusion is Conclusion.OVERALL_UNIQUE
    rules = [s.rule for s in overall.chain]
    assert "Kruskal bound" in rules
    kruskal = next(s for s in overall.chain if s.rule == "Kruskal bound")
    assert kruskal.status == "holds"


def test_generic_full_rank_overall(rng):
    A = Matrix.exact(rng.integers(-9, 10, size=(5, 4)).tolist())
    B = Matrix.exact(rng.integers(-9, 10, size=(5, 4)).tolist())
    C = Matrix.exact(rng.integers(-9, 10, size=(4, 4)).tolist())
    cert = certify_overall(A, B, C)
    assert cert.conclusion is Conclusion.OVERALL_UNIQUE
    assert any(s.rule.startswith("K2") and s.status == "holds" for s in cert.chain)


def test_w2_third_factor_not_unique(w2_example):
    A, B, C = w2_example
    cert = certify_third_factor(A, B, C)
    assert cert.conclusion is Conclusion.NOT_UNIQUE
    w = cert.witnesses["alternative_third_factor"]
    Cbar = Matrix.exact(w["C_bar"])
    assert not match_single_factor(C, Cbar).matched
    assert np.array_equal(build_tensor(FactorTriple(A, B, C)).data, build_tensor(FactorTriple(A, B, Cbar)).data)


def test_mode_rotate():
    A, B, C = (Matrix.exact([[i]]) for i in (1, 2, 3))
    f = FactorTriple(A, B, C)
    assert mode_rotate(f, 3) is f
    g = mode_rotate(f, 1)
    assert (g.A, g.B, g.C) == (B, C, A)
    h = mode_rotate(f, 2)
    assert (h.A, h.B, h.C) == (C, A, B)
    twice = mode_rotate(mode_rotate(f, 1), 1)
    assert (twice.A, twice.B, twice.C) == (h.A, h.B, h.C)
    with pytest.raises(DomainError):
        mode_rotate(f, 4)


def test_rotated_tensor_is_permuted(rng):
    f = FactorTriple(*(Matrix.exact(rng.integers(-3, 4, size=(n, 2)).tolist()) for n in (2, 3, 4)))
    t = build_tensor(f).data
    for target in (1, 2, 3):
        g = mode_rotate(f, target)
        assert np.array_equal(build_tensor(g).data, np.transpose(t, rotate_tensor_axes(target)))


def test_certificate_replays(w5_example, w2_example):
    for triple in (w5_example, w2_example):
        for cert in (certify_third_factor(*triple), certify_overall(*triple)):
            d = json.loads(json.dumps(cert.to_dict()))
            again = replay(d).to_dict()
            assert again == cert.to_dict()
            f = certificate_inputs(d)
            assert all(M.equals(N) for M, N in zip(f.factors(), triple))


def test_replay_detects_tampering(w2_example):
    d = certify_third_factor(*w2_example).to_dict()
    d["reproducibility"]["inputs"]["A"][0][0] = "7"
    with pytest.raises(DomainError):
        replay(d)


def test_target_mode_selects_factor(w5_example):
    A, B, C = w5_example
    cert = certify_third_factor(C, A, B, target=1)
    assert cert.conclusion is Conclusion.THIRD_FACTOR_UNIQUE and cert.target_mode == 1


def test_scaling_invariance(rng, w5_example):
    A, B, C = w5_example
    lam = [Fraction(int(v)) for v in rng.choice([-3, -2, 2, 3], 7)]
    A2 = A.scale_columns(lam)
    C2 = C.scale_columns([1 / v for v in lam])
    assert certify_third_factor(A2, B, C2).conclusion == certify_third_factor(A, B, C).conclusion
    assert certify_overall(A2, B, C2).conclusion == certify_overall(A, B, C).conclusion


def test_single_term():
    a = Matrix.exact([[1], [2]])
    cert = certify_overall(a, a, a)
    assert cert.conclusion is Conclusion.OVERALL_UNIQUE


def test_overall_consistent_with_third(rng):
    for _ in range(40):
        R = int(rng.integers(2, 5))
        f = [Matrix.exact(low_k_rank(rng, int(rng.integers(2, 5)), R)) for _ in range(3)]
        overall = certify_overall(*f, restarts=10)
        if overall.conclusion is Conclusion.OVERALL_UNIQUE:
            for target in (1, 2, 3):
                assert certify_third_factor(*f, target=target, restarts=10).conclusion is not Conclusion.NOT_UNIQUE
        if min(k_rank(M) for M in f) < 2:
            assert overall.conclusion is Conclusion.NOT_UNIQUE


def test_overall_u2_necessity_witness():
    # full-rank Khatri-Rao products but U2 fails for (A, B) through a generic witness
    A = Matrix.exact([[1, 0, 1], [0, 1, 1]])
    C = Matrix.exact([[1, 0, 0], [0, 1, 0], [0, 0, 1]])
    assert check_Um(A, A, 2).fails
    cert = certify_overall(A, A, C)
    assert cert.conclusion is Conclusion.NOT_UNIQUE
