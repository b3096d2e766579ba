from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cpdcert.errors import DomainError
from cpdcert.linalg import Matrix, khatri_rao, kron
from cpdcert.tensor import (
    FactorTriple,
    Tensor3,
    build_tensor,
    exhaustive_match,
    match_factors,
    match_single_factor,
    matricize,
    unmatricize,
    unvectorize_tensor,
    vectorize_tensor,
)

from conftest import random_int
from oracles import F, brute_triple_equivalent, triple_loop_tensor


def triple(A, B, C):
    return FactorTriple(Matrix.exact(A), Matrix.exact(B), Matrix.exact(C))


def nonzero_int(rng, rows, cols, lo=-4, hi=4):
    M = rng.integers(lo, hi + 1, size=(rows, cols))
    for j in range(cols):
        if not M[:, j].any():
            M[rng.integers(0, rows), j] = 1
    return M.tolist()


def test_single_term():
    t = build_tensor(triple([[1], [0]], [[1], [0]], [[1], [0]]))
    assert t.dims == (2, 2, 2)
    assert list(vectorize_tensor(t)) == [1, 0, 0, 0, 0, 0, 0, 0]


def test_layout_position():
    # entry (i, j, k) sits at (i-1)JK + (j-1)K + k
    t = Tensor3(np.arange(24).reshape(2, 3, 4))
    v = vectorize_tensor(t)
    assert v[(2 - 1) * 12 + (3 - 1) * 4 + 2 - 1] == t.data[1, 2, 1]
    M = matricize(Tensor3(np.array(t.data, dtype=object)))
    assert M.data[(2 - 1) * 3 + 3 - 1, 1] == t.data[1, 2, 1]


def test_unfolding_matches_khatri_rao(rng):
    for _ in range(10):
        A, B, C = random_int(rng, 2, 3), random_int(rng, 3, 3), random_int(rng, 4, 3)
        f = triple(A, B, C)
        assert matricize(build_tensor(f)).equals(khatri_rao(f.A, f.B) @ f.C.T)


def test_worked_example_against_triple_loop(w5_example):
    A, B, C = w5_example
    t = build_tensor(FactorTriple(A, B, C))
    assert t.data.tolist() == triple_loop_tensor(F(A.tolist()), F(B.tolist()), F(C.tolist()))


def test_rank_one_relayouts(rng):
    a, b, c = rng.integers(-5, 6, 2), rng.integers(-5, 6, 3), rng.integers(-5, 6, 4)
    f = triple([[x] for x in a], [[x] for x in b], [[x] for x in c])
    t = build_tensor(f)
    assert list(vectorize_tensor(t)) == list(kron(a, kron(b, c)))
    expected = np.outer(kron(a, b), c)
    assert matricize(t).equals(Matrix.exact(expected.tolist()))


def test_scalar_tensor():
    t = Tensor3(np.array([[[Fraction(7)]]], dtype=object))
    assert matricize(t).tolist() == [[7]]


def test_relayout_round_trips(rng):
    t = Tensor3(np.array(rng.integers(-9, 10, size=(2, 3, 4)).tolist(), dtype=object))
    assert np.array_equal(unmatricize(matricize(t), 2, 3).data, t.data)
    assert np.array_equal(unvectorize_tensor(vectorize_tensor(t), (2, 3, 4)).data, t.data)


def test_tensor_addition_linear(rng):
    f1 = triple(random_int(rng, 2, 2), random_int(rng, 2, 2), random_int(rng, 2, 2))
    f2 = triple(random_int(rng, 2, 2), random_int(rng, 2, 2), random_int(rng, 2, 2))
    s = build_tensor(f1) + build_tensor(f2)
    assert list(vectorize_tensor(s)) == [x + y for x, y in zip(vectorize_tensor(build_tensor(f1)),
                                                               vectorize_tensor(build_tensor(f2)))]


def test_build_tensor_shape_mismatch():
    with pytest.raises(DomainError):
        triple([[1, 2]], [[1]], [[1]])


def test_match_recovers_constructed_equivalence():
    A = [[1, 2, 0], [0, 1, 1]]
    B = [[1, 0, 3], [2, 1, 1]]
    C = [[1, 1, 0], [0, 2, 1]]
    f1 = triple(A, B, C)
    perm = [1, 0, 2]
    lam = [(Fraction(2), Fraction(3), Fraction(1, 6)), (1, 1, 1), (1, 1, 1)]
    cols = lambda M, j, s: [Fraction(row[j]) * s for row in M]  # noqa: E731
    mats = []
    for f_idx, M in enumerate((A, B, C)):
        mats.append(np.column_stack([cols(M, perm[j], lam[j][f_idx]) for j in range(3)]).tolist())
    f2 = triple(*mats)
    rep = match_factors(f1, f2)
    assert rep.matched
    assert rep.permutation == (2, 1, 3)
    assert rep.scalings[0][0] == 2 and rep.scalings[1][0] == 3 and rep.scalings[2][0] == Fraction(1, 6)


def test_match_identity():
    f = triple([[1, 0], [0, 1]], [[1, 1], [0, 1]], [[2, 0], [1, 1]])
    rep = match_factors(f, f)
    assert rep.matched and rep.permutation == (1, 2)
    assert all(v == 1 for s in rep.scalings for v in s)


def test_match_rejects_zero_columns():
    f = triple([[1, 0], [0, 0]], [[1, 1], [0, 1]], [[2, 0], [1, 1]])
    with pytest.raises(DomainError):
        match_factors(f, f)


def test_match_rejects_dimension_mismatch():
    f = triple([[1, 0], [0, 1]], [[1, 1], [0, 1]], [[2, 0], [1, 1]])
    g = triple([[1, 0]], [[1, 1], [0, 1]], [[2, 0], [1, 1]])
    with pytest.raises(DomainError):
        match_factors(f, g)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_replaced_column_not_matched(R, seed):
    rng = np.random.default_rng(seed)
    f1 = triple(nonzero_int(rng, 3, R), nonzero_int(rng, 2, R), nonzero_int(rng, 3, R))
    A2 = np.array(f1.A.tolist(), dtype=object)
    j = rng.integers(0, R)
    A2[:, j] = np.array(nonzero_int(rng, 3, 1, 5, 9)).ravel()
    f2 = FactorTriple(Matrix.exact(A2.tolist()), f1.B, f1.C)
    expected = brute_triple_equivalent([M.tolist() for M in f1.factors()], [M.tolist() for M in f2.factors()])
    assert match_factors(f1, f2).matched == expected
    assert exhaustive_match(f1, f2) == expected


def _transform(rng, f: FactorTriple):
    R = f.R
    perm = rng.permutation(R)
    la = [Fraction(int(rng.choice([-3, -2, -1, 1, 2, 3])), int(rng.integers(1, 4))) for _ in range(R)]
    lb = [Fraction(int(rng.choice([-2, -1, 1, 2])), int(rng.integers(1, 3))) for _ in range(R)]
    lc = [1 / (a * b) for a, b in zip(la, lb)]
    mats = [M.select_columns(perm).scale_columns(s) for M, s in zip(f.factors(), (la, lb, lc))]
    return FactorTriple(*mats), perm, (la, lb, lc)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_equivalence_relation(R, seed):
    rng = np.random.default_rng(seed)
    f1 = triple(nonzero_int(rng, 3, R), nonzero_int(rng, 2, R), nonzero_int(rng, 2, R))
    f2, _, _ = _transform(rng, f1)
    f3, _, _ = _transform(rng, f2)
    assert match_factors(f1, f1).matched
    assert match_factors(f1, f2).matched and match_factors(f2, f1).matched
    assert match_factors(f1, f3).matched
    g = triple(nonzero_int(rng, 3, R), nonzero_int(rng, 2, R), nonzero_int(rng, 2, R))
    base = match_factors(f1, g).matched
    g2, _, _ = _transform(rng, g)
    assert match_factors(f1, g2).matched == base


def test_single_factor_matching(rng):
    C1 = Matrix.exact(nonzero_int(rng, 4, 5))
    perm = [3, 0, 4, 1, 2]
    scale = [2, -1, Fraction(1, 3), 5, -2]
    C2 = C1.select_columns(perm).scale_columns(scale)
    rep = match_single_factor(C1, C2)
    assert rep.matched and rep.permutation == tuple(p + 1 for p in perm)


def test_single_factor_repeated_column():
    C1 = Matrix.identity(3)
    C2 = Matrix.exact([[1, 1, 0], [0, 0, 0], [0, 0, 1]])
    assert not match_single_factor(C1, C2).matched


def test_single_factor_unique_recovery(rng):
    for _ in range(20):
        C1 = Matrix.exact(rng.integers(-9, 10, size=(3, 4)).tolist())
        perm = rng.permutation(4)
        C2 = C1.select_columns(perm).scale_columns([3, -1, 2, 7])
        rep = match_single_factor(C1, C2)
        assert rep.matched
        assert [p - 1 for p in rep.permutation] == list(perm)


def test_float_matching():
    rng = np.random.default_rng(3)
    A, B, C = (rng.standard_normal((3, 4)) for _ in range(3))
    f1 = FactorTriple(Matrix.floating(A), Matrix.floating(B), Matrix.floating(C))
    perm = [2, 0, 3, 1]
    la = np.array([2.0, -0.5, 3.0, 1.5])
    lb = np.array([0.25, 4.0, -1.0, 2.0])
    f2 = FactorTriple(Matrix.floating(A[:, perm] * la), Matrix.floating(B[:, perm] * lb),
                      Matrix.floating(C[:, perm] / (la * lb)))
    rep = match_factors(f1, f2)
    assert rep.matched and [p - 1 for p in rep.permutation] == perm
