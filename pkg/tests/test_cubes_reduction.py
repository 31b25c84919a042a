import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ergolab.cubes import (
    APWord,
    CubeIndex,
    CubePoint,
    FaceWord,
    ParallelepipedWord,
    all_indices,
    ap_tuple,
    apply_diagonal,
    apply_face,
    apply_parallelepiped_word,
    cube_pattern_language,
    diagonal,
    sample_parallelepipeds,
)
from ergolab.errors import CapExceeded, ConfigError
from ergolab.reduction import check_cap, linear_grid_sum, tree_sum
from ergolab.systems import Rotation, SkewProduct, Substitution, SubstitutionSubshift, ToralAutomorphism, iterate


def face_by_mask(sys, c, j, times=1):
    # inductive definition: T on coordinate eps exactly when eps_j = 1
    out = []
    for e in all_indices(c.d):
        out.append(iterate(sys, c[e.bits], times) if e.eps[j - 1] else c[e.bits])
    return CubePoint(c.d, tuple(out))


def test_cube_index_order_and_parse():
    assert [str(i) for i in all_indices(2)] == ["00", "10", "01", "11"]
    assert CubeIndex.parse("10", 2).bits == 1
    assert CubeIndex.parse((0, 1), 2).bits == 2
    assert CubeIndex.parse(3, 2).weight == 2
    with pytest.raises(ConfigError):
        CubeIndex.parse("102", 3)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_face_maps_match_mask_definition(d):
    sys = ToralAutomorphism()
    x = sys.random_point(np.random.default_rng(d))
    c = diagonal(x, d)
    c = apply_diagonal(sys, c, 3)
    for j in range(1, d + 1):
        assert apply_face(j, sys, c) == face_by_mask(sys, c, j)


def test_face_maps_commute():
    sys = SkewProduct()
    c = diagonal(sys.random_point(np.random.default_rng(0)), 3)
    for i in range(1, 4):
        for j in range(1, 4):
            assert apply_face(i, sys, apply_face(j, sys, c)) == apply_face(j, sys, apply_face(i, sys, c))


def test_parallelepiped_word_exponents():
    sys = Rotation()
    x = sys.random_point(np.random.default_rng(1))
    w = ParallelepipedWord(2, (1, -3))
    c = apply_parallelepiped_word(w, sys, diagonal(x, 2))
    for e in all_indices(2):
        assert c[e.bits] == iterate(sys, x, 2 + e.dot((1, -3)))
    # word addition is composition
    v = ParallelepipedWord(-1, (4, 2))
    lhs = apply_parallelepiped_word(w + v, sys, diagonal(x, 2))
    rhs = apply_parallelepiped_word(w, sys, apply_parallelepiped_word(v, sys, diagonal(x, 2)))
    assert lhs == rhs
    assert FaceWord((1, 2)).n == (1, 2)


def test_ap_tuple():
    sys = SkewProduct()
    x = sys.point(0.1, 0.2)
    t = ap_tuple(sys, x, APWord(3, 2, 3))
    assert t == tuple(iterate(sys, x, 3 + j * 2) for j in range(3))


def test_sample_parallelepipeds_counts():
    sys = Rotation()
    pts = sample_parallelepipeds(sys, sys.point(0.0), 2, 4)
    assert len(pts) == 16
    some = sample_parallelepipeds(sys, sys.point(0.0), 2, 64, mode="random", count=10, seed=0)
    assert 1 <= len(some) <= 10


def test_thue_morse_cube_language_d1():
    X = SubstitutionSubshift(Substitution.named("thue-morse"))
    lang = cube_pattern_language(X, 1, 1, 64)
    assert lang == {("0", "0"), ("0", "1"), ("1", "0"), ("1", "1")}


def test_tree_sum_fixed_shape():
    a = np.arange(10, dtype=float)
    assert tree_sum(a) == 45.0
    # pairs are formed left to right after zero padding to 16
    b = np.array([1e16, 1.0, -1e16, 1.0])
    assert tree_sum(b) == (1e16 + 1.0) + (-1e16 + 1.0)


def test_grid_sum_matches_direct_loop():
    rng = np.random.default_rng(5)
    N = 7
    forms = np.array([[1, 0, 2], [0, 1, -1], [1, 1, 1]])
    tables, lows = [], []
    for f in forms:
        lo = int(np.minimum(f, 0).sum()) * (N - 1)
        hi = int(np.maximum(f, 0).sum()) * (N - 1)
        tables.append(rng.normal(size=hi - lo + 1) + 1j * rng.normal(size=hi - lo + 1))
        lows.append(lo)
    direct = 0j
    for n in np.ndindex(N, N, N):
        p = 1
        for t, f, lo in zip(tables, forms, lows):
            p *= t[int(np.dot(f, n)) - lo]
        direct += p
    got = linear_grid_sum(tables, forms, N, lows)
    assert np.isclose(got, direct)


@settings(max_examples=15, deadline=None)
@given(st.integers(1, 40), st.integers(1, 8))
def test_grid_sum_thread_invariant(N, threads):
    rng = np.random.default_rng(N)
    t = rng.normal(size=3 * N) + 0j
    forms = np.array([[1, 2], [2, 0]])
    a = linear_grid_sum([t, t], forms, N, [0, 0], threads=1)
    b = linear_grid_sum([t, t], forms, N, [0, 0], threads=threads)
    assert a == b


def test_cap():
    check_cap(1 << 15, 2)
    with pytest.raises(CapExceeded):
        check_cap(1 << 16, 2, cap=1 << 30)
