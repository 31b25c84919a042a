import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ergolab.averaging import (
    FolnerBox,
    LinearAction,
    ap_average,
    birkhoff_average,
    convergence_trace,
    cube_face_average,
    cube_full_average,
    folner_box_average,
    grid_average,
    product_difference_bound,
)
from ergolab.errors import CapExceeded, CommutationError, NotApplicable
from ergolab.limits import (
    FrequencyConstraint,
    LimitValue,
    kronecker_slice_integral,
    oracle_limit_longrun,
    rotation_ap_limit,
    rotation_cube_face_limit,
    rotation_cube_full_limit,
    wm_product_limit,
)
from ergolab.systems import Rotation, SkewProduct, ToralAutomorphism, TrigPoly, iterate

from oracles import ap_quadrature, cube_face_quadrature, cube_full_quadrature, e, geometric_mean_abs, slice_quadrature

R = Rotation()
ALPHA = R.alpha[0].turns


def rand_poly(rng, size=3, span=3):
    ks = rng.choice(np.arange(-span, span + 1), size=size, replace=False)
    return {int(k): complex(rng.normal(), rng.normal()) for k in ks}


def test_birkhoff_matches_geometric_series():
    x = R.point(0.2)
    for N in (10, 100, 1000):
        got = birkhoff_average(R, TrigPoly({1: 1.0}), x, N)
        assert np.isclose(abs(got), geometric_mean_abs(ALPHA, N), atol=1e-12)


def test_grid_average_constant_one():
    assert grid_average(R, [(TrigPoly.constant(), (1, 1))], R.point(0.0), 16, 2) == 1


def test_folner_linear_action_equals_callable_path():
    S = SkewProduct()
    f = TrigPoly({(1, 0): 1.0, (0, 1): 0.5})
    x = S.point(0.1, 0.3)
    fast = folner_box_average(LinearAction(S, (1, 2)), f, x, 12)
    maps = [lambda p, k: iterate(S, p, k), lambda p, k: iterate(S, p, 2 * k)]
    slow = folner_box_average(maps, f, x, 12)
    assert np.isclose(fast, slow)
    assert FolnerBox(2, 12).size == 144


def test_folner_rejects_noncommuting_maps():
    R2 = Rotation((0.25,))
    maps = [lambda p, k: iterate(R2, p, k), lambda p, k: R2.point(2**k * p.turns[0] % 1.0)]
    with pytest.raises(CommutationError):
        folner_box_average(maps, TrigPoly({1: 1.0}), R2.point(0.1), 4)


def test_average_cap():
    with pytest.raises(CapExceeded):
        cube_face_average(R, {1: TrigPoly({1: 1.0})}, R.point(0.0), 1 << 11, d=3)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32), st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False))
def test_ap_average_is_linear_in_each_slot(seed, lam):
    rng = np.random.default_rng(seed)
    f, g, h = (TrigPoly(rand_poly(rng)) for _ in range(3))
    x = R.point(float(rng.random()))
    lhs = ap_average(R, [f.scale(lam) + g, h], x, 64)
    rhs = lam * ap_average(R, [f, h], x, 64) + ap_average(R, [g, h], x, 64)
    assert np.isclose(lhs, rhs, atol=1e-9 * (1 + abs(lam)) * 50)


def test_convergence_trace_and_spread():
    rep = convergence_trace(lambda N: 1 / N, [1, 2, 4, 8], predicted=0.0, window=2)
    assert rep.final == 0.125
    assert np.isclose(rep.tail_spread, 0.125)
    assert np.isclose(rep.abs_error, 0.125)


def test_product_difference_bound():
    a = [0.5, 0.9j, -0.3]
    b = [0.4, 0.8j, -0.3]
    terms, bound = product_difference_bound(a, b)
    assert np.isclose(sum(terms), np.prod(a) - np.prod(b))
    assert abs(np.prod(a) - np.prod(b)) <= bound + 1e-15


# ---- constraint solver validated against quadrature of the defining integrals


def test_constraint_solver_sound_and_complete():
    forms = ((1, 1, 1), (0, 1, 2))
    supports = [[-2, -1, 0, 1, 2]] * 3
    got = {tuple(k[0] for k in t) for t in FrequencyConstraint(forms).solve(supports)}
    ref = {t for t in np.ndindex(5, 5, 5)}
    ref = {tuple(v - 2 for v in t) for t in ref}
    ref = {t for t in ref if t[0] + t[1] + t[2] == 0 and t[1] + 2 * t[2] == 0}
    assert got == ref


@pytest.mark.parametrize("seed", range(5))
def test_ap_limit_matches_quadrature(seed):
    rng = np.random.default_rng(seed)
    fs = [rand_poly(rng) for _ in range(3)]
    lim = rotation_ap_limit(R, [TrigPoly(f) for f in fs])
    assert np.isclose(lim.value, ap_quadrature(fs, M=64), atol=1e-10)


def test_ap_limit_resonant_d3_quadrature_512():
    fs = [{1: 1}, {-2: 1}, {1: 1}]
    assert abs(ap_quadrature(fs, M=512) - 1) < 1e-3
    assert rotation_ap_limit(R, [TrigPoly(f) for f in fs]).value == 1


@pytest.mark.parametrize("seed", range(4))
def test_cube_face_limit_matches_quadrature(seed):
    rng = np.random.default_rng(10 + seed)
    faces = {b: rand_poly(rng, size=2, span=2) for b in (1, 2, 3)}
    lim = rotation_cube_face_limit(R, {b: TrigPoly(f) for b, f in faces.items()}, 2)
    for x in (0.0, 0.3, 0.71):
        ref = cube_face_quadrature(faces, 2, x, M=16)
        assert np.isclose(lim.at(R.point(x)), ref, atol=1e-10)


def test_cube_face_limit_d3_quadrature():
    rng = np.random.default_rng(99)
    faces = {b: rand_poly(rng, size=2, span=1) for b in range(1, 8)}
    lim = rotation_cube_face_limit(R, {b: TrigPoly(f) for b, f in faces.items()}, 3)
    ref = cube_face_quadrature(faces, 3, 0.4, M=12)
    assert np.isclose(lim.at(R.point(0.4)), ref, atol=1e-10)


@pytest.mark.parametrize("seed", range(3))
def test_cube_full_limit_matches_quadrature(seed):
    rng = np.random.default_rng(20 + seed)
    faces = {b: rand_poly(rng, size=2, span=2) for b in range(4)}
    lim = rotation_cube_full_limit(R, {b: TrigPoly(f) for b, f in faces.items()}, 2)
    assert not lim.depends_on_x
    assert np.isclose(lim.value, cube_full_quadrature(faces, 2, M=16), atol=1e-10)


def test_cube_face_example_is_e_of_x():
    faces = {1: TrigPoly({1: 1}), 2: TrigPoly({1: 1}), 3: TrigPoly({-1: 1})}
    lim = rotation_cube_face_limit(R, faces, 2)
    assert lim.depends_on_x
    for x in (0.1, 0.6):
        assert np.isclose(lim.at(R.point(x)), e(x))


def test_rotation_limits_require_irrational():
    with pytest.raises(NotApplicable):
        rotation_ap_limit(Rotation((0.25,)), [TrigPoly({0: 1}), TrigPoly({0: 1})])
    with pytest.raises(NotApplicable):
        wm_product_limit(R, [TrigPoly({0: 1})])


def test_limit_value_rejects_wrong_assumptions():
    with pytest.raises(Exception):
        LimitValue(1.0, "rotation-ap", frozenset())


def test_wm_product_limit():
    C = ToralAutomorphism()
    f1 = TrigPoly({(0, 0): 0.3, (1, 0): 1.0})
    f2 = TrigPoly({(0, 0): 0.5, (1, 1): 1.0})
    assert np.isclose(wm_product_limit(C, [f1, f2]).value, 0.15)


def test_rotation_averages_approach_limits():
    fs = [TrigPoly({1: 1, 0: 0.5}), TrigPoly({-2: 1, 3: 0.2}), TrigPoly({1: 1})]
    x = R.point(0.37)
    lim = rotation_ap_limit(R, fs).value
    assert abs(ap_average(R, fs, x, 4096) - lim) < 1e-2
    faces = {0: TrigPoly({2: 1}), 1: TrigPoly({-1: 1}), 2: TrigPoly({-1: 1}), 3: TrigPoly({0: 0.5, 1: 1})}
    full = rotation_cube_full_limit(R, faces, 2).value
    assert abs(cube_full_average(R, faces, x, 512, d=2) - full) < 1e-2


def test_longrun_oracle_trivial_and_resonant():
    fs = [TrigPoly({1: 1}), TrigPoly({-2: 1}), TrigPoly({1: 1})]
    lim = oracle_limit_longrun(R, "ap", fs, R.point(0.2), 8192)
    assert "empirical" in lim.assumptions
    assert abs(lim.value - 1) < 1e-2
    one = TrigPoly.constant()
    assert oracle_limit_longrun(R, "ap", [one, one], R.point(0.2), 64).value == 1


@pytest.mark.parametrize("kind", ["shift", "double"])
def test_slice_integral_examples(kind):
    one = TrigPoly.constant()
    assert np.isclose(kronecker_slice_integral(one, one, 0.3, kind), 1)
    if kind == "double":
        assert kronecker_slice_integral(TrigPoly({1: 1}), TrigPoly({1: 1}), 0.3, kind) == 0
        got = kronecker_slice_integral(TrigPoly({-2: 1}), TrigPoly({1: 1}), 0.3, kind)
        assert np.isclose(got, e(0.3)) and np.isclose(got, slice_quadrature({-2: 1}, {1: 1}, 0.3, kind))
