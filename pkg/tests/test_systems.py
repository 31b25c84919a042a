import numpy as np
import pytest
from fractions import Fraction
from hypothesis import given, settings, strategies as st

from ergolab.errors import ConfigError, HorizonExhausted, NotApplicable
from ergolab.systems import (
    CirclePoint,
    CylinderFunc,
    Product,
    Rotation,
    SkewProduct,
    Substitution,
    SubstitutionSubshift,
    ToralAutomorphism,
    TorusPoint,
    TrigPoly,
    evaluate,
    integrate_invariant,
    iterate,
    kronecker_rotation,
    orbit_values,
    quantize,
)
from ergolab.systems.points import SCALE

from oracles import thue_morse_bits

raw64 = st.integers(min_value=0, max_value=SCALE - 1)
steps = st.integers(min_value=-10**6, max_value=10**6)


def test_quantize_forms_agree():
    assert quantize(0.25) == quantize(Fraction(1, 4)) == quantize("1/4") == SCALE // 4
    assert quantize(1.25) == SCALE // 4
    assert quantize(-0.25) == 3 * SCALE // 4


def test_golden_quantization():
    g = CirclePoint(quantize("golden")).turns
    assert abs(g - (5**0.5 - 1) / 2) < 1e-15


def test_rotation_quarter_example():
    T = Rotation((0.25,))
    y = iterate(T, T.point(0.9), 1)
    assert np.isclose(y.turns[0], 0.15)
    assert T.tags["ergodicity"] == "not-ergodic" and not T.irrational


def test_skew_product_example():
    S = SkewProduct(0.5)
    y = iterate(S, S.point(0.5, 0.0), 2)
    # (x + 2a, y + 2*2x + 4a) with a = x = 1/2 -> (1/2, 0)
    assert np.allclose(y.turns, (0.5, 0.0))


def test_cat_map_example():
    C = ToralAutomorphism()
    y = iterate(C, C.point(0.5, 0.5), 1)
    assert np.allclose(y.turns, (0.5, 0.0))


def test_cat_map_rejects_non_unimodular():
    with pytest.raises(ConfigError):
        ToralAutomorphism(((2, 0), (0, 1)))


@pytest.mark.parametrize("sys", [Rotation(), SkewProduct(), ToralAutomorphism(), Product(Rotation(), ToralAutomorphism())])
def test_orbit_table_matches_scalar_iterates(sys):
    rng = np.random.default_rng(3)
    x = sys.random_point(rng)
    f = TrigPoly({tuple([1] + [0] * (sys.dim - 1)): 1.0, tuple([0] * (sys.dim - 1) + [2]): 0.5j})
    vals = orbit_values(sys, f, x, -5, 20)
    ref = [evaluate(f, iterate(sys, x, n)) for n in range(-5, 15)]
    assert np.allclose(vals, ref, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(raw64, raw64, steps, steps)
def test_skew_group_law_property(a, b, m, n):
    S = SkewProduct()
    x = TorusPoint.from_raw((a, b))
    assert iterate(S, iterate(S, x, m), n) == iterate(S, x, m + n)
    assert iterate(S, iterate(S, x, n), -n) == x


@settings(max_examples=60, deadline=None)
@given(raw64, raw64, steps, steps)
def test_cat_group_law_property(a, b, m, n):
    C = ToralAutomorphism()
    x = TorusPoint.from_raw((a, b))
    assert iterate(C, iterate(C, x, m), n) == iterate(C, x, m + n)
    assert iterate(C, iterate(C, x, n), -n) == x


def test_trigpoly_algebra():
    f = TrigPoly({1: 1.0, -1: 2.0})
    g = TrigPoly({2: 1j})
    x = CirclePoint.from_turns(0.137)
    assert np.isclose((f * g)(x), f(x) * g(x))
    assert np.isclose((f + g)(x), f(x) + g(x))
    assert np.isclose(f.conj()(x), np.conj(f(x)))
    assert f.mean == 0 and TrigPoly.constant(3.0).mean == 3.0


def test_trigpoly_rejects_mixed_dimensions():
    with pytest.raises(ConfigError):
        TrigPoly({(1,): 1.0, (1, 0): 1.0})


def test_haar_integral_is_constant_term():
    f = TrigPoly({(0, 0): 0.3, (1, 2): 1.0})
    assert integrate_invariant(ToralAutomorphism(), f) == 0.3


def test_thue_morse_prefix_and_frequencies():
    tm = Substitution.named("thue-morse")
    assert tm.word(0, 16) == "0110100110010110"
    assert np.array_equal(tm.letters(1 << 12), thue_morse_bits(1 << 12))
    freqs = tm.letter_frequencies()
    assert np.isclose(freqs["0"], 0.5) and np.isclose(freqs["1"], 0.5)


def test_fibonacci_frequency_is_golden():
    freqs = Substitution.named("fibonacci").letter_frequencies()
    assert np.isclose(freqs["0"], (5**0.5 - 1) / 2)


def test_horizon_cap():
    tm = Substitution.named("thue-morse", horizon_cap=1 << 10)
    with pytest.raises(HorizonExhausted):
        tm.letters(1 << 11)


def test_cylinder_function_on_subshift():
    X = SubstitutionSubshift(Substitution.named("thue-morse"))
    f = CylinderFunc.indicator("11")
    vals = orbit_values(X, f, X.point(0), 0, 8)
    # 0110100110 -> "11" starts at offsets 1 and 7
    assert vals.real.tolist() == [0, 1, 0, 0, 0, 0, 0, 1]


def test_kronecker_of_rotation_is_itself():
    R = Rotation()
    assert kronecker_rotation(R).alpha == R.alpha
    with pytest.raises(NotApplicable):
        kronecker_rotation(ToralAutomorphism())
