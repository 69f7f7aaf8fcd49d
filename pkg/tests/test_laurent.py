import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qnnlab.laurent import (
    MIXED, LaurentPoly, PolyPair, conj_reflect, eval as leval, max_coeff_diff, mul, parity_of, validation_grid,
)
from qnnlab.errors import ConditionError
from qnnlab.qsp import AngleSet, forward


def random_poly(rng, D, real=False):
    c = rng.standard_normal(2 * D + 1)
    if not real:
        c = c + 1j * rng.standard_normal(2 * D + 1)
    return LaurentPoly(c)


def direct_sum(p, x):
    return sum(p[k] * np.exp(1j * k * x / 2) for k in range(-p.D, p.D + 1))


coeff_lists = st.integers(0, 6).flatmap(
    lambda D: st.lists(st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
                       min_size=2 * D + 1, max_size=2 * D + 1))


class TestEval:
    def test_constant(self):
        for x in (-3.0, 0.0, 11.2):
            assert leval(LaurentPoly.from_dict({0: 1}), x) == 1

    def test_cos_half(self):
        p = LaurentPoly.from_dict({-1: 0.5, 1: 0.5})
        x = np.linspace(-7, 7, 41)
        np.testing.assert_allclose(leval(p, x), np.cos(x / 2), atol=1e-15)

    def test_direct_sum_oracle(self, rng):
        p = random_poly(rng, 4)
        for x in rng.uniform(-2 * np.pi, 2 * np.pi, 30):
            assert abs(p(x) - direct_sum(p, x)) < 1e-12

    def test_vectorized_shape(self):
        p = LaurentPoly.from_dict({2: 1.0})
        assert leval(p, np.zeros((3, 4))).shape == (3, 4)


class TestMul:
    def test_identity(self, rng):
        p = random_poly(rng, 3)
        assert mul(p, LaurentPoly.from_dict({0: 1})).allclose(p, 1e-15)

    def test_monomials(self):
        assert mul(LaurentPoly.from_dict({1: 1}), LaurentPoly.from_dict({-1: 1})).trimmed().to_dict(1e-15) == {0: 1}

    def test_pointwise_oracle(self, rng):
        a, b = random_poly(rng, 2), random_poly(rng, 3)
        x = np.linspace(-2 * np.pi, 2 * np.pi, 20)
        assert np.max(np.abs(mul(a, b)(x) - a(x) * b(x))) < 1e-10
        assert mul(a, b).degree <= a.degree + b.degree

    def test_parity_adds(self):
        a = LaurentPoly.from_dict({-1: 0.3, 1: 0.2})
        b = LaurentPoly.from_dict({-3: 1.0, 1: -0.5})
        c = LaurentPoly.from_dict({0: 1.0, 2: 0.5})
        assert parity_of(mul(a, b)) == 0
        assert parity_of(mul(a, c)) == 1

    @given(coeff_lists, coeff_lists, st.floats(-7, 7))
    def test_eval_of_product(self, ca, cb, x):
        a, b = LaurentPoly(ca), LaurentPoly(cb)
        assert abs(mul(a, b)(x) - a(x) * b(x)) < 1e-10 * (1 + np.sum(np.abs(ca)) * np.sum(np.abs(cb)))


class TestConjReflect:
    def test_constant(self):
        assert conj_reflect(LaurentPoly.from_dict({0: 1})).to_dict() == {0: 1}

    def test_flip(self):
        assert conj_reflect(LaurentPoly.from_dict({1: 1j})).to_dict(1e-15) == {-1: -1j}

    def test_pointwise_conjugate(self, rng):
        p = random_poly(rng, 5)
        x = rng.uniform(-7, 7, 20)
        assert np.max(np.abs(conj_reflect(p)(x) - np.conj(p(x)))) < 1e-12

    @given(coeff_lists)
    def test_involution(self, c):
        p = LaurentPoly(c)
        np.testing.assert_array_equal(conj_reflect(conj_reflect(p)).coeffs, p.coeffs)


class TestParity:
    def test_even(self):
        assert parity_of(LaurentPoly.from_dict({-2: 0.3, 0: 0.5, 2: 0.1})) == 0

    def test_odd(self):
        assert parity_of(LaurentPoly.from_dict({-1: 0.5, 1: 0.5})) == 1

    def test_mixed(self):
        assert parity_of(LaurentPoly.from_dict({0: 0.5, 1: 0.5})) == MIXED

    def test_threshold(self):
        assert parity_of(LaurentPoly.from_dict({0: 0.5, 1: 1e-15})) == 0
        assert parity_of(LaurentPoly.from_dict({0: 0.5, 1: 1e-13})) == MIXED


class TestDegree:
    def test_ignores_tiny(self):
        assert LaurentPoly.from_dict({-3: 1e-15, 2: 1.0}).degree == 2

    def test_zero(self):
        assert LaurentPoly.zero(4).degree == 0


class TestSerialization:
    def test_round_trip(self, rng):
        p = random_poly(rng, 3)
        q = LaurentPoly.from_json(json.loads(json.dumps(p.to_json())))
        np.testing.assert_array_equal(q.coeffs, p.coeffs)

    def test_format(self):
        assert LaurentPoly.from_dict({1: 2 - 1j}).to_json() == {"coeffs": [[-1, 0.0, 0.0], [0, 0.0, 0.0], [1, 2.0, -1.0]]}


class TestPolyPair:
    def test_grid(self):
        x = validation_grid()
        assert x.size == 1024 and x[0] == -2 * np.pi and x[-1] == 2 * np.pi

    def test_conditions_hold_for_forward(self, rng):
        for ans, L in [("YZY", 7), ("WZW", 8)]:
            a = AngleSet(ans, rng.uniform(-4, 4, L + 1), rng.uniform(-4, 4, L + 1) if ans == "WZW" else None,
                         0.4 if ans == "WZW" else 0.0)
            pair = forward(a)
            pair.check(tol=1e-9, real=(ans == "YZY"))
            assert pair.P.degree <= L and pair.Q.degree <= L
            assert parity_of(pair.P) == L % 2 and parity_of(pair.Q) == L % 2

    def test_condition_names(self):
        P = LaurentPoly.from_dict({0: 1.0})
        with pytest.raises(ConditionError) as e:
            PolyPair(P, LaurentPoly.from_dict({2: 0.1}), 1).check()
        assert e.value.condition == 1
        with pytest.raises(ConditionError) as e:
            PolyPair(P, LaurentPoly.zero(), 1).check()
        assert e.value.condition == 2
        with pytest.raises(ConditionError) as e:
            PolyPair(P * 0.5, LaurentPoly.zero(), 0).check()
        assert e.value.condition == 3

    def test_json_round_trip(self, rng):
        pair = forward(AngleSet("WZW", rng.uniform(-3, 3, 4), rng.uniform(-3, 3, 4), 0.3))
        back = PolyPair.from_json(json.loads(json.dumps(pair.to_json())))
        assert back.L == 3
        assert max_coeff_diff(back.P, pair.P) == 0 and max_coeff_diff(back.Q, pair.Q) == 0
