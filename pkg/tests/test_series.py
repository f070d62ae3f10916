import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rabi_canonical.errors import DegenerateRationalError, NotNormalizedError
from rabi_canonical.series import (
    InversePowerSeries,
    LaurentMatrixSeries,
    PolynomialMatrix,
    laurent_expand_rational,
    matrix_series_invert,
    matrix_series_multiply,
)


def scalar(coeffs):
    return LaurentMatrixSeries.from_inverse_powers(np.asarray(coeffs).reshape(-1, 1, 1))


class TestLaurentExpandRational:
    def test_rabi_entry_against_long_division(self):
        E, lam = 1.0, 0.5
        s = laurent_expand_rational([E, -lam], [lam, 1.0], 6)
        assert s.top_degree == 0
        assert s.coefficient(0)[0, 0] == pytest.approx(-0.5)
        assert s.coefficient(-1)[0, 0] == pytest.approx(1.25)
        assert s.coefficient(-2)[0, 0] == pytest.approx(-0.625)
        # general term (E + lam^2)(-lam)^k z^{-k-1}
        for k in range(6):
            assert s.coefficient(-k - 1)[0, 0] == pytest.approx((E + lam**2) * (-lam) ** k)

    def test_one_over_z(self):
        s = laurent_expand_rational([1.0], [0.0, 1.0], 5)
        assert s.top_degree == -1
        expect = np.zeros(5)
        expect[0] = 1.0
        np.testing.assert_allclose(s.coeffs[:, 0, 0], expect)

    def test_cancellation_z_over_z(self):
        s = laurent_expand_rational([0.0, 1.0], [0.0, 1.0], 4)
        assert s.top_degree == 0
        np.testing.assert_allclose(s.coeffs[:, 0, 0], [1, 0, 0, 0, 0])

    def test_polynomial_numerator_gives_positive_top(self):
        s = laurent_expand_rational([0.0, 0.0, 1.0], [1.0], 2)
        assert s.top_degree == 2
        assert s.coefficient(2)[0, 0] == 1

    def test_zero_denominator(self):
        with pytest.raises(DegenerateRationalError, match="degenerate rational"):
            laurent_expand_rational([1.0], [0.0, 0.0], 3)

    def test_negative_depth(self):
        with pytest.raises(ValueError):
            laurent_expand_rational([1.0], [1.0, 1.0], -1)

    @pytest.mark.parametrize("seed", range(5))
    def test_evaluation_matches_rational_at_twice_radius(self, seed):
        rng = np.random.default_rng(seed)
        num = rng.normal(size=3) + 1j * rng.normal(size=3)
        den = np.concatenate([rng.normal(size=2) + 1j * rng.normal(size=2), [1.0]])
        R = np.abs(np.roots(den[::-1])).max()
        s = laurent_expand_rational(num, den, 40)
        for phi in np.linspace(0.1, 6.0, 7):
            z = 2 * R * np.exp(1j * phi)
            exact = np.polyval(num[::-1], z) / np.polyval(den[::-1], z)
            assert abs(s(z)[0, 0] - exact) <= 1e-10 * max(1.0, abs(exact))


class TestMultiply:
    def test_identity_is_neutral(self):
        rng = np.random.default_rng(1)
        S = LaurentMatrixSeries(rng.normal(size=(6, 2, 2)), 1)
        out = matrix_series_multiply(LaurentMatrixSeries.identity(2, 10), S)
        np.testing.assert_allclose(out.coeffs, S.coeffs)
        assert out.top_degree == 1

    def test_difference_of_squares(self):
        lam = 0.7
        out = matrix_series_multiply(scalar([1, lam, 0, 0]), scalar([1, -lam, 0, 0]))
        np.testing.assert_allclose(out.coeffs[:, 0, 0], [1, 0, -lam**2, 0], atol=1e-15)

    def test_binomial_diag(self):
        a = LaurentMatrixSeries.from_inverse_powers([np.eye(2), np.diag([1.0, 0.0]), np.zeros((2, 2))])
        out = a @ a
        np.testing.assert_allclose(out.coefficient(-1), np.diag([2.0, 0.0]))
        np.testing.assert_allclose(out.coefficient(-2), np.diag([1.0, 0.0]))

    def test_depth_is_minimum(self):
        out = scalar([1, 2, 3, 4, 5]) @ scalar([1, 1, 1])
        assert out.depth == 2

    def test_dim_mismatch(self):
        with pytest.raises(ValueError, match="dimension"):
            LaurentMatrixSeries.identity(2, 3) @ LaurentMatrixSeries.identity(3, 3)


class TestInvert:
    def test_identity(self):
        out = matrix_series_invert(LaurentMatrixSeries.identity(2, 6))
        np.testing.assert_allclose(out.coeffs, LaurentMatrixSeries.identity(2, 6).coeffs)

    def test_geometric(self):
        lam = 0.3
        out = matrix_series_invert(scalar([1, lam] + [0] * 8))
        np.testing.assert_allclose(out.coeffs[:, 0, 0], (-lam) ** np.arange(10), rtol=1e-14)

    def test_terminating_transform_multiply_back(self):
        lam, mu = 0.4, 0.6
        a1 = [[(1 + mu**2) / (4 * lam), -mu / (2 * lam)], [mu / (2 * lam), -(1 + mu**2) / (4 * lam)]]
        a = LaurentMatrixSeries.from_inverse_powers([np.eye(2), a1] + [np.zeros((2, 2))] * 7)
        r = matrix_series_invert(a, 8)
        prod = a @ r
        np.testing.assert_allclose(prod.coeffs, LaurentMatrixSeries.identity(2, 8).coeffs, atol=1e-12)

    def test_not_normalized(self):
        with pytest.raises(NotNormalizedError, match="not Birkhoff-normalized"):
            matrix_series_invert(scalar([2.0, 1.0]))
        with pytest.raises(NotNormalizedError):
            matrix_series_invert(LaurentMatrixSeries(np.ones((3, 1, 1)), 1))


small = st.floats(min_value=-0.5, max_value=0.5, allow_nan=False)


def series_from(vals, m, depth):
    c = np.array(vals, dtype=float).reshape(depth, m, m)
    return LaurentMatrixSeries.from_inverse_powers(np.concatenate([np.eye(m)[None], c]))


@settings(max_examples=40, deadline=None)
@given(st.lists(small, min_size=4 * 8, max_size=4 * 8), st.lists(small, min_size=4 * 8, max_size=4 * 8))
def test_invert_then_multiply_is_identity(v1, v2):
    a = LaurentMatrixSeries.from_inverse_powers(
        np.concatenate([np.eye(2)[None], (np.array(v1) + 1j * np.array(v2)).reshape(8, 2, 2)]))
    prod = a @ matrix_series_invert(a)
    err = np.abs(prod.coeffs - LaurentMatrixSeries.identity(2, 8).coeffs).max()
    assert err < 1e-12


@settings(max_examples=40, deadline=None)
@given(st.lists(small, min_size=3 * 4 * 6, max_size=3 * 4 * 6), st.integers(-1, 1))
def test_multiplication_associative(vals, top):
    v = np.array(vals).reshape(3, 6, 2, 2)
    a, b, c = (LaurentMatrixSeries(v[i], top + (i == 1)) for i in range(3))
    left, right = (a @ b) @ c, a @ (b @ c)
    assert left.top_degree == right.top_degree
    d = min(left.depth, right.depth)
    np.testing.assert_allclose(left.truncate(d).coeffs, right.truncate(d).coeffs, atol=1e-13)


class TestContainers:
    def test_inverse_power_series_arithmetic_truncates(self):
        a = InversePowerSeries([1, 2, 3])
        b = InversePowerSeries([1, -1])
        assert (a + b).truncation_order == 1
        np.testing.assert_allclose((a * b).coeffs, [1, 1])
        assert a(2.0) == pytest.approx(1 + 1 + 0.75)

    def test_laurent_coefficient_bounds(self):
        s = scalar([1, 2, 3])
        assert s.coefficient(4)[0, 0] == 0
        with pytest.raises(ValueError):
            s.coefficient(-3)

    def test_derivative_and_shift(self):
        s = LaurentMatrixSeries(np.array([2.0, 3.0, 5.0]).reshape(-1, 1, 1), 1)  # 2z + 3 + 5/z
        d = s.derivative()
        assert d.top_degree == 0
        np.testing.assert_allclose(d.coeffs[:, 0, 0], [2, 0, -5])
        assert s.shift(2).top_degree == 3

    def test_entries_align(self):
        e1 = laurent_expand_rational([1.0], [0.0, 1.0], 4)
        e0 = laurent_expand_rational([1.0, 1.0], [1.0, 1.0], 3)
        S = LaurentMatrixSeries.from_entries([[e0, e1], [e1, e0]])
        assert S.top_degree == 0 and S.depth == 3
        np.testing.assert_allclose(S.coefficient(-1), [[0, 1], [1, 0]])

    def test_polynomial_matrix(self):
        P = PolynomialMatrix(np.array([np.eye(2), np.diag([1.0, -1.0]), np.zeros((2, 2))]))
        assert P.degree == 2 and P.effective_degree() == 1
        np.testing.assert_allclose(P(2.0), np.diag([3.0, -1.0]))
        L = P.to_laurent(3)
        np.testing.assert_allclose(L(2.0), P(2.0))

    def test_immutable(self):
        s = scalar([1.0, 2.0])
        with pytest.raises(ValueError):
            s.coeffs[0, 0, 0] = 5
