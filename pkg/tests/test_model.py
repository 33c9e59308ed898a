import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from delaynet.model import (
    ConfigurationError,
    FiringRateModel,
    PiecewiseConstantInput,
    PopulationParams,
    gaussian_expectation_s,
    sigmoid_s,
    single_population_model,
)

finite_reals = st.floats(-30, 30, allow_nan=False, allow_infinity=False)


class TestSigmoid:
    def test_zero(self):
        assert sigmoid_s(0.0) == 0.0

    def test_saturation(self):
        assert sigmoid_s(10.0) > 0.499999
        assert sigmoid_s(-10.0) < -0.499999

    def test_quadrature_oracle(self):
        # independent oracle: adaptive quadrature of the defining integral
        for x in (0.25, 1.0, 2.0, 3.5):
            ref, err = quad(
                lambda s: np.exp(-0.5 * s * s) / np.sqrt(2 * np.pi), 0, x,
                epsabs=1e-13,
            )
            assert sigmoid_s(x) == pytest.approx(ref, abs=1e-12)
        assert sigmoid_s(1.0) == pytest.approx(0.3413447, abs=1e-6)

    @given(finite_reals)
    def test_odd_bit_symmetric(self, x):
        assert sigmoid_s(-x) == -sigmoid_s(x)

    @given(st.floats(-5, 5), st.floats(-5, 5))
    def test_monotone_strict_on_core(self, x, y):
        # beyond |x| ~ 8 the double-precision value saturates at +-1/2,
        # so strictness is only testable where the tails still resolve
        if x < y:
            assert sigmoid_s(x) < sigmoid_s(y)

    @given(finite_reals, finite_reals)
    def test_monotone_nondecreasing_everywhere(self, x, y):
        if x < y:
            assert sigmoid_s(x) <= sigmoid_s(y)

    @given(finite_reals, finite_reals)
    def test_lipschitz(self, x, y):
        bound = abs(x - y) / np.sqrt(2 * np.pi)
        assert abs(sigmoid_s(x) - sigmoid_s(y)) <= bound + 1e-15

    def test_vectorized(self):
        xs = np.array([-1.0, 0.0, 2.0])
        assert np.allclose(sigmoid_s(xs), [sigmoid_s(x) for x in xs])


class TestGaussianExpectation:
    def test_symmetry_at_zero_mean(self):
        for v in (0.0, 0.3, 2.0, 10.0):
            assert gaussian_expectation_s(0.0, v) == 0.0

    def test_degenerate_variance(self):
        for u in (-2.0, 0.7, 3.0):
            assert gaussian_expectation_s(u, 0.0) == sigmoid_s(u)

    def test_negative_variance_rejected(self):
        with pytest.raises(ValueError):
            gaussian_expectation_s(0.0, -1e-9)

    def test_pinned_monte_carlo_value(self):
        # frozen from a 1e6-sample Monte Carlo run (seed 987654321):
        # estimate 0.236465 with standard error 0.000274
        assert gaussian_expectation_s(1.0, 1.5) == pytest.approx(
            0.236465, abs=3 * 0.000274
        )

    @pytest.mark.parametrize("u", [-2, -1, 0, 1, 2])
    @pytest.mark.parametrize("v", [0.0, 0.5, 1.5, 4.0])
    def test_monte_carlo_grid(self, u, v):
        if v == 0.0:
            assert gaussian_expectation_s(u, v) == pytest.approx(
                sigmoid_s(float(u)), abs=1e-12
            )
            return
        rng = np.random.default_rng(9000 + 17 * u + int(8 * v))
        sample = sigmoid_s(u + np.sqrt(v) * rng.standard_normal(10**6))
        se = sample.std(ddof=1) / 1000
        assert gaussian_expectation_s(u, v) == pytest.approx(
            sample.mean(), abs=3 * se
        )


class TestPiecewiseInput:
    def test_default_is_zero(self):
        inp = PiecewiseConstantInput()
        assert inp(0.0) == 0.0 and inp(100.0) == 0.0
        assert inp.is_zero

    def test_steps(self):
        inp = PiecewiseConstantInput(breakpoints=(1.0, 2.5), values=(0.5, -1.0))
        assert inp(0.0) == 0.0
        assert inp(1.0) == 0.5
        assert inp(2.4999) == 0.5
        assert inp(2.5) == -1.0
        assert not inp.is_zero

    def test_rejects_unsorted(self):
        with pytest.raises(ConfigurationError):
            PiecewiseConstantInput(breakpoints=(2.0, 1.0), values=(1.0, 2.0))


class TestParams:
    def test_validation(self):
        with pytest.raises(ConfigurationError):
            PopulationParams(theta=0.0, lam=1.0)
        with pytest.raises(ConfigurationError):
            PopulationParams(theta=1.0, lam=-0.1)
        with pytest.raises(ConfigurationError):
            PopulationParams(theta=1.0, lam=0.0, count=0)

    def test_fractions_must_sum_to_one(self):
        p1 = PopulationParams(theta=1.0, lam=0.0, fraction=0.6)
        p2 = PopulationParams(theta=2.0, lam=0.0, fraction=0.5)
        with pytest.raises(ConfigurationError):
            FiringRateModel(populations=(p1, p2), coupling=np.zeros((2, 2)))

    def test_coupling_shape_checked(self):
        p = PopulationParams(theta=1.0, lam=0.0)
        with pytest.raises(ConfigurationError):
            FiringRateModel(populations=(p,), coupling=np.zeros((2, 2)))

    def test_single_population_helper(self):
        m = single_population_model(theta=3.0, lam=1.0, j_bar=-5.0, count=10)
        assert m.coupling[0, 0] == -5.0
        assert m.populations[0].stationary_variance == 1.5
        assert m.total_count == 10
        assert list(m.population_index()) == [0] * 10
