"""Tests for Mittag-Leffler evaluation."""

import math

import numpy as np
import pytest
from pydantic import ValidationError
from scipy import integrate, special

from smk.core.bernstein import is_completely_monotone
from smk.core.special_fn import (
    MLParams,
    lamperti_density,
    mittag_leffler,
    ml_survival,
    ml_survival_spectral,
    ml_waiting_density,
)
from smk.errors import DomainError, InvalidParameterError


class TestMLParams:
    """Test parameter validation."""

    def test_defaults(self):
        """Test beta defaults to 1."""
        assert MLParams(alpha=0.5).beta == 1.0

    @pytest.mark.parametrize("alpha", [0.0, -0.2, 1.5])
    def test_invalid_alpha(self, alpha):
        """Test alpha outside (0, 1] is rejected."""
        with pytest.raises(ValidationError):
            MLParams(alpha=alpha)

    def test_invalid_beta(self):
        """Test nonpositive beta is rejected."""
        with pytest.raises(ValidationError):
            MLParams(alpha=0.5, beta=0.0)


class TestMittagLeffler:
    """Test E_{alpha,beta} against closed forms."""

    @pytest.mark.parametrize("x", [0.1, 0.5, 1.0, 2.0, 5.0])
    def test_half_order_matches_erfcx(self, x):
        """Test E_1/2(-x) = exp(x^2) erfc(x) to 1e-10."""
        assert mittag_leffler(MLParams(alpha=0.5), -x) == pytest.approx(
            special.erfcx(x), abs=1e-10
        )

    @pytest.mark.parametrize("x", [60.0, 200.0])
    def test_half_order_asymptotic_region(self, x):
        """Test the asymptotic branch against erfcx."""
        assert mittag_leffler(MLParams(alpha=0.5), -x) == pytest.approx(
            special.erfcx(x), rel=1e-10
        )

    def test_zero_argument(self):
        """Test E_{a,b}(0) = 1/Gamma(b)."""
        assert mittag_leffler(MLParams(alpha=0.3, beta=2.5), 0.0) == pytest.approx(
            1.0 / math.gamma(2.5)
        )

    @pytest.mark.parametrize("z", [-0.5, -3.0, -20.0])
    def test_alpha_one_is_exponential(self, z):
        """Test E_1(z) = exp(z)."""
        assert mittag_leffler(MLParams(alpha=1.0), z) == pytest.approx(math.exp(z), rel=1e-14)

    @pytest.mark.parametrize("z", [-0.5, -4.0])
    def test_alpha_one_beta_two(self, z):
        """Test E_{1,2}(z) = (exp(z) - 1)/z."""
        assert mittag_leffler(MLParams(alpha=1.0, beta=2.0), z) == pytest.approx(
            math.expm1(z) / z, rel=1e-13
        )

    def test_positive_argument_series(self):
        """Test E_1(1) from the series equals e."""
        assert mittag_leffler(MLParams(alpha=1.0), 1.0) == pytest.approx(math.e, rel=1e-14)

    def test_array_input(self):
        """Test elementwise evaluation keeps the shape."""
        z = -np.array([[0.1, 2.0], [10.0, 80.0]])
        out = mittag_leffler(MLParams(alpha=0.5), z)
        assert out.shape == (2, 2)
        np.testing.assert_allclose(out, special.erfcx(-z), rtol=1e-9)

    @pytest.mark.parametrize("x", [1.0, 50.0])
    def test_continuity_across_branches(self, x):
        """Test the series/integral/asymptotic switch points agree with erfcx nearby."""
        for z in (x * (1 - 1e-9), x * (1 + 1e-9)):
            assert mittag_leffler(MLParams(alpha=0.5), -z) == pytest.approx(
                special.erfcx(z), abs=1e-10
            )

    def test_monotone_on_negative_axis(self):
        """Test E_alpha(-x) is decreasing in x."""
        xs = np.linspace(0.0, 60.0, 121)
        values = mittag_leffler(MLParams(alpha=0.7), -xs)
        assert np.all(np.diff(values) < 0.0)


class TestSurvival:
    """Test the waiting-time survival and density."""

    def test_survival_at_zero(self):
        """Test F(0) = 1."""
        assert ml_survival(0.6, 2.0, 0.0) == 1.0

    def test_survival_alpha_one(self):
        """Test the Markov case is exponential."""
        assert ml_survival(1.0, 2.0, 0.75) == pytest.approx(math.exp(-1.5))

    def test_negative_time(self):
        """Test negative times raise DomainError."""
        with pytest.raises(DomainError, match="negative time"):
            ml_survival(0.5, 1.0, -1.0)

    def test_invalid_rate(self):
        """Test nonpositive rates are rejected."""
        with pytest.raises(InvalidParameterError, match="theta"):
            ml_survival(0.5, 0.0, 1.0)

    @pytest.mark.parametrize("alpha", [0.3, 0.6, 0.9])
    @pytest.mark.parametrize("t", [0.2, 1.0, 5.0])
    def test_spectral_representation_agrees(self, alpha, t):
        """Test the spectral integral reproduces the evaluator."""
        assert ml_survival_spectral(alpha, 1.5, t) == pytest.approx(
            float(ml_survival(alpha, 1.5, t)), abs=1e-8
        )

    def test_lamperti_density_integrates_to_one(self):
        """Test the spectral density is a probability density."""
        head, _ = integrate.quad(lambda r: float(lamperti_density(0.6, r)), 0.0, 1.0)
        tail, _ = integrate.quad(lambda r: float(lamperti_density(0.6, r)), 1.0, np.inf)
        assert head + tail == pytest.approx(1.0, abs=1e-8)

    def test_density_integrates_to_distribution(self):
        """Test int_a^b density = F(a) - F(b)."""
        mass, _ = integrate.quad(lambda t: float(ml_waiting_density(0.6, 1.0, t)), 0.5, 2.0)
        expected = float(ml_survival(0.6, 1.0, 0.5)) - float(ml_survival(0.6, 1.0, 2.0))
        assert mass == pytest.approx(expected, abs=1e-9)

    def test_density_singular_at_zero(self):
        """Test the density refuses t = 0."""
        with pytest.raises(DomainError, match="singular"):
            ml_waiting_density(0.6, 1.0, 0.0)

    @pytest.mark.parametrize("alpha", [0.3, 0.6, 0.9])
    @pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
    def test_density_is_minus_survival_derivative(self, alpha, t):
        """Test the density against a central difference of the survival."""
        h = 1e-4
        slope = (float(ml_survival(alpha, 1.0, t - h)) - float(ml_survival(alpha, 1.0, t + h))) / (2 * h)
        assert float(ml_waiting_density(alpha, 1.0, t)) == pytest.approx(slope, abs=1e-5)

    @pytest.mark.parametrize("alpha", [0.5, 0.8])
    def test_density_integrates_to_one(self, alpha):
        """Test the waiting density has unit mass on (0, inf)."""

        def density(t: float) -> float:
            return float(ml_waiting_density(alpha, 1.0, t))

        head, _ = integrate.quad(density, 0.0, 1.0, limit=200)
        tail, _ = integrate.quad(density, 1.0, np.inf, limit=200)
        assert head + tail == pytest.approx(1.0, abs=1e-6)

    @pytest.mark.parametrize("alpha", [0.3, 0.5, 0.8])
    def test_survival_is_completely_monotone(self, alpha):
        """Test divided differences of orders 1..4 alternate in sign."""
        grid = np.geomspace(0.05, 5.0, 25)
        values = np.asarray(ml_survival(alpha, 1.0, grid))
        assert is_completely_monotone(values, grid, max_order=4)
