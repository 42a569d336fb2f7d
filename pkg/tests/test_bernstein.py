"""Tests for Bernstein exponents and waiting-time laws."""

import math

import numpy as np
import pytest
from pydantic import TypeAdapter, ValidationError

from smk.core.bernstein import (
    BernsteinSpec,
    MarkovExponent,
    MixtureComponent,
    StableExponent,
    StableMixtureExponent,
    WaitingTimeLaw,
    eval_exponent,
    exponent_for_order,
    is_completely_monotone,
    levy_tail,
    potential_density,
    survival_to_exponent,
    waiting_survival,
    waiting_survival_transform,
)
from smk.core.laplace import numerical_laplace
from smk.core.special_fn import ml_survival
from smk.errors import InvalidParameterError, OutOfRangeError, UnsupportedSpecError


class TestCatalog:
    """Test the exponent catalog."""

    def test_discriminated_parsing(self):
        """Test specs parse by their kind tag."""
        adapter = TypeAdapter(BernsteinSpec)
        assert isinstance(adapter.validate_python({"kind": "stable", "alpha": 0.4}), StableExponent)
        assert isinstance(adapter.validate_python({"kind": "markov"}), MarkovExponent)
        mixture = adapter.validate_python(
            {"kind": "stable_mixture", "components": [{"weight": 1.0, "alpha": 0.3}]}
        )
        assert isinstance(mixture, StableMixtureExponent)

    def test_stable_alpha_bounds(self):
        """Test stable orders must lie strictly inside (0, 1)."""
        with pytest.raises(ValidationError):
            StableExponent(alpha=1.0)
        with pytest.raises(ValidationError):
            StableExponent(alpha=0.0)

    def test_empty_mixture_rejected(self):
        """Test a mixture needs at least one component."""
        with pytest.raises(ValidationError):
            StableMixtureExponent(components=[])

    def test_exponent_for_order(self):
        """Test alpha = 1 maps to the Markov exponent."""
        assert isinstance(exponent_for_order(1.0), MarkovExponent)
        assert exponent_for_order(0.7) == StableExponent(alpha=0.7)
        with pytest.raises(InvalidParameterError, match="alpha"):
            exponent_for_order(1.2)


class TestEvaluation:
    """Test f(lambda), Levy tails and potential densities."""

    def test_stable_exponent(self):
        """Test f(lambda) = lambda^alpha."""
        assert eval_exponent(StableExponent(alpha=0.5), 4.0) == pytest.approx(2.0)

    def test_markov_exponent(self):
        """Test f(lambda) = lambda."""
        assert eval_exponent(MarkovExponent(), 3.5) == 3.5

    def test_mixture_exponent(self):
        """Test the mixture sums its components."""
        spec = StableMixtureExponent(
            components=[MixtureComponent(weight=2.0, alpha=0.5), MixtureComponent(weight=1.0, alpha=0.25)]
        )
        assert eval_exponent(spec, 16.0) == pytest.approx(2.0 * 4.0 + 2.0)

    def test_complex_argument(self):
        """Test exponents accept complex lambda on the principal branch."""
        value = StableExponent(alpha=0.5).exponent(complex(0.0, 4.0))
        assert value == pytest.approx(complex(math.sqrt(2.0), math.sqrt(2.0)))

    def test_nonpositive_lambda(self):
        """Test lambda must be positive."""
        with pytest.raises(InvalidParameterError, match="lambda"):
            eval_exponent(StableExponent(alpha=0.5), 0.0)

    def test_stable_tail(self):
        """Test nu(t, inf) = t^-alpha / Gamma(1 - alpha)."""
        assert levy_tail(StableExponent(alpha=0.5), 4.0) == pytest.approx(0.5 / math.sqrt(math.pi))

    def test_stable_potential(self):
        """Test u(t) = t^(alpha-1) / Gamma(alpha)."""
        assert potential_density(StableExponent(alpha=0.5), 4.0) == pytest.approx(
            0.5 / math.sqrt(math.pi)
        )

    def test_markov_tail_unsupported(self):
        """Test the Markov exponent has no Levy tail."""
        with pytest.raises(UnsupportedSpecError, match="Markov"):
            levy_tail(MarkovExponent(), 1.0)

    def test_mixture_potential_unsupported(self):
        """Test mixtures have no closed-form potential density."""
        spec = StableMixtureExponent(components=[MixtureComponent(weight=1.0, alpha=0.3)])
        with pytest.raises(UnsupportedSpecError, match="mixture"):
            potential_density(spec, 1.0)


class TestSurvivalToExponent:
    """Test recovery of f from the survival transform."""

    @pytest.mark.parametrize("alpha", [0.3, 0.5, 0.8])
    @pytest.mark.parametrize("lam", [1.0, 2.0, 4.0])
    def test_round_trip_through_numerical_laplace(self, alpha, lam):
        """Test the numerically transformed ML survival recovers lambda^alpha to 1e-5."""

        def transform(s: float) -> float:
            return numerical_laplace(
                lambda t: float(ml_survival(alpha, 1.0, t)), s, head_exponents=[0.0, alpha]
            )

        assert survival_to_exponent(transform, 1.0, lam) == pytest.approx(lam**alpha, abs=1e-5)

    def test_exact_transform(self):
        """Test the closed-form survival transform maps back exactly."""
        law = WaitingTimeLaw(exponent=StableExponent(alpha=0.6), theta=2.0)
        value = survival_to_exponent(lambda s: law.survival_transform(s).real, 2.0, 3.0)
        assert value == pytest.approx(3.0**0.6, rel=1e-12)

    def test_out_of_range(self):
        """Test lambda F(lambda) >= 1 is rejected."""
        with pytest.raises(OutOfRangeError, match="outside"):
            survival_to_exponent(lambda s: 1.0 / s, 1.0, 2.0)


class TestWaitingTimeLaw:
    """Test waiting survivals per law."""

    def test_markov_survival(self):
        """Test exponential survival for the Markov law."""
        law = WaitingTimeLaw(exponent=MarkovExponent(), theta=2.0)
        assert waiting_survival(law, 0.5) == pytest.approx(math.exp(-1.0))
        assert law.is_markov

    def test_stable_survival(self):
        """Test the stable law uses the Mittag-Leffler survival."""
        law = WaitingTimeLaw(exponent=StableExponent(alpha=0.6), theta=1.5)
        assert waiting_survival(law, 2.0) == pytest.approx(float(ml_survival(0.6, 1.5, 2.0)))

    def test_single_component_mixture_matches_stable(self):
        """Test a one-component mixture inverts to the stable survival."""
        mixture = WaitingTimeLaw(
            exponent=StableMixtureExponent(components=[MixtureComponent(weight=1.0, alpha=0.6)]),
            theta=1.0,
        )
        for t in (0.3, 1.0, 3.0):
            assert waiting_survival(mixture, t) == pytest.approx(
                float(ml_survival(0.6, 1.0, t)), abs=1e-8
            )

    def test_weight_rescales_rate(self):
        """Test f = w lambda^alpha behaves like rate theta / w."""
        mixture = WaitingTimeLaw(
            exponent=StableMixtureExponent(components=[MixtureComponent(weight=2.0, alpha=0.5)]),
            theta=1.0,
        )
        assert waiting_survival(mixture, 1.0) == pytest.approx(
            float(ml_survival(0.5, 0.5, 1.0)), abs=1e-8
        )

    def test_survival_at_zero(self):
        """Test F(0) = 1 for every law."""
        law = WaitingTimeLaw(exponent=StableExponent(alpha=0.4), theta=3.0)
        assert waiting_survival(law, 0.0) == 1.0

    def test_negative_time(self):
        """Test negative time is rejected."""
        law = WaitingTimeLaw(exponent=MarkovExponent(), theta=1.0)
        with pytest.raises(InvalidParameterError, match="t >= 0"):
            waiting_survival(law, -0.1)

    def test_rate_must_be_positive(self):
        """Test theta > 0 is enforced."""
        with pytest.raises(ValidationError):
            WaitingTimeLaw(exponent=MarkovExponent(), theta=0.0)

    def test_vectorised_survival(self):
        """Test survival() accepts arrays."""
        law = WaitingTimeLaw(exponent=StableExponent(alpha=0.5), theta=1.0)
        out = law.survival([0.0, 1.0, 4.0])
        assert out.shape == (3,)
        assert out[0] == 1.0
        assert np.all(np.diff(out) < 0.0)


class TestCompleteMonotonicity:
    """Test the divided-difference sign test."""

    def test_ml_survival_is_completely_monotone(self):
        """Test E_alpha(-t^alpha) passes."""
        grid = np.geomspace(0.05, 5.0, 25)
        values = np.asarray(ml_survival(0.6, 1.0, grid))
        assert is_completely_monotone(values, grid)

    def test_exponential_is_completely_monotone(self):
        """Test exp(-t) passes."""
        grid = np.linspace(0.0, 3.0, 20)
        assert is_completely_monotone(np.exp(-grid), grid)

    def test_oscillating_function_fails(self):
        """Test exp(-t) cos(3t) fails."""
        grid = np.linspace(0.0, 3.0, 40)
        assert not is_completely_monotone(np.exp(-grid) * np.cos(3.0 * grid), grid)

    def test_increasing_function_fails(self):
        """Test an increasing sequence fails at order 1."""
        grid = np.linspace(0.0, 1.0, 10)
        assert not is_completely_monotone(grid, grid)

    def test_shape_mismatch(self):
        """Test mismatched inputs are rejected."""
        with pytest.raises(InvalidParameterError, match="equal length"):
            is_completely_monotone([1.0, 0.5], [0.0, 1.0, 2.0])


class TestSurvivalTransform:
    """Test the Laplace transform of waiting survivals."""

    def test_markov_survival_transform(self):
        """Test the exponential survival transforms to 1/(theta + lambda)."""
        law = WaitingTimeLaw(exponent=MarkovExponent(), theta=2.0)
        assert waiting_survival_transform(law, 3.0) == pytest.approx(0.2)

    def test_stable_survival_transform(self):
        """Test f / (lambda (theta + f)) for the stable law."""
        law = WaitingTimeLaw(exponent=StableExponent(alpha=0.5), theta=1.0)
        assert waiting_survival_transform(law, 4.0) == pytest.approx(1.0 / 6.0)


MIXTURE = StableMixtureExponent(
    components=[MixtureComponent(weight=0.5, alpha=0.4), MixtureComponent(weight=0.5, alpha=0.8)]
)

CATALOG = [StableExponent(alpha=0.3), StableExponent(alpha=0.8), MarkovExponent(), MIXTURE]


class TestBernsteinProperties:
    """Test the defining properties of the catalog exponents."""

    @pytest.mark.parametrize(
        "spec, head",
        [
            (StableExponent(alpha=0.3), [-0.3]),
            (StableExponent(alpha=0.8), [-0.8]),
            (MIXTURE, [-0.4, -0.8]),
        ],
    )
    @pytest.mark.parametrize("lam", [1.0, 4.0])
    def test_tail_transform_recovers_exponent(self, spec, head, lam):
        """Test lambda times the transform of the Levy tail equals f(lambda)."""
        transform = numerical_laplace(lambda t: levy_tail(spec, t), lam, head_exponents=head)
        assert lam * transform == pytest.approx(eval_exponent(spec, lam), rel=1e-6)

    def test_potential_transform_is_reciprocal(self):
        """Test the transform of u at lambda = 4 is 1 / f(4) = 0.5."""
        spec = StableExponent(alpha=0.5)
        value = numerical_laplace(lambda t: potential_density(spec, t), 4.0, head_exponents=-0.5)
        assert value == pytest.approx(0.5, abs=1e-8)

    @pytest.mark.parametrize("spec", CATALOG)
    def test_exponent_nondecreasing_and_concave(self, spec):
        """Test f is nondecreasing with nonincreasing slopes on a log grid of 50 points."""
        grid = np.geomspace(1e-3, 1e3, 50)
        values = np.array([eval_exponent(spec, lam) for lam in grid])
        assert np.all(values >= 0.0)
        assert np.all(np.diff(values) >= 0.0)
        slopes = np.diff(values) / np.diff(grid)
        assert np.all(slopes[1:] <= slopes[:-1] * (1.0 + 1e-12))

    @pytest.mark.parametrize("spec", CATALOG)
    def test_waiting_survival_completely_monotone(self, spec):
        """Test every catalog survival passes the sign test to order 3."""
        law = WaitingTimeLaw(exponent=spec, theta=1.0)
        grid = np.geomspace(0.05, 5.0, 25)
        assert is_completely_monotone(law.survival(grid), grid, max_order=3)
