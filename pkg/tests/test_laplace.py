"""Tests for Laplace inversion and the resolvent oracle."""

import math

import numpy as np
import pytest
from pydantic import ValidationError
from scipy import special

from smk.core import laplace
from smk.core.kolmogorov import eigen_oracle_two_state, solve_markov
from smk.core.laplace import (
    InversionConfig,
    InversionMethod,
    invert,
    invert_matrix,
    numerical_laplace,
    oracle_solution,
    resolvent_solve,
)
from smk.core.models import SolverMethod
from smk.core.special_fn import ml_survival
from smk.errors import InvalidParameterError, NonConvergenceError

TALBOT = InversionConfig(method=InversionMethod.TALBOT)
GAVER_STEHFEST = InversionConfig(method=InversionMethod.GAVER_STEHFEST)


class TestInversionConfig:
    """Test inversion settings."""

    def test_defaults(self):
        """Test Gaver-Stehfest(14) by default and Talbot(32) for singular originals."""
        cfg = InversionConfig()
        assert cfg.method is None
        assert cfg.nodes == 32
        assert cfg.order == 14
        assert cfg.resolved().method == InversionMethod.GAVER_STEHFEST
        assert cfg.resolved(singular=True).method == InversionMethod.TALBOT

    def test_explicit_method_wins(self):
        """Test a chosen method is kept for singular originals."""
        assert GAVER_STEHFEST.resolved(singular=True).method == InversionMethod.GAVER_STEHFEST

    def test_method_from_settings(self, monkeypatch):
        """Test the configured inversion method becomes the default."""
        monkeypatch.setattr(laplace.settings.solver, "inversion_method", "talbot")
        assert InversionConfig().method == InversionMethod.TALBOT

    def test_odd_order_rejected(self):
        """Test Gaver-Stehfest orders must be even."""
        with pytest.raises(ValidationError, match="even"):
            InversionConfig(method=InversionMethod.GAVER_STEHFEST, order=13)

    def test_reduced(self):
        """Test the agreement companion lowers order and node count."""
        reduced = InversionConfig(order=14, nodes=32).reduced()
        assert (reduced.order, reduced.nodes) == (12, 24)


class TestInvert:
    """Test scalar inversion."""

    @pytest.mark.parametrize("t", [0.5, 1.0, 3.0])
    def test_talbot_exponential(self, t):
        """Test 1/(s+1) inverts to exp(-t)."""
        assert invert(lambda s: 1.0 / (s + 1.0), t, TALBOT) == pytest.approx(math.exp(-t), abs=1e-10)

    @pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
    def test_gaver_stehfest_exponential(self, t):
        """Test the default Gaver-Stehfest(14) rule on a smooth transform."""
        assert invert(lambda s: 1.0 / (s + 1.0), t) == pytest.approx(math.exp(-t), rel=1e-4)

    @pytest.mark.parametrize("t", [0.5, 1.0, 3.0])
    def test_double_pole_talbot(self, t):
        """Test 1/(s+1)^2 inverts to t exp(-t)."""
        value = invert(lambda s: 1.0 / (s + 1.0) ** 2, t, TALBOT)
        assert value == pytest.approx(t * math.exp(-t), abs=1e-9)

    @pytest.mark.parametrize("t", [0.5, 1.0])
    def test_double_pole_gaver_stehfest(self, t):
        """Test the default rule on 1/(s+1)^2."""
        value = invert(lambda s: 1.0 / (s + 1.0) ** 2, t)
        assert value == pytest.approx(t * math.exp(-t), abs=1e-4)

    @pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
    def test_mittag_leffler_transform(self, t):
        """Test s^-1/2 / (1 + s^1/2) inverts to E_1/2(-t^1/2) = erfcx(sqrt t)."""
        value = invert(lambda s: s**-0.5 / (1.0 + s**0.5), t, TALBOT)
        assert value == pytest.approx(special.erfcx(math.sqrt(t)), abs=1e-8)

    def test_talbot_branch_point(self):
        """Test 1/sqrt(s) inverts to 1/sqrt(pi t)."""
        assert invert(lambda s: 1.0 / np.sqrt(s), 2.0, TALBOT) == pytest.approx(
            1.0 / math.sqrt(2.0 * math.pi), abs=1e-9
        )

    def test_nonpositive_time(self):
        """Test t must be positive."""
        with pytest.raises(InvalidParameterError, match="t > 0"):
            invert(lambda s: 1.0 / s, 0.0)

    def test_nonconvergence_reports_entry(self):
        """Test disagreement between orders raises with the offending time."""
        cfg = InversionConfig(tolerance=1e-30)
        with pytest.raises(NonConvergenceError) as excinfo:
            invert(lambda s: 1.0 / (s + 1.0), 1.0, cfg)
        report = excinfo.value.report()
        assert report["error"] == "nonconvergence"
        assert report["entries"][0]["t"] == 1.0

    def test_matrix_inversion(self):
        """Test entry-wise inversion of diag(1/(s+1), 1/(s+2))."""
        value = invert_matrix(
            lambda s: np.diag([1.0 / (s + 1.0), 1.0 / (s + 2.0)]), 1.0, TALBOT
        )
        np.testing.assert_allclose(value, np.diag([math.exp(-1.0), math.exp(-2.0)]), atol=1e-10)


class TestNumericalLaplace:
    """Test forward transforms by quadrature."""

    def test_exponential(self):
        """Test L[exp(-t)](2) = 1/3."""
        assert numerical_laplace(lambda t: math.exp(-t), 2.0) == pytest.approx(1.0 / 3.0, abs=1e-10)

    def test_weak_singularity(self):
        """Test L[t^-1/2](1) = sqrt(pi) with a singular head."""
        value = numerical_laplace(lambda t: t**-0.5, 1.0, head_exponents=-0.5)
        assert value == pytest.approx(math.sqrt(math.pi), abs=1e-8)

    def test_invalid_head(self):
        """Test non-integrable heads are rejected."""
        with pytest.raises(InvalidParameterError, match="exceed -1"):
            numerical_laplace(lambda t: 1.0 / t, 1.0, head_exponents=-1.0)


class TestResolvent:
    """Test the Laplace-domain backward system."""

    @pytest.mark.parametrize("lam", [0.1, 1.0, 10.0])
    def test_row_sums(self, three_state_model, lam):
        """Test every row of the resolvent sums to 1/lambda."""
        x = resolvent_solve(three_state_model, lam)
        np.testing.assert_allclose(x.sum(axis=1), 1.0 / lam, rtol=1e-12)

    def test_markov_resolvent(self, two_state_markov):
        """Test the Markov resolvent equals (lambda - G)^-1."""
        g = two_state_markov.generator_array()
        expected = np.linalg.inv(2.0 * np.eye(2) - g)
        np.testing.assert_allclose(resolvent_solve(two_state_markov, 2.0), expected, rtol=1e-12)

    def test_invalid_lambda(self, two_state_markov):
        """Test lambda must be positive."""
        with pytest.raises(InvalidParameterError, match="lambda"):
            resolvent_solve(two_state_markov, -1.0)


class TestOracle:
    """Test oracle_solution against closed forms."""

    def test_two_state_fractional(self, two_state_fractional):
        """Test the oracle reproduces the eigen-oracle within 1e-5."""
        times = [0.5, 1.0, 2.0]
        grid = oracle_solution(two_state_fractional, times)
        expected = eigen_oracle_two_state(0.6, 1.0, times)
        assert grid.method == SolverMethod.ORACLE
        np.testing.assert_allclose(grid.entry(1, 1), expected, atol=1e-5)
        np.testing.assert_allclose(grid.entry(0, 1), 1.0 - expected, atol=1e-5)

    def test_markov_matches_expm(self, two_state_markov):
        """Test the Talbot oracle agrees with the matrix exponential within 1e-7."""
        times = [0.25, 1.0, 2.0]
        oracle = oracle_solution(two_state_markov, times, TALBOT)
        exact = solve_markov(two_state_markov, times)
        np.testing.assert_allclose(oracle.values, exact.values, atol=1e-7)

    def test_markov_default_is_gaver_stehfest(self, two_state_markov):
        """Test the default rule on a Markov model is accurate to 1e-4."""
        times = [0.25, 0.5, 1.0]
        oracle = oracle_solution(two_state_markov, times)
        exact = solve_markov(two_state_markov, times)
        np.testing.assert_allclose(oracle.values, exact.values, atol=1e-4)

    def test_default_method_follows_orders(
        self, monkeypatch, two_state_markov, two_state_fractional
    ):
        """Test Talbot is picked only when some state has order below 1."""
        used = []
        original = laplace.invert_matrix

        def recording(transform, t, cfg=None):
            used.append(cfg.method)
            return original(transform, t, cfg)

        monkeypatch.setattr(laplace, "invert_matrix", recording)
        oracle_solution(two_state_markov, [0.5])
        oracle_solution(two_state_fractional, [0.5])
        assert used == [InversionMethod.GAVER_STEHFEST, InversionMethod.TALBOT]

    def test_cemetery_survival(self, cemetery_model):
        """Test P(still in 0) is the Mittag-Leffler survival."""
        grid = oracle_solution(cemetery_model, [1.0])
        assert grid.values[0, 0, 0] == pytest.approx(float(ml_survival(0.6, 1.0, 1.0)), abs=1e-8)
        assert grid.values[0, 1, 1] == pytest.approx(1.0, abs=1e-8)

    def test_mixture_rows_sum_to_one(self, mixture_model):
        """Test mixture laws invert to stochastic rows."""
        grid = oracle_solution(mixture_model, [0.5, 1.5])
        np.testing.assert_allclose(grid.row_sums(), 1.0, atol=1e-8)

    def test_invalid_times(self, two_state_markov):
        """Test oracle times must be positive and increasing."""
        with pytest.raises(InvalidParameterError, match="strictly increasing"):
            oracle_solution(two_state_markov, [1.0, 0.5])
        with pytest.raises(InvalidParameterError):
            oracle_solution(two_state_markov, [0.0, 1.0])

    def test_nonconvergence_aggregates_entries(self, two_state_fractional):
        """Test failures list every (i, j, t)."""
        with pytest.raises(NonConvergenceError) as excinfo:
            oracle_solution(two_state_fractional, [0.5, 1.0], InversionConfig(tolerance=1e-30))
        entries = excinfo.value.entries
        assert {e["t"] for e in entries} == {0.5, 1.0}
        assert all(0 <= e["i"] < 2 and 0 <= e["j"] < 2 for e in entries)
