"""Invariant suites run by the ``validate`` task.

Each check returns a :class:`CheckResult`; a check that raises is recorded
as failed with the exception message, so one broken module never hides
the results of the others.
"""

import logging
import math
from collections.abc import Callable

import numpy as np
from pydantic import BaseModel
from scipy import special, stats

from ..errors import SmkError
from .bernstein import StableExponent, is_completely_monotone, survival_to_exponent
from .kolmogorov import SolveMethod, capability_error, solve
from .laplace import numerical_laplace, oracle_solution, resolvent_solve
from .samplers import RngStream, sample_waiting_time
from .semi_markov import SemiMarkovModel, simulate_path, state_at
from .special_fn import MLParams, mittag_leffler, ml_survival

logger = logging.getLogger(__name__)

KS_SAMPLES = 5_000
PATH_SAMPLES = 200


class CheckResult(BaseModel):
    """Outcome of one named check."""

    suite: str
    name: str
    passed: bool
    detail: str = ""


def _run(suite: str, name: str, check: Callable[[], tuple[bool, str]]) -> CheckResult:
    try:
        passed, detail = check()
    except (SmkError, ValueError, RuntimeError) as exc:
        passed, detail = False, f"{type(exc).__name__}: {exc}"
    logger.debug(f"{suite}.{name}: {'pass' if passed else 'FAIL'} {detail}")
    return CheckResult(suite=suite, name=name, passed=passed, detail=detail)


def special_fn_suite() -> list[CheckResult]:
    """E_1/2(-x) against the scaled complementary error function."""

    def erfcx_identity() -> tuple[bool, str]:
        xs = np.array([0.1, 0.5, 1.0, 2.0, 5.0])
        got = mittag_leffler(MLParams(alpha=0.5), -xs)
        err = float(np.abs(got - special.erfcx(xs)).max())
        return err <= 1e-10, f"max error {err:.2e}"

    def exponential_case() -> tuple[bool, str]:
        err = abs(mittag_leffler(MLParams(alpha=1.0), -2.0) - math.exp(-2.0))
        return err <= 1e-14, f"error {err:.2e}"

    return [
        _run("special_fn", "erfcx_identity", erfcx_identity),
        _run("special_fn", "exponential_case", exponential_case),
    ]


def bernstein_suite(model: SemiMarkovModel) -> list[CheckResult]:
    """Complete monotonicity of survivals and the survival/exponent round trip."""
    results = []
    grid = np.geomspace(0.1, 5.0, 12)
    for i, law in enumerate(model.laws):
        results.append(
            _run(
                "bernstein",
                f"survival_{i}_completely_monotone",
                lambda law=law: (
                    is_completely_monotone(law.survival(grid), grid, max_order=3, tol=1e-6),
                    "",
                ),
            )
        )
    stable = sorted(
        {law.exponent.alpha for law in model.laws if isinstance(law.exponent, StableExponent)}
    )
    for alpha in stable:

        def round_trip(alpha: float = alpha) -> tuple[bool, str]:
            def survival(t: float) -> float:
                return float(ml_survival(alpha, 1.0, t))

            def transform(lam: float) -> float:
                return numerical_laplace(survival, lam, head_exponents=[0.0, alpha])

            errors = [
                abs(survival_to_exponent(transform, 1.0, lam) - lam**alpha)
                for lam in (1.0, 2.0, 4.0)
            ]
            return max(errors) <= 1e-5, f"max error {max(errors):.2e}"

        results.append(_run("bernstein", f"round_trip_alpha_{alpha:g}", round_trip))
    return results


def laplace_suite(model: SemiMarkovModel) -> list[CheckResult]:
    """Resolvent rows sum to 1/lambda; inverted rows sum to 1."""

    def resolvent_rows() -> tuple[bool, str]:
        errs = [
            float(np.abs(resolvent_solve(model, lam).sum(axis=1) * lam - 1.0).max())
            for lam in (0.5, 1.0, 5.0)
        ]
        return max(errs) <= 1e-10, f"max defect {max(errs):.2e}"

    def oracle_rows() -> tuple[bool, str]:
        grid = oracle_solution(model, [0.5, 1.0])
        defect = float(np.abs(grid.row_sums() - 1.0).max())
        return defect <= 1e-6, f"max defect {defect:.2e}"

    return [
        _run("laplace", "resolvent_row_sums", resolvent_rows),
        _run("laplace", "oracle_row_sums", oracle_rows),
    ]


def samplers_suite(model: SemiMarkovModel, rng: RngStream) -> list[CheckResult]:
    """KS test of sampled holding times against the survival of each distinct law."""
    results = []
    seen: set[str] = set()
    for i, law in enumerate(model.laws):
        key = law.model_dump_json()
        if key in seen:
            continue
        seen.add(key)

        def ks(i: int = i) -> tuple[bool, str]:
            law = model.laws[i]
            draws = np.asarray(sample_waiting_time(rng.child(i), law, KS_SAMPLES))
            result = stats.kstest(draws, lambda t: 1.0 - law.survival(np.maximum(t, 0.0)))
            return result.pvalue > 0.01, f"D={result.statistic:.4f} p={result.pvalue:.3f}"

        results.append(_run("samplers", f"waiting_time_{i}_ks", ks))
    return results


def semi_markov_suite(model: SemiMarkovModel, rng: RngStream) -> list[CheckResult]:
    """Simulated paths only take jumps allowed by H and respect the horizon."""

    def paths_consistent() -> tuple[bool, str]:
        h = model.H
        for k in range(PATH_SAMPLES):
            path = simulate_path(model, k % model.n_states, 1.0, rng.child(k))
            for a, b in zip(path.states, path.states[1:], strict=False):
                if h[a, b] <= 0.0:
                    return False, f"path {k} jumps {a} -> {b} with H = 0"
            if state_at(path, path.horizon) != path.states[-1]:
                return False, f"path {k} ends in the wrong state"
        return True, f"{PATH_SAMPLES} paths"

    return [_run("semi_markov", "paths_follow_jump_matrix", paths_consistent)]


def kolmogorov_suite(model: SemiMarkovModel, t_max: float = 1.0) -> list[CheckResult]:
    """Every capable solver agrees with the resolvent oracle at t_max."""
    results = []
    reference: list[np.ndarray] = []

    def oracle() -> tuple[bool, str]:
        reference.append(oracle_solution(model, [t_max]).values[0])
        return True, ""

    results.append(_run("kolmogorov", "oracle_available", oracle))
    for method in SolveMethod:
        if capability_error(model, method) or not reference:
            continue

        def agree(method: SolveMethod = method) -> tuple[bool, str]:
            grid = solve(model, method, t_max)
            err = float(np.abs(grid.values[-1] - reference[0]).max())
            return err <= 2e-3, f"max difference {err:.2e} at t={t_max:g}"

        results.append(_run("kolmogorov", f"{method.value}_vs_oracle", agree))
    return results


def run_suites(
    model: SemiMarkovModel, rng: RngStream, t_max: float = 1.0
) -> list[CheckResult]:
    """All suites relevant to ``model``, each on its own derived stream.

    ``t_max`` is the time at which the solvers are compared with the oracle.
    """
    results = special_fn_suite()
    results += bernstein_suite(model)
    results += laplace_suite(model)
    results += samplers_suite(model, rng.child(0))
    results += semi_markov_suite(model, rng.child(1))
    results += kolmogorov_suite(model, t_max)
    failed = sum(not r.passed for r in results)
    logger.info(f"Validation: {len(results) - failed}/{len(results)} checks passed")
    return results


def format_table(results: list[CheckResult]) -> str:
    """Aligned pass/fail table."""
    width = max(len(f"{r.suite}.{r.name}") for r in results)
    lines = [
        f"{f'{r.suite}.{r.name}':<{width}}  {'PASS' if r.passed else 'FAIL'}  {r.detail}".rstrip()
        for r in results
    ]
    return "\n".join(lines) + "\n"
