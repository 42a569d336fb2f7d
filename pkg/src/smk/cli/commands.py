"""Task dispatch for the command-line front end."""

import json
import logging
import sys
from collections.abc import Iterator
from contextlib import contextmanager
from enum import IntEnum
from pathlib import Path
from typing import TextIO

from ..core.kolmogorov import solve
from ..core.laplace import oracle_solution
from ..core.limits import LimitKind, control_config, run_limit_experiment
from ..core.samplers import RngStream
from ..core.semi_markov import (
    PathRecord,
    SemiMarkovModel,
    empirical_marginal,
    simulate_path,
    simulate_time_change,
)
from ..core.validation import format_table, run_suites
from ..errors import NonConvergenceError, SmkError
from .schema import (
    Construction,
    LimitParams,
    MarginalParams,
    OracleParams,
    RunConfig,
    SimulateParams,
    SolveParams,
    Task,
    ValidateParams,
)
from .writers import (
    run_metadata,
    write_grid_csv,
    write_json,
    write_marginal_csv,
    write_paths_csv,
)

logger = logging.getLogger(__name__)

ORACLE_ROW_TOLERANCE = 1e-6


class ExitCode(IntEnum):
    OK = 0
    VALIDATION_FAILURE = 1
    NONCONVERGENCE = 2


@contextmanager
def _open_output(path: str | None) -> Iterator[TextIO]:
    if path is None:
        yield sys.stdout
        return
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with target.open("w", encoding="utf-8", newline="\n") as stream:
        yield stream


class TaskRunner:
    """Executes one configured task and writes its output.

    Task flow:
    1. Seed the root stream from (seed, stream 0)
    2. Run the task; Monte Carlo work fans out over derived streams
    3. Re-check probability rows and write CSV or JSON
    """

    def __init__(
        self,
        config: RunConfig,
        model: SemiMarkovModel | None,
        seed: int,
        output: str | None,
        threads: int | None = None,
    ):
        self.config = config
        self.model = model
        self.seed = seed
        self.output = output
        self.threads = threads
        self.rng = RngStream(seed)
        self.metadata = run_metadata(config.digest(), seed, config.task.value)

    def _require_model(self) -> SemiMarkovModel:
        if self.model is None:
            raise SmkError(f"Task '{self.config.task.value}' requires a model")
        return self.model

    def simulate(self, params: SimulateParams) -> bool:
        model = self._require_model()
        simulator = (
            simulate_time_change
            if params.construction == Construction.TIME_CHANGE
            else simulate_path
        )
        paths: list[PathRecord] = [
            simulator(model, params.x0, params.horizon, self.rng.child(k))
            for k in range(params.n_paths)
        ]
        logger.info(f"Simulated {len(paths)} paths ({params.construction.value})")
        with _open_output(self.output) as stream:
            write_paths_csv(stream, paths, self.metadata)
        return True

    def marginal(self, params: MarginalParams) -> bool:
        estimate = empirical_marginal(
            self._require_model(), params.x0, params.t, params.n_paths, self.rng,
            threads=self.threads,
        )
        with _open_output(self.output) as stream:
            write_marginal_csv(stream, estimate, self.metadata)
        return True

    def solve(self, params: SolveParams) -> bool:
        grid = solve(self._require_model(), params.method, params.t_max, params.dt)
        row_tol = 10.0 * grid.dt if grid.dt is not None else 1e-12
        with _open_output(self.output) as stream:
            write_grid_csv(stream, grid, self.metadata, row_tol=row_tol)
        return True

    def oracle(self, params: OracleParams) -> bool:
        grid = oracle_solution(self._require_model(), params.times, params.inversion())
        with _open_output(self.output) as stream:
            write_grid_csv(stream, grid, self.metadata, row_tol=ORACLE_ROW_TOLERANCE)
        return True

    def limit(self, params: LimitParams) -> bool:
        experiment = params.experiment()
        payload: dict[str, object] = {}
        passed = True
        if params.require_control and experiment.kind != LimitKind.BROWNIAN_MARKOV_CONTROL:
            control = run_limit_experiment(
                control_config(experiment), self.rng.child(1), threads=self.threads
            )
            payload["control"] = control.model_dump(mode="json")
            if not control.passed:
                logger.warning("Control experiment failed; skipping the fractional experiment")
                passed = False
        if passed:
            report = run_limit_experiment(experiment, self.rng.child(0), threads=self.threads)
            payload["experiment"] = report.model_dump(mode="json")
            passed = report.passed
        payload["passed"] = passed
        with _open_output(self.output) as stream:
            write_json(stream, payload, self.metadata)
        return passed

    def validate(self, params: ValidateParams) -> bool:
        results = run_suites(self._require_model(), self.rng, t_max=params.t_max)
        sys.stderr.write(format_table(results))
        passed = all(r.passed for r in results)
        with _open_output(self.output) as stream:
            write_json(
                stream,
                {
                    "t_max": params.t_max,
                    "checks": [r.model_dump() for r in results],
                    "passed": passed,
                },
                self.metadata,
            )
        return passed

    def execute(self) -> bool:
        """Run the configured task; True when every check passed."""
        params = self.config.parameters
        logger.info(f"Running task {self.config.task.value} with seed {self.seed}")
        handlers = {
            Task.SIMULATE: self.simulate,
            Task.MARGINAL: self.marginal,
            Task.SOLVE: self.solve,
            Task.ORACLE: self.oracle,
            Task.LIMIT: self.limit,
            Task.VALIDATE: self.validate,
        }
        return handlers[self.config.task](params)  # type: ignore[operator]


def run(
    config: RunConfig,
    model: SemiMarkovModel | None,
    seed: int | None = None,
    output: str | None = None,
    threads: int | None = None,
) -> int:
    """Execute a parsed configuration.

    Args:
        config: Validated run configuration
        model: Model built by :func:`parse_config`
        seed: Overrides the configured seed
        output: Overrides the configured output path; stdout when neither is set
        threads: Monte Carlo worker count, ``SMK_THREADS`` when unset

    Returns:
        0 on success, 1 on a failed check or invalid input, 2 when a
        Laplace inversion did not converge (report on stderr)
    """
    runner = TaskRunner(
        config, model, config.effective_seed(seed), output or config.output, threads=threads
    )
    try:
        ok = runner.execute()
    except NonConvergenceError as exc:
        logger.error(f"Inversion did not converge: {exc}")
        sys.stderr.write(json.dumps(exc.report(), sort_keys=True) + "\n")
        return ExitCode.NONCONVERGENCE
    except (SmkError, ValueError) as exc:
        logger.error(f"{config.task.value} failed: {exc}")
        sys.stderr.write(f"error: {exc}\n")
        return ExitCode.VALIDATION_FAILURE
    return ExitCode.OK if ok else ExitCode.VALIDATION_FAILURE
