"""CSV and JSON emitters.

Every file starts with ``#``-prefixed metadata lines (version, config
digest, seed, task). Numbers carry 17 significant digits so that values
round-trip exactly; line endings are LF whatever the platform.
"""

import csv
import json
import logging
from collections.abc import Iterable, Sequence
from typing import Any, TextIO

import numpy as np

from .. import __version__
from ..core.models import SolutionGrid
from ..core.semi_markov import MarginalEstimate, PathRecord
from ..errors import StochasticityError

logger = logging.getLogger(__name__)


def fmt(value: float) -> str:
    """17 significant digits, enough for an exact float64 round trip."""
    return format(float(value), ".17g")


def run_metadata(digest: str, seed: int, task: str) -> dict[str, str]:
    return {"version": __version__, "config_sha256": digest, "seed": str(seed), "task": task}


def _header(stream: TextIO, metadata: dict[str, str]) -> None:
    for key in sorted(metadata):
        stream.write(f"# {key}: {metadata[key]}\n")


def _rows(stream: TextIO, header: Sequence[str], rows: Iterable[Sequence[str]]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)


def write_grid_csv(
    stream: TextIO, grid: SolutionGrid, metadata: dict[str, str], row_tol: float
) -> None:
    """Write pi(t) as ``t,pi_0_0,pi_0_1,...`` after re-checking the row sums.

    Raises:
        StochasticityError: If a row leaves the tolerance band
    """
    grid.check_stochastic(row_tol=row_tol)
    s = grid.n_states
    header = ["t"] + [f"pi_{i}_{j}" for i in range(s) for j in range(s)]
    flat = grid.values.reshape(grid.times.size, s * s)
    _header(stream, metadata)
    _rows(
        stream,
        header,
        ([fmt(t), *map(fmt, row)] for t, row in zip(grid.times, flat, strict=True)),
    )
    logger.info(f"Wrote {grid.times.size} rows of a {s}-state grid")


def write_marginal_csv(
    stream: TextIO, estimate: MarginalEstimate, metadata: dict[str, str]
) -> None:
    """Write one row ``t,p_x0_0,...,se_x0_0,...`` of the Monte Carlo marginal."""
    total = sum(estimate.probabilities)
    if abs(total - 1.0) > 1e-9:
        raise StochasticityError(f"Marginal probabilities sum to {total:.12g}")
    x0, s = estimate.x0, len(estimate.probabilities)
    header = (
        ["t"] + [f"p_{x0}_{j}" for j in range(s)] + [f"se_{x0}_{j}" for j in range(s)]
    )
    row = [fmt(estimate.t), *map(fmt, estimate.probabilities), *map(fmt, estimate.std_errors)]
    _header(stream, {**metadata, "n_paths": str(estimate.n_paths)})
    _rows(stream, header, [row])


def write_paths_csv(
    stream: TextIO, paths: Sequence[PathRecord], metadata: dict[str, str]
) -> None:
    """Write ``path,epoch,state`` rows, one per visited state."""
    horizon = paths[0].horizon if paths else 0.0
    _header(stream, {**metadata, "horizon": fmt(horizon)})
    _rows(
        stream,
        ["path", "epoch", "state"],
        (
            [str(k), fmt(epoch), str(state)]
            for k, path in enumerate(paths)
            for epoch, state in zip(path.epochs, path.states, strict=True)
        ),
    )


def _plain(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, list | tuple):
        return [_plain(v) for v in value]
    if isinstance(value, np.generic):
        return value.item()
    return value


def write_json(stream: TextIO, payload: dict[str, Any], metadata: dict[str, str]) -> None:
    """Write a JSON report with lexicographically sorted keys and a metadata block."""
    document = {"metadata": metadata, **_plain(payload)}
    stream.write(json.dumps(document, sort_keys=True, indent=2, allow_nan=False))
    stream.write("\n")
