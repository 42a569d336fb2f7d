"""Scaling-limit experiments for lattice walks with Mittag-Leffler waits.

For every scale c the walk X^c is simulated up to time t/c and its law is
compared with the solution of the limiting variable-order equation,
computed on a fixed reference lattice. Each atom of either law is spread
uniformly over its own lattice cell, the result is binned on a common bin
width and the two are compared in total variation. Only the ordering of the
distances across scales is asserted; no convergence rate is measured.

Walks:

* diffusion: from x, jump to x +- f with probability 1/2 each, where
  f = c^alpha(x) is evaluated at the departure site, after an ML wait of
  order alpha(x) and rate 1/f;
* Poisson drift: jump to x + f after an ML wait of order alpha(x) and
  rate theta.

Reference lattices use spacing h and absorbing ends; the probability
reaching the ends is monitored.
"""

import logging
import math
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from enum import Enum

import numpy as np
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..config import settings
from ..errors import BoundaryMassError, InvalidParameterError, PathExplosionError
from .kolmogorov import solve_markov, solve_volterra_caputo
from .laplace import InversionConfig, InversionMethod, oracle_solution
from .samplers import RngStream, sample_ml_waiting
from .semi_markov import SemiMarkovModel
from .special_fn import ml_survival

logger = logging.getLogger(__name__)

PMF_COUNT_CAP = 40
BINNING_BLOCK = 20_000


class LimitKind(str, Enum):
    """Scaling experiment."""

    FRACTIONAL_DIFFUSION = "fractional_diffusion"
    FRACTIONAL_POISSON_DRIFT = "fractional_poisson_drift"
    BROWNIAN_MARKOV_CONTROL = "brownian_markov_control"


class OrderProfile(BaseModel):
    """Position-dependent order: ``left`` below ``interface``, ``right`` from it on."""

    left: float = Field(gt=0.0, le=1.0)
    right: float | None = Field(default=None, gt=0.0, le=1.0)
    interface: float = 0.0

    model_config = ConfigDict(frozen=True)

    @property
    def is_constant(self) -> bool:
        return self.right is None or self.right == self.left

    def at(self, x: ArrayLike) -> NDArray[np.float64]:
        xs = np.asarray(x, dtype=float)
        if self.is_constant:
            return np.full(xs.shape, self.left)
        return np.where(xs < self.interface, self.left, self.right)


class LimitExperimentConfig(BaseModel):
    """Parameters of one scaling experiment."""

    kind: LimitKind
    orders: OrderProfile = OrderProfile(left=1.0)
    theta: float = Field(default=1.0, gt=0.0)
    scales: list[float] = Field(default_factory=lambda: [0.4, 0.2, 0.1], min_length=1)
    t_eval: float = Field(default=1.0, gt=0.0)
    lattice_halfwidth: int = Field(default=60, ge=5)
    reference_spacing: float = Field(default=0.1, gt=0.0)
    bin_width: float = Field(default=0.5, gt=0.0)
    solver_steps: int = Field(default=400, ge=10)
    n_paths: int = Field(default=100_000, ge=1000)
    boundary_tolerance: float = Field(default=1e-3, gt=0.0)

    model_config = ConfigDict(frozen=True)

    @field_validator("scales")
    @classmethod
    def _decreasing_scales(cls, value: list[float]) -> list[float]:
        if any(not 0.0 < c < 1.0 for c in value):
            raise ValueError("scales must lie in (0, 1)")
        if any(b >= a for a, b in zip(value, value[1:], strict=False)):
            raise ValueError("scales must be strictly decreasing")
        return value

    @model_validator(mode="after")
    def _control_is_classical(self) -> "LimitExperimentConfig":
        if self.kind == LimitKind.BROWNIAN_MARKOV_CONTROL and not (
            self.orders.is_constant and self.orders.left == 1.0
        ):
            raise ValueError("The Brownian control experiment needs alpha = 1 everywhere")
        return self


class ScaleResult(BaseModel):
    """Distance between the walk and the limit solution at one scale."""

    scale: float
    tv_distance: float = Field(ge=0.0)
    mc_std_error: float = Field(ge=0.0)
    empirical_outside_mass: float = Field(ge=0.0)


class BinwiseCheck(BaseModel):
    """Bin-by-bin agreement within ``z_limit`` standard errors."""

    scale: float
    max_z: float
    z_limit: float = 4.0
    n_bins: int
    passed: bool


class PmfCheck(BaseModel):
    """Raw counting process against the fractional Poisson law."""

    t: float
    max_z: float
    z_limit: float = 4.0
    zero_probability: float
    zero_reference: float
    zero_std_error: float
    passed: bool


class LimitExperimentReport(BaseModel):
    """Per-scale distances and the monotone-trend verdict."""

    kind: LimitKind
    t_eval: float
    rows: list[ScaleResult]
    verdict: bool | None
    solver_row_sum: float
    solver_boundary_mass: float
    control: BinwiseCheck | None = None
    pmf_check: PmfCheck | None = None

    @property
    def passed(self) -> bool:
        checks = [self.verdict is not False]
        if self.control is not None:
            checks.append(self.control.passed)
        if self.pmf_check is not None:
            checks.append(self.pmf_check.passed)
        return all(checks)


def _chunked(
    n_paths: int,
    rng: RngStream,
    simulate: Callable[[int, RngStream], NDArray[np.float64]],
    threads: int | None = None,
) -> NDArray[np.float64]:
    """Run ``simulate`` chunk-wise on derived streams and concatenate in order."""
    size = settings.simulation.chunk_size
    chunks = [min(size, n_paths - start) for start in range(0, n_paths, size)]
    with ThreadPoolExecutor(max_workers=threads or settings.simulation.threads) as pool:
        parts = list(pool.map(lambda k: simulate(chunks[k], rng.child(k)), range(len(chunks))))
    return np.concatenate(parts)


def _simulate_walk(
    cfg: LimitExperimentConfig, scale: float, n: int, rng: RngStream
) -> NDArray[np.float64]:
    """Positions X^c(t_eval / c) of ``n`` independent walks."""
    diffusion = cfg.kind != LimitKind.FRACTIONAL_POISSON_DRIFT
    horizon = cfg.t_eval / scale
    position = np.zeros(n)
    clock = np.zeros(n)
    active = np.ones(n, dtype=bool)
    rounds = 0
    while active.any():
        idx = np.flatnonzero(active)
        alpha = cfg.orders.at(position[idx])
        height = scale**alpha
        rate = 1.0 / height if diffusion else np.full(idx.size, cfg.theta)
        clock[idx] += sample_ml_waiting(rng, alpha, rate)
        done = clock[idx] > horizon
        active[idx[done]] = False
        movers = idx[~done]
        if movers.size:
            step = height[~done]
            if diffusion:
                step = np.where(rng.uniform(movers.size) < 0.5, -step, step)
            position[movers] += step
        rounds += 1
        if rounds > settings.simulation.max_jumps:
            raise PathExplosionError(f"Walk exceeded {settings.simulation.max_jumps} jumps")
    return position


def _simulate_counts(
    alpha: float, theta: float, t: float, n: int, rng: RngStream
) -> NDArray[np.float64]:
    """Counts N(t) of a renewal process with ML(alpha, theta) inter-event times."""
    counts = np.zeros(n)
    clock = np.zeros(n)
    active = np.ones(n, dtype=bool)
    while active.any():
        idx = np.flatnonzero(active)
        clock[idx] += sample_ml_waiting(rng, np.full(idx.size, alpha), np.full(idx.size, theta))
        done = clock[idx] > t
        active[idx[done]] = False
        counts[idx[~done]] += 1.0
    return counts


def _lattice_model(cfg: LimitExperimentConfig) -> tuple[SemiMarkovModel, NDArray[np.float64], int]:
    """Reference lattice model, its site positions and the index of the origin."""
    h = cfg.reference_spacing
    k = cfg.lattice_halfwidth
    if cfg.kind == LimitKind.FRACTIONAL_POISSON_DRIFT:
        sites = np.arange(k + 1) * h
        origin = 0
        rate = cfg.theta / h
        jump = np.zeros((k + 1, k + 1))
        for i in range(k):
            jump[i, i + 1] = 1.0
        jump[k, k] = 1.0
    else:
        sites = np.arange(-k, k + 1) * h
        origin = k
        rate = 1.0 / h**2
        n = sites.size
        jump = np.zeros((n, n))
        for i in range(1, n - 1):
            jump[i, i - 1] = 0.5
            jump[i, i + 1] = 0.5
        jump[0, 0] = 1.0
        jump[n - 1, n - 1] = 1.0
    alphas = cfg.orders.at(sites)
    model = SemiMarkovModel.from_orders(jump.tolist(), [rate] * sites.size, alphas.tolist())
    return model, sites, origin


def reference_solution(cfg: LimitExperimentConfig) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Law of the limit equation at ``t_eval`` on the reference lattice.

    Returns:
        Site positions and their probabilities started from the origin

    Raises:
        BoundaryMassError: If the absorbing ends hold too much probability
    """
    model, sites, origin = _lattice_model(cfg)
    if model.is_markov:
        grid = solve_markov(model, [0.0, cfg.t_eval])
    else:
        grid = solve_volterra_caputo(model, cfg.t_eval, cfg.t_eval / cfg.solver_steps)
    row = grid.values[-1, origin]
    ends = [sites.size - 1] if cfg.kind == LimitKind.FRACTIONAL_POISSON_DRIFT else [0, sites.size - 1]
    boundary = float(row[ends].sum())
    logger.info(
        f"Reference lattice: {sites.size} sites, row sum {row.sum():.12f}, "
        f"boundary mass {boundary:.3g}"
    )
    if boundary >= cfg.boundary_tolerance:
        raise BoundaryMassError(
            f"Boundary mass {boundary:.3g} exceeds {cfg.boundary_tolerance:g}; "
            "enlarge lattice_halfwidth"
        )
    return sites, row


def bin_index(x: ArrayLike, width: float) -> NDArray[np.int64]:
    """Bin m holds [(m - 1/2) w, (m + 1/2) w)."""
    return np.floor(np.asarray(x, dtype=float) / width + 0.5).astype(np.int64)


def cell_binned_law(
    centres: ArrayLike,
    cell_widths: ArrayLike,
    bin_width: float,
    lo: int,
    hi: int,
    weights: ArrayLike | None = None,
) -> tuple[NDArray[np.float64], float]:
    """Law of atoms spread uniformly over their cells, binned on bins lo..hi.

    Atom k carries ``weights[k]`` (1/n by default) over
    [centres[k] - cell_widths[k]/2, centres[k] + cell_widths[k]/2).

    Returns:
        Mass per bin and the mass falling outside bins lo..hi
    """
    xs = np.asarray(centres, dtype=float)
    widths = np.broadcast_to(np.asarray(cell_widths, dtype=float), xs.shape)
    if np.any(widths <= 0.0):
        raise InvalidParameterError("Cell widths must be positive")
    wts = np.full(xs.size, 1.0 / xs.size) if weights is None else np.asarray(weights, dtype=float)
    edges = (np.arange(lo, hi + 2) - 0.5) * bin_width
    masses = np.zeros(hi - lo + 1)
    for start in range(0, xs.size, BINNING_BLOCK):
        block = slice(start, start + BINNING_BLOCK)
        cdf = np.clip(
            (edges[None, :] - xs[block, None]) / widths[block, None] + 0.5, 0.0, 1.0
        )
        masses += wts[block] @ np.diff(cdf, axis=1)
    outside = max(0.0, float(wts.sum() - masses.sum()))
    return masses, outside


def _binned(
    cfg: LimitExperimentConfig,
    scale: float,
    sites: NDArray[np.float64],
    reference: NDArray[np.float64],
    positions: NDArray[np.float64],
) -> tuple[NDArray[np.float64], NDArray[np.float64], float]:
    """Binned reference and walk laws; the last entry collects overflow."""
    width = cfg.bin_width
    ref_bins = bin_index(sites, width)
    lo, hi = int(ref_bins.min()), int(ref_bins.max())
    ref, ref_out = cell_binned_law(sites, cfg.reference_spacing, width, lo, hi, weights=reference)
    steps = scale ** cfg.orders.at(positions)
    emp, outside = cell_binned_law(positions, steps, width, lo, hi)
    return np.append(ref, ref_out), np.append(emp, outside), outside


def total_variation(p: ArrayLike, q: ArrayLike) -> float:
    """Half the l1 distance between two probability vectors."""
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def _binwise(scale: float, ref: NDArray[np.float64], emp: NDArray[np.float64], n: int) -> BinwiseCheck:
    se = np.sqrt(np.maximum(ref * (1.0 - ref), 1.0 / n) / n)
    z = np.abs(emp - ref) / se
    max_z = float(z.max())
    return BinwiseCheck(scale=scale, max_z=max_z, n_bins=int(ref.size), passed=max_z <= 4.0)


def _run_scales(
    cfg: LimitExperimentConfig, rng: RngStream, threads: int | None
) -> tuple[list[ScaleResult], NDArray[np.float64], float, BinwiseCheck | None]:
    sites, reference = reference_solution(cfg)
    rows: list[ScaleResult] = []
    control: BinwiseCheck | None = None
    for s_idx, scale in enumerate(cfg.scales):
        positions = _chunked(
            cfg.n_paths,
            rng.child(s_idx),
            lambda n, stream, c=scale: _simulate_walk(cfg, c, n, stream),
            threads,
        )
        ref, emp, outside = _binned(cfg, scale, sites, reference, positions)
        tv = total_variation(ref, emp)
        se = 0.5 * float(np.sqrt(emp * (1.0 - emp) / cfg.n_paths).sum())
        rows.append(
            ScaleResult(scale=scale, tv_distance=tv, mc_std_error=se, empirical_outside_mass=outside)
        )
        logger.info(f"{cfg.kind.value} c={scale:g}: TV={tv:.4g} (MC SE {se:.2g})")
        if cfg.kind == LimitKind.BROWNIAN_MARKOV_CONTROL and s_idx == len(cfg.scales) - 1:
            control = _binwise(scale, ref, emp, cfg.n_paths)
    return rows, reference, float(reference[[0, -1]].sum()), control


def _verdict(rows: list[ScaleResult]) -> bool | None:
    if len(rows) < 2:
        return None
    return rows[-1].tv_distance < rows[0].tv_distance


def run_fractional_diffusion_limit(
    cfg: LimitExperimentConfig, rng: RngStream, threads: int | None = None
) -> LimitExperimentReport:
    """Lattice walk against D^alpha(x) q = 1/2 q''.

    Also runs the Brownian control when ``cfg.kind`` is the control kind,
    adding a bin-wise comparison at the smallest scale.

    Args:
        cfg: Experiment configuration (diffusion or control kind)
        rng: Parent stream; scale k uses ``rng.child(k)``
        threads: Worker count, ``settings.simulation.threads`` by default

    Returns:
        LimitExperimentReport with one row per scale
    """
    if cfg.kind == LimitKind.FRACTIONAL_POISSON_DRIFT:
        raise InvalidParameterError("Use run_fractional_poisson_limit for the drift experiment")
    rows, reference, boundary, control = _run_scales(cfg, rng, threads)
    return LimitExperimentReport(
        kind=cfg.kind,
        t_eval=cfg.t_eval,
        rows=rows,
        verdict=_verdict(rows),
        solver_row_sum=float(reference.sum()),
        solver_boundary_mass=boundary,
        control=control,
    )


def _pmf_check(cfg: LimitExperimentConfig, rng: RngStream, threads: int | None) -> PmfCheck:
    """Counts N(t) at unit scale against the fractional Poisson pmf."""
    alpha = cfg.orders.left
    counts = _chunked(
        cfg.n_paths,
        rng,
        lambda n, stream: _simulate_counts(alpha, cfg.theta, cfg.t_eval, n, stream),
        threads,
    )
    m = PMF_COUNT_CAP
    jump = np.zeros((m + 1, m + 1))
    for i in range(m):
        jump[i, i + 1] = 1.0
    jump[m, m] = 1.0
    chain = SemiMarkovModel.from_orders(jump.tolist(), [cfg.theta] * (m + 1), [alpha] * (m + 1))
    talbot = InversionConfig(method=InversionMethod.TALBOT)
    pmf = oracle_solution(chain, [cfg.t_eval], talbot).values[0, 0]

    n = counts.size
    emp = np.bincount(np.minimum(counts, m).astype(np.int64), minlength=m + 1) / n
    se = np.sqrt(np.maximum(pmf * (1.0 - pmf), 1.0 / n) / n)
    max_z = float((np.abs(emp - pmf) / se).max())

    zero_ref = float(ml_survival(alpha, cfg.theta, cfg.t_eval))
    zero_se = math.sqrt(emp[0] * (1.0 - emp[0]) / n)
    zero_ok = abs(emp[0] - zero_ref) <= 4.0 * max(zero_se, 1.0 / n)
    logger.info(f"Counting process: P(N=0)={emp[0]:.5f} vs {zero_ref:.5f}, max z {max_z:.2f}")
    return PmfCheck(
        t=cfg.t_eval,
        max_z=max_z,
        zero_probability=float(emp[0]),
        zero_reference=zero_ref,
        zero_std_error=zero_se,
        passed=max_z <= 4.0 and zero_ok,
    )


def run_fractional_poisson_limit(
    cfg: LimitExperimentConfig, rng: RngStream, threads: int | None = None
) -> LimitExperimentReport:
    """Right-jumping walk against D^alpha(x) q = theta q'.

    With a constant order the raw counting process at unit scale is also
    compared with the fractional Poisson pmf obtained from the resolvent
    oracle, including P(N(t) = 0) = E_alpha(-theta t^alpha).
    """
    if cfg.kind != LimitKind.FRACTIONAL_POISSON_DRIFT:
        raise InvalidParameterError("run_fractional_poisson_limit needs the drift kind")
    rows, reference, _, _ = _run_scales(cfg, rng, threads)
    pmf = None
    if cfg.orders.is_constant:
        pmf = _pmf_check(cfg, rng.child(len(cfg.scales)), threads)
    return LimitExperimentReport(
        kind=cfg.kind,
        t_eval=cfg.t_eval,
        rows=rows,
        verdict=_verdict(rows),
        solver_row_sum=float(reference.sum()),
        solver_boundary_mass=float(reference[-1]),
        pmf_check=pmf,
    )


def control_config(cfg: LimitExperimentConfig) -> LimitExperimentConfig:
    """Brownian control matching ``cfg``; its smallest scale equals the lattice spacing."""
    scales = sorted({*cfg.scales, cfg.reference_spacing}, reverse=True)
    return cfg.model_copy(
        update={
            "kind": LimitKind.BROWNIAN_MARKOV_CONTROL,
            "orders": OrderProfile(left=1.0),
            "scales": [c for c in scales if c >= cfg.reference_spacing],
        }
    )


def run_limit_experiment(
    cfg: LimitExperimentConfig, rng: RngStream, threads: int | None = None
) -> LimitExperimentReport:
    """Dispatch on ``cfg.kind``."""
    if cfg.kind == LimitKind.FRACTIONAL_POISSON_DRIFT:
        return run_fractional_poisson_limit(cfg, rng, threads)
    return run_fractional_diffusion_limit(cfg, rng, threads)
