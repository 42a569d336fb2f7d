"""Stepped semi-Markov model and path simulators.

A path visits the states of the embedded chain H and stays in state x for
a holding time drawn from the waiting law of x, independent of the
destination. Two constructions are provided: the renewal one, which draws
holding times directly, and the time-change one, which runs a Markov
chain on an exponential clock and maps every sojourn through a fresh
stable subordinator increment.
"""

import bisect
import logging
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from functools import cached_property

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..config import settings
from ..errors import (
    InvalidParameterError,
    OutOfHorizonError,
    PathExplosionError,
    UnsupportedSpecError,
)
from .bernstein import (
    MarkovExponent,
    StableExponent,
    StableMixtureExponent,
    WaitingTimeLaw,
    exponent_for_order,
)
from .samplers import (
    RngStream,
    sample_exponential,
    sample_stable_subordinator,
    sample_waiting_time,
)

logger = logging.getLogger(__name__)

ROW_SUM_TOLERANCE = 1e-12


class SemiMarkovModel(BaseModel):
    """Finite stepped semi-Markov model.

    ``jump_matrix`` is the row-stochastic embedded chain H. Diagonal mass
    is a self-jump that restarts the clock; ``H[i][i] == 1`` makes state
    ``i`` absorbing, and an absorbing state records no further jumps.
    """

    jump_matrix: list[list[float]]
    laws: list[WaitingTimeLaw] = Field(min_length=1)

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def _check_invariants(self) -> "SemiMarkovModel":
        n = len(self.laws)
        if len(self.jump_matrix) != n:
            raise ValueError(f"jump_matrix has {len(self.jump_matrix)} rows for {n} states")
        for i, row in enumerate(self.jump_matrix):
            if len(row) != n:
                raise ValueError(f"jump_matrix row {i} has {len(row)} entries, expected {n}")
            if any(h < 0.0 for h in row):
                raise ValueError(f"jump_matrix row {i} has a negative entry")
            total = float(np.sum(row))
            if abs(total - 1.0) > ROW_SUM_TOLERANCE:
                raise ValueError(f"jump_matrix row {i} sums to {total:.15g}, expected 1")
        return self

    @classmethod
    def from_orders(
        cls,
        jump_matrix: Sequence[Sequence[float]],
        theta: Sequence[float],
        alphas: Sequence[float],
    ) -> "SemiMarkovModel":
        """Model with one stable (or Markov, for alpha == 1) law per state."""
        if len(theta) != len(alphas):
            raise InvalidParameterError("theta and alphas must have one entry per state")
        laws = [
            WaitingTimeLaw(exponent=exponent_for_order(a), theta=th)
            for th, a in zip(theta, alphas, strict=True)
        ]
        return cls(jump_matrix=[list(row) for row in jump_matrix], laws=laws)

    @classmethod
    def two_state_symmetric(cls, alpha: float, theta: float = 1.0) -> "SemiMarkovModel":
        """Two states that always swap, both of order ``alpha``."""
        return cls.from_orders([[0.0, 1.0], [1.0, 0.0]], [theta, theta], [alpha, alpha])

    @property
    def n_states(self) -> int:
        return len(self.laws)

    @cached_property
    def H(self) -> NDArray[np.float64]:
        arr = np.array(self.jump_matrix, dtype=float)
        arr.setflags(write=False)
        return arr

    @cached_property
    def theta(self) -> NDArray[np.float64]:
        arr = np.array([law.theta for law in self.laws], dtype=float)
        arr.setflags(write=False)
        return arr

    @cached_property
    def cumulative_rows(self) -> NDArray[np.float64]:
        return np.cumsum(self.H, axis=1)

    @cached_property
    def absorbing(self) -> NDArray[np.bool_]:
        return np.diag(self.H) == 1.0

    @property
    def is_markov(self) -> bool:
        return all(isinstance(law.exponent, MarkovExponent) for law in self.laws)

    @property
    def has_mixture(self) -> bool:
        return any(isinstance(law.exponent, StableMixtureExponent) for law in self.laws)

    def waiting_law(self, i: int) -> WaitingTimeLaw:
        return self.laws[i]

    def orders(self) -> list[float | None]:
        """Per-state order alpha(i); None for mixtures."""
        return [law.order for law in self.laws]

    def generator_array(self) -> NDArray[np.float64]:
        """Theta (H - I)."""
        return self.theta[:, None] * (self.H - np.eye(self.n_states))

    def check_state(self, x: int) -> None:
        if not 0 <= x < self.n_states:
            raise InvalidParameterError(f"Invalid state {x}: model has {self.n_states} states")

    def destination(self, x: int, u: float) -> int:
        """Next embedded state from one uniform."""
        cum = self.cumulative_rows[x]
        return min(int(np.searchsorted(cum, u, side="right")), self.n_states - 1)


class PathRecord(BaseModel):
    """One trajectory truncated at ``horizon``: X(t) = states[n] on [epochs[n], epochs[n+1])."""

    states: list[int] = Field(min_length=1)
    epochs: list[float] = Field(min_length=1)
    horizon: float = Field(gt=0.0)

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def _check_epochs(self) -> "PathRecord":
        if len(self.states) != len(self.epochs):
            raise ValueError("states and epochs must have equal length")
        if self.epochs[0] != 0.0:
            raise ValueError("The first epoch must be 0")
        if any(b <= a for a, b in zip(self.epochs, self.epochs[1:], strict=False)):
            raise ValueError("epochs must be strictly increasing")
        if self.epochs[-1] > self.horizon:
            raise ValueError("Recorded epochs must not exceed the horizon")
        return self

    @property
    def n_jumps(self) -> int:
        return len(self.epochs) - 1

    def holding_times(self) -> NDArray[np.float64]:
        """Completed sojourns J_0, J_1, ... (the last, censored one excluded)."""
        return np.diff(np.asarray(self.epochs))


class AgeState(BaseModel):
    """Position and age of the process at a given time."""

    position: int = Field(ge=0)
    age: float = Field(ge=0.0)


class MarginalEstimate(BaseModel):
    """Monte Carlo estimate of one row of pi(t)."""

    x0: int
    t: float
    n_paths: int
    probabilities: list[float]
    std_errors: list[float]


def _record(
    states: list[int], epochs: list[float], state: int, epoch: float, horizon: float
) -> bool:
    """Append a jump; False when it cannot be placed inside the horizon."""
    # Sojourns below the float spacing of the clock are recorded one ulp long
    epoch = max(epoch, float(np.nextafter(epochs[-1], np.inf)))
    if epoch > horizon:
        return False
    states.append(state)
    epochs.append(epoch)
    return True


def _check_horizon(horizon: float) -> None:
    if not horizon > 0.0:
        raise InvalidParameterError(f"Invalid horizon={horizon}: expected horizon > 0")


def simulate_path(
    model: SemiMarkovModel,
    x0: int,
    horizon: float,
    rng: RngStream,
    max_jumps: int | None = None,
) -> PathRecord:
    """Simulate one path by the renewal construction.

    Each step draws the holding time of the current state first, then the
    destination from one uniform against the cumulative row of H.

    Args:
        model: Semi-Markov model
        x0: Initial state
        horizon: Truncation time, strictly positive
        rng: Random stream owned by this call
        max_jumps: Explosion cap, ``settings.simulation.max_jumps`` by default

    Returns:
        PathRecord whose last epoch is at most ``horizon``

    Raises:
        PathExplosionError: If the cap is exceeded
    """
    model.check_state(x0)
    _check_horizon(horizon)
    cap = max_jumps or settings.simulation.max_jumps
    states, epochs = [x0], [0.0]
    x, clock, jumps = x0, 0.0, 0
    while not model.absorbing[x]:
        clock += float(sample_waiting_time(rng, model.laws[x]))
        if clock > horizon:
            break
        x = model.destination(x, float(rng.uniform()))
        jumps += 1
        if jumps > cap:
            raise PathExplosionError(f"Path exceeded {cap} jumps before t={horizon}")
        if not _record(states, epochs, x, clock, horizon):
            break
    return PathRecord(states=states, epochs=epochs, horizon=horizon)


def _subordinator_increment(law: WaitingTimeLaw, duration: float, rng: RngStream) -> float:
    spec = law.exponent
    if isinstance(spec, StableExponent):
        return float(sample_stable_subordinator(rng, spec.alpha, duration))
    if isinstance(spec, StableMixtureExponent):
        return sum(
            float(sample_stable_subordinator(rng, c.alpha, c.weight * duration))
            for c in spec.components
        )
    raise UnsupportedSpecError("The time change is trivial for a Markov law")


def simulate_time_change(
    model: SemiMarkovModel,
    x0: int,
    horizon: float,
    rng: RngStream,
    max_jumps: int | None = None,
) -> PathRecord:
    """Simulate one path as a time-changed Markov chain.

    The chain jumps at exponential clock times T_n of rate theta(X_n). Real
    time advances by an independent subordinator increment of the current
    state run for T_{n+1} - T_n, so the epochs are sigma(T_n).

    Raises:
        UnsupportedSpecError: If any state carries the Markov law
    """
    if any(isinstance(law.exponent, MarkovExponent) for law in model.laws):
        raise UnsupportedSpecError(
            "simulate_time_change requires stable or mixture laws in every state"
        )
    model.check_state(x0)
    _check_horizon(horizon)
    cap = max_jumps or settings.simulation.max_jumps
    states, epochs = [x0], [0.0]
    x, operational, real, jumps = x0, 0.0, 0.0, 0
    while not model.absorbing[x]:
        sojourn = float(sample_exponential(rng, model.theta[x]))
        operational += sojourn
        y = model.destination(x, float(rng.uniform()))
        real += _subordinator_increment(model.laws[x], sojourn, rng)
        if real > horizon:
            break
        x = y
        jumps += 1
        if jumps > cap:
            raise PathExplosionError(f"Path exceeded {cap} jumps before t={horizon}")
        if not _record(states, epochs, x, real, horizon):
            break
    logger.debug(f"Time-changed path: {jumps} jumps, operational clock {operational:.4g}")
    return PathRecord(states=states, epochs=epochs, horizon=horizon)


def state_at(path: PathRecord, t: float) -> int:
    """Right-continuous state X(t).

    Raises:
        OutOfHorizonError: If t is outside [0, horizon]
    """
    if not 0.0 <= t <= path.horizon:
        raise OutOfHorizonError(f"t={t} outside [0, {path.horizon}]")
    return path.states[bisect.bisect_right(path.epochs, t) - 1]


def age_at(path: PathRecord, t: float) -> AgeState:
    """Position and time since the last jump at or before t."""
    if not 0.0 <= t <= path.horizon:
        raise OutOfHorizonError(f"t={t} outside [0, {path.horizon}]")
    n = bisect.bisect_right(path.epochs, t) - 1
    return AgeState(position=path.states[n], age=t - path.epochs[n])


def _waiting_batch(
    model: SemiMarkovModel, states: NDArray[np.int64], rng: RngStream
) -> NDArray[np.float64]:
    waits = np.empty(states.size)
    for s in np.unique(states):
        mask = states == s
        waits[mask] = sample_waiting_time(rng, model.laws[int(s)], int(mask.sum()))
    return waits


def simulate_final_states(
    model: SemiMarkovModel,
    x0: int,
    t: float,
    n: int,
    rng: RngStream,
    max_jumps: int | None = None,
) -> NDArray[np.int64]:
    """States X(t) of ``n`` independent paths, advanced together.

    Raises:
        PathExplosionError: If some path needs more than the jump cap
    """
    model.check_state(x0)
    cap = max_jumps or settings.simulation.max_jumps
    states = np.full(n, x0, dtype=np.int64)
    clock = np.zeros(n)
    active = ~model.absorbing[states]
    rounds = 0
    while active.any():
        idx = np.flatnonzero(active)
        clock[idx] += _waiting_batch(model, states[idx], rng)
        finished = clock[idx] > t
        active[idx[finished]] = False
        moving = idx[~finished]
        if moving.size:
            u = rng.uniform(moving.size)
            cum = model.cumulative_rows[states[moving]]
            nxt = (u[:, None] >= cum).sum(axis=1)
            states[moving] = np.minimum(nxt, model.n_states - 1)
            active[moving] = ~model.absorbing[states[moving]]
        rounds += 1
        if rounds > cap:
            raise PathExplosionError(f"Batch exceeded {cap} jumps before t={t}")
    return states


def empirical_marginal(
    model: SemiMarkovModel,
    x0: int,
    t: float,
    n_paths: int,
    rng: RngStream,
    threads: int | None = None,
    chunk_size: int | None = None,
) -> MarginalEstimate:
    """Monte Carlo estimate of pi_{x0, .}(t) with binomial standard errors.

    Paths are split into chunks of ``chunk_size``; chunk k uses
    ``rng.child(k)`` and results are merged in chunk order, so the estimate
    depends only on the stream, never on ``threads``.

    Args:
        model: Semi-Markov model
        x0: Initial state
        t: Time, nonnegative
        n_paths: Number of paths, at least 1000
        rng: Parent random stream
        threads: Worker count, ``settings.simulation.threads`` by default
        chunk_size: Paths per chunk, ``settings.simulation.chunk_size`` by default

    Returns:
        MarginalEstimate whose probabilities sum to 1
    """
    model.check_state(x0)
    if n_paths < 1000:
        raise InvalidParameterError(f"n_paths={n_paths} is too small; need at least 1000")
    if t < 0.0:
        raise InvalidParameterError(f"Invalid time t={t}: expected t >= 0")
    if t == 0.0:
        indicator = [1.0 if j == x0 else 0.0 for j in range(model.n_states)]
        return MarginalEstimate(
            x0=x0, t=t, n_paths=n_paths, probabilities=indicator,
            std_errors=[0.0] * model.n_states,
        )

    size = chunk_size or settings.simulation.chunk_size
    workers = threads or settings.simulation.threads
    chunks = [min(size, n_paths - start) for start in range(0, n_paths, size)]

    def run_chunk(k: int) -> NDArray[np.int64]:
        final = simulate_final_states(model, x0, t, chunks[k], rng.child(k))
        return np.bincount(final, minlength=model.n_states)

    logger.info(f"Simulating {n_paths} paths in {len(chunks)} chunks on {workers} threads")
    with ThreadPoolExecutor(max_workers=workers) as pool:
        counts = sum(pool.map(run_chunk, range(len(chunks))), np.zeros(model.n_states, dtype=np.int64))

    p = counts / n_paths
    se = np.sqrt(p * (1.0 - p) / n_paths)
    return MarginalEstimate(
        x0=x0, t=t, n_paths=n_paths, probabilities=p.tolist(), std_errors=se.tolist()
    )


def embedded_transition_counts(paths: Sequence[PathRecord], n_states: int) -> NDArray[np.int64]:
    """Counts of observed embedded transitions i -> j."""
    counts = np.zeros((n_states, n_states), dtype=np.int64)
    for path in paths:
        if len(path.states) > 1:
            np.add.at(counts, (path.states[:-1], path.states[1:]), 1)
    return counts


def censored_holding_times(
    paths: Sequence[PathRecord], k: int, cap: float
) -> NDArray[np.float64]:
    """min(J_k, cap) over paths whose k-th epoch leaves room for ``cap``.

    The selection depends only on the first k sojourns, so the result is an
    unbiased sample of the censored k-th holding time.
    """
    out: list[float] = []
    for path in paths:
        if path.n_jumps < k:
            continue
        start = path.epochs[k]
        if start > path.horizon - cap:
            continue
        if path.n_jumps > k:
            out.append(min(path.epochs[k + 1] - start, cap))
        else:
            out.append(cap)
    return np.asarray(out)
