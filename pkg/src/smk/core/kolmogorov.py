"""Time-domain solvers for the backward equations on a finite state space.

Three equivalent forms of the backward equation are discretised on a
uniform grid:

* ``solve_renewal``: the renewal integral equation, product trapezoid
  with survival increments as exact kernel weights;
* ``solve_volterra_caputo``: the variable-order Caputo form with per-row
  Grunwald-Letnikov weights;
* ``solve_evolutionary``: the Riemann-Liouville form, fractional
  Adams-Moulton (product trapezoid) weights against the potential density.

Memory kernels are row dependent: row i always uses the law of state i.
The diagonal term is implicit in every scheme.
"""

import logging
from collections.abc import Sequence
from enum import Enum

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import linalg, special

from ..config import settings
from ..errors import (
    InvalidParameterError,
    KernelUnavailableError,
    UnsupportedSpecError,
    WrongLawError,
)
from .bernstein import MarkovExponent
from .models import GeneratorMatrix, SolutionGrid, SolverMethod
from .semi_markov import SemiMarkovModel
from .special_fn import MLParams, mittag_leffler

logger = logging.getLogger(__name__)


class SolveMethod(str, Enum):
    """Solver selectable from configuration."""

    RENEWAL = "renewal"
    VOLTERRA_CAPUTO = "volterra_caputo"
    EVOLUTIONARY = "evolutionary"
    MARKOV = "markov"


def capability_error(model: SemiMarkovModel, method: SolveMethod) -> str | None:
    """Why ``method`` cannot solve ``model``, or None when it can.

    Capability matrix: renewal takes every law; volterra_caputo and
    evolutionary take stable and Markov laws; markov takes Markov laws only.
    """
    if method in (SolveMethod.VOLTERRA_CAPUTO, SolveMethod.EVOLUTIONARY) and model.has_mixture:
        return (
            f"{method.value} needs a single order per state; "
            "stable mixtures are solvable with renewal only"
        )
    if method == SolveMethod.MARKOV and not model.is_markov:
        return "markov requires the Markov law in every state"
    return None


def build_generator(model: SemiMarkovModel) -> GeneratorMatrix:
    """G = Theta (H - I)."""
    return GeneratorMatrix(G=model.generator_array())


def _grid(t_max: float, dt: float | None) -> tuple[NDArray[np.float64], float]:
    if not t_max > 0.0:
        raise InvalidParameterError(f"Invalid t_max={t_max}: expected t_max > 0")
    step = dt if dt is not None else t_max / settings.solver.grid_divisions
    if not 0.0 < step <= t_max:
        raise InvalidParameterError(f"Invalid dt={step} for t_max={t_max}")
    n = max(1, int(round(t_max / step)))
    step = t_max / n
    return np.arange(n + 1) * step, step


def _finish(
    times: NDArray[np.float64], values: NDArray[np.float64], method: SolverMethod, dt: float
) -> SolutionGrid:
    grid = SolutionGrid(times=times, values=values, method=method, dt=dt)
    grid.check_stochastic(row_tol=10.0 * dt)
    logger.info(f"{method.value}: {times.size - 1} steps of dt={dt:.3g} done")
    return grid


def _survival_table(model: SemiMarkovModel, times: NDArray[np.float64]) -> NDArray[np.float64]:
    """F_i(t_n) for every state, shape (S, N+1); identical laws share one evaluation."""
    cache: dict[str, NDArray[np.float64]] = {}
    table = np.empty((model.n_states, times.size))
    for i, law in enumerate(model.laws):
        key = law.model_dump_json()
        if key not in cache:
            logger.debug(f"Tabulating survival of state {i} on {times.size} points")
            cache[key] = law.survival(times)
        table[i] = cache[key]
    return table


def solve_renewal(
    model: SemiMarkovModel, t_max: float, dt: float | None = None
) -> SolutionGrid:
    """Solve the backward renewal equation.

    pi(t) = diag(F(t)) + int_0^t diag(density(s)) H pi(t - s) ds is
    discretised by product integration: on each subinterval the density
    integrates exactly to F_i(t_m) - F_i(t_{m+1}) and pi is interpolated
    linearly. Row sums are conserved exactly.

    Args:
        model: Any finite model
        t_max: Final time
        dt: Step, at most t_max / 100; t_max / 2000 by default

    Returns:
        SolutionGrid with method ``renewal``

    Raises:
        KernelUnavailableError: If the survival table is not a valid survival
    """
    times, dt = _grid(t_max, dt)
    if times.size < 101:
        raise InvalidParameterError(f"dt={dt} too coarse: need dt <= t_max/100")
    n_steps, s = times.size - 1, model.n_states

    survival = _survival_table(model, times)
    w = -np.diff(survival, axis=1).T  # (N, S): mass of the holding time in [t_m, t_{m+1})
    if not np.all(np.isfinite(w)) or np.any(w < -1e-12):
        raise KernelUnavailableError("Survival increments are not a valid holding-time law")
    w = np.clip(w, 0.0, None)

    h = model.H
    eye = np.eye(s)
    values = np.empty((n_steps + 1, s, s))
    values[0] = eye
    hp = np.empty_like(values)  # H pi_k
    hp[0] = h
    pair = np.empty_like(values)  # H (pi_k + pi_{k-1})

    lhs = eye - 0.5 * w[0][:, None] * h
    lu = linalg.lu_factor(lhs)
    for n in range(1, n_steps + 1):
        rhs = np.diag(survival[:, n]) + 0.5 * w[0][:, None] * hp[n - 1]
        if n >= 2:
            rhs += 0.5 * np.einsum("mi,mij->ij", w[1:n], pair[1:n][::-1])
        values[n] = linalg.lu_solve(lu, rhs)
        hp[n] = h @ values[n]
        pair[n] = hp[n] + hp[n - 1]
    return _finish(times, values, SolverMethod.RENEWAL, dt)


def _orders(model: SemiMarkovModel, method: SolveMethod) -> NDArray[np.float64]:
    reason = capability_error(model, method)
    if reason:
        raise UnsupportedSpecError(reason)
    return np.array([law.order for law in model.laws], dtype=float)


def grunwald_letnikov_weights(alpha: ArrayLike, n: int) -> NDArray[np.float64]:
    """Weights w_0..w_n per order, shape (n + 1, len(alpha)).

    w_0 = 1 and w_k = w_{k-1} (k - 1 - alpha) / k.
    """
    a = np.atleast_1d(np.asarray(alpha, dtype=float))
    w = np.empty((n + 1, a.size))
    w[0] = 1.0
    for k in range(1, n + 1):
        w[k] = w[k - 1] * (k - 1.0 - a) / k
    return w


def solve_volterra_caputo(
    model: SemiMarkovModel, t_max: float, dt: float | None = None
) -> SolutionGrid:
    """Solve the variable-order Caputo backward equation D^alpha(i) pi = G pi.

    Row i is discretised with Grunwald-Letnikov weights of order alpha(i)
    applied to pi - pi(0); rows with alpha(i) = 1 reduce to backward Euler.
    Each step solves (diag(dt^-alpha) - G) pi_n = dt^-alpha (b_n pi_0 -
    sum_{k>=1} w_k pi_{n-k}) with b_n = sum_{k<=n} w_k.

    Raises:
        UnsupportedSpecError: For stable mixture laws
    """
    alpha = _orders(model, SolveMethod.VOLTERRA_CAPUTO)
    times, dt = _grid(t_max, dt)
    n_steps, s = times.size - 1, model.n_states
    g = model.generator_array()
    eye = np.eye(s)

    # Only the first weight survives when every row is classical
    memory = n_steps if np.any(alpha < 1.0) else 1
    w = grunwald_letnikov_weights(alpha, memory)
    partial = np.cumsum(w, axis=0)
    scale = dt ** (-alpha)

    values = np.empty((n_steps + 1, s, s))
    values[0] = eye
    lu = linalg.lu_factor(np.diag(scale) - g)
    for n in range(1, n_steps + 1):
        depth = min(n, memory)
        history = np.einsum("ki,kij->ij", w[1 : depth + 1], values[n - depth : n][::-1])
        rhs = scale[:, None] * (partial[depth][:, None] * eye - history)
        values[n] = linalg.lu_solve(lu, rhs)
    return _finish(times, values, SolverMethod.VOLTERRA_CAPUTO, dt)


def _adams_moulton_weights(
    alpha: NDArray[np.float64], n_steps: int, dt: float
) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
    """Product-trapezoid weights for int_0^t (t-s)^(alpha-1)/Gamma(alpha) g(s) ds.

    Returns the start weights a_{0,n} (n = 0..N), the convolution weights
    for lag m = n - j >= 1, and the end weight a_{n,n}, all per row.
    """
    c = dt**alpha / special.gamma(alpha + 2.0)
    n = np.arange(n_steps + 1, dtype=float)[:, None]
    a1 = alpha[None, :] + 1.0
    start = np.zeros((n_steps + 1, alpha.size))
    nn = n[1:]
    start[1:] = c * ((nn - 1.0) ** a1 - (nn - 1.0 - alpha) * nn**alpha)
    m = n[1:]
    lag = c * ((m + 1.0) ** a1 - 2.0 * m**a1 + (m - 1.0) ** a1)
    lag = np.vstack([np.zeros((1, alpha.size)), lag])
    return start, lag, c


def solve_evolutionary(
    model: SemiMarkovModel, t_max: float, dt: float | None = None
) -> SolutionGrid:
    """Solve the evolutionary form pi(t) = I + int_0^t u_i(t - s) (G pi(s))_i ds.

    The potential density u_i(s) = s^(alpha(i)-1)/Gamma(alpha(i)) is
    integrated exactly against piecewise-linear G pi (fractional
    Adams-Moulton weights); the end-point term is implicit.

    Raises:
        UnsupportedSpecError: For stable mixture laws
    """
    alpha = _orders(model, SolveMethod.EVOLUTIONARY)
    times, dt = _grid(t_max, dt)
    n_steps, s = times.size - 1, model.n_states
    g = model.generator_array()
    eye = np.eye(s)
    start, lag, end = _adams_moulton_weights(alpha, n_steps, dt)

    values = np.empty((n_steps + 1, s, s))
    values[0] = eye
    gp = np.empty_like(values)  # G pi_j
    gp[0] = g
    lu = linalg.lu_factor(eye - end[:, None] * g)
    for n in range(1, n_steps + 1):
        rhs = eye + start[n][:, None] * gp[0]
        if n >= 2:
            rhs += np.einsum("mi,mij->ij", lag[1:n], gp[1:n][::-1])
        values[n] = linalg.lu_solve(lu, rhs)
        gp[n] = g @ values[n]
    return _finish(times, values, SolverMethod.EVOLUTIONARY, dt)


def solve_markov(model: SemiMarkovModel, times: ArrayLike) -> SolutionGrid:
    """exp(t G) by scaling and squaring with Pade approximants.

    Raises:
        WrongLawError: If any state is not Markov
    """
    if not all(isinstance(law.exponent, MarkovExponent) for law in model.laws):
        raise WrongLawError("solve_markov requires the Markov law in every state")
    ts = np.asarray(times, dtype=float)
    if ts.ndim != 1 or ts.size == 0 or np.any(ts < 0.0) or np.any(np.diff(ts) <= 0.0):
        raise InvalidParameterError("times must be nonnegative and strictly increasing")
    g = build_generator(model).G
    values = np.array([linalg.expm(t * g) for t in ts])
    dt = float(ts[1] - ts[0]) if ts.size > 1 else None
    grid = SolutionGrid(times=ts, values=values, method=SolverMethod.MATRIX_EXP, dt=dt)
    grid.check_stochastic(row_tol=1e-12)
    return grid


def solve(
    model: SemiMarkovModel,
    method: SolveMethod,
    t_max: float,
    dt: float | None = None,
) -> SolutionGrid:
    """Dispatch to the solver for ``method`` after the capability check."""
    reason = capability_error(model, method)
    if reason:
        raise UnsupportedSpecError(reason)
    logger.info(f"Solving {model.n_states}-state model with {method.value} up to t={t_max}")
    if method == SolveMethod.RENEWAL:
        return solve_renewal(model, t_max, dt)
    if method == SolveMethod.VOLTERRA_CAPUTO:
        return solve_volterra_caputo(model, t_max, dt)
    if method == SolveMethod.EVOLUTIONARY:
        return solve_evolutionary(model, t_max, dt)
    times, _ = _grid(t_max, dt)
    return solve_markov(model, times)


def eigen_oracle_two_state(
    alpha: float, theta: float, times: Sequence[float] | NDArray[np.float64]
) -> NDArray[np.float64]:
    """pi_00(t) = (1 + E_alpha(-2 theta t^alpha)) / 2 for the symmetric two-state model."""
    ts = np.asarray(times, dtype=float)
    relax = mittag_leffler(MLParams(alpha=alpha), -2.0 * theta * ts**alpha)
    return 0.5 * (1.0 + np.asarray(relax))


def max_abs_difference(a: SolutionGrid, b: SolutionGrid) -> float:
    """Largest entry-wise difference over the times both grids share."""
    common, ia, ib = np.intersect1d(
        np.round(a.times, 12), np.round(b.times, 12), return_indices=True
    )
    if common.size == 0:
        raise InvalidParameterError("Grids share no time points")
    return float(np.abs(a.values[ia] - b.values[ib]).max())

