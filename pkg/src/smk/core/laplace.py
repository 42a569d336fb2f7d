"""Numerical Laplace inversion and the Laplace-domain resolvent oracle.

Two inversion rules are available: Gaver-Stehfest, which samples the
transform on the positive real axis, and the fixed Talbot contour, which
copes with algebraic singularities at the origin. Each inversion is
repeated at a lower order and the two estimates must agree; otherwise a
:class:`NonConvergenceError` lists the offending entries.
"""

import logging
import math
from collections.abc import Callable, Sequence
from enum import Enum
from functools import lru_cache
from typing import TYPE_CHECKING

import numpy as np
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy import integrate, linalg, special

from ..config import settings
from ..errors import InvalidParameterError, NonConvergenceError, SingularSystemError
from .models import SolutionGrid, SolverMethod

if TYPE_CHECKING:
    from .semi_markov import SemiMarkovModel

logger = logging.getLogger(__name__)

RESIDUAL_TOLERANCE = 1e-12
AGREEMENT_TOLERANCE = 1e-4


class InversionMethod(str, Enum):
    """Numerical inversion rule."""

    GAVER_STEHFEST = "gaver_stehfest"
    TALBOT = "talbot"


def _default_method() -> InversionMethod | None:
    name = settings.solver.inversion_method
    return None if name == "auto" else InversionMethod(name)


class InversionConfig(BaseModel):
    """Inversion rule and its order.

    With ``method=None`` the rule is picked per problem: Gaver-Stehfest for
    smooth originals, Talbot when some state has order below 1.
    """

    method: InversionMethod | None = Field(default_factory=_default_method)
    order: int = Field(default=settings.solver.stehfest_order, ge=4, le=18)
    nodes: int = Field(default=settings.solver.talbot_nodes, ge=16, le=128)
    tolerance: float = Field(default=AGREEMENT_TOLERANCE, gt=0.0)

    model_config = ConfigDict(frozen=True)

    @field_validator("order")
    @classmethod
    def _even_order(cls, value: int) -> int:
        if value % 2:
            raise ValueError(f"Gaver-Stehfest order must be even, got {value}")
        return value

    @property
    def label(self) -> str:
        return self.method.value if self.method is not None else "auto"

    def resolved(self, singular: bool = False) -> "InversionConfig":
        """Concrete rule; ``singular`` marks originals with an algebraic singularity at 0."""
        if self.method is not None:
            return self
        method = InversionMethod.TALBOT if singular else InversionMethod.GAVER_STEHFEST
        return self.model_copy(update={"method": method})

    def reduced(self) -> "InversionConfig":
        """Lower-order companion used for the agreement check."""
        return self.model_copy(update={"order": self.order - 2, "nodes": self.nodes - 8})


@lru_cache(maxsize=16)
def _stehfest_coefficients(order: int) -> NDArray[np.float64]:
    """Salzer summation weights V_k, k = 1..order."""
    half = order // 2
    v = np.zeros(order)
    for k in range(1, order + 1):
        total = 0.0
        for j in range((k + 1) // 2, min(k, half) + 1):
            total += (
                j**half
                * math.factorial(2 * j)
                / (
                    math.factorial(half - j)
                    * math.factorial(j)
                    * math.factorial(j - 1)
                    * math.factorial(k - j)
                    * math.factorial(2 * j - k)
                )
            )
        v[k - 1] = (-1) ** (k + half) * total
    return v


def _nodes(cfg: InversionConfig, t: float) -> tuple[NDArray[np.complex128], NDArray[np.complex128]]:
    """Abscissae p_k and weights w_k with f(t) ~ Re sum_k w_k F(p_k)."""
    if cfg.method == InversionMethod.GAVER_STEHFEST:
        ln2_t = math.log(2.0) / t
        p = np.arange(1, cfg.order + 1) * ln2_t
        return p.astype(complex), (_stehfest_coefficients(cfg.order) * ln2_t).astype(complex)

    m = cfg.nodes
    r = 2.0 * m / 5.0
    theta = np.arange(m) * math.pi / m
    cot = np.zeros(m)
    cot[1:] = 1.0 / np.tan(theta[1:])
    p = r / t * theta * (cot + 1j)
    p[0] = r / t
    gamma = np.exp(t * p) * (1.0 + 1j * theta * (1.0 + cot**2) - 1j * cot)
    gamma[0] = math.exp(r) / 2.0
    return p, gamma * (r / (m * t))


def _apply(
    transform: Callable[[complex], complex | NDArray[np.complex128]],
    cfg: InversionConfig,
    t: float,
) -> NDArray[np.float64]:
    p, w = _nodes(cfg, t)
    total: complex | NDArray[np.complex128] = 0.0
    for pk, wk in zip(p, w, strict=True):
        total = total + wk * np.asarray(transform(complex(pk)))
    return np.real(np.asarray(total))


def _check_time(t: float) -> None:
    if not t > 0.0:
        raise InvalidParameterError(f"Inversion requires t > 0, got t={t}")


def invert(
    transform: Callable[[complex], complex],
    t: float,
    cfg: InversionConfig | None = None,
) -> float:
    """Invert a scalar Laplace transform at a single time.

    Args:
        transform: F(lambda), callable on complex lambda for Talbot
        t: Time, strictly positive
        cfg: Inversion rule; Gaver-Stehfest(14) unless a method is set

    Returns:
        Approximation of f(t)

    Raises:
        NonConvergenceError: If the lower-order estimate disagrees beyond tolerance
    """
    cfg = (cfg or InversionConfig()).resolved()
    _check_time(t)
    value = float(_apply(transform, cfg, t))
    check = float(_apply(transform, cfg.reduced(), t))
    if not abs(value - check) <= cfg.tolerance:
        raise NonConvergenceError(
            f"{cfg.label} inversion at t={t:g} did not stabilise "
            f"({value:.10g} vs {check:.10g})",
            entries=[{"i": None, "j": None, "t": t, "estimate": value, "reference": check}],
        )
    return value


def invert_matrix(
    transform: Callable[[complex], NDArray[np.complex128]],
    t: float,
    cfg: InversionConfig | None = None,
) -> NDArray[np.float64]:
    """Entry-wise inversion of a matrix-valued transform sharing the nodes.

    Raises:
        NonConvergenceError: Listing every (i, j, t) that failed to stabilise
    """
    cfg = (cfg or InversionConfig()).resolved()
    _check_time(t)
    value = _apply(transform, cfg, t)
    check = _apply(transform, cfg.reduced(), t)
    bad = np.argwhere(~(np.abs(value - check) <= cfg.tolerance))
    if bad.size:
        entries = [
            {
                "i": int(i),
                "j": int(j),
                "t": t,
                "estimate": float(value[i, j]),
                "reference": float(check[i, j]),
            }
            for i, j in bad
        ]
        raise NonConvergenceError(
            f"{cfg.label} inversion at t={t:g} did not stabilise "
            f"for {len(entries)} entries",
            entries=entries,
        )
    return value


def _resolvent(model: "SemiMarkovModel", lam: complex) -> NDArray[np.complex128]:
    f = np.array([law.exponent.exponent(lam) for law in model.laws], dtype=complex)
    theta = model.theta
    a = np.diag(f + theta) - theta[:, None] * model.H
    b = np.diag(f / lam)
    lu, piv = linalg.lu_factor(a)
    x = linalg.lu_solve((lu, piv), b)
    residual = np.abs(a @ x - b).max()
    scale = np.abs(a).max() * np.abs(x).max() + np.abs(b).max()
    if not residual <= RESIDUAL_TOLERANCE * scale:
        raise SingularSystemError(
            f"Resolvent residual {residual:.3g} exceeds tolerance at lambda={lam}"
        )
    return x


def resolvent_solve(model: "SemiMarkovModel", lam: float) -> NDArray[np.float64]:
    """Solve the Laplace-domain backward system at a real lambda.

    The S x S matrix X solves
    ``[(f(lam, i) + theta_i) delta_ik - theta_i h_ik] X_kj = f(lam, i)/lam delta_ij``
    by dense LU with partial pivoting.

    Args:
        model: Finite semi-Markov model
        lam: Laplace variable, strictly positive

    Returns:
        Transform of pi(t) at ``lam``; every row sums to 1/lam
    """
    if not lam > 0.0:
        raise InvalidParameterError(f"Invalid lambda={lam}: expected lambda > 0")
    return np.real(_resolvent(model, complex(lam)))


def oracle_solution(
    model: "SemiMarkovModel",
    times: ArrayLike,
    cfg: InversionConfig | None = None,
) -> SolutionGrid:
    """Reference pi(t) by inverting the resolvent entry-wise.

    Args:
        model: Finite semi-Markov model
        times: Strictly increasing positive times
        cfg: Inversion rule; Talbot is chosen automatically for fractional models

    Returns:
        SolutionGrid with method ``oracle``

    Raises:
        NonConvergenceError: Aggregating the failing entries over all times
    """
    cfg = (cfg or InversionConfig()).resolved(singular=not model.is_markov)
    ts = np.asarray(times, dtype=float)
    if ts.ndim != 1 or ts.size == 0 or np.any(ts <= 0.0) or np.any(np.diff(ts) <= 0.0):
        raise InvalidParameterError("Oracle times must be strictly increasing and positive")

    logger.info(
        f"Inverting resolvent for {model.n_states} states at {ts.size} times "
        f"({cfg.label})"
    )
    values = np.empty((ts.size, model.n_states, model.n_states))
    failures: list[dict[str, object]] = []
    for k, t in enumerate(ts):
        try:
            values[k] = invert_matrix(lambda lam: _resolvent(model, lam), float(t), cfg)
        except NonConvergenceError as exc:
            failures.extend(exc.entries)
            values[k] = np.nan
    if failures:
        raise NonConvergenceError(
            f"Oracle inversion failed for {len(failures)} entries", entries=failures
        )
    return SolutionGrid(times=ts, values=values, method=SolverMethod.ORACLE)


def numerical_laplace(
    fn: Callable[[float], float],
    lam: float,
    head_exponents: float | Sequence[float] = 0.0,
    eps: float = 1e-6,
) -> float:
    """Forward Laplace transform by quadrature.

    On ``[0, eps]`` the function is matched to ``sum_j C_j t**p_j`` with the
    given exponents and integrated in closed form, which absorbs weak
    singularities at the origin. ``[eps, T]`` is integrated adaptively with
    ``T`` large enough that the remaining tail is below 1e-14.

    Args:
        fn: Function of time, nonincreasing beyond ``eps``
        lam: Laplace variable, strictly positive
        head_exponents: Power-law exponents of ``fn`` near 0, each > -1
        eps: Width of the closed-form head

    Returns:
        Integral of exp(-lam t) fn(t) over (0, inf)
    """
    if not lam > 0.0:
        raise InvalidParameterError(f"Invalid lambda={lam}: expected lambda > 0")
    powers = np.atleast_1d(np.asarray(head_exponents, dtype=float))
    if np.any(powers <= -1.0):
        raise InvalidParameterError("Head exponents must exceed -1 for integrability")

    samples = eps / 2.0 ** np.arange(powers.size)
    design = samples[:, None] ** powers[None, :]
    coeffs = np.linalg.solve(design, np.array([fn(float(x)) for x in samples]))
    a = powers + 1.0
    head = float(
        np.sum(coeffs * lam ** (-a) * special.gamma(a) * special.gammainc(a, lam * eps))
    )

    upper = max(2.0, 40.0 / lam)
    while abs(fn(upper)) * math.exp(-lam * upper) / lam > 1e-14:
        upper *= 2.0

    def integrand(t: float) -> float:
        return math.exp(-lam * t) * fn(t)

    middle = 0.0
    for lo, hi in ((eps, 1.0), (1.0, upper)):
        part, _ = integrate.quad(integrand, lo, hi, epsabs=1e-13, epsrel=1e-11, limit=200)
        middle += part
    return head + middle
