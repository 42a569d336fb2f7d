"""Bernstein exponents of the waiting-time subordinators.

The catalog is closed: a stable exponent ``lambda**alpha``, a finite
positive mixture of stable exponents, and the degenerate exponent
``lambda`` that reduces everything to a continuous-time Markov chain.
Exponents accept complex arguments so contour inversion can evaluate
them off the real axis.
"""

import logging
import math
from collections.abc import Callable
from enum import Enum
from typing import Annotated, Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, ConfigDict, Field
from scipy import special

from ..errors import InvalidParameterError, OutOfRangeError, UnsupportedSpecError
from .special_fn import ml_survival

logger = logging.getLogger(__name__)


class ExponentKind(str, Enum):
    """Catalog of supported Bernstein exponents."""

    STABLE = "stable"
    STABLE_MIXTURE = "stable_mixture"
    MARKOV = "markov"


class StableExponent(BaseModel):
    """f(lambda) = lambda^alpha."""

    kind: Literal["stable"] = "stable"
    alpha: float = Field(gt=0.0, lt=1.0)

    model_config = ConfigDict(frozen=True)

    @property
    def order(self) -> float:
        return self.alpha

    def exponent(self, lam: complex | NDArray[np.complex128]) -> complex | NDArray[np.complex128]:
        return lam**self.alpha

    def tail(self, t: ArrayLike) -> NDArray[np.float64]:
        return np.asarray(t, dtype=float) ** (-self.alpha) * special.rgamma(1.0 - self.alpha)

    def potential(self, t: ArrayLike) -> NDArray[np.float64]:
        return np.asarray(t, dtype=float) ** (self.alpha - 1.0) * special.rgamma(self.alpha)


class MixtureComponent(BaseModel):
    """One weighted stable component of a mixture."""

    weight: float = Field(gt=0.0)
    alpha: float = Field(gt=0.0, lt=1.0)

    model_config = ConfigDict(frozen=True)


class StableMixtureExponent(BaseModel):
    """f(lambda) = sum_m w_m lambda^alpha_m."""

    kind: Literal["stable_mixture"] = "stable_mixture"
    components: list[MixtureComponent] = Field(min_length=1)

    model_config = ConfigDict(frozen=True)

    @property
    def order(self) -> float | None:
        return None

    def exponent(self, lam: complex | NDArray[np.complex128]) -> complex | NDArray[np.complex128]:
        return sum(c.weight * lam**c.alpha for c in self.components)  # type: ignore[return-value]

    def tail(self, t: ArrayLike) -> NDArray[np.float64]:
        ts = np.asarray(t, dtype=float)
        return sum(  # type: ignore[return-value]
            c.weight * ts ** (-c.alpha) * special.rgamma(1.0 - c.alpha)
            for c in self.components
        )

    def potential(self, t: ArrayLike) -> NDArray[np.float64]:
        raise UnsupportedSpecError(
            "Potential density has no closed form for a stable mixture"
        )


class MarkovExponent(BaseModel):
    """f(lambda) = lambda: pure drift, no time change."""

    kind: Literal["markov"] = "markov"

    model_config = ConfigDict(frozen=True)

    @property
    def order(self) -> float:
        return 1.0

    def exponent(self, lam: complex | NDArray[np.complex128]) -> complex | NDArray[np.complex128]:
        return lam

    def tail(self, t: ArrayLike) -> NDArray[np.float64]:
        raise UnsupportedSpecError("Levy tail is undefined for the Markov exponent")

    def potential(self, t: ArrayLike) -> NDArray[np.float64]:
        raise UnsupportedSpecError(
            "Potential density is a point mass for the Markov exponent"
        )


BernsteinSpec = Annotated[
    StableExponent | StableMixtureExponent | MarkovExponent,
    Field(discriminator="kind"),
]


def exponent_for_order(alpha: float) -> StableExponent | MarkovExponent:
    """Stable exponent of order ``alpha``, or the Markov exponent when alpha == 1."""
    if alpha == 1.0:
        return MarkovExponent()
    if not 0.0 < alpha < 1.0:
        raise InvalidParameterError(f"Invalid order alpha={alpha}: expected 0 < alpha <= 1")
    return StableExponent(alpha=alpha)


class WaitingTimeLaw(BaseModel):
    """Holding-time law: survival E[exp(-theta L(t))] for the inverse subordinator L."""

    exponent: BernsteinSpec
    theta: float = Field(gt=0.0)

    model_config = ConfigDict(frozen=True)

    @property
    def is_markov(self) -> bool:
        return self.exponent.kind == ExponentKind.MARKOV

    @property
    def order(self) -> float | None:
        return self.exponent.order

    def survival(self, t: ArrayLike) -> NDArray[np.float64]:
        """Vectorised survival; see :func:`waiting_survival`."""
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        return np.array([waiting_survival(self, float(x)) for x in ts])

    def survival_transform(self, lam: complex) -> complex:
        """Laplace transform of the survival: f / (lambda (theta + f))."""
        f = self.exponent.exponent(lam)
        return f / (lam * (self.theta + f))  # type: ignore[return-value, operator]


def _positive(name: str, value: float) -> None:
    if not value > 0.0:
        raise InvalidParameterError(f"Invalid {name}={value}: expected {name} > 0")


def eval_exponent(spec: BernsteinSpec, lam: float) -> float:
    """Evaluate the Bernstein function f(lambda).

    Args:
        spec: Catalog exponent
        lam: Laplace variable, strictly positive

    Returns:
        f(lambda)
    """
    _positive("lambda", lam)
    return float(np.real(spec.exponent(lam)))


def levy_tail(spec: BernsteinSpec, t: float) -> float:
    """Levy tail nu(t, inf) of the subordinator."""
    _positive("t", t)
    return float(spec.tail(t))


def potential_density(spec: BernsteinSpec, t: float) -> float:
    """Potential density u(t), the kernel whose transform is 1/f."""
    _positive("t", t)
    return float(spec.potential(t))


def survival_to_exponent(
    survival_laplace: Callable[[float], float], theta: float, lam: float
) -> float:
    """Recover f(lambda) from the Laplace transform of a waiting survival.

    Args:
        survival_laplace: lambda -> integral of exp(-lambda t) F(t) dt
        theta: Rate of the state
        lam: Point of evaluation, strictly positive

    Returns:
        theta * lambda F(lambda) / (1 - lambda F(lambda))

    Raises:
        OutOfRangeError: If lambda F(lambda) is not in (0, 1)
    """
    _positive("lambda", lam)
    _positive("theta", theta)
    ratio = lam * survival_laplace(lam)
    if not 0.0 < ratio < 1.0:
        raise OutOfRangeError(
            f"lambda*F(lambda)={ratio} at lambda={lam} is outside (0, 1); "
            "not the transform of a heavy-tailed survival"
        )
    return theta * ratio / (1.0 - ratio)


def waiting_survival(law: WaitingTimeLaw, t: float) -> float:
    """Survival P(J > t) of the holding time.

    Args:
        law: Waiting-time law
        t: Time, nonnegative

    Returns:
        Survival probability; Mixture laws go through Talbot inversion
    """
    if t < 0.0:
        raise InvalidParameterError(f"Invalid time t={t}: expected t >= 0")
    if t == 0.0:
        return 1.0
    spec = law.exponent
    if isinstance(spec, MarkovExponent):
        return math.exp(-law.theta * t)
    if isinstance(spec, StableExponent):
        return float(ml_survival(spec.alpha, law.theta, t))

    from .laplace import InversionConfig, InversionMethod, invert

    cfg = InversionConfig(method=InversionMethod.TALBOT)
    return invert(law.survival_transform, t, cfg)


def waiting_survival_transform(law: WaitingTimeLaw, lam: float) -> float:
    """Laplace transform of the holding-time survival, f(lambda) / (lambda (theta + f(lambda)))."""
    _positive("lambda", lam)
    return float(np.real(law.survival_transform(lam)))


def is_completely_monotone(
    values: ArrayLike, grid: ArrayLike, max_order: int = 4, tol: float = 1e-9
) -> bool:
    """Sign test for complete monotonicity on a (possibly nonuniform) grid.

    Divided differences of order k of a completely monotone function have
    sign (-1)^k.
    """
    ys = np.asarray(values, dtype=float)
    xs = np.asarray(grid, dtype=float)
    if ys.shape != xs.shape or ys.ndim != 1:
        raise InvalidParameterError("values and grid must be 1-D arrays of equal length")
    if np.any(np.diff(xs) <= 0.0):
        raise InvalidParameterError("grid must be strictly increasing")
    if np.any(ys < -tol):
        return False
    diffs = ys.copy()
    for k in range(1, max_order + 1):
        diffs = (diffs[1:] - diffs[:-1]) / (xs[k:] - xs[:-k])
        if np.any((-1) ** k * diffs < -tol):
            logger.debug(f"Complete monotonicity fails at order {k}")
            return False
    return True
