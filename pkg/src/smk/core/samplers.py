"""Random-variate generation for waiting times and subordinators.

Uniform budget per variate (scalar draws):

* exponential: 1 uniform
* standard one-sided stable (Kanter): 2 uniforms
* waiting time: Markov 1, Stable 3, mixture of m components 1 + 2m
* inverse-stable marginal: 2 uniforms
"""

import logging
import math

import numpy as np
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, ConfigDict, Field

from ..errors import InvalidParameterError
from .bernstein import MarkovExponent, StableExponent, WaitingTimeLaw

logger = logging.getLogger(__name__)

_U64 = 2**64
_MANTISSA = 2**52


class StableVariate(BaseModel):
    """One draw of the standard one-sided stable law."""

    alpha: float = Field(gt=0.0, lt=1.0)
    value: float = Field(gt=0.0)

    model_config = ConfigDict(frozen=True)


class RngStream:
    """Splittable random stream keyed by (seed, stream_id).

    Backed by the counter-based Philox bit generator; ``child(k)`` derives
    an independent stream, so chunked Monte Carlo work gives the same
    numbers whatever the worker count.
    """

    def __init__(self, seed: int, stream_id: int = 0, spawn_key: tuple[int, ...] = ()):
        for name, value in (("seed", seed), ("stream_id", stream_id)):
            if not 0 <= value < _U64:
                raise InvalidParameterError(f"Invalid {name}={value}: expected a 64-bit unsigned integer")
        self.seed = seed
        self.stream_id = stream_id
        self.spawn_key = spawn_key
        sequence = np.random.SeedSequence(seed, spawn_key=(stream_id, *spawn_key))
        self._generator = np.random.Generator(np.random.Philox(sequence))
        self.uniforms_drawn = 0

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id}, spawn_key={self.spawn_key})"

    def child(self, k: int) -> "RngStream":
        """Independent sub-stream number ``k``."""
        return RngStream(self.seed, self.stream_id, (*self.spawn_key, k))

    def uniform(self, size: int | None = None) -> float | NDArray[np.float64]:
        """Uniforms strictly inside (0, 1), on the grid (k + 1/2) 2^-52."""
        k = self._generator.integers(0, _MANTISSA, size=size, dtype=np.int64)
        self.uniforms_drawn += 1 if size is None else int(size)
        if size is None:
            return (float(k) + 0.5) / _MANTISSA
        return (k.astype(float) + 0.5) / _MANTISSA


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise InvalidParameterError(f"Invalid stable index alpha={alpha}: expected 0 < alpha < 1")


def _check_positive(name: str, value: float) -> None:
    if not value > 0.0:
        raise InvalidParameterError(f"Invalid {name}={value}: expected {name} > 0")


def _kanter(alpha: ArrayLike, u: ArrayLike, e: ArrayLike) -> NDArray[np.float64]:
    """Kanter's representation; equals 1 identically when alpha == 1."""
    a = np.asarray(alpha, dtype=float)
    angle = np.pi * np.asarray(u, dtype=float)
    head = np.sin(a * angle) / np.sin(angle) ** (1.0 / a)
    tail = (np.sin((1.0 - a) * angle) / np.asarray(e, dtype=float)) ** ((1.0 - a) / a)
    return np.asarray(head * tail)


def _standard_stable(rng: RngStream, alpha: float, size: int | None) -> float | NDArray[np.float64]:
    u = rng.uniform(size)
    e = -np.log(rng.uniform(size))
    s = _kanter(alpha, u, e)
    return float(s) if size is None else s


def sample_exponential(
    rng: RngStream, theta: float, size: int | None = None
) -> float | NDArray[np.float64]:
    """Exponential variate(s) with rate ``theta``."""
    _check_positive("theta", theta)
    u = rng.uniform(size)
    return -np.log(u) / theta if size is not None else -math.log(u) / theta  # type: ignore[arg-type]


def stable_variate(rng: RngStream, alpha: float) -> StableVariate:
    """Standard one-sided stable variate S with E exp(-lam S) = exp(-lam^alpha)."""
    _check_alpha(alpha)
    return StableVariate(alpha=alpha, value=float(_standard_stable(rng, alpha, None)))


def sample_stable_subordinator(
    rng: RngStream, alpha: float, t: float, size: int | None = None
) -> float | NDArray[np.float64]:
    """Value sigma(t) = t^(1/alpha) S of the alpha-stable subordinator.

    Args:
        rng: Random stream
        alpha: Stable index in (0, 1)
        t: Time, strictly positive
        size: Number of draws, or None for a scalar

    Returns:
        Positive variate(s) with E exp(-lam sigma(t)) = exp(-t lam^alpha)
    """
    _check_alpha(alpha)
    _check_positive("t", t)
    return t ** (1.0 / alpha) * _standard_stable(rng, alpha, size)


def sample_waiting_time(
    rng: RngStream, law: WaitingTimeLaw, size: int | None = None
) -> float | NDArray[np.float64]:
    """Holding time J = sigma(E) with E ~ Exp(theta).

    The subordinator runs for an independent exponential time. Mixtures
    add independent stable components run for w_m E each.
    """
    e = sample_exponential(rng, law.theta, size)
    spec = law.exponent
    if isinstance(spec, MarkovExponent):
        return e
    if isinstance(spec, StableExponent):
        return np.power(e, 1.0 / spec.alpha) * _standard_stable(rng, spec.alpha, size)  # type: ignore[no-any-return]
    total: float | NDArray[np.float64] = 0.0
    for component in spec.components:
        scaled = np.multiply(component.weight, e)
        total = total + np.power(scaled, 1.0 / component.alpha) * _standard_stable(
            rng, component.alpha, size
        )
    return float(total) if size is None else total


def sample_inverse_stable(
    rng: RngStream, alpha: float, t: float, size: int | None = None
) -> float | NDArray[np.float64]:
    """Marginal L(t) = (t / S)^alpha of the inverse stable subordinator."""
    _check_alpha(alpha)
    _check_positive("t", t)
    return (t / _standard_stable(rng, alpha, size)) ** alpha


def sample_ml_waiting(
    rng: RngStream, alpha: ArrayLike, theta: ArrayLike
) -> NDArray[np.float64]:
    """Mittag-Leffler waiting times with element-wise order and rate.

    ``alpha == 1`` entries are exponential. Always 3 uniforms per element.
    """
    a = np.asarray(alpha, dtype=float)
    th = np.asarray(theta, dtype=float)
    if a.shape != th.shape:
        raise InvalidParameterError("alpha and theta must have the same shape")
    if np.any((a <= 0.0) | (a > 1.0)) or np.any(th <= 0.0):
        raise InvalidParameterError("Orders must lie in (0, 1] and rates be positive")
    n = a.size
    e = -np.log(rng.uniform(n)) / th.ravel()
    u = rng.uniform(n)
    e2 = -np.log(rng.uniform(n))
    s = _kanter(a.ravel(), u, e2)
    return np.asarray((e ** (1.0 / a.ravel()) * s).reshape(a.shape))
