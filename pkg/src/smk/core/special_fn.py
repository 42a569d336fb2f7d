"""Mittag-Leffler functions and the waiting-time laws built on them.

Evaluation on the negative real axis, for ``0 < alpha < 1``, switches
between three representations of ``E_{alpha,beta}(z)``:

* ``|z| <= 1``: Taylor series with compensated summation;
* ``1 < |z| <= 50``: the real-axis integral representation, valid
  because ``arg z = pi > alpha * pi``;
* ``|z| > 50``: the algebraic asymptotic series (10 terms).

``alpha == 1`` is handled through the exponential and an Euler-type
integral. Positive arguments are summed from the series only and are
meant for tests.
"""

import logging
import math
from typing import overload

import numpy as np
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, ConfigDict, Field
from scipy import integrate, special

from ..errors import DomainError, InvalidParameterError

logger = logging.getLogger(__name__)

SERIES_RADIUS = 1.0
ASYMPTOTIC_RADIUS = 50.0
ASYMPTOTIC_TERMS = 10
MAX_SERIES_TERMS = 600

# exp(-chi**(1/alpha)) is below 1e-17 past this power of chi
_KERNEL_CUTOFF = 40.0


class MLParams(BaseModel):
    """Parameters of the two-parameter Mittag-Leffler function."""

    alpha: float = Field(gt=0.0, le=1.0)
    beta: float = Field(default=1.0, gt=0.0)

    model_config = ConfigDict(frozen=True)


def _check_order(alpha: float, beta: float = 1.0) -> None:
    if not 0.0 < alpha <= 1.0:
        raise InvalidParameterError(f"Invalid order alpha={alpha}: expected 0 < alpha <= 1")
    if not beta > 0.0:
        raise InvalidParameterError(f"Invalid beta={beta}: expected beta > 0")


def _series(alpha: float, beta: float, z: float) -> float:
    """Taylor series sum_k z^k / Gamma(alpha k + beta)."""
    terms: list[float] = []
    for k in range(MAX_SERIES_TERMS):
        term = z**k * float(special.rgamma(alpha * k + beta))
        terms.append(term)
        if k > 2 and abs(term) < 1e-18 * max(1.0, abs(terms[0])):
            break
    return math.fsum(terms)


def _asymptotic(alpha: float, beta: float, z: float) -> float:
    return -math.fsum(
        z ** (-k) * float(special.rgamma(beta - alpha * k))
        for k in range(1, ASYMPTOTIC_TERMS + 1)
    )


def _integral(alpha: float, beta: float, z: float) -> float:
    """Real-axis integral representation, requires beta < 1 + alpha and z < 0."""
    power = (1.0 - beta) / alpha
    s1 = math.sin(math.pi * (1.0 - beta))
    s2 = math.sin(math.pi * (1.0 - beta + alpha))
    c = math.cos(math.pi * alpha)
    scale = 1.0 / (alpha * math.pi)

    def kernel(chi: float) -> float:
        num = chi * s1 - z * s2
        den = chi * chi - 2.0 * chi * z * c + z * z
        return scale * chi**power * math.exp(-(chi ** (1.0 / alpha))) * num / den

    upper = _KERNEL_CUTOFF**alpha
    points = [1.0]
    peak = -z * abs(c)
    if c < 0 and 0.0 < peak < upper:
        points.append(peak)
    points = sorted(p for p in points if 0.0 < p < upper)
    value, _ = integrate.quad(
        kernel, 0.0, upper, points=points, epsabs=1e-14, epsrel=1e-13, limit=400
    )
    return float(value)


def _negative_axis(alpha: float, beta: float, z: float) -> float:
    if abs(z) <= SERIES_RADIUS:
        return _series(alpha, beta, z)
    if abs(z) > ASYMPTOTIC_RADIUS:
        return _asymptotic(alpha, beta, z)
    if beta >= 1.0 + alpha:
        # E_{a,b}(z) = (E_{a,b-a}(z) - 1/Gamma(b-a)) / z
        lower = _negative_axis(alpha, beta - alpha, z)
        return (lower - float(special.rgamma(beta - alpha))) / z
    return _integral(alpha, beta, z)


def _exponential_family(beta: float, z: float) -> float:
    """E_{1,beta}(z) for z <= 0."""
    if beta == 1.0:
        return math.exp(z)
    if beta == 2.0:
        return math.expm1(z) / z if z != 0.0 else 1.0
    if beta < 1.0:
        # E_{1,b}(z) = 1/Gamma(b) + z E_{1,b+1}(z)
        return float(special.rgamma(beta)) + z * _exponential_family(beta + 1.0, z)
    if abs(z) <= SERIES_RADIUS:
        return _series(1.0, beta, z)
    value, _ = integrate.quad(
        lambda s: math.exp(z * s),
        0.0,
        1.0,
        weight="alg",
        wvar=(0.0, beta - 2.0),
        epsabs=1e-14,
        epsrel=1e-13,
    )
    return float(value) * float(special.rgamma(beta - 1.0))


def _ml_scalar(alpha: float, beta: float, z: float) -> float:
    if z == 0.0:
        return float(special.rgamma(beta))
    if z > 0.0:
        return _series(alpha, beta, z)
    if alpha == 1.0:
        return _exponential_family(beta, z)
    return _negative_axis(alpha, beta, z)


@overload
def mittag_leffler(params: MLParams, z: float) -> float: ...
@overload
def mittag_leffler(params: MLParams, z: NDArray[np.float64]) -> NDArray[np.float64]: ...


def mittag_leffler(params: MLParams, z: ArrayLike) -> float | NDArray[np.float64]:
    """Evaluate the Mittag-Leffler function E_{alpha,beta}(z).

    Args:
        params: Order ``alpha`` in (0, 1] and ``beta > 0``
        z: Argument(s); the public contract covers ``z <= 0``

    Returns:
        E_{alpha,beta}(z), a float for scalar input and an array otherwise
    """
    _check_order(params.alpha, params.beta)
    if np.ndim(z) == 0:
        return _ml_scalar(params.alpha, params.beta, float(z))  # type: ignore[arg-type]
    zs = np.asarray(z, dtype=float)
    out = np.empty_like(zs)
    for idx, value in np.ndenumerate(zs):
        out[idx] = _ml_scalar(params.alpha, params.beta, float(value))
    return out


def ml_survival(alpha: float, theta: float, t: ArrayLike) -> float | NDArray[np.float64]:
    """Survival function E_alpha(-theta t^alpha) of a Mittag-Leffler waiting time.

    Args:
        alpha: Order in (0, 1]; ``alpha == 1`` is the exponential law
        theta: Rate, strictly positive
        t: Time(s), nonnegative

    Returns:
        Survival probability at each ``t``
    """
    _check_order(alpha)
    if not theta > 0.0:
        raise InvalidParameterError(f"Invalid rate theta={theta}: expected theta > 0")
    ts = np.asarray(t, dtype=float)
    if np.any(ts < 0.0):
        raise DomainError(f"Survival evaluated at negative time: min t={ts.min()}")
    return mittag_leffler(MLParams(alpha=alpha), -theta * ts**alpha)


def ml_waiting_density(
    alpha: float, theta: float, t: ArrayLike
) -> float | NDArray[np.float64]:
    """Density theta t^(alpha-1) E_{alpha,alpha}(-theta t^alpha) of the waiting time.

    Raises:
        DomainError: If any ``t <= 0``, where the density is singular for alpha < 1
    """
    _check_order(alpha)
    if not theta > 0.0:
        raise InvalidParameterError(f"Invalid rate theta={theta}: expected theta > 0")
    ts = np.asarray(t, dtype=float)
    if np.any(ts <= 0.0):
        raise DomainError("Waiting density is singular at t=0; evaluate at t > 0")
    ml = mittag_leffler(MLParams(alpha=alpha, beta=alpha), -theta * ts**alpha)
    return theta * ts ** (alpha - 1.0) * ml


def lamperti_density(alpha: float, r: ArrayLike) -> float | NDArray[np.float64]:
    """Spectral density of the Mittag-Leffler survival on (0, inf)."""
    _check_order(alpha)
    rs = np.asarray(r, dtype=float)
    ra = rs**alpha
    num = math.sin(math.pi * alpha) / math.pi * rs ** (alpha - 1.0)
    return num / (ra * ra + 2.0 * ra * math.cos(math.pi * alpha) + 1.0)


def ml_survival_spectral(alpha: float, theta: float, t: float) -> float:
    """E_alpha(-theta t^alpha) as a Laplace transform of the spectral density.

    Independent of the Mittag-Leffler evaluator; used for cross-checks.
    """
    _check_order(alpha)
    if alpha == 1.0:
        return math.exp(-theta * t)
    if t == 0.0:
        return 1.0
    s = theta ** (1.0 / alpha) * t

    def integrand(r: float) -> float:
        return math.exp(-r * s) * float(lamperti_density(alpha, r))

    head, _ = integrate.quad(integrand, 0.0, 1.0, epsabs=1e-13, limit=200)
    tail, _ = integrate.quad(integrand, 1.0, np.inf, epsabs=1e-13, limit=200)
    return float(head + tail)
