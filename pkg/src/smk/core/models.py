"""Shared value types for solver output."""

from enum import Enum
from typing import Any

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from ..errors import StochasticityError


class SolverMethod(str, Enum):
    """How a SolutionGrid was produced."""

    RENEWAL = "renewal"
    VOLTERRA_CAPUTO = "volterra_caputo"
    EVOLUTIONARY = "evolutionary"
    MATRIX_EXP = "matrix_exp"
    ORACLE = "oracle"


def _frozen_array(value: Any) -> NDArray[np.float64]:
    arr = np.array(value, dtype=float)
    arr.setflags(write=False)
    return arr


class SolutionGrid(BaseModel):
    """Transition matrices pi_ij(t_k) = P^i(X(t_k) = j) on a time grid.

    Solver grids are uniform and start at t=0 with pi = I. Oracle grids
    may be arbitrary strictly increasing positive times.
    """

    times: NDArray[np.float64]
    values: NDArray[np.float64]
    method: SolverMethod
    dt: float | None = None

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @field_validator("times", "values", mode="before")
    @classmethod
    def _as_array(cls, value: Any) -> NDArray[np.float64]:
        return _frozen_array(value)

    @model_validator(mode="after")
    def _check_shape(self) -> "SolutionGrid":
        if self.times.ndim != 1 or self.times.size == 0:
            raise ValueError("times must be a non-empty 1-D array")
        if np.any(np.diff(self.times) <= 0.0):
            raise ValueError("times must be strictly increasing")
        n = self.times.size
        if self.values.ndim != 3 or self.values.shape[0] != n:
            raise ValueError(f"values must have shape ({n}, S, S), got {self.values.shape}")
        if self.values.shape[1] != self.values.shape[2]:
            raise ValueError("values must hold square matrices")
        if self.times[0] == 0.0:
            eye = np.eye(self.values.shape[1])
            if not np.allclose(self.values[0], eye, atol=1e-12, rtol=0.0):
                raise ValueError("pi(0) must be the identity")
        return self

    @property
    def n_states(self) -> int:
        return int(self.values.shape[1])

    def entry(self, i: int, j: int) -> NDArray[np.float64]:
        """Time series pi_ij(t_k)."""
        return self.values[:, i, j]

    def row_sums(self) -> NDArray[np.float64]:
        """Row sums, shape (N, S)."""
        return self.values.sum(axis=2)

    def at(self, t: float) -> NDArray[np.float64]:
        """Matrix at grid time ``t`` (must lie on the grid)."""
        idx = int(np.argmin(np.abs(self.times - t)))
        scale = max(1.0, abs(t))
        if abs(self.times[idx] - t) > 1e-9 * scale:
            raise ValueError(f"t={t} is not on the grid")
        return self.values[idx]

    def check_stochastic(self, row_tol: float, entry_tol: float = 1e-6) -> None:
        """Raise if a row sum or an entry leaves its tolerance band.

        Raises:
            StochasticityError: Naming the first offending time and row
        """
        defect = np.abs(self.row_sums() - 1.0)
        if np.any(defect > row_tol):
            k, i = np.unravel_index(int(np.argmax(defect)), defect.shape)
            raise StochasticityError(
                f"Row {i} at t={self.times[k]:.6g} sums to {1.0 + defect[k, i]:.12g} "
                f"(tolerance {row_tol:g})"
            )
        if self.values.min() < -entry_tol or self.values.max() > 1.0 + entry_tol:
            raise StochasticityError(
                f"Entries leave [-{entry_tol:g}, 1+{entry_tol:g}]: "
                f"min={self.values.min():.3g} max={self.values.max():.3g}"
            )


class GeneratorMatrix(BaseModel):
    """G = Theta (H - I) of the embedded Markov dynamics."""

    G: NDArray[np.float64]

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @field_validator("G", mode="before")
    @classmethod
    def _as_array(cls, value: Any) -> NDArray[np.float64]:
        return _frozen_array(value)

    @model_validator(mode="after")
    def _check_generator(self) -> "GeneratorMatrix":
        g = self.G
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise ValueError(f"Generator must be square, got shape {g.shape}")
        off = g - np.diag(np.diag(g))
        if np.any(off < 0.0):
            raise ValueError("Generator off-diagonal entries must be nonnegative")
        sums = np.abs(g.sum(axis=1))
        scale = np.maximum(1.0, np.abs(np.diag(g)))
        if np.any(sums > 1e-12 * scale):
            row = int(np.argmax(sums / scale))
            raise ValueError(f"Generator row {row} sums to {g[row].sum():.3g}, expected 0")
        return self
