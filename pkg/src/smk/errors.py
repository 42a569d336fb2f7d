"""Exception hierarchy.

Every error also derives from the builtin that callers would naturally
catch (``ValueError`` for bad input, ``RuntimeError`` for numerical
failures).
"""

from typing import Any


class SmkError(Exception):
    """Base class for all smk errors."""


class InvalidParameterError(SmkError, ValueError):
    """A parameter is outside its admissible range."""


class DomainError(SmkError, ValueError):
    """A function was evaluated outside its domain."""


class OutOfHorizonError(DomainError):
    """A path was queried at a time beyond its recorded horizon."""


class OutOfRangeError(SmkError, ValueError):
    """A survival transform does not map to a valid Bernstein value."""


class UnsupportedSpecError(SmkError, ValueError):
    """The requested operation is not available for this exponent or law."""


class KernelUnavailableError(UnsupportedSpecError):
    """A solver kernel cannot be computed for the given waiting law."""


class WrongLawError(UnsupportedSpecError):
    """An operation restricted to Markov laws received a non-Markov model."""


class NonConvergenceError(SmkError, RuntimeError):
    """Numerical Laplace inversion did not stabilise.

    Attributes:
        entries: One record per offending evaluation with keys
            ``i``, ``j``, ``t``, ``estimate`` and ``reference``.
    """

    def __init__(self, message: str, entries: list[dict[str, Any]] | None = None):
        super().__init__(message)
        self.entries = entries or []

    def report(self) -> dict[str, Any]:
        """Structured form suitable for JSON emission."""
        return {"error": "nonconvergence", "message": str(self), "entries": self.entries}


class SingularSystemError(SmkError, RuntimeError):
    """A resolvent system could not be solved to the residual tolerance."""


class PathExplosionError(SmkError, RuntimeError):
    """A simulated path exceeded the configured jump cap."""


class BoundaryMassError(SmkError, RuntimeError):
    """Too much probability reached the truncated lattice boundary."""


class ConfigError(SmkError, ValueError):
    """Base class for configuration problems.

    Attributes:
        field: Dotted path of the offending field, when known.
    """

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class ConfigParseError(ConfigError):
    """The configuration document is not well-formed JSON."""


class ConfigSchemaError(ConfigError):
    """The configuration does not match the schema or capability matrix."""


class InvariantViolationError(ConfigError):
    """A model invariant (row sums, positive rates) does not hold."""


class StochasticityError(SmkError, RuntimeError):
    """A computed probability row does not sum to one within tolerance."""
