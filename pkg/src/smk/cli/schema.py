"""Run configuration schema and parsing.

A run configuration is a single JSON document::

    {
      "model": {
        "jump_matrix": [[0, 1], [1, 0]],
        "theta": [1, 1],
        "laws": [{"kind": "stable", "alpha": 0.6}, {"kind": "markov"}]
      },
      "task": "solve",
      "parameters": {"method": "renewal", "t_max": 2.0},
      "seed": 42,
      "output": "pi.csv"
    }

Task parameters are validated against the model of the named task.
"""

import hashlib
import json
import logging
from enum import Enum
from typing import Annotated, Any, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ..config import settings
from ..errors import ConfigParseError, ConfigSchemaError, InvariantViolationError
from ..core.bernstein import (
    MarkovExponent,
    MixtureComponent,
    StableExponent,
    StableMixtureExponent,
    WaitingTimeLaw,
)
from ..core.kolmogorov import SolveMethod, capability_error
from ..core.laplace import InversionConfig, InversionMethod
from ..core.limits import LimitExperimentConfig
from ..core.semi_markov import SemiMarkovModel

logger = logging.getLogger(__name__)


class Task(str, Enum):
    """Subcommand selected by a run configuration."""

    SIMULATE = "simulate"
    MARGINAL = "marginal"
    SOLVE = "solve"
    ORACLE = "oracle"
    LIMIT = "limit"
    VALIDATE = "validate"


class Construction(str, Enum):
    """Path construction used by the simulate task."""

    RENEWAL = "renewal"
    TIME_CHANGE = "time_change"


# =============================================================================
# Model description
# =============================================================================


class StableLawSpec(BaseModel):
    kind: Literal["stable"]
    alpha: float = Field(gt=0.0, le=1.0)

    model_config = ConfigDict(extra="forbid")


class MarkovLawSpec(BaseModel):
    kind: Literal["markov"]

    model_config = ConfigDict(extra="forbid")


class MixtureLawSpec(BaseModel):
    kind: Literal["stable_mixture"]
    alphas: list[float] = Field(min_length=1)
    weights: list[float] = Field(min_length=1)

    model_config = ConfigDict(extra="forbid")

    @model_validator(mode="after")
    def _paired(self) -> "MixtureLawSpec":
        if len(self.alphas) != len(self.weights):
            raise ValueError("alphas and weights must have the same length")
        return self


LawSpec = Annotated[StableLawSpec | MarkovLawSpec | MixtureLawSpec, Field(discriminator="kind")]


class ModelSpec(BaseModel):
    """Semi-Markov model as written in the configuration."""

    jump_matrix: list[list[float]] = Field(min_length=1)
    theta: list[float] = Field(min_length=1)
    laws: list[LawSpec] = Field(min_length=1)

    model_config = ConfigDict(extra="forbid")

    @model_validator(mode="after")
    def _one_entry_per_state(self) -> "ModelSpec":
        n = len(self.jump_matrix)
        if len(self.theta) != n or len(self.laws) != n:
            raise ValueError(
                f"jump_matrix has {n} rows but theta has {len(self.theta)} "
                f"and laws {len(self.laws)} entries"
            )
        return self

    def build(self) -> SemiMarkovModel:
        """Construct the model, checking its invariants.

        Raises:
            InvariantViolationError: Naming the offending field
        """
        laws = []
        for i, (spec, theta) in enumerate(zip(self.laws, self.theta, strict=True)):
            if not theta > 0.0:
                raise InvariantViolationError(
                    f"theta[{i}]={theta} must be positive", field=f"model.theta[{i}]"
                )
            try:
                laws.append(WaitingTimeLaw(exponent=_exponent(spec), theta=theta))
            except ValidationError as exc:
                raise InvariantViolationError(
                    f"laws[{i}]: {exc.errors()[0]['msg']}", field=f"model.laws[{i}]"
                ) from exc
        for i, row in enumerate(self.jump_matrix):
            total = sum(row)
            if any(h < 0.0 for h in row) or abs(total - 1.0) > 1e-12:
                raise InvariantViolationError(
                    f"jump_matrix row {i} sums to {total:.15g}, expected nonnegative entries "
                    "summing to 1",
                    field=f"model.jump_matrix[{i}]",
                )
        try:
            return SemiMarkovModel(jump_matrix=self.jump_matrix, laws=laws)
        except ValidationError as exc:
            raise InvariantViolationError(
                str(exc.errors()[0]["msg"]), field="model.jump_matrix"
            ) from exc


def _exponent(
    spec: StableLawSpec | MarkovLawSpec | MixtureLawSpec,
) -> StableExponent | MarkovExponent | StableMixtureExponent:
    if isinstance(spec, MarkovLawSpec) or (isinstance(spec, StableLawSpec) and spec.alpha == 1.0):
        return MarkovExponent()
    if isinstance(spec, StableLawSpec):
        return StableExponent(alpha=spec.alpha)
    return StableMixtureExponent(
        components=[
            MixtureComponent(weight=w, alpha=a)
            for a, w in zip(spec.alphas, spec.weights, strict=True)
        ]
    )


# =============================================================================
# Task parameters
# =============================================================================


class SimulateParams(BaseModel):
    task: Literal["simulate"]
    x0: int = Field(default=0, ge=0)
    horizon: float = Field(gt=0.0)
    n_paths: int = Field(default=1, ge=1)
    construction: Construction = Construction.RENEWAL

    model_config = ConfigDict(extra="forbid")


class MarginalParams(BaseModel):
    task: Literal["marginal"]
    x0: int = Field(default=0, ge=0)
    t: float = Field(ge=0.0)
    n_paths: int = Field(default=100_000, ge=1000)

    model_config = ConfigDict(extra="forbid")


class SolveParams(BaseModel):
    task: Literal["solve"]
    method: SolveMethod = SolveMethod.RENEWAL
    t_max: float = Field(gt=0.0)
    dt: float | None = Field(default=None, gt=0.0)

    model_config = ConfigDict(extra="forbid")

    @model_validator(mode="after")
    def _default_step(self) -> "SolveParams":
        if self.dt is None:
            self.dt = self.t_max / settings.solver.grid_divisions
        return self


class OracleParams(BaseModel):
    task: Literal["oracle"]
    times: list[float] = Field(min_length=1)
    method: InversionMethod | None = None
    order: int = Field(default=settings.solver.stehfest_order, ge=4, le=18)
    nodes: int = Field(default=settings.solver.talbot_nodes, ge=16, le=128)

    model_config = ConfigDict(extra="forbid")

    @model_validator(mode="after")
    def _check(self) -> "OracleParams":
        if any(t <= 0.0 for t in self.times) or any(
            b <= a for a, b in zip(self.times, self.times[1:], strict=False)
        ):
            raise ValueError("times must be positive and strictly increasing")
        if self.order % 2:
            raise ValueError(f"Gaver-Stehfest order must be even, got {self.order}")
        return self

    def inversion(self) -> InversionConfig:
        cfg = InversionConfig(order=self.order, nodes=self.nodes)
        return cfg if self.method is None else cfg.model_copy(update={"method": self.method})


class LimitParams(LimitExperimentConfig):
    task: Literal["limit"]

    # Run the alpha = 1 control first and stop if it fails
    require_control: bool = True

    model_config = ConfigDict(extra="forbid", frozen=True)

    def experiment(self) -> LimitExperimentConfig:
        return LimitExperimentConfig(**self.model_dump(exclude={"task", "require_control"}))


class ValidateParams(BaseModel):
    task: Literal["validate"]
    t_max: float = Field(default=1.0, gt=0.0)

    model_config = ConfigDict(extra="forbid")


TaskParams = Annotated[
    SimulateParams | MarginalParams | SolveParams | OracleParams | LimitParams | ValidateParams,
    Field(discriminator="task"),
]


class RunConfig(BaseModel):
    """Validated run configuration."""

    model: ModelSpec | None = None
    task: Task
    parameters: TaskParams
    seed: int | None = Field(default=None, ge=0, lt=2**64)
    output: str | None = None

    model_config = ConfigDict(extra="forbid")

    @model_validator(mode="before")
    @classmethod
    def _tag_parameters(cls, data: Any) -> Any:
        if isinstance(data, dict) and "task" in data:
            params = data.get("parameters") or {}
            if isinstance(params, dict):
                data = {**data, "parameters": {**params, "task": data["task"]}}
        return data

    @model_validator(mode="after")
    def _model_required(self) -> "RunConfig":
        if self.model is None and self.task != Task.LIMIT:
            raise ValueError(f"Task '{self.task.value}' requires a model")
        return self

    def effective_seed(self, override: int | None = None) -> int:
        """Seed precedence: explicit override, then the config, then SMK_SEED."""
        if override is not None:
            return override
        if self.seed is not None:
            return self.seed
        return settings.simulation.seed

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form of the configuration."""
        canonical = json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _field_path(loc: tuple[Any, ...]) -> str:
    parts: list[str] = []
    for item in loc:
        if isinstance(item, int):
            parts.append(f"[{item}]")
        elif item in {t.value for t in Task} or item in {"stable", "markov", "stable_mixture"}:
            # Discriminator tags are not part of the document
            continue
        else:
            parts.append(f".{item}" if parts else str(item))
    return "".join(parts)


def parse_config(text: str) -> tuple[RunConfig, SemiMarkovModel | None]:
    """Parse and validate a run configuration document.

    Args:
        text: JSON document

    Returns:
        The validated RunConfig and the model it describes (None for
        limit runs without a model)

    Raises:
        ConfigParseError: Malformed JSON, with line and column
        ConfigSchemaError: Schema or capability violation, naming the field
        InvariantViolationError: Model invariant violation, naming the field
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigParseError(
            f"Invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(data, dict):
        raise ConfigParseError("Configuration must be a JSON object")

    try:
        config = RunConfig.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        path = _field_path(tuple(first["loc"]))
        raise ConfigSchemaError(f"{path or 'config'}: {first['msg']}", field=path or None) from exc

    model = config.model.build() if config.model is not None else None
    params = config.parameters
    if model is not None:
        x0 = getattr(params, "x0", None)
        if x0 is not None and x0 >= model.n_states:
            raise ConfigSchemaError(
                f"parameters.x0={x0} but the model has {model.n_states} states",
                field="parameters.x0",
            )
    if isinstance(params, SolveParams) and model is not None:
        reason = capability_error(model, params.method)
        if reason:
            raise ConfigSchemaError(
                f"parameters.method: {reason} (capability matrix: renewal takes every law; "
                "volterra_caputo and evolutionary take stable and Markov laws; "
                "markov takes Markov laws only)",
                field="parameters.method",
            )
    if isinstance(params, SimulateParams) and params.construction == Construction.TIME_CHANGE:
        if model is not None and any(law.is_markov for law in model.laws):
            raise ConfigSchemaError(
                "parameters.construction: time_change needs stable or mixture laws in every state",
                field="parameters.construction",
            )
    logger.debug(f"Parsed {config.task.value} configuration {config.digest()[:12]}")
    return config, model
