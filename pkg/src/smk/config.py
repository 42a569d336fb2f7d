"""Application configuration."""

from typing import Literal

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class SimulationSettings(BaseSettings):
    """Monte Carlo configuration."""

    # Master seed, read from SMK_SEED
    seed: int = Field(default=0, ge=0, lt=2**64)
    threads: int = Field(default=1, ge=1)

    # Paths per RNG stream; chunk k always uses stream child k
    chunk_size: int = Field(default=10_000, ge=1)

    # Path-explosion guard
    max_jumps: int = Field(default=10_000_000, ge=1)

    model_config = SettingsConfigDict(
        env_prefix="SMK_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )


class SolverSettings(BaseSettings):
    """Deterministic solver and Laplace inversion configuration."""

    # Default dt = t_max / grid_divisions
    grid_divisions: int = Field(default=2000, ge=100)

    # auto: Gaver-Stehfest, or Talbot when some state has order below 1
    inversion_method: Literal["auto", "talbot", "gaver_stehfest"] = "auto"
    stehfest_order: int = 14
    talbot_nodes: int = 32

    model_config = SettingsConfigDict(
        env_prefix="SMK_SOLVER_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )


class Settings(BaseSettings):
    """Main application settings."""

    app_name: str = "smk"
    debug: bool = False

    simulation: SimulationSettings = SimulationSettings()
    solver: SolverSettings = SolverSettings()

    model_config = SettingsConfigDict(
        env_prefix="SMK_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )


settings = Settings()
