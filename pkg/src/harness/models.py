"""Pydantic models for experiment configuration, sweep records and check reports."""

import cmath
import math
from typing import Any, Dict, List, Literal, Optional

from pydantic import (
    AliasChoices,
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    field_validator,
    model_validator,
)

from ..radar.scenario import RadarScenario, doppler_norm_from_velocity
from ..solvers.baseline import PgdConfig
from ..solvers.lpm import LpmConfig
from ..utils.config import (
    DEFAULT_BLOCK_PERIOD_S,
    DEFAULT_CARRIER_HZ,
    DEFAULT_MAX_ITERS,
    DEFAULT_N_BLOCKS,
    DEFAULT_N_RX,
    DEFAULT_N_TX,
    DEFAULT_NOISE_DBM,
    DEFAULT_PENALTY_SCALING,
    DEFAULT_RHO,
    DEFAULT_SEED,
    DEFAULT_SNR_DB,
    DEFAULT_THETA_DEG,
    DEFAULT_TOLERANCE,
    DEFAULT_TOLERANCE_MODE,
    DEFAULT_TRIALS,
    DEFAULT_VELOCITY_MPS,
)
from ..utils.errors import ConfigError


def _strictly_increasing(values: List[Any], name: str) -> List[Any]:
    if not values:
        raise ValueError(f"{name} must not be empty")
    for before, after in zip(values[:-1], values[1:]):
        if not after > before:
            raise ValueError(f"{name} must be strictly increasing, got {values}")
    return values


class ExperimentConfig(BaseModel):
    """
    One experiment: scenario defaults, sweep axes, solver and output settings.

    Field names match the CLI flags with dashes replaced by underscores;
    `tol` is accepted as an alias of `tolerance`.
    """

    model_config = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)

    # Scenario
    n_tx: List[int] = Field(default_factory=lambda: list(DEFAULT_N_TX))
    n_rx: int = Field(default=DEFAULT_N_RX, ge=1)
    n_blocks: int = Field(default=DEFAULT_N_BLOCKS, ge=1)
    theta_deg: float = Field(default=DEFAULT_THETA_DEG, gt=-90, lt=90)
    beta_abs: float = Field(default=1.0, gt=0)
    beta_phase_deg: float = 0.0
    noise_dbm: float = DEFAULT_NOISE_DBM
    power_dbm: Optional[List[float]] = None
    snr_db: Optional[float] = None
    velocity_mps: float = DEFAULT_VELOCITY_MPS
    carrier_hz: float = Field(default=DEFAULT_CARRIER_HZ, gt=0)
    block_period_s: float = Field(default=DEFAULT_BLOCK_PERIOD_S, gt=0)

    # Solvers
    solver: Literal["lpm", "pgd", "both"] = "lpm"
    rho: float = Field(default=DEFAULT_RHO, gt=0)
    tolerance: float = Field(
        default=DEFAULT_TOLERANCE,
        gt=0,
        validation_alias=AliasChoices("tol", "tolerance"),
    )
    max_iters: int = Field(default=DEFAULT_MAX_ITERS, ge=1)
    tolerance_mode: Literal["absolute", "relative"] = DEFAULT_TOLERANCE_MODE
    penalty_scaling: Literal["absolute", "curvature"] = DEFAULT_PENALTY_SCALING
    final_rescale: bool = True
    pgd_restarts: int = Field(default=0, ge=0)

    # Experiment
    trials: int = Field(default=DEFAULT_TRIALS, ge=1)
    seed: int = Field(default=DEFAULT_SEED, ge=0)
    format: Literal["csv", "json", "xlsx"] = "csv"
    out: Optional[str] = None
    workers: int = Field(default=1, ge=1)

    @field_validator("n_tx")
    @classmethod
    def _check_n_tx(cls, value: List[int]) -> List[int]:
        if any(n < 1 for n in value):
            raise ValueError(f"n_tx entries must be positive, got {value}")
        return _strictly_increasing(value, "n_tx")

    @field_validator("power_dbm")
    @classmethod
    def _check_power(cls, value: Optional[List[float]]) -> Optional[List[float]]:
        if value is None:
            return value
        return _strictly_increasing(value, "power_dbm")

    @model_validator(mode="after")
    def _check_power_source(self) -> "ExperimentConfig":
        if self.power_dbm is not None and self.snr_db is not None:
            raise ValueError("snr_db and power_dbm are mutually exclusive")
        return self

    @classmethod
    def from_settings(cls, settings: Dict[str, Any]) -> "ExperimentConfig":
        """
        Validate a merged settings dict.

        Raises:
            ConfigError: On unknown keys or invalid values
        """
        try:
            return cls.model_validate(settings)
        except ValidationError as e:
            problems = "; ".join(
                f"{'.'.join(str(part) for part in err['loc']) or 'config'}: {err['msg']}"
                for err in e.errors()
            )
            raise ConfigError(f"Invalid configuration: {problems}") from e

    @property
    def beta(self) -> complex:
        return self.beta_abs * cmath.exp(1j * math.radians(self.beta_phase_deg))

    @property
    def doppler_norm(self) -> float:
        return doppler_norm_from_velocity(self.velocity_mps, self.carrier_hz, self.block_period_s)

    def power_levels_dbm(self) -> List[float]:
        """Transmit power sweep in dBm; derived from SNR when not given."""
        if self.power_dbm is not None:
            return list(self.power_dbm)
        snr_db = DEFAULT_SNR_DB if self.snr_db is None else self.snr_db
        # P_t = SNR * sigma^2 / |beta|^2
        return [snr_db + self.noise_dbm - 20.0 * math.log10(self.beta_abs)]

    def scenario(self, n_tx: int, power_dbm: float) -> RadarScenario:
        return RadarScenario.from_physical(
            n_tx=n_tx,
            n_rx=self.n_rx,
            n_blocks=self.n_blocks,
            theta_deg=self.theta_deg,
            beta=self.beta,
            noise_dbm=self.noise_dbm,
            power_dbm=power_dbm,
            doppler_norm=self.doppler_norm,
        )

    def lpm_config(self, verbose: bool = True, keep_iterates: bool = False) -> LpmConfig:
        return LpmConfig(
            rho=self.rho,
            tolerance=self.tolerance,
            max_iters=self.max_iters,
            final_rescale=self.final_rescale,
            tolerance_mode=self.tolerance_mode,
            penalty_scaling=self.penalty_scaling,
            keep_iterates=keep_iterates,
            verbose=verbose,
        )

    def pgd_config(self) -> PgdConfig:
        return PgdConfig()

    def solvers(self) -> List[str]:
        return ["lpm", "pgd"] if self.solver == "both" else [self.solver]


class SweepRecord(BaseModel):
    """One (solver, sweep point, trial) result row."""

    model_config = ConfigDict(frozen=True)

    solver: str
    n_tx: int = Field(ge=1)
    power_dbm: float
    crb_trace: Optional[float] = Field(default=None, gt=0, description="Empty when the solve failed")
    iterations: int = Field(ge=0)
    wall_time_ms: float = Field(ge=0)
    trial: int = Field(ge=0)
    seed: int
    status: str

    def sort_key(self):
        return (self.solver, self.n_tx, self.power_dbm, self.trial)


class CheckResult(BaseModel):
    """Outcome of one oracle check."""

    name: str
    passed: bool
    measured: float = Field(description="Worst measured error or ratio")
    threshold: float
    detail: str = ""


class CheckReport(BaseModel):
    """All oracle checks of one `check` run."""

    results: List[CheckResult] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.results) and all(r.passed for r in self.results)

    @property
    def failures(self) -> List[CheckResult]:
        return [r for r in self.results if not r.passed]
