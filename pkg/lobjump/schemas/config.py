"""
Run configuration schemas and the `key = value` config-file loader.

Nested models are addressed with dotted keys in the file, e.g.
`fit.cv_folds = 5` or `sim.planted_coefficients = VB1_0:-1.5, BMO_0:1.5`.
"""

from pathlib import Path
from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, ValidationError, field_validator, model_validator

from lobjump.analysis.features import LAYOUTS, column_names
from lobjump.exceptions import ConfigError
from lobjump.models.events import SessionWindow
from lobjump.utils.helpers import parse_mapping


class FitConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n_lambdas: int = 100
    lambda_ratio: float = 1e-3
    cv_folds: int = 10
    cv: Literal["stratified", "chrono"] = "stratified"
    tol: float = 1e-7
    kkt_tol: float = 1e-7
    max_iter: int = 200
    max_inner: int = 5000
    standardize: bool = True
    seed: int = 0
    n_jobs: int = 1

    @field_validator("n_lambdas", "max_iter", "max_inner", "n_jobs")
    @classmethod
    def validate_positive_int(cls, v):
        if v < 1:
            raise ValueError("must be >= 1")
        return v

    @field_validator("lambda_ratio")
    @classmethod
    def validate_lambda_ratio(cls, v):
        if not 0 < v < 1:
            raise ValueError("lambda_ratio must lie in (0, 1)")
        return v

    @field_validator("cv_folds")
    @classmethod
    def validate_folds(cls, v):
        if v < 2:
            raise ValueError("cv_folds must be >= 2")
        return v

    @field_validator("tol", "kkt_tol")
    @classmethod
    def validate_tolerance(cls, v):
        if not v > 0:
            raise ValueError("tolerances must be positive")
        return v


class SimConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    seed: int = 0
    n_events: int = 20000
    depth: int = 5
    window: str = "allday"
    tick_size: float = 0.01
    start_ticks: int = 10000
    initial_levels: int = 10
    initial_spread_ticks: int = 1
    max_level_gap_ticks: int = 2
    initial_size_mean: float = 20.0
    limit_rate: float = 0.55
    cancel_rate: float = 0.40
    market_rate: float = 0.05
    placement_ticks: int = 5
    limit_size_mean: float = 20.0
    market_size_mean: float = 25.0
    refill_buffer: int = 2
    mean_interarrival_ms: float = 200.0
    planted: Literal["none", "jump", "sign"] = "none"
    planted_coefficients: Dict[str, float] = {}
    planted_intercept: float = 0.0
    sign_coefficient: float = 0.0
    sign_intercept: float = 0.0

    @field_validator("planted_coefficients", mode="before")
    @classmethod
    def parse_coefficients(cls, v):
        if isinstance(v, str):
            return parse_mapping(v)
        return v

    @field_validator("limit_rate", "mean_interarrival_ms", "tick_size")
    @classmethod
    def validate_positive(cls, v):
        if not v > 0:
            raise ValueError("must be positive")
        return v

    @field_validator("limit_size_mean", "market_size_mean", "initial_size_mean")
    @classmethod
    def validate_size_mean(cls, v):
        if v < 1:
            raise ValueError("geometric size means must be >= 1 share")
        return v

    @field_validator("cancel_rate", "market_rate")
    @classmethod
    def validate_non_negative(cls, v):
        if v < 0:
            raise ValueError("must be >= 0")
        return v

    @field_validator(
        "n_events", "depth", "placement_ticks", "start_ticks", "initial_spread_ticks", "max_level_gap_ticks", "refill_buffer"
    )
    @classmethod
    def validate_positive_int(cls, v):
        if v < 1:
            raise ValueError("must be >= 1")
        return v

    @field_validator("window")
    @classmethod
    def validate_window(cls, v):
        SessionWindow.named(v)
        return v.lower()

    @model_validator(mode="after")
    def validate_planted(self):
        if self.planted == "jump" and not self.planted_coefficients:
            raise ValueError("planted = jump needs planted_coefficients")
        if self.initial_levels < self.depth + self.refill_buffer:
            raise ValueError(
                f"initial_levels {self.initial_levels} cannot sustain depth {self.depth} "
                f"plus refill_buffer {self.refill_buffer}"
            )
        return self


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    instrument: str = "SIM"
    tick_size: float = 0.01
    depth: int = 5
    lags_r1: int = 5
    lags_r2: int = 5
    r1_layout: str = "full"
    window: str = "allday"
    split: float = 0.7
    split_mode: Literal["chrono", "random"] = "chrono"
    sides: List[str] = ["bid", "ask"]
    input_events: Optional[str] = None
    output_dir: str = "output"
    seed: int = 0
    curve_points: int = 50
    curve_min_count: int = 50
    sell_curve: Literal["mirrored", "literal"] = "mirrored"
    fit: FitConfig = FitConfig()
    sim: SimConfig = SimConfig()

    @field_validator("tick_size")
    @classmethod
    def validate_tick_size(cls, v):
        if not v > 0:
            raise ValueError("tick_size must be positive")
        return v

    @field_validator("depth", "lags_r1", "lags_r2", "curve_points")
    @classmethod
    def validate_positive_int(cls, v):
        if v < 1:
            raise ValueError("must be >= 1")
        return v

    @field_validator("r1_layout")
    @classmethod
    def validate_layout(cls, v):
        if v not in LAYOUTS:
            raise ValueError(f"r1_layout must be one of {'/'.join(LAYOUTS)}")
        return v

    @field_validator("window")
    @classmethod
    def validate_window(cls, v):
        SessionWindow.named(v)
        return v.lower()

    @field_validator("split")
    @classmethod
    def validate_split(cls, v):
        if not 0 < v < 1:
            raise ValueError("split must lie in (0, 1)")
        return v

    @field_validator("sides", mode="before")
    @classmethod
    def parse_sides(cls, v):
        if isinstance(v, str):
            v = [s.strip() for s in v.split(",") if s.strip()]
        if not v or any(s not in ("bid", "ask") for s in v):
            raise ValueError("sides must be a non-empty subset of bid, ask")
        return v

    @model_validator(mode="before")
    @classmethod
    def align_sections(cls, data):
        """The sim and fit sections inherit run-level settings unless they set them."""
        if not isinstance(data, dict):
            return data
        data = dict(data)
        inherited = {"sim": ("depth", "window", "tick_size", "seed"), "fit": ("seed",)}
        for section, keys in inherited.items():
            current = data.get(section)
            if isinstance(current, BaseModel):
                continue
            values = dict(current or {})
            for key in keys:
                if key in data:
                    values.setdefault(key, data[key])
            data[section] = values
        return data

    @model_validator(mode="after")
    def validate_planted_names(self):
        registry = set(column_names(self.depth, self.lags_r1, self.lags_r2, self.r1_layout))
        unknown = sorted(set(self.sim.planted_coefficients) - registry)
        if unknown:
            raise ValueError(f"planted features not in the design registry: {', '.join(unknown)}")
        if self.sim.planted == "jump" and self.sim.depth != self.depth:
            raise ValueError(f"planted jumps need sim.depth {self.sim.depth} to match depth {self.depth}")
        return self

    @property
    def session_window(self) -> SessionWindow:
        return SessionWindow.named(self.window)

    def sim_config(self) -> SimConfig:
        """The simulator settings, run-level values already inherited where the sim section is silent."""
        return self.sim

    def with_seed(self, seed: int) -> "RunConfig":
        return self.model_copy(
            update={
                "seed": seed,
                "fit": self.fit.model_copy(update={"seed": seed}),
                "sim": self.sim.model_copy(update={"seed": seed}),
            }
        )


def parse_config_text(text: str) -> Dict[str, object]:
    """Turn `key = value` lines into a nested dictionary of raw strings."""
    data: Dict[str, object] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"config line {number}: expected 'key = value', got '{raw.strip()}'")
        target = data
        *parents, leaf = key.split(".")
        for parent in parents:
            target = target.setdefault(parent, {})
            if not isinstance(target, dict):
                raise ConfigError(f"config line {number}: '{parent}' is not a section")
        if leaf in target:
            raise ConfigError(f"config line {number}: duplicate key '{key}'")
        target[leaf] = value
    return data


def load_run_config(path: Optional[Path] = None, seed: Optional[int] = None) -> RunConfig:
    """
    Load and validate a run configuration.

    Args:
        path: Config file; None gives the documented defaults
        seed: Optional override applied to the run, fit and simulator seeds

    Returns:
        Validated RunConfig
    """
    data = {}
    if path is not None:
        try:
            data = parse_config_text(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        config = RunConfig(**data)
    except ValidationError as exc:
        details = "; ".join(
            f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in exc.errors()
        )
        raise ConfigError(f"invalid configuration: {details}") from exc
    if seed is not None:
        config = config.with_seed(seed)
    return config
