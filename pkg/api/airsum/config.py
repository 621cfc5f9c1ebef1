"""
Flat `key = value` experiment configuration.

One key per line, `#` starts a comment, list values are comma separated and
an empty value on a list key means an empty grid. Omitted keys take the
defaults declared on ExperimentConfig.
"""
import logging
import os
from typing import Dict, List, Literal, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .schemas import (
    AggregatorMode,
    ChannelDist,
    DataMode,
    LearnerFamily,
    QuantizerSpec,
    SweepKind,
    SystemConfig,
    check_level_count,
)

load_dotenv()

logger = logging.getLogger(__name__)

LIST_KEYS = ("nr_list", "snr_db_list", "q_list", "k_list")


class ConfigError(ValueError):
    def __init__(self, message: str, key: Optional[str] = None, line: Optional[int] = None):
        self.key = key
        self.line = line
        self.message = message
        prefix = ""
        if line is not None:
            prefix += f"line {line}: "
        if key is not None:
            prefix += f"{key}: "
        super().__init__(prefix + message)


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    # run control
    seed: int = Field(default=0, ge=0, lt=2**64)
    trials: int = Field(default=10, ge=0)
    workers: Optional[int] = Field(default=None, ge=1)

    # system
    K: int = Field(default=20, ge=1)
    N: int = Field(default=100, ge=1)
    Nr: int = Field(default=100, ge=1)
    q: int = 64
    sigma_h2: float = Field(default=1.0, gt=0)
    sigma_z2: float = Field(default=1.0, ge=0)
    p_max: float = Field(default=1.0, gt=0)
    channel_dist: ChannelDist = "complex-gaussian"

    # quantizer and power
    delta_g: float = Field(default=2.0, gt=0)
    beta_margin: float = Field(default=1.1, ge=1)

    # Monte Carlo sweeps
    aggregator: AggregatorMode = "fading"
    sweep: SweepKind = "fading"
    grad_low: float = -2.0
    grad_high: float = 2.0
    symbol_low: float = 0.0
    symbol_high: float = 1.0
    epsilon: float = Field(default=1.0, gt=0)
    delta: float = Field(default=0.01, gt=0, lt=1)
    bound_variant: Literal["stated", "noise-scaled"] = "stated"
    nr_list: Optional[List[int]] = None
    snr_db_list: Optional[List[float]] = None
    q_list: Optional[List[int]] = None
    k_list: Optional[List[int]] = None

    # learning
    model: LearnerFamily = "softmax-regression"
    hidden: int = Field(default=16, ge=1)
    classes: int = Field(default=3, ge=1)
    feature_dim: int = Field(default=20, ge=1)
    samples_per_class: int = Field(default=1000, ge=1)
    separation: float = Field(default=4.0, ge=0)
    dataset: Literal["synthetic", "idx"] = "synthetic"
    dataset_dir: Optional[str] = None
    data_mode: DataMode = "iid"
    shards: int = Field(default=2, ge=1)
    batch: Optional[int] = Field(default=None, ge=1)
    local_epochs: int = Field(default=0, ge=0)
    eta: float = Field(default=0.2, gt=0)
    rounds: int = Field(default=100, ge=0)
    frame_size: Optional[int] = Field(default=None, ge=1)

    # bound tables
    smoothness: float = Field(default=1.0, gt=0)
    loss_gap: float = Field(default=1.0, ge=0)
    sigma_ch2: float = Field(default=0.0, ge=0)
    theta_bar: float = Field(default=0.0, ge=0)

    # latency
    bandwidth: float = Field(default=1000.0, gt=0)
    symbol_time: float = Field(default=1e-3, gt=0)
    model_size: int = Field(default=5_000_000, ge=1)
    subchannels: Optional[int] = Field(default=None, ge=1)
    latency_distortion: Literal["lattice", "level"] = "lattice"

    output: Optional[str] = None

    @field_validator("q")
    @classmethod
    def q_is_power_of_four(cls, v: int) -> int:
        return check_level_count(v)

    @field_validator("q_list")
    @classmethod
    def q_list_powers_of_four(cls, v: Optional[List[int]]) -> Optional[List[int]]:
        if v is not None:
            for q in v:
                check_level_count(q)
        return v

    @field_validator("nr_list", "k_list")
    @classmethod
    def counts_positive(cls, v: Optional[List[int]]) -> Optional[List[int]]:
        if v is not None and any(item < 1 for item in v):
            raise ValueError("every entry must be >= 1")
        return v

    @model_validator(mode="after")
    def ranges_ordered(self):
        if self.grad_low > self.grad_high:
            raise ValueError("grad_low must not exceed grad_high")
        if self.symbol_low > self.symbol_high:
            raise ValueError("symbol_low must not exceed symbol_high")
        return self

    # Grid axes fall back to the scalar setting when the list key is absent.
    @property
    def nr_values(self) -> List[int]:
        return [self.Nr] if self.nr_list is None else list(self.nr_list)

    @property
    def snr_values(self) -> List[Optional[float]]:
        return [None] if self.snr_db_list is None else list(self.snr_db_list)

    @property
    def q_values(self) -> List[int]:
        return [self.q] if self.q_list is None else list(self.q_list)

    @property
    def k_values(self) -> List[int]:
        return [self.K] if self.k_list is None else list(self.k_list)

    @property
    def worker_count(self) -> int:
        if self.workers is not None:
            return self.workers
        return max(1, int(os.getenv("AIRSUM_WORKERS", "1")))

    def system(self, **overrides) -> SystemConfig:
        values = dict(
            K=self.K,
            N=self.N,
            Nr=self.Nr,
            q=self.q,
            sigma_h2=self.sigma_h2,
            sigma_z2=self.sigma_z2,
            p_max=self.p_max,
            channel_dist=self.channel_dist,
        )
        values.update(overrides)
        return SystemConfig(**values)

    def quantizer(self, q: Optional[int] = None) -> QuantizerSpec:
        return QuantizerSpec(q=self.q if q is None else q, delta_g=self.delta_g)


CONFIG_KEYS = tuple(ExperimentConfig.model_fields.keys())


def _strip_comment(raw: str) -> str:
    return raw.split("#", 1)[0].strip()


def parse_config(text: str) -> ExperimentConfig:
    """
    Parse `key = value` text into a validated ExperimentConfig.

    Args:
        text: Configuration text

    Returns:
        ExperimentConfig: validated configuration

    Raises:
        ConfigError: on unknown or repeated keys, malformed lines, or values
            failing validation; carries the key and 1-based line number
    """
    values: Dict[str, object] = {}
    lines: Dict[str, int] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        content = _strip_comment(raw)
        if not content:
            continue
        if "=" not in content:
            raise ConfigError("expected `key = value`", line=number)
        key, value = (part.strip() for part in content.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ConfigError("unknown key", key=key, line=number)
        if key in values:
            raise ConfigError(f"repeated key (first set on line {lines[key]})", key=key, line=number)
        lines[key] = number
        if key in LIST_KEYS:
            values[key] = [item.strip() for item in value.split(",") if item.strip()]
        elif value == "":
            if ExperimentConfig.model_fields[key].default is not None:
                raise ConfigError("missing value", key=key, line=number)
            values[key] = None
        else:
            values[key] = value

    try:
        return ExperimentConfig(**values)
    except ValidationError as exc:
        error = exc.errors()[0]
        key = str(error["loc"][0]) if error["loc"] else None
        message = error["msg"]
        if message.startswith("Value error, "):
            message = message[len("Value error, "):]
        raise ConfigError(message, key=key, line=lines.get(key) if key else None) from None


def _render_value(value) -> str:
    if isinstance(value, list):
        return ", ".join(_render_value(item) for item in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_config(cfg: ExperimentConfig) -> str:
    """Canonical text for cfg: every set key in declaration order; unset optional keys are left out."""
    lines = []
    for key in CONFIG_KEYS:
        value = getattr(cfg, key)
        if value is None:
            continue
        lines.append(f"{key} = {_render_value(value)}")
    return "\n".join(lines) + "\n"


def load_config(path: str) -> ExperimentConfig:
    with open(path, encoding="utf-8") as handle:
        text = handle.read()
    logger.debug(f"Read configuration from {path}")
    return parse_config(text)
