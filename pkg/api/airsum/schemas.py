import math
from datetime import datetime
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

ChannelDist = Literal["complex-gaussian", "real-gaussian"]
AggregatorMode = Literal["ideal", "awgn", "fading", "analog-awgn", "analog-fading"]
SweepKind = Literal["symbol", "awgn", "fading"]
LearnerFamily = Literal["linear-regression", "softmax-regression", "one-hidden-layer-mlp", "quadratic"]
LossKind = Literal["squared-error", "cross-entropy"]
DataMode = Literal["iid", "label-skew"]
Command = Literal["mse-sweep", "train", "bounds", "latency"]


def is_power_of_four(q: int) -> bool:
    """True for q = 4, 16, 64, ... (q = 2^(2b) with b >= 1)."""
    return q >= 4 and (q & (q - 1)) == 0 and (q.bit_length() - 1) % 2 == 0


def check_level_count(q: int) -> int:
    if not is_power_of_four(q):
        raise ValueError(f"q must be a power of 4, got {q}")
    return q


class QuantizerSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    q: int
    delta_g: float

    @field_validator("q")
    @classmethod
    def q_is_power_of_four(cls, v: int) -> int:
        return check_level_count(v)

    @field_validator("delta_g")
    @classmethod
    def delta_g_positive(cls, v: float) -> float:
        if not (v > 0 and math.isfinite(v)):
            raise ValueError("delta_g must be a positive finite number")
        return v

    @property
    def bits(self) -> int:
        """b, with q = 2^(2b)."""
        return (self.q.bit_length() - 1) // 2

    @property
    def side(self) -> int:
        """Points per lattice axis, 2^b."""
        return 1 << self.bits

    @property
    def step(self) -> float:
        """Quantizer cell width 2Δ_g/q."""
        return 2.0 * self.delta_g / self.q


class SystemConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    K: int = Field(ge=1)
    N: int = Field(ge=1)
    Nr: int = Field(ge=1)
    q: int = 64
    sigma_h2: float = Field(default=1.0, gt=0)
    sigma_z2: float = Field(default=1.0, ge=0)
    p_max: float = Field(default=1.0, gt=0)
    channel_dist: ChannelDist = "complex-gaussian"

    @field_validator("q")
    @classmethod
    def q_is_power_of_four(cls, v: int) -> int:
        return check_level_count(v)

    @property
    def side(self) -> int:
        return 1 << ((self.q.bit_length() - 1) // 2)


class PowerScaling(BaseModel):
    model_config = ConfigDict(frozen=True)

    beta: float = Field(gt=0)
    dataset_sizes: Tuple[int, ...]

    @field_validator("dataset_sizes")
    @classmethod
    def sizes_positive(cls, v: Tuple[int, ...]) -> Tuple[int, ...]:
        if not v:
            raise ValueError("dataset_sizes must not be empty")
        if any(size < 1 for size in v):
            raise ValueError("every dataset size must be >= 1")
        return v

    @property
    def total(self) -> int:
        return sum(self.dataset_sizes)

    @property
    def equal_sizes(self) -> bool:
        return len(set(self.dataset_sizes)) == 1


class LearnerSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    family: LearnerFamily = "softmax-regression"
    input_dim: int = Field(ge=1)
    class_count: int = Field(default=2, ge=1)
    hidden_units: int = Field(default=16, ge=1)
    loss: Optional[LossKind] = None

    @model_validator(mode="before")
    @classmethod
    def default_loss(cls, data):
        if isinstance(data, dict) and data.get("loss") is None:
            family = data.get("family", "softmax-regression")
            data = dict(data)
            data["loss"] = "cross-entropy" if family in ("softmax-regression", "one-hidden-layer-mlp") else "squared-error"
        return data


# Bound calculator inputs and reports

class AwgnBoundInput(BaseModel):
    N: int = Field(ge=1)
    K: int = Field(ge=1)
    q: int
    delta_g: float = Field(gt=0)
    sigma_z2: float = Field(ge=0)
    Nr: int = Field(default=1, ge=1)
    noise_gain: float = Field(default=1.0, gt=0)
    alphabet: Literal["symbol", "sum"] = "symbol"
    e_r: Optional[float] = Field(default=None, ge=0)

    @field_validator("q")
    @classmethod
    def q_is_power_of_four(cls, v: int) -> int:
        return check_level_count(v)


class FadingBoundInput(BaseModel):
    gamma: List[float]
    sigma_h: float = Field(gt=0)
    sigma_z: float = Field(gt=0)
    K: int = Field(ge=1)
    N: int = Field(default=1, ge=1)
    q: int = 4
    Nr: int = Field(default=1, ge=1)
    epsilon: float = Field(default=1.0, gt=0)
    delta: float = Field(default=0.01, gt=0, lt=1)
    noise_gain: float = Field(default=1.0, gt=0)
    variant: Literal["stated", "noise-scaled"] = "stated"

    @field_validator("gamma", mode="before")
    @classmethod
    def scalar_gamma(cls, v):
        if isinstance(v, (int, float)):
            return [v]
        return v

    @field_validator("gamma")
    @classmethod
    def gamma_positive(cls, v: List[float]) -> List[float]:
        if not v or any(g <= 0 for g in v):
            raise ValueError("gamma must hold at least one positive value")
        return v

    @property
    def sigma_z_eff(self) -> float:
        """Noise deviation referred to the lattice after post-processing."""
        return self.sigma_z * math.sqrt(self.noise_gain)

    @property
    def gamma_max(self) -> float:
        return max(self.gamma)

    @property
    def c_min(self) -> float:
        return min(1.0 / g + self.sigma_h / self.sigma_z_eff for g in self.gamma)


class ConvergenceInput(BaseModel):
    eta: float = Field(gt=0)
    L: float = Field(gt=0)
    T: int = Field(ge=1)
    loss_gap: float = Field(ge=0)
    sigma_ch2: float = Field(default=0.0, ge=0)
    sigma_q2: float = Field(default=0.0, ge=0)
    theta_bar: float = Field(default=0.0, ge=0)


class LatencyInput(BaseModel):
    bandwidth: float = Field(gt=0)
    symbol_time: float = Field(gt=0)
    N: int = Field(ge=1)
    K: int = Field(ge=1)
    Nr: int = Field(ge=1)
    q: int
    sigma_z2: float = Field(gt=0)
    sigma_h2: float = Field(gt=0)
    symbol_moments: Tuple[float, float]
    delta_g: float = Field(gt=0)
    subchannels: Optional[int] = Field(default=None, ge=1)
    distortion: Literal["lattice", "level"] = "lattice"

    @field_validator("q")
    @classmethod
    def q_is_power_of_four(cls, v: int) -> int:
        return check_level_count(v)

    @field_validator("symbol_moments")
    @classmethod
    def moments_consistent(cls, v: Tuple[float, float]) -> Tuple[float, float]:
        second, first = v
        if second <= 0 or first < 0:
            raise ValueError("symbol_moments must be (E|s|^2 > 0, E|s| >= 0)")
        if first * first > second * (1 + 1e-12):
            raise ValueError("symbol_moments violate (E|s|)^2 <= E|s|^2")
        return v


class AwgnBoundReport(BaseModel):
    sigma_awgn2: float
    sigma_q2: float
    total: float
    e_r: float


class FadingBoundReport(BaseModel):
    sigma_fad2: float
    sigma_q2: float
    total: float


class LatencyReport(BaseModel):
    t_analog: float
    t_compfed: float
    t_ofdma: float
    gamma_ratio: float
    rate_analog: float
    rate_compfed: float
    distortion_analog: float
    distortion_compfed: float


class RoundMetrics(BaseModel):
    round: int
    train_loss: float
    test_accuracy: float = Field(ge=0, le=1)
    grad_mse: float = Field(ge=0)
    grad_norm2: float = Field(ge=0)


# HTTP surface

class ExperimentRequest(BaseModel):
    config: str = ""
    seed: Optional[int] = Field(default=None, ge=0, lt=2**64)


class ExperimentRunBase(BaseModel):
    command: str
    seed: int
    config_text: str


class ExperimentRunCreate(ExperimentRunBase):
    row_count: int = 0
    status: str = "completed"


class ExperimentRunRead(ExperimentRunBase):
    id: int
    row_count: int
    status: str
    created_at: datetime

    model_config = ConfigDict(from_attributes=True)
