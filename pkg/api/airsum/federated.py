"""
Federated edge learning loop.

Every round each device computes a gradient on its shard at the current
global model, the server aggregates the K gradients through the configured
pipeline (ideal average, digital q-QAM over AWGN or fading, or analog
amplitude modulation), and the global model takes one SGD step.
"""
import logging
from dataclasses import dataclass
from typing import Callable, List, NamedTuple, Optional, Tuple, Union

import numpy as np

from .channel import fading_sum, transmit_awgn
from .codec import decode_sum_array, dequantize_array, encode_array, quantize_array
from .config import ExperimentConfig
from .datasets import Dataset, load_idx_dataset, make_synthetic_dataset, partition
from .learners import Learner, build_learner
from .power import postprocess, preprocess, select_beta
from .schemas import LearnerSpec, PowerScaling, QuantizerSpec, RoundMetrics, SystemConfig
from .streams import derive_stream

logger = logging.getLogger(__name__)

DIGITAL_MODES = ("awgn", "fading")
ANALOG_MODES = ("analog-awgn", "analog-fading")
CLIP_WARNING_SHARE = 0.05

ChannelStreams = Union[np.random.Generator, Callable[[int], np.random.Generator]]


@dataclass
class LearnerState:
    w: np.ndarray
    round: int = 0


class AggregationResult(NamedTuple):
    g_hat: np.ndarray
    g_ideal: np.ndarray
    grad_mse: float
    clipped_fraction: float


def frame_slices(n: int, frame_size: Optional[int]) -> List[slice]:
    """Split n parameters into consecutive time slots of at most frame_size subchannels."""
    size = n if frame_size is None else frame_size
    if size < 1:
        raise ValueError(f"frame_size must be >= 1, got {size}")
    return [slice(start, min(start + size, n)) for start in range(0, n, size)]


def local_gradient(
    learner: Learner,
    state: LearnerState,
    x: np.ndarray,
    y: np.ndarray,
    batch_size: Optional[int],
    local_epochs: int,
    eta: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """
    Gradient a device sends for the current round.

    Args:
        learner: Model family
        state: Current global model
        x: Shard features
        y: Shard labels
        batch_size: Mini-batch size; None uses the whole shard
        local_epochs: 0 sends one (mini-batch) gradient at w; otherwise the
            device runs that many SGD epochs and sends (w_start - w_end) / eta
        eta: Learning rate
        rng: Device stream for batch selection

    Returns:
        np.ndarray: Effective gradient, shape (n_params,)
    """
    n = x.shape[0]
    if n == 0:
        raise ValueError("Cannot compute a gradient on an empty shard")
    if local_epochs < 0:
        raise ValueError(f"local_epochs must be >= 0, got {local_epochs}")
    size = n if batch_size is None else min(batch_size, n)

    if local_epochs == 0:
        if size == n:
            return learner.loss_and_grad(state.w, x, y)[1]
        batch = rng.choice(n, size=size, replace=False)
        return learner.loss_and_grad(state.w, x[batch], y[batch])[1]

    w = state.w.copy()
    for _ in range(local_epochs):
        order = rng.permutation(n)
        for start in range(0, n, size):
            batch = order[start:start + size]
            w = w - eta * learner.loss_and_grad(w, x[batch], y[batch])[1]
    return (state.w - w) / eta


def aggregate(
    gradients: np.ndarray,
    mode: str,
    cfg: SystemConfig,
    spec: QuantizerSpec,
    scaling: PowerScaling,
    rng: ChannelStreams,
    frame_size: Optional[int] = None,
) -> AggregationResult:
    """
    Server-side estimate of the average gradient.

    Digital modes quantize, encode onto q-QAM, scale, cross the channel,
    denormalize, multiply by K to land on the sum lattice, decode the level
    sums and dequantize their average. Analog modes send the clipped gradient
    entries directly and keep the real part of the denormalized output.

    Args:
        gradients: Array of shape (K, N)
        mode: ideal, awgn, fading, analog-awgn or analog-fading
        cfg: System parameters (K, Nr, noise, channel law)
        spec: Quantizer; its delta_g is also the analog clip bound
        scaling: Transmit scaling with one dataset size per device
        rng: One stream used for every frame, or a callable giving the stream of frame i
        frame_size: Subchannels per time slot; None sends all N at once

    Returns:
        AggregationResult: estimate, ideal average, squared error and share of clipped entries
    """
    gradients = np.asarray(gradients, dtype=float)
    if gradients.ndim != 2 or gradients.shape[0] != cfg.K:
        raise ValueError(f"Expected gradients of shape ({cfg.K}, N), got {gradients.shape}")
    if len(scaling.dataset_sizes) != cfg.K:
        raise ValueError(f"Expected {cfg.K} dataset sizes, got {len(scaling.dataset_sizes)}")
    g_ideal = gradients.mean(axis=0)
    if mode == "ideal":
        return AggregationResult(g_hat=g_ideal.copy(), g_ideal=g_ideal, grad_mse=0.0, clipped_fraction=0.0)

    clipped_fraction = float(np.mean(np.abs(gradients) > spec.delta_g))
    if mode in DIGITAL_MODES:
        if not scaling.equal_sizes:
            raise ValueError("Digital aggregation requires equal dataset sizes")
        symbols = encode_array(quantize_array(gradients, spec), spec.q)
    elif mode in ANALOG_MODES:
        symbols = np.clip(gradients, -spec.delta_g, spec.delta_g).astype(complex)
    else:
        raise ValueError(f"Unknown aggregator mode {mode}")

    n = gradients.shape[1]
    received = np.empty(n, dtype=complex)
    for index, part in enumerate(frame_slices(n, frame_size)):
        stream = rng(index) if callable(rng) else rng
        frame = np.stack([preprocess(symbols[k, part], d_k, scaling) for k, d_k in enumerate(scaling.dataset_sizes)])
        if mode in ("awgn", "analog-awgn"):
            received[part] = transmit_awgn(frame, cfg, stream)
        else:
            received[part] = fading_sum(frame, cfg, stream)
    r = postprocess(received, scaling.dataset_sizes, scaling)

    if mode in DIGITAL_MODES:
        level_sums = decode_sum_array(cfg.K * r, cfg.K, spec.q)
        g_hat = dequantize_array(level_sums / cfg.K, spec)
    else:
        g_hat = r.real
    grad_mse = float(np.sum((g_ideal - g_hat) ** 2))
    return AggregationResult(g_hat=g_hat, g_ideal=g_ideal, grad_mse=grad_mse, clipped_fraction=clipped_fraction)


def evaluate(learner: Learner, state: LearnerState, dataset: Dataset, split: str = "test") -> Tuple[float, float]:
    """(loss, accuracy) of the global model on the test or train split."""
    if split == "test":
        x, y = dataset.x_test, dataset.y_test
    elif split == "train":
        x, y = dataset.x_train, dataset.y_train
    else:
        raise ValueError(f"Unknown split {split}")
    return learner.loss(state.w, x, y), learner.accuracy(state.w, x, y)


def build_dataset(exp: ExperimentConfig, trial: int = 0) -> Dataset:
    if exp.dataset == "idx":
        if not exp.dataset_dir:
            raise ValueError("dataset = idx needs dataset_dir")
        return load_idx_dataset(exp.dataset_dir)
    return make_synthetic_dataset(
        exp.classes,
        exp.feature_dim,
        exp.samples_per_class,
        exp.separation,
        derive_stream(exp.seed, "train/dataset", trial),
    )


def train_with_state(
    exp: ExperimentConfig, trial: int = 0, dataset: Optional[Dataset] = None
) -> Tuple[List[RoundMetrics], LearnerState]:
    """
    Run exp.rounds communication rounds for one seed.

    Streams: the dataset, partition and initial model each have their own
    label; device d in round m draws from ("train/local", trial, m, d) and
    frame f of round m's channel from ("train/channel", trial, m, f).

    Returns:
        Tuple[List[RoundMetrics], LearnerState]: per-round metrics and the final model
    """
    if dataset is None:
        dataset = build_dataset(exp, trial)
    learner = build_learner(
        LearnerSpec(
            family=exp.model,
            input_dim=dataset.feature_dim,
            class_count=dataset.classes,
            hidden_units=exp.hidden,
        )
    )
    digital = exp.aggregator in DIGITAL_MODES
    split = partition(
        dataset,
        exp.K,
        exp.data_mode,
        derive_stream(exp.seed, "train/partition", trial),
        shards_per_device=exp.shards,
        equal_sizes=digital,
    )

    n_params = learner.n_params
    frame = n_params if exp.frame_size is None else min(exp.frame_size, n_params)
    cfg = exp.system(N=frame)
    spec = exp.quantizer()
    peak_energy = None if digital else spec.delta_g ** 2
    scaling = select_beta(split.sizes, cfg, exp.beta_margin, peak_energy=peak_energy)

    state = LearnerState(w=learner.init_params(derive_stream(exp.seed, "train/init", trial)))
    shards = [(dataset.x_train[idx], dataset.y_train[idx]) for idx in split.indices]
    logger.info(
        f"Training {exp.model} ({n_params} parameters) for {exp.rounds} rounds, "
        f"aggregator={exp.aggregator}, K={exp.K}, Nr={exp.Nr}, q={exp.q}, trial={trial}"
    )

    metrics: List[RoundMetrics] = []
    warned = False
    for m in range(exp.rounds):
        gradients = np.stack([
            local_gradient(
                learner, state, x, y, exp.batch, exp.local_epochs, exp.eta,
                derive_stream(exp.seed, "train/local", trial, m, k),
            )
            for k, (x, y) in enumerate(shards)
        ])

        def channel(index: int, round_index: int = m) -> np.random.Generator:
            return derive_stream(exp.seed, "train/channel", trial, round_index, index)

        result = aggregate(gradients, exp.aggregator, cfg, spec, scaling, channel, frame)
        if result.clipped_fraction > CLIP_WARNING_SHARE and not warned:
            logger.warning(
                f"{result.clipped_fraction:.1%} of gradient entries exceed delta_g={spec.delta_g} in round {m}"
            )
            warned = True

        w = state.w - exp.eta * result.g_hat
        if not np.all(np.isfinite(w)):
            raise ValueError(f"Model parameters became non-finite in round {m}")
        state = LearnerState(w=w, round=m + 1)

        train_loss, _ = evaluate(learner, state, dataset, split="train")
        _, test_accuracy = evaluate(learner, state, dataset, split="test")
        metrics.append(
            RoundMetrics(
                round=m,
                train_loss=train_loss,
                test_accuracy=test_accuracy,
                grad_mse=result.grad_mse,
                grad_norm2=float(np.sum(result.g_ideal ** 2)),
            )
        )
        logger.debug(f"Round {m}: loss={train_loss:.6g}, accuracy={test_accuracy:.4f}, grad_mse={result.grad_mse:.6g}")
    return metrics, state


def train(exp: ExperimentConfig, trial: int = 0, dataset: Optional[Dataset] = None) -> List[RoundMetrics]:
    return train_with_state(exp, trial, dataset)[0]
