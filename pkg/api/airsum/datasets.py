import gzip
import logging
import os
import struct
from dataclasses import dataclass
from typing import List, Literal, Optional

import numpy as np

logger = logging.getLogger(__name__)

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


@dataclass
class Dataset:
    x_train: np.ndarray
    y_train: np.ndarray
    x_test: np.ndarray
    y_test: np.ndarray
    classes: int

    @property
    def feature_dim(self) -> int:
        return self.x_train.shape[1]

    @property
    def n_train(self) -> int:
        return self.x_train.shape[0]


@dataclass
class DataPartition:
    indices: List[np.ndarray]
    mode: str

    @property
    def sizes(self) -> List[int]:
        return [len(idx) for idx in self.indices]


def make_synthetic_dataset(
    classes: int,
    feature_dim: int,
    samples_per_class: int,
    separation: float,
    rng: np.random.Generator,
    train_fraction: float = 0.8,
) -> Dataset:
    """
    Isotropic unit-variance Gaussian clusters.

    Class c is centered on (separation / sqrt(2)) e_c, so any two class means
    are `separation` apart. The train/test split is stratified: every class
    contributes round(train_fraction * samples_per_class) training samples.

    Args:
        classes: Number of clusters (<= feature_dim)
        feature_dim: Input dimension
        samples_per_class: Draws per cluster
        separation: Distance between any two class means
        rng: Random stream
        train_fraction: Share of each cluster used for training

    Returns:
        Dataset: shuffled train/test split
    """
    if classes < 1 or feature_dim < 1 or samples_per_class < 1:
        raise ValueError("classes, feature_dim and samples_per_class must be positive")
    if classes > feature_dim:
        raise ValueError(f"classes ({classes}) must not exceed feature_dim ({feature_dim})")
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must be in (0, 1)")
    train_per_class = int(round(train_fraction * samples_per_class))
    if not 0 < train_per_class < samples_per_class:
        raise ValueError(
            f"samples_per_class={samples_per_class} leaves no train or no test sample at train_fraction={train_fraction}"
        )
    means = np.zeros((classes, feature_dim))
    means[np.arange(classes), np.arange(classes)] = separation / np.sqrt(2.0)
    labels = np.repeat(np.arange(classes), samples_per_class)
    features = means[labels] + rng.standard_normal((labels.shape[0], feature_dim))
    offsets = samples_per_class * np.arange(classes)[:, None]
    picks = rng.permuted(np.tile(np.arange(samples_per_class), (classes, 1)), axis=1) + offsets
    train_idx = rng.permutation(picks[:, :train_per_class].reshape(-1))
    test_idx = rng.permutation(picks[:, train_per_class:].reshape(-1))
    return Dataset(
        x_train=features[train_idx],
        y_train=labels[train_idx],
        x_test=features[test_idx],
        y_test=labels[test_idx],
        classes=classes,
    )


def _shards_per_class(counts: np.ndarray, shard_count: int) -> np.ndarray:
    """Largest-remainder share of `shard_count` shards, at least one per class."""
    if shard_count < counts.shape[0]:
        raise ValueError(f"{shard_count} shards cannot keep {counts.shape[0]} classes apart")
    raw = shard_count * counts / counts.sum()
    shares = np.maximum(np.floor(raw).astype(int), 1)
    shares = np.minimum(shares, counts)
    while shares.sum() > shard_count:
        shares[np.argmax(np.where(shares > 1, shares, -1))] -= 1
    remainder = raw - shares
    while shares.sum() < shard_count:
        room = np.where(shares < counts, remainder, -np.inf)
        if not np.isfinite(room.max()):
            raise ValueError(f"Not enough samples for {shard_count} shards")
        pick = int(np.argmax(room))
        shares[pick] += 1
        remainder[pick] -= 1
    return shares


def partition(
    dataset: Dataset,
    K: int,
    mode: Literal["iid", "label-skew"],
    rng: np.random.Generator,
    shards_per_device: int = 2,
    equal_sizes: bool = True,
) -> DataPartition:
    """
    Split the training set into K disjoint device datasets.

    iid shuffles and splits evenly. label-skew cuts every class into its own
    shards, with the shard count shared between classes by sample count, and
    hands every device `shards_per_device` shards picked at random. No shard
    mixes labels, so a device sees at most `shards_per_device` labels. With
    `equal_sizes` every shard is cut down to the smallest one and the
    leftover samples stay unused.

    Args:
        dataset: Source data
        K: Number of devices
        mode: "iid" or "label-skew"
        rng: Random stream
        shards_per_device: Shards per device in label-skew mode
        equal_sizes: Give every device the same count (iid rejects an uneven
            split, label-skew trims shards)

    Returns:
        DataPartition: one index array per device
    """
    n = dataset.n_train
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    if K > n:
        raise ValueError(f"Cannot split {n} samples across {K} devices")
    if mode == "iid":
        if equal_sizes and n % K:
            raise ValueError(f"{n} training samples are not divisible by K={K}")
        order = rng.permutation(n)
        return DataPartition(indices=list(np.array_split(order, K)), mode=mode)
    if mode == "label-skew":
        shard_count = K * shards_per_device
        labels, counts = np.unique(dataset.y_train, return_counts=True)
        shares = _shards_per_class(counts, shard_count)
        shards: List[np.ndarray] = []
        for label, share in zip(labels, shares):
            members = rng.permutation(np.flatnonzero(dataset.y_train == label))
            shards.extend(np.array_split(members, share))
        if equal_sizes:
            size = min(len(shard) for shard in shards)
            dropped = n - size * shard_count
            if dropped:
                logger.warning(f"label-skew: trimmed every shard to {size} samples, {dropped} of {n} left unused")
            shards = [shard[:size] for shard in shards]
        assignment = rng.permutation(shard_count)
        indices = [
            np.concatenate([shards[s] for s in assignment[k * shards_per_device:(k + 1) * shards_per_device]])
            for k in range(K)
        ]
        return DataPartition(indices=indices, mode=mode)
    raise ValueError(f"Unknown partition mode {mode}")


def _open(path: str):
    if path.endswith(".gz"):
        return gzip.open(path, "rb")
    return open(path, "rb")


def read_idx(path: str) -> np.ndarray:
    """
    Read an IDX file (big-endian header; 0x00000803 images, 0x00000801 labels).

    Returns:
        np.ndarray: uint8 array of shape (count, rows, cols) or (count,)
    """
    with _open(path) as handle:
        header = handle.read(8)
        if len(header) < 8:
            raise ValueError(f"{path}: truncated IDX header")
        magic, count = struct.unpack(">II", header)
        if magic == IDX_IMAGES_MAGIC:
            rows, cols = struct.unpack(">II", handle.read(8))
            shape = (count, rows, cols)
        elif magic == IDX_LABELS_MAGIC:
            shape = (count,)
        else:
            raise ValueError(f"{path}: unsupported IDX magic number 0x{magic:08x}")
        payload = handle.read()
    expected = int(np.prod(shape))
    if len(payload) < expected:
        raise ValueError(f"{path}: expected {expected} bytes of data, found {len(payload)}")
    return np.frombuffer(payload[:expected], dtype=np.uint8).reshape(shape)


def _find(directory: str, stem: str) -> str:
    for name in (stem, stem + ".gz"):
        path = os.path.join(directory, name)
        if os.path.exists(path):
            return path
    raise ValueError(f"{directory}: missing IDX file {stem}[.gz]")


def load_idx_dataset(directory: str, limit: Optional[int] = None) -> Dataset:
    """MNIST-layout directory to a Dataset with flattened features in [0, 1]."""
    x_train = read_idx(_find(directory, "train-images-idx3-ubyte"))
    y_train = read_idx(_find(directory, "train-labels-idx1-ubyte"))
    x_test = read_idx(_find(directory, "t10k-images-idx3-ubyte"))
    y_test = read_idx(_find(directory, "t10k-labels-idx1-ubyte"))
    if x_train.shape[0] != y_train.shape[0] or x_test.shape[0] != y_test.shape[0]:
        raise ValueError(f"{directory}: image and label counts differ")
    if limit is not None:
        x_train, y_train = x_train[:limit], y_train[:limit]
    logger.info(f"Loaded {x_train.shape[0]} training and {x_test.shape[0]} test images from {directory}")
    return Dataset(
        x_train=x_train.reshape(x_train.shape[0], -1).astype(float) / 255.0,
        y_train=y_train.astype(np.int64),
        x_test=x_test.reshape(x_test.shape[0], -1).astype(float) / 255.0,
        y_test=y_test.astype(np.int64),
        classes=int(max(y_train.max(), y_test.max())) + 1,
    )
