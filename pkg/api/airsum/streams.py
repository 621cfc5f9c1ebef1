"""
Deterministic random substreams.

A stream is identified by (master_seed, experiment, trial, round, subchannel).
The experiment label is hashed with SHA-256 so the derivation does not depend
on Python's per-process string hashing; the labels become the spawn key of a
numpy SeedSequence. Same labels give the same stream no matter which process
asks for it or in which order.
"""
import hashlib

import numpy as np

MAX_SEED = 2**64


def experiment_tag(experiment: str) -> int:
    digest = hashlib.sha256(experiment.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def derive_stream(
    master_seed: int,
    experiment: str,
    trial: int = 0,
    round: int = 0,
    subchannel: int = 0,
) -> np.random.Generator:
    if not 0 <= master_seed < MAX_SEED:
        raise ValueError(f"master_seed must be an unsigned 64-bit integer, got {master_seed}")
    if min(trial, round, subchannel) < 0:
        raise ValueError("Stream labels must be non-negative")
    sequence = np.random.SeedSequence(
        entropy=master_seed,
        spawn_key=(experiment_tag(experiment), trial, round, subchannel),
    )
    return np.random.default_rng(sequence)
