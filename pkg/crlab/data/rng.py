"""Reproducible random substreams.

Every sampler draws from a Philox (counter-based) generator whose key is derived
from ``(seed, *tags)`` through ``numpy.random.SeedSequence``. Tags are hashed with
BLAKE2b so that the same tag maps to the same substream on every platform.
"""
import hashlib
from typing import Union

import numpy as np
import torch

Tag = Union[str, int, float]


def _tag_words(tag: Tag) -> int:
    digest = hashlib.blake2b(repr(tag).encode("utf-8"), digest_size=4).digest()
    return int.from_bytes(digest, "little")


def seed_sequence(seed: int, *tags: Tag) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=seed, spawn_key=tuple(_tag_words(t) for t in tags))


def derive_rng(seed: int, *tags: Tag) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed_sequence(seed, *tags)))


def derive_seed(seed: int, *tags: Tag) -> int:
    # torch.Generator.manual_seed accepts at most 64 bits
    return int(seed_sequence(seed, *tags).generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def torch_generator(seed: int, *tags: Tag) -> torch.Generator:
    return torch.Generator().manual_seed(derive_seed(seed, *tags))
