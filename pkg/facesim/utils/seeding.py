"""Labelled seed streams.

A global seed is split into independent per-component streams by hashing a
component label into a 64-bit offset. Adding a new label never perturbs the
draws of an existing one.
"""

from __future__ import annotations

import hashlib

import numpy as np

_UINT64 = 2**64


def label_offset(label: str) -> int:
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def seed_sequence(global_seed: int, label: str) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(global_seed) % _UINT64, label_offset(label)])


def derive_seed(global_seed: int, label: str) -> int:
    """63-bit integer seed for the stream ``label`` (fits a signed JSON int)."""
    state = seed_sequence(global_seed, label).generate_state(1, dtype=np.uint64)
    return int(state[0] >> np.uint64(1))


def make_rng(seed: int, label: str = "") -> np.random.Generator:
    if label:
        return np.random.default_rng(seed_sequence(seed, label))
    return np.random.default_rng(int(seed) % _UINT64)
