"""Deterministic, splittable random streams.

Every random choice in the library flows from a single 64-bit seed.
Independent substreams are derived by hashing string labels into numpy
``SeedSequence`` spawn keys, so components can re-derive exactly the
stream they need without replaying anyone else's draws.
"""
from __future__ import annotations

import hashlib

import numpy as np


def child_rng(seed: int, *labels: object) -> np.random.Generator:
    """Generator for the substream identified by ``labels`` under ``seed``.

    Labels are stringified and hashed, so any hashable-ish descriptive
    values (strings, ints, tuples) work and the mapping is stable across
    processes and platforms.
    """
    key = tuple(
        int.from_bytes(hashlib.sha256(str(lab).encode()).digest()[:4], "big")
        for lab in labels
    )
    ss = np.random.SeedSequence(entropy=int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=key)
    return np.random.default_rng(ss)


def unit_complex(rng: np.random.Generator) -> complex:
    """Random unit-modulus complex number (for the gamma trick)."""
    theta = rng.uniform(0.0, 2.0 * np.pi)
    return complex(np.cos(theta), np.sin(theta))


def complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    """Standard complex Gaussian array."""
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)
