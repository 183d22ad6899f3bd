"""Seed handling helpers.

All stochastic operations take either an integer seed or a numpy Generator.
Derived streams are built from integer tuples so that every sub-draw is
reproducible from one master seed.
"""
from __future__ import annotations

import numpy as np


def ensure_rng(seed_or_rng) -> np.random.Generator:
    """Return a Generator, seeding one if an int (or int sequence) is given."""
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)


def derived_rng(*entropy: int) -> np.random.Generator:
    """Deterministic child generator for a tuple of non-negative ints."""
    return np.random.default_rng([int(e) for e in entropy])


def draw_seed(rng) -> int:
    """Draw a storable 63-bit seed from a generator."""
    return int(ensure_rng(rng).integers(0, 2**63 - 1))
