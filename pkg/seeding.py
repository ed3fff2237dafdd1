"""Derivation of per-component random seeds from one root seed."""

from __future__ import annotations

import zlib

import numpy as np


def derive_seed(root_seed: int, component: str, *counters: int) -> int:
    """Return a reproducible 32-bit seed for `component` (and optional counters)."""
    entropy = [int(root_seed), zlib.crc32(component.encode("utf-8")), *map(int, counters)]
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])


def component_rng(root_seed: int, component: str, *counters: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(root_seed, component, *counters))
