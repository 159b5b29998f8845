"""Deterministic seed derivation shared by the optimizer and the simulator.

SplitMix64-style mixing turns a root seed plus an index path into an
independent 64-bit stream key, so work units (optimizer restarts,
simulation chunks) get reproducible randomness regardless of the order
in which they are evaluated.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def splitmix64(state: int) -> int:
    z = (state + _GAMMA) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive(root: int, *indices: int) -> int:
    """64-bit key for the work unit addressed by an index path."""
    key = root & _MASK
    for idx in indices:
        key = splitmix64(key ^ ((idx + 1) * _GAMMA & _MASK))
    return key


def generator_for(root: int, *indices: int) -> np.random.Generator:
    """Counter-based generator keyed by (root, index path)."""
    return np.random.Generator(np.random.Philox(key=derive(root, *indices)))
