"""Deterministic RNG derivation from 64-bit seeds plus context integers."""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def derive_rng(*parts: int) -> np.random.Generator:
    """Build a Generator from any mix of signed 64-bit integers."""
    return np.random.default_rng([int(p) & _MASK64 for p in parts])


def mix_seed(*parts: int) -> int:
    """Collapse several integers into one stable 64-bit seed (FNV-1a)."""
    h = 0xCBF29CE484222325
    for part in parts:
        for byte in (int(part) & _MASK64).to_bytes(8, "little"):
            h = ((h ^ byte) * 0x100000001B3) & _MASK64
    return h
