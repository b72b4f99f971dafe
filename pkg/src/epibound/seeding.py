"""Deterministic seed derivation for independent substreams.

Every stochastic routine takes one integer seed; nested work derives child
seeds from a path of integers via SeedSequence, so parallel and serial
execution schedules produce identical results.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def normalize_seed(seed: int) -> int:
    """Map any 64-bit integer (negatives included) onto SeedSequence's domain."""
    return int(seed) & _MASK64


def derive_seed(*path: int) -> int:
    """Collapse a path of integers into one reproducible 64-bit seed."""
    ss = np.random.SeedSequence([normalize_seed(p) for p in path])
    return int(ss.generate_state(1, np.uint64)[0])
