"""Seeded random streams.

Every random draw in the package goes through a PCG64 bit generator
(``numpy.random.PCG64``) seeded from a ``SeedSequence``; both algorithms are
fixed by NumPy's stability policy, so a seed reproduces the same stream on
any platform. Sub-task seeds are derived from a base seed plus integer keys,
so a task's randomness does not depend on which worker runs it or when.
"""

from __future__ import annotations

import numpy as np

ALGORITHM = "PCG64"


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def derive_seed(base: int, *keys: int) -> int:
    """Independent 32-bit seed for the task identified by ``keys``."""
    ss = np.random.SeedSequence(int(base), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, np.uint32)[0])
