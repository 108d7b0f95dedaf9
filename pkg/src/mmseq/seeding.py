"""Deterministic seed derivation.

All randomness flows through numpy's PCG64 seeded with SeedSequence.
Child streams (replication m of an assessment run, the pattern draw
inside the constructive heuristic, ...) use ``derive_seed(base, *keys)``
so any sub-computation is reproducible in isolation from its base seed
and its key path alone.
"""

from __future__ import annotations

import numpy as np
from numpy.random import Generator, PCG64, SeedSequence


def derive_seed(base: int, *keys: int) -> int:
    """A stable child seed for the stream identified by ``keys`` under ``base``.

    Keys are shifted by one before hashing so that a zero key differs
    from an absent key (SeedSequence strips trailing zero words).
    """
    ss = SeedSequence((int(base),) + tuple(int(k) + 1 for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def make_rng(seed: int) -> Generator:
    """A fresh PCG64 generator for ``seed``."""
    return Generator(PCG64(SeedSequence(int(seed))))
