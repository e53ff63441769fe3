"""Counter-based random streams keyed by (seed, sample index, role)."""

import numpy as np

ROLE_STIFFNESS = 0
ROLE_MASS = 1
ROLE_DISORDER = 2


def stream(seed: int, index: int, role: int) -> np.random.Generator:
    # Philox is counter based; the spawn key makes each (index, role) an
    # independent stream no matter which worker draws it.
    if seed < 0 or index < 0:
        raise ValueError("seed and index must be non-negative integers")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(index), int(role)))
    return np.random.Generator(np.random.Philox(ss))
