"""Keyed random substreams.

Every random draw in a run comes from a generator derived from
``(master_seed, *key)``, so the numbers a given trial block sees do not
depend on execution order or on how many workers share the load.
"""

from __future__ import annotations

import numpy as np


def substream(master_seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))
