"""Named, disjoint random streams derived from a run seed.

Every stream is keyed by ``(seed, stream id, *keys)`` so draws made at
iteration ``t`` do not depend on how many draws happened before it; that is
what makes resumed runs bit-identical to uninterrupted ones.
"""

from __future__ import annotations

import numpy as np

STREAMS = {
    "init": 1,
    "lambda": 2,
    "acquisition": 3,
    "noise": 4,
    "sparse_lambdas": 5,
    "dm_lambda": 6,
    "random_sparsify": 7,
    "eval_lambdas": 8,
    "random_baseline": 9,
    "hypervolume": 10,
    "oracle": 11,
}


def stream(seed: int, name: str, *keys: int) -> np.random.Generator:
    entropy = [int(seed), STREAMS[name], *(int(k) for k in keys)]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
