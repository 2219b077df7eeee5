"""Per-purpose random streams.

Every stream is a Philox-4x64 counter-based generator keyed by
``SeedSequence([seed, run, purpose])``, so streams never overlap and each
run can be regenerated independently of the others.
"""

from __future__ import annotations

import numpy as np

PURPOSES = {
    "couplings": 0,  # reservoir J_ij
    "weights": 1,  # input weights W_j
    "reservoir_init": 2,
    "train": 3,
    "test": 4,
}


def stream(seed: int, run: int, purpose: str) -> np.random.Generator:
    try:
        key = PURPOSES[purpose]
    except KeyError:
        raise ValueError(f"unknown stream purpose {purpose!r}") from None
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, run, key])))
