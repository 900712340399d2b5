"""Deterministic random-stream derivation.

Every stochastic routine in this package takes an integer master seed and
derives independent child streams from it by hashing a (seed, label, index...)
path with BLAKE2b.  Hashing makes the derivation order-free: a stream's state
depends only on its path, never on how many other streams were created before
it or on which process created it.  Monte Carlo runs therefore reproduce
byte-identically under any trial scheduling.
"""

from __future__ import annotations

import hashlib

import numpy as np


def spawn(master_seed: int, *path: int | str) -> np.random.Generator:
    """Derive an independent generator for (master_seed, *path).

    Path elements may be ints or short strings (e.g. a phase label and a
    trial index).  The same path always yields the same stream.
    """
    h = hashlib.blake2b(digest_size=32)
    h.update(int(master_seed).to_bytes(16, "little", signed=True))
    for part in path:
        if isinstance(part, str):
            h.update(b"s" + part.encode("utf-8") + b"\x00")
        else:
            h.update(b"i" + int(part).to_bytes(16, "little", signed=True))
    entropy = int.from_bytes(h.digest(), "little")
    return np.random.default_rng(np.random.SeedSequence(entropy))
