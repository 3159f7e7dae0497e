"""Deterministic random-stream plumbing.

Every stochastic component draws from a counter-based Philox generator keyed
by a seed chain, so batches may be generated in any order or thread count
without changing a single draw.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(*parts) -> int:
    """Stable 64-bit seed from a chain of values (master seed, cell, run, ...).

    Uses a keyed text hash so the mapping is identical across platforms and
    Python processes (unlike builtin hash()).
    """
    text = ":".join(repr(p) for p in parts)
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def make_rng(*parts) -> np.random.Generator:
    """Counter-based generator for the given seed chain."""
    entropy = [int(p) if isinstance(p, (int, np.integer)) else derive_seed(p) for p in parts]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))
