"""Deterministic seed derivation.

Every stochastic component in this package draws from a numpy Generator
backed by PCG64.  A single master seed is expanded into independent
per-component seeds by hashing ``"{master}:{label}"`` with BLAKE2b and
taking the 8-byte digest as an unsigned little-endian integer.  Labels are
short stable strings such as ``"split"``, ``"tree:17"`` or ``"folds"``, so
the stream consumed by one component never depends on how much randomness
another component used.
"""

import hashlib

import numpy as np


def child_seed(master: int, label: str) -> int:
    """Derive a 64-bit component seed from the master seed and a label."""
    if not isinstance(master, int):
        raise TypeError(f"master seed must be an int, got {type(master).__name__}")
    digest = hashlib.blake2b(f"{master}:{label}".encode("utf-8"), digest_size=8)
    return int.from_bytes(digest.digest(), "little")


def make_rng(seed: int, label: str | None = None) -> np.random.Generator:
    """Build a PCG64 Generator, optionally namespaced by a component label."""
    if label is not None:
        seed = child_seed(seed, label)
    return np.random.Generator(np.random.PCG64(seed))
