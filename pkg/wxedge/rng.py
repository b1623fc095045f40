"""
Seeded random streams.

Every stochastic draw in wxedge goes through a named stream built here, so any
(seed, label, index) triple reproduces the same numbers on every platform:

* keys: ``derive_seed(*parts)`` is the first 8 bytes (little-endian) of
  BLAKE2b over ``"/".join(repr(p) for p in parts)``;
* generator: numpy ``Philox`` (counter-based) keyed with that integer;
* floats: numpy's 53-bit mantissa construction ``(u64 >> 11) * 2**-53``.
"""

import hashlib

import numpy as np

SEED_MASK = (1 << 64) - 1


def derive_seed(*parts: object) -> int:
    """Hash an ordered tuple of labels and integers into a 64-bit seed."""
    text = "/".join(repr(p) for p in parts)
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def stream(*parts: object) -> np.random.Generator:
    """Open an independent generator for the labelled stream."""
    return np.random.Generator(np.random.Philox(key=derive_seed(*parts)))
