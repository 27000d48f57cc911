"""Stable seed derivation.

``derive_seed(master, index)`` is the first 8 bytes (big-endian) of the
BLAKE2b digest of the two integers packed as signed 64-bit big-endian
values, masked to 63 bits so the result is a valid non-negative seed for
``numpy.random.default_rng``. The digest is platform independent, so the
same (master, index) yields the same seed everywhere.
"""

from __future__ import annotations

import hashlib
import struct

_PACK = struct.Struct(">qq")
_MASK_63 = (1 << 63) - 1


def hash64(master_seed: int, index: int) -> int:
    digest = hashlib.blake2b(_PACK.pack(master_seed, index), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def derive_seed(master_seed: int, index: int) -> int:
    return hash64(master_seed, index) & _MASK_63


__all__ = ["derive_seed", "hash64"]
