"""Key hashing: the M-bit verification tag computed at enrollment and
checked during regeneration.  A truncated standard cryptographic hash
stands in for the system's one-way hash; its internal design is out of
scope here.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

__all__ = ["HashConfig", "HashTag", "hash_key", "SUPPORTED_M_BITS", "DEFAULT_HASH"]

SUPPORTED_M_BITS = (32, 64, 128, 256)
_ALGOS = {"sha256": hashlib.sha256}


@dataclass(frozen=True)
class HashConfig:
    """Tag width and underlying hash selection."""

    m_bits: int = 128
    algo: str = "sha256"

    def __post_init__(self):
        if self.m_bits not in SUPPORTED_M_BITS:
            raise ValueError(f"tag width must be one of {SUPPORTED_M_BITS}, got {self.m_bits}")
        if self.algo not in _ALGOS:
            raise ValueError(f"unsupported hash algorithm {self.algo!r}")


DEFAULT_HASH = HashConfig()


@dataclass(frozen=True)
class HashTag:
    """Truncated digest of a key, plus enough metadata to recompute it."""

    m_bits: int
    digest: bytes
    algo_id: str = "sha256"

    def __post_init__(self):
        if self.m_bits not in SUPPORTED_M_BITS:
            raise ValueError(f"tag width must be one of {SUPPORTED_M_BITS}, got {self.m_bits}")
        if len(self.digest) != self.m_bits // 8:
            raise ValueError(
                f"digest must be {self.m_bits // 8} bytes for m_bits={self.m_bits}, "
                f"got {len(self.digest)}"
            )
        if self.algo_id not in _ALGOS:
            raise ValueError(f"unsupported hash algorithm {self.algo_id!r}")

    def config(self) -> HashConfig:
        return HashConfig(self.m_bits, self.algo_id)

    def matches(self, key_bits) -> bool:
        """Whether the tag of `key_bits` equals this tag."""
        return hash_key(key_bits, self.config()) == self


def _key_message(bits: np.ndarray) -> bytes:
    # 64-bit big-endian bit-length prefix, then MSB-first packed bits
    # zero-padded to a whole byte.
    return bits.size.to_bytes(8, "big") + np.packbits(bits).tobytes()


def hash_key(key_bits, cfg: HashConfig = DEFAULT_HASH) -> HashTag:
    """Tag for a key: hash of (length prefix || packed bits), truncated.

    `key_bits` is any 0/1 sequence; objects exposing `to_array()` (bit
    containers, secret keys) are accepted directly.
    """
    if hasattr(key_bits, "to_array"):
        bits = key_bits.to_array()
    else:
        bits = np.asarray(key_bits, dtype=np.uint8)
    if bits.ndim != 1:
        raise ValueError("key bits must be one-dimensional")
    full = _ALGOS[cfg.algo](_key_message(bits)).digest()
    return HashTag(cfg.m_bits, full[: cfg.m_bits // 8], cfg.algo)
