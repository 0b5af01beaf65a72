"""Seeded SRAM-PUF statistical model: uniform power-up bits per cell and
binary-symmetric re-read noise.

Randomness comes from counter-mode Philox streams keyed by hashing the
model seed together with a stream label, so any trial's bits are
computable directly (no sequential burn-through) and parallel runs are
order-independent.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "RNG_ALGO",
    "PufModel",
    "derive_seed",
    "draw_enrollment",
    "draw_authentication",
    "trial_model",
    "read_sram_dump",
    "write_sram_dump",
]

RNG_ALGO = "philox4x64-v1"

_SRAM_MAGIC = b"SRAM"


def derive_seed(*parts) -> int:
    """128-bit sub-seed from hashing a tuple of ints / strings / bytes.

    Stable across platforms and runs; used to key independent Philox
    streams for (seed, label, index) combinations.
    """
    h = hashlib.sha256()
    for part in parts:
        if isinstance(part, (int, np.integer)):
            v = int(part)
            b = v.to_bytes((v.bit_length() + 8) // 8 + 1, "big", signed=True)
            h.update(b"i" + struct.pack(">I", len(b)) + b)
        elif isinstance(part, str):
            b = part.encode("utf-8")
            h.update(b"s" + struct.pack(">I", len(b)) + b)
        elif isinstance(part, bytes):
            h.update(b"b" + struct.pack(">I", len(part)) + part)
        else:
            raise TypeError(f"cannot derive a seed from {type(part).__name__}")
    return int.from_bytes(h.digest()[:16], "big")


def _stream(seed: int, *labels) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=derive_seed(seed, *labels)))


@dataclass(frozen=True)
class PufModel:
    """One SRAM array: cell count, re-read error rate, reproducibility seed."""

    n_cells: int
    p: float
    seed: int
    rng_algo: str = RNG_ALGO

    def __post_init__(self):
        if self.n_cells < 1:
            raise ValueError("cell count must be >= 1")
        if not 0.0 <= self.p <= 0.5:
            raise ValueError(f"error probability must be in [0, 0.5], got {self.p}")
        if self.rng_algo != RNG_ALGO:
            raise ValueError(f"unknown rng algorithm {self.rng_algo!r}")


def draw_enrollment(model: PufModel) -> np.ndarray:
    """Power-up readout: n_cells independent uniform bits."""
    return _stream(model.seed, "enroll").integers(0, 2, model.n_cells, dtype=np.uint8)


def draw_authentication(x, model: PufModel, trial_index: int) -> np.ndarray:
    """Re-read of x with independent BSC(p) noise for this trial index."""
    xa = np.asarray(x, dtype=np.uint8)
    if xa.shape != (model.n_cells,):
        raise ValueError(f"readout must have length {model.n_cells}, got shape {xa.shape}")
    noise = _stream(model.seed, "auth", int(trial_index)).random(model.n_cells) < model.p
    return xa ^ noise.astype(np.uint8)


def trial_model(model: PufModel, trial_index: int) -> PufModel:
    """Independent per-trial sub-model (fresh device) of the same shape."""
    return replace(model, seed=derive_seed(model.seed, "trial", int(trial_index)))


def write_sram_dump(path, bits) -> None:
    """Raw readout container: magic 'SRAM', bit count (u32 BE), packed bits."""
    a = np.asarray(bits, dtype=np.uint8)
    if a.ndim != 1 or (a.size and not np.isin(a, (0, 1)).all()):
        raise ValueError("dump payload must be a flat 0/1 vector")
    with open(path, "wb") as fh:
        fh.write(_SRAM_MAGIC + struct.pack(">I", a.size) + np.packbits(a).tobytes())


def read_sram_dump(path) -> np.ndarray:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != _SRAM_MAGIC:
        raise ValueError("not an SRAM dump (bad magic)")
    (bit_len,) = struct.unpack(">I", blob[4:8])
    packed = np.frombuffer(blob[8:], dtype=np.uint8)
    if packed.size != (bit_len + 7) // 8:
        raise ValueError("truncated SRAM dump")
    return np.unpackbits(packed, count=bit_len)
