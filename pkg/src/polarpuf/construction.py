"""Polar code construction: Bhattacharyya reliability profiles, frozen-set
selection, puncture patterns, and the serialized code description.

The reliability recursion maps a parent estimate z to the child pair
(2z - z^2, z^2); children are interleaved so the leaf vector is indexed by
the natural (non-bit-reversed) input position of the G_N = G_2^{kron n}
transform.  The frozen set is the N-K least reliable positions, which
realizes the asymptotic entropy-threshold definition at finite length.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "ReliabilityProfile",
    "PuncturePattern",
    "CodeSpec",
    "EMPTY_PUNCTURE",
    "bhattacharyya_profile",
    "choose_frozen_set",
    "default_puncture",
    "quasi_uniform_puncture",
    "construct_code",
]

CONSTRUCTION_ID = "bhattacharyya-v1"


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class ReliabilityProfile:
    """Per-synthetic-channel Bhattacharyya estimates, natural order."""

    n_levels: int
    z: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.z, dtype=np.float64)
        if z.shape != (1 << self.n_levels,):
            raise ValueError(f"profile must have length 2^{self.n_levels}")
        if (z < 0.0).any() or (z > 1.0).any():
            raise ValueError("Bhattacharyya estimates must lie in [0, 1]")
        z.flags.writeable = False
        object.__setattr__(self, "z", z)

    def __len__(self) -> int:
        return self.z.size


def bhattacharyya_profile(n: int, p: float) -> ReliabilityProfile:
    """Reliability profile for a BSC(p) seed under n polarization levels.

    Starts from z = 2*sqrt(p*(1-p)) and applies the (2z - z^2, z^2)
    child recursion per level.  Exact for erasure channels, standard
    upper-bound heuristic for the BSC.
    """
    if not 0.0 < p <= 0.5:
        raise ValueError(f"crossover probability must be in (0, 0.5], got {p}")
    if not 1 <= n <= 20:
        raise ValueError(f"level count must be in 1..20, got {n}")
    z = np.array([2.0 * np.sqrt(p * (1.0 - p))], dtype=np.float64)
    for _ in range(n):
        nxt = np.empty(2 * z.size, dtype=np.float64)
        nxt[0::2] = z * (2.0 - z)
        nxt[1::2] = z * z
        z = np.clip(nxt, 0.0, 1.0)
    return ReliabilityProfile(n, z)


def choose_frozen_set(profile: ReliabilityProfile, K: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Split {1..N} into (frozen, info) sets, freezing the N-K largest z.

    Ties freeze the smaller index so results are identical across runs
    and platforms.  Both returned tuples are 1-based ascending.
    """
    N = len(profile)
    if not 1 <= K < N:
        raise ValueError(f"key length must satisfy 1 <= K < {N}, got {K}")
    order = np.lexsort((np.arange(N), -profile.z))
    frozen = np.sort(order[: N - K]) + 1
    info = np.sort(order[N - K :]) + 1
    return tuple(int(i) for i in frozen), tuple(int(i) for i in info)


@dataclass(frozen=True)
class PuncturePattern:
    """Codeword positions dropped from the over-the-air / PUF footprint."""

    indices: tuple[int, ...] = ()

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if any(i < 1 for i in idx):
            raise ValueError("puncture indices are 1-based")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError("puncture indices must be strictly increasing")
        object.__setattr__(self, "indices", idx)

    @property
    def m(self) -> int:
        return len(self.indices)

    def index_array(self) -> np.ndarray:
        return np.asarray(self.indices, dtype=np.int64)


EMPTY_PUNCTURE = PuncturePattern(())


def default_puncture(N: int, m: int) -> PuncturePattern:
    """Tail pattern {N-m+1 .. N}; reproducible and valid for any m < N."""
    if not 0 <= m < N:
        raise ValueError(f"puncture size must satisfy 0 <= m < {N}, got {m}")
    return PuncturePattern(tuple(range(N - m + 1, N + 1)))


def quasi_uniform_puncture(N: int, m: int) -> PuncturePattern:
    """Evenly spread alternative pattern (optional, not the default)."""
    if not 0 <= m < N:
        raise ValueError(f"puncture size must satisfy 0 <= m < {N}, got {m}")
    if m == 0:
        return EMPTY_PUNCTURE
    pos = np.unique(np.round((np.arange(m) + 0.5) * N / m).astype(np.int64))
    pos = np.clip(pos, 1, N)
    # rounding collisions: fall back to filling from the tail
    missing = m - pos.size
    if missing:
        extras = [i for i in range(N, 0, -1) if i not in set(pos.tolist())][:missing]
        pos = np.sort(np.concatenate([pos, np.asarray(extras, dtype=np.int64)]))
    return PuncturePattern(tuple(int(i) for i in pos))


@dataclass(frozen=True)
class CodeSpec:
    """The (N, K, F) description of one code instance plus its puncturing."""

    block_len: int
    key_len: int
    frozen: tuple[int, ...]
    design_p: float
    puncture: PuncturePattern = field(default_factory=lambda: EMPTY_PUNCTURE)
    construction: str = CONSTRUCTION_ID

    def __post_init__(self):
        N, K = self.block_len, self.key_len
        if not _is_power_of_two(N) or N < 2:
            raise ValueError(f"block length must be a power of two >= 2, got {N}")
        if not 1 <= K < N:
            raise ValueError(f"key length must satisfy 1 <= K < {N}, got {K}")
        if not 0.0 < self.design_p <= 0.5:
            raise ValueError(f"design error rate must be in (0, 0.5], got {self.design_p}")
        frozen = tuple(int(i) for i in self.frozen)
        if len(frozen) != N - K:
            raise ValueError(f"frozen set must have {N - K} indices, got {len(frozen)}")
        if any(b <= a for a, b in zip(frozen, frozen[1:])):
            raise ValueError("frozen set must be strictly increasing")
        if frozen and (frozen[0] < 1 or frozen[-1] > N):
            raise ValueError(f"frozen indices must lie in 1..{N}")
        object.__setattr__(self, "frozen", frozen)
        if self.puncture.m and self.puncture.indices[-1] > N:
            raise ValueError("puncture indices exceed the block length")
        if N - self.puncture.m < K:
            raise ValueError(
                f"puncturing {self.puncture.m} bits leaves fewer than K={K} usable positions"
            )

    @property
    def n_levels(self) -> int:
        return self.block_len.bit_length() - 1

    @property
    def n_puf_bits(self) -> int:
        """Effective input length N' = N - m."""
        return self.block_len - self.puncture.m

    @cached_property
    def info(self) -> tuple[int, ...]:
        frozen = set(self.frozen)
        return tuple(i for i in range(1, self.block_len + 1) if i not in frozen)

    @cached_property
    def frozen_idx0(self) -> np.ndarray:
        a = np.asarray(self.frozen, dtype=np.int64) - 1
        a.flags.writeable = False
        return a

    @cached_property
    def info_idx0(self) -> np.ndarray:
        a = np.asarray(self.info, dtype=np.int64) - 1
        a.flags.writeable = False
        return a

    @cached_property
    def punctured_idx0(self) -> np.ndarray:
        a = self.puncture.index_array() - 1
        a.flags.writeable = False
        return a

    @cached_property
    def unpunctured_idx0(self) -> np.ndarray:
        mask = np.ones(self.block_len, dtype=bool)
        mask[self.punctured_idx0] = False
        a = np.nonzero(mask)[0]
        a.flags.writeable = False
        return a

    def to_json_dict(self) -> dict:
        return {
            "N": self.block_len,
            "K": self.key_len,
            "design_p": self.design_p,
            "frozen_set": list(self.frozen),
            "puncture": list(self.puncture.indices),
            "construction": self.construction,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json_dict(cls, doc: dict) -> "CodeSpec":
        return cls(
            block_len=int(doc["N"]),
            key_len=int(doc["K"]),
            frozen=tuple(int(i) for i in doc["frozen_set"]),
            design_p=float(doc["design_p"]),
            puncture=PuncturePattern(tuple(int(i) for i in doc.get("puncture", ()))),
            construction=str(doc.get("construction", CONSTRUCTION_ID)),
        )

    @classmethod
    def from_json(cls, text: str) -> "CodeSpec":
        return cls.from_json_dict(json.loads(text))

    def fingerprint(self) -> str:
        """Stable content hash of the canonical serialization (hex)."""
        return hashlib.sha256(self.to_json().encode("ascii")).hexdigest()


def construct_code(
    N: int,
    K: int,
    design_p: float = 0.15,
    puncture_m: int = 0,
    puncture_kind: str = "tail",
) -> CodeSpec:
    """Build a CodeSpec: profile the channels, freeze the worst, puncture."""
    if not _is_power_of_two(N) or N < 2:
        raise ValueError(f"block length must be a power of two >= 2, got {N}")
    n = N.bit_length() - 1
    profile = bhattacharyya_profile(n, design_p)
    frozen, _ = choose_frozen_set(profile, K)
    if puncture_kind == "tail":
        pattern = default_puncture(N, puncture_m)
    elif puncture_kind == "quasi-uniform":
        pattern = quasi_uniform_puncture(N, puncture_m)
    else:
        raise ValueError(f"unknown puncture kind {puncture_kind!r}")
    return CodeSpec(N, K, frozen, design_p, pattern)
