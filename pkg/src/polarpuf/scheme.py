"""Secret generation from PUF readouts: syndrome-construction enrollment
and regeneration, the code-offset alternative, helper-data containers,
and the executable zero-leakage rank audit.

Enrollment applies the polar transform to the readout and splits it:
frozen positions become public helper data, information positions become
the key.  Regeneration reuses the same decoder machinery for both
schemes; the server-side tag comparison decides success.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .codec import (
    DecodeOutcome,
    DecoderPolicy,
    adaptive_decode,
    channel_llr,
    polar_transform,
    puncture_llrs,
    sc_decode,
    scl_decode,
)
from .construction import CodeSpec
from .gf2 import BitMatrix, BitVector, generator_matrix, rank_gf2, select_columns
from .hashing import DEFAULT_HASH, HashConfig, HashTag, hash_key

__all__ = [
    "SYNDROME",
    "CODE_OFFSET",
    "SecretKey",
    "HelperData",
    "RegenResult",
    "LeakageAudit",
    "SchemeMismatch",
    "FingerprintMismatch",
    "enroll_syndrome",
    "regenerate_syndrome",
    "enroll_code_offset",
    "regenerate_code_offset",
    "leakage_audit",
    "embed_with_fill",
    "hash_key",
]

SYNDROME = "syndrome"
CODE_OFFSET = "code-offset"

_MAGIC = b"PPUF"
_VERSION = 1
_SCHEME_CODES = {SYNDROME: 1, CODE_OFFSET: 2}
_SCHEME_NAMES = {v: k for k, v in _SCHEME_CODES.items()}


class SchemeMismatch(ValueError):
    """Helper data was produced by a different scheme than requested."""


class FingerprintMismatch(ValueError):
    """Helper data refers to a different code spec."""


@dataclass(frozen=True)
class SecretKey:
    """K-bit device secret; representation never exposes the bits."""

    bits: BitVector

    def __len__(self) -> int:
        return len(self.bits)

    def to_hex(self) -> str:
        """Explicit export, most-significant nibble first."""
        return self.bits.packed_bytes().hex()

    def __repr__(self) -> str:
        return f"SecretKey(len={len(self.bits)}, redacted)"


@dataclass(frozen=True)
class HelperData:
    """Public regeneration data: syndrome bits or codeword offset, plus tag."""

    scheme: str
    tag: HashTag
    spec_fingerprint: str
    w: BitVector | None = None
    offset: BitVector | None = None

    def __post_init__(self):
        if self.scheme not in _SCHEME_CODES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.scheme == SYNDROME and (self.w is None or self.offset is not None):
            raise ValueError("syndrome helper data carries w only")
        if self.scheme == CODE_OFFSET and (self.offset is None or self.w is not None):
            raise ValueError("code-offset helper data carries offset only")

    @property
    def payload(self) -> BitVector:
        return self.w if self.scheme == SYNDROME else self.offset

    def to_bytes(self) -> bytes:
        """Binary container, version 1.

        magic | version | scheme | spec fingerprint (32B) | m_bits (u16 BE)
        | algo id (u8 length + ascii) | payload bit count (u32 BE) | tag
        | packed payload bits (bit 0 = smallest frozen index, MSB first).
        """
        algo = self.tag.algo_id.encode("ascii")
        head = _MAGIC + struct.pack(
            ">BB32sHB", _VERSION, _SCHEME_CODES[self.scheme],
            bytes.fromhex(self.spec_fingerprint), self.tag.m_bits, len(algo),
        )
        payload = self.payload
        return (
            head
            + algo
            + struct.pack(">I", len(payload))
            + self.tag.digest
            + payload.packed_bytes()
        )

    def to_hex(self) -> str:
        return self.to_bytes().hex()

    @classmethod
    def from_bytes(cls, blob: bytes) -> "HelperData":
        if blob[:4] != _MAGIC:
            raise ValueError("not a helper-data container (bad magic)")
        version, scheme_code, fp_raw, m_bits, algo_len = struct.unpack(">BB32sHB", blob[4:41])
        if version != _VERSION:
            raise ValueError(f"unsupported helper-data version {version}")
        if scheme_code not in _SCHEME_NAMES:
            raise ValueError(f"unknown scheme code {scheme_code}")
        pos = 41
        algo = blob[pos : pos + algo_len].decode("ascii")
        pos += algo_len
        (bit_len,) = struct.unpack(">I", blob[pos : pos + 4])
        pos += 4
        tag = HashTag(m_bits, blob[pos : pos + m_bits // 8], algo)
        pos += m_bits // 8
        n_bytes = (bit_len + 7) // 8
        packed = np.frombuffer(blob[pos : pos + n_bytes], dtype=np.uint8)
        if packed.size != n_bytes:
            raise ValueError("truncated helper-data payload")
        bits = BitVector(np.unpackbits(packed, count=bit_len))
        scheme = _SCHEME_NAMES[scheme_code]
        if scheme == SYNDROME:
            return cls(scheme, tag, fp_raw.hex(), w=bits)
        return cls(scheme, tag, fp_raw.hex(), offset=bits)


@dataclass(frozen=True)
class RegenResult:
    """Outcome of a regeneration attempt; key present only on success."""

    success: bool
    key: SecretKey | None
    outcome: DecodeOutcome


def _as_bits(x, length: int, what: str) -> np.ndarray:
    a = x.to_array() if hasattr(x, "to_array") else np.asarray(x)
    if a.shape != (length,):
        raise ValueError(f"{what} must have length {length}, got shape {a.shape}")
    if a.size and not np.isin(a, (0, 1)).all():
        raise ValueError(f"{what} entries must be 0 or 1")
    return a.astype(np.uint8)


def embed_with_fill(puf_bits, spec: CodeSpec, rng: np.random.Generator) -> np.ndarray:
    """Assemble the length-N encoder input: PUF bits at unpunctured
    positions, fresh uniform fill bits at punctured ones.  Fill bits are
    drawn from `rng` and are never stored anywhere."""
    bits = _as_bits(puf_bits, spec.n_puf_bits, "PUF readout")
    x = np.empty(spec.block_len, dtype=np.uint8)
    x[spec.unpunctured_idx0] = bits
    if spec.puncture.m:
        x[spec.punctured_idx0] = rng.integers(0, 2, spec.puncture.m, dtype=np.uint8)
    return x


def enroll_syndrome(x, spec: CodeSpec, hash_cfg: HashConfig = DEFAULT_HASH) -> tuple[SecretKey, HelperData]:
    """Enrollment: transform the readout, split into key and syndrome.

    `x` is the full length-N encoder input; when the spec punctures m
    positions those entries must already hold fresh random fill bits
    (see embed_with_fill).
    """
    xa = _as_bits(x, spec.block_len, "enrollment readout")
    c = polar_transform(xa)
    s = c[spec.info_idx0]
    w = c[spec.frozen_idx0]
    key = SecretKey(BitVector(s))
    tag = hash_key(s, hash_cfg)
    helper = HelperData(SYNDROME, tag, spec.fingerprint(), w=BitVector(w))
    return key, helper


def _check_helper(helper: HelperData, spec: CodeSpec, scheme: str):
    if helper.scheme != scheme:
        raise SchemeMismatch(f"helper data is {helper.scheme!r}, expected {scheme!r}")
    if helper.spec_fingerprint != spec.fingerprint():
        raise FingerprintMismatch(
            f"helper data was built for spec {helper.spec_fingerprint[:12]}..., "
            f"got {spec.fingerprint()[:12]}..."
        )


def _run_policy(llr, spec: CodeSpec, w, policy: DecoderPolicy, tag: HashTag) -> DecodeOutcome:
    if policy.kind == "sc":
        return sc_decode(llr, spec, w, policy.f_kernel)
    if policy.kind == "scl":
        return scl_decode(llr, spec, w, policy.list_size, tag, policy.f_kernel)
    return adaptive_decode(llr, spec, w, policy, tag)


def regenerate_syndrome(
    y,
    helper: HelperData,
    spec: CodeSpec,
    p_channel: float,
    policy: DecoderPolicy,
) -> RegenResult:
    """Regeneration from a noisy readout of the N-m unpunctured positions.

    Success means the regenerated key's tag equals the enrolled tag; on
    failure the result carries no key (the raw candidate stays inside the
    decode outcome).
    """
    _check_helper(helper, spec, SYNDROME)
    ya = _as_bits(y, spec.n_puf_bits, "authentication readout")
    llr = puncture_llrs(channel_llr(ya, p_channel), spec.puncture)
    outcome = _run_policy(llr, spec, helper.w, policy, helper.tag)
    success = helper.tag.matches(outcome.key_candidate)
    key = SecretKey(outcome.key_candidate) if success else None
    return RegenResult(success, key, outcome)


def enroll_code_offset(
    s: SecretKey,
    x,
    spec: CodeSpec,
    hash_cfg: HashConfig = DEFAULT_HASH,
) -> HelperData:
    """Code-offset enrollment of a chosen key: store C(s) xor x.

    The offset variant is implemented unpunctured; the codeword places
    the key on information positions with all-zero frozen bits.
    """
    if spec.puncture.m:
        raise ValueError("code-offset enrollment does not support punctured specs")
    xa = _as_bits(x, spec.block_len, "enrollment readout")
    sa = _as_bits(s.bits, spec.key_len, "secret key")
    u = np.zeros(spec.block_len, dtype=np.uint8)
    u[spec.info_idx0] = sa
    c = polar_transform(u)
    tag = hash_key(sa, hash_cfg)
    return HelperData(CODE_OFFSET, tag, spec.fingerprint(), offset=BitVector(c ^ xa))


def regenerate_code_offset(
    y,
    helper: HelperData,
    spec: CodeSpec,
    p_channel: float,
    policy: DecoderPolicy,
) -> RegenResult:
    """Decode offset xor y, a codeword corrupted by the readout noise."""
    _check_helper(helper, spec, CODE_OFFSET)
    ya = _as_bits(y, spec.block_len, "authentication readout")
    c_tilde = helper.offset.to_array() ^ ya
    llr = channel_llr(c_tilde, p_channel)
    w = np.zeros(spec.block_len - spec.key_len, dtype=np.uint8)
    outcome = _run_policy(llr, spec, w, policy, helper.tag)
    success = helper.tag.matches(outcome.key_candidate)
    key = SecretKey(outcome.key_candidate) if success else None
    return RegenResult(success, key, outcome)


@dataclass(frozen=True)
class LeakageAudit:
    """Ranks of the frozen/info column slices of G_N and their concatenation.

    The helper data leaks nothing about the key (under uniform readouts)
    exactly when rank splits additively: (N-K) + K - N = 0.
    """

    block_len: int
    key_len: int
    rank_frozen: int
    rank_info: int
    rank_joint: int

    @property
    def passed(self) -> bool:
        n, k = self.block_len, self.key_len
        return (
            self.rank_frozen == n - k
            and self.rank_info == k
            and self.rank_joint == n
        )


def leakage_audit(spec: CodeSpec) -> LeakageAudit:
    """Mechanical zero-leakage check via GF(2) ranks; never raises."""
    g = generator_matrix(spec.n_levels)
    g_frozen = select_columns(g, spec.frozen)
    g_info = select_columns(g, spec.info)
    joint = BitMatrix(np.hstack([g_frozen.to_array(), g_info.to_array()]))
    return LeakageAudit(
        spec.block_len,
        spec.key_len,
        rank_gf2(g_frozen),
        rank_gf2(g_info),
        rank_gf2(joint),
    )
