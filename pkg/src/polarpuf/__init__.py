"""Polar-code secret-key generation for SRAM PUFs.

Library layout:

- gf2: packed bit containers, Kronecker powers, GF(2) rank
- construction: reliability profiles, frozen sets, puncturing, CodeSpec
- codec: polar transform, LLR kernels, SC/SCL/adaptive decoding
- hashing / scheme: key tags, enrollment, regeneration, leakage audit
- channel: seeded SRAM-PUF enrollment/authentication model
- montecarlo: failure-rate and complexity sweeps with exact intervals
- figures: matplotlib rendering of sweep reports
- cli: the `polarpuf` command-line tool
"""

from .channel import PufModel, draw_authentication, draw_enrollment
from .codec import (
    EXACT_TANH,
    MIN_SUM,
    DecodeOutcome,
    DecoderPolicy,
    adaptive_decode,
    channel_llr,
    f_kernel,
    g_kernel,
    polar_transform,
    puncture_llrs,
    sc_decode,
    scl_decode,
)
from .construction import (
    CodeSpec,
    PuncturePattern,
    ReliabilityProfile,
    bhattacharyya_profile,
    choose_frozen_set,
    construct_code,
    default_puncture,
)
from .gf2 import BitMatrix, BitVector, generator_matrix, kronecker_power, mat_vec_mul, rank_gf2, select_columns
from .hashing import DEFAULT_HASH, HashConfig, HashTag, hash_key
from .scheme import (
    CODE_OFFSET,
    SYNDROME,
    HelperData,
    LeakageAudit,
    RegenResult,
    SecretKey,
    embed_with_fill,
    enroll_code_offset,
    enroll_syndrome,
    leakage_audit,
    regenerate_code_offset,
    regenerate_syndrome,
)

__version__ = "0.1.0"
