import numpy as np
import pytest

from polarpuf.codec import DecoderPolicy, polar_transform
from polarpuf.construction import CodeSpec, construct_code
from polarpuf.gf2 import BitVector
from polarpuf.hashing import HashConfig, hash_key
from polarpuf.scheme import (
    CODE_OFFSET,
    SYNDROME,
    FingerprintMismatch,
    HelperData,
    SchemeMismatch,
    SecretKey,
    embed_with_fill,
    enroll_code_offset,
    enroll_syndrome,
    leakage_audit,
    regenerate_code_offset,
    regenerate_syndrome,
)

POLICIES = [
    DecoderPolicy.sc(),
    DecoderPolicy.scl(2),
    DecoderPolicy.scl(4),
    DecoderPolicy.scl(8),
    DecoderPolicy.adaptive(8),
]


class TestHashKey:
    def test_deterministic(self):
        key = np.array([1, 0, 1, 1, 0, 0, 1, 0], dtype=np.uint8)
        assert hash_key(key) == hash_key(key)

    def test_distinct_keys_distinct_tags(self):
        rng = np.random.default_rng(0)
        tags = {hash_key(rng.integers(0, 2, 128, dtype=np.uint8)).digest for _ in range(200)}
        assert len(tags) == 200

    @pytest.mark.parametrize("m_bits", [32, 64, 128, 256])
    def test_tag_length(self, m_bits):
        tag = hash_key(np.ones(16, dtype=np.uint8), HashConfig(m_bits))
        assert tag.m_bits == m_bits and len(tag.digest) == m_bits // 8

    def test_unsupported_width_rejected(self):
        with pytest.raises(ValueError):
            HashConfig(48)

    def test_length_prefix_separates_paddings(self):
        # same packed bytes, different bit lengths, must hash differently
        a = hash_key(np.array([1, 0, 0, 0], dtype=np.uint8))
        b = hash_key(np.array([1, 0, 0, 0, 0], dtype=np.uint8))
        assert a != b

    def test_matches(self):
        bits = np.array([1, 1, 0, 1], dtype=np.uint8)
        assert hash_key(bits).matches(bits)
        assert not hash_key(bits).matches(np.array([1, 1, 0, 0], dtype=np.uint8))


class TestSecretKey:
    def test_repr_redacts(self):
        key = SecretKey(BitVector([1, 0, 1, 1]))
        assert "1" not in repr(key).replace("4", "")  # only the length digit
        assert "redacted" in repr(key)

    def test_hex_export(self):
        key = SecretKey(BitVector([1, 0, 1, 0, 1, 0, 1, 0]))
        assert key.to_hex() == "aa"


class TestEnrollSyndrome:
    def test_zero_readout_zero_outputs(self):
        spec = construct_code(16, 4, 0.2)
        key, helper = enroll_syndrome(np.zeros(16, dtype=np.uint8), spec)
        assert np.array_equal(key.bits.to_array(), np.zeros(4))
        assert np.array_equal(helper.w.to_array(), np.zeros(12))

    def test_fig3_spec_slicing(self):
        spec = CodeSpec(8, 3, (1, 2, 3, 4, 6), 0.15)
        rng = np.random.default_rng(1)
        x = rng.integers(0, 2, 8, dtype=np.uint8)
        key, helper = enroll_syndrome(x, spec)
        c = polar_transform(x)
        assert np.array_equal(key.bits.to_array(), c[[4, 6, 7]])  # positions {5,7,8}
        assert np.array_equal(helper.w.to_array(), c[[0, 1, 2, 3, 5]])

    def test_deterministic_re_enrollment(self):
        spec = construct_code(32, 8, 0.2)
        rng = np.random.default_rng(2)
        x = rng.integers(0, 2, 32, dtype=np.uint8)
        k1, h1 = enroll_syndrome(x, spec)
        k2, h2 = enroll_syndrome(x, spec)
        assert k1 == k2 and h1.w == h2.w and h1.tag == h2.tag

    def test_helper_sizes(self):
        spec = construct_code(1024, 128, 0.15)
        _, helper = enroll_syndrome(np.zeros(1024, dtype=np.uint8), spec)
        assert len(helper.w) == 896

    def test_length_mismatch(self):
        spec = construct_code(16, 4, 0.2)
        with pytest.raises(ValueError):
            enroll_syndrome(np.zeros(15, dtype=np.uint8), spec)


class TestRegenerateSyndrome:
    @pytest.mark.parametrize("policy", POLICIES, ids=lambda p: p.label)
    def test_noiseless_round_trip(self, policy):
        rng = np.random.default_rng(3)
        for N, K in [(8, 3), (64, 16), (256, 32)]:
            spec = construct_code(N, K, 0.2)
            x = rng.integers(0, 2, N, dtype=np.uint8)
            key, helper = enroll_syndrome(x, spec)
            result = regenerate_syndrome(x, helper, spec, 0.1, policy)
            assert result.success
            assert result.key == key

    def test_success_flag_soundness(self):
        spec = construct_code(32, 8, 0.25)
        rng = np.random.default_rng(4)
        for _ in range(100):
            x = rng.integers(0, 2, 32, dtype=np.uint8)
            key, helper = enroll_syndrome(x, spec)
            y = x ^ (rng.random(32) < 0.25).astype(np.uint8)
            result = regenerate_syndrome(y, helper, spec, 0.25, DecoderPolicy.scl(4))
            if result.success:
                assert helper.tag.matches(result.key.bits)
                assert result.outcome.hash_valid is True
            else:
                assert result.key is None

    def test_complemented_readout_fails(self):
        spec = construct_code(64, 16, 0.2)
        rng = np.random.default_rng(5)
        fails = 0
        for _ in range(20):
            x = rng.integers(0, 2, 64, dtype=np.uint8)
            _, helper = enroll_syndrome(x, spec)
            result = regenerate_syndrome(1 - x, helper, spec, 0.2, DecoderPolicy.sc())
            fails += not result.success
        assert fails >= 19  # success only via an astronomically unlikely collision

    def test_round_trip_across_sizes_random_x(self):
        rng = np.random.default_rng(6)
        for n in range(3, 11):
            N = 1 << n
            spec = construct_code(N, max(1, N // 8), 0.15)
            x = rng.integers(0, 2, N, dtype=np.uint8)
            key, helper = enroll_syndrome(x, spec)
            result = regenerate_syndrome(x, helper, spec, 0.15, DecoderPolicy.sc())
            assert result.success and result.key == key

    def test_scheme_and_fingerprint_checks(self):
        spec = construct_code(32, 8, 0.2)
        other = construct_code(32, 8, 0.3)
        rng = np.random.default_rng(7)
        x = rng.integers(0, 2, 32, dtype=np.uint8)
        _, helper = enroll_syndrome(x, spec)
        with pytest.raises(FingerprintMismatch):
            regenerate_syndrome(x, helper, other, 0.2, DecoderPolicy.sc())
        offset_helper = enroll_code_offset(SecretKey(BitVector(np.zeros(8, dtype=np.uint8))), x, spec)
        with pytest.raises(SchemeMismatch):
            regenerate_syndrome(x, offset_helper, spec, 0.2, DecoderPolicy.sc())

    def test_punctured_round_trip_with_fill(self):
        spec = construct_code(64, 8, 0.2, puncture_m=12)
        rng = np.random.default_rng(8)
        puf_bits = rng.integers(0, 2, spec.n_puf_bits, dtype=np.uint8)
        x = embed_with_fill(puf_bits, spec, np.random.default_rng(99))
        key, helper = enroll_syndrome(x, spec)
        result = regenerate_syndrome(puf_bits, helper, spec, 0.1, DecoderPolicy.scl(4))
        assert result.success and result.key == key


class TestCodeOffset:
    def test_zero_key_zero_readout(self):
        spec = construct_code(16, 4, 0.2)
        helper = enroll_code_offset(
            SecretKey(BitVector(np.zeros(4, dtype=np.uint8))),
            np.zeros(16, dtype=np.uint8),
            spec,
        )
        assert np.array_equal(helper.offset.to_array(), np.zeros(16))

    def test_offset_xor_x_is_codeword(self):
        spec = construct_code(32, 8, 0.2)
        rng = np.random.default_rng(9)
        s = SecretKey(BitVector(rng.integers(0, 2, 8, dtype=np.uint8)))
        x = rng.integers(0, 2, 32, dtype=np.uint8)
        helper = enroll_code_offset(s, x, spec)
        c = helper.offset.to_array() ^ x
        u = polar_transform(c)  # transform is self-inverse
        assert np.all(u[spec.frozen_idx0] == 0)
        assert np.array_equal(u[spec.info_idx0], s.bits.to_array())

    def test_offset_uniformity_under_uniform_x(self):
        # one-time-pad structure: per-bit ones-fraction inside binomial CI
        spec = construct_code(16, 4, 0.2)
        rng = np.random.default_rng(10)
        draws = 10_000
        counts = np.zeros(16)
        s = SecretKey(BitVector(rng.integers(0, 2, 4, dtype=np.uint8)))
        for _ in range(draws):
            x = rng.integers(0, 2, 16, dtype=np.uint8)
            counts += enroll_code_offset(s, x, spec).offset.to_array()
        frac = counts / draws
        sigma = 0.5 / np.sqrt(draws)
        assert np.all(np.abs(frac - 0.5) < 5 * sigma)

    @pytest.mark.parametrize("policy", POLICIES, ids=lambda p: p.label)
    def test_noiseless_recovery(self, policy):
        spec = construct_code(64, 16, 0.2)
        rng = np.random.default_rng(11)
        s = SecretKey(BitVector(rng.integers(0, 2, 16, dtype=np.uint8)))
        x = rng.integers(0, 2, 64, dtype=np.uint8)
        helper = enroll_code_offset(s, x, spec)
        result = regenerate_code_offset(x, helper, spec, 0.1, policy)
        assert result.success and result.key == s

    def test_helper_storage_sizes(self):
        spec = construct_code(64, 16, 0.25)
        rng = np.random.default_rng(12)
        x = rng.integers(0, 2, 64, dtype=np.uint8)
        _, syn = enroll_syndrome(x, spec)
        off = enroll_code_offset(SecretKey(BitVector(np.zeros(16, dtype=np.uint8))), x, spec)
        assert len(syn.w) == 48  # N - K
        assert len(off.offset) == 64  # N

    def test_same_decoder_machinery(self):
        # op counts on matched inputs are identical across the two schemes
        spec = construct_code(64, 16, 0.25)
        rng = np.random.default_rng(13)
        x = rng.integers(0, 2, 64, dtype=np.uint8)
        noise = (rng.random(64) < 0.25).astype(np.uint8)
        key, syn = enroll_syndrome(x, spec)
        r1 = regenerate_syndrome(x ^ noise, syn, spec, 0.25, DecoderPolicy.sc())
        s = SecretKey(BitVector(rng.integers(0, 2, 16, dtype=np.uint8)))
        off = enroll_code_offset(s, x, spec)
        r2 = regenerate_code_offset(x ^ noise, off, spec, 0.25, DecoderPolicy.sc())
        assert (r1.outcome.ops_f, r1.outcome.ops_g) == (r2.outcome.ops_f, r2.outcome.ops_g)

    def test_rejects_punctured_spec(self):
        spec = construct_code(32, 8, 0.2, puncture_m=4)
        with pytest.raises(ValueError):
            enroll_code_offset(
                SecretKey(BitVector(np.zeros(8, dtype=np.uint8))),
                np.zeros(32, dtype=np.uint8),
                spec,
            )


class TestLeakageAudit:
    @pytest.mark.parametrize("n", range(3, 9))
    def test_constructed_specs_pass(self, n):
        N = 1 << n
        for K in (N // 8, N // 4, N // 2):
            audit = leakage_audit(construct_code(N, K, 0.15))
            assert audit.passed
            assert (audit.rank_frozen, audit.rank_info, audit.rank_joint) == (N - K, K, N)

    def test_fig3_spec_ranks(self):
        audit = leakage_audit(CodeSpec(8, 3, (1, 2, 3, 4, 6), 0.15))
        assert (audit.rank_frozen, audit.rank_info, audit.rank_joint) == (5, 3, 8)
        assert audit.passed


class TestHelperDataContainer:
    def _helper(self, m_bits=128):
        spec = construct_code(32, 8, 0.2)
        rng = np.random.default_rng(14)
        x = rng.integers(0, 2, 32, dtype=np.uint8)
        _, helper = enroll_syndrome(x, spec, HashConfig(m_bits))
        return helper

    @pytest.mark.parametrize("m_bits", [32, 128])
    def test_binary_round_trip(self, m_bits):
        helper = self._helper(m_bits)
        again = HelperData.from_bytes(helper.to_bytes())
        assert again == helper

    def test_container_layout(self):
        helper = self._helper()
        blob = helper.to_bytes()
        assert blob[:4] == b"PPUF"
        assert blob[4] == 1  # version
        assert blob[5] == 1  # syndrome scheme code
        assert blob[6:38].hex() == helper.spec_fingerprint
        assert int.from_bytes(blob[38:40], "big") == 128

    def test_hex_form(self):
        helper = self._helper()
        assert bytes.fromhex(helper.to_hex()) == helper.to_bytes()

    def test_bad_magic_rejected(self):
        with pytest.raises(ValueError):
            HelperData.from_bytes(b"XXXX" + b"\x00" * 60)

    def test_code_offset_round_trip(self):
        spec = construct_code(32, 8, 0.2)
        rng = np.random.default_rng(15)
        s = SecretKey(BitVector(rng.integers(0, 2, 8, dtype=np.uint8)))
        x = rng.integers(0, 2, 32, dtype=np.uint8)
        helper = enroll_code_offset(s, x, spec)
        again = HelperData.from_bytes(helper.to_bytes())
        assert again == helper and again.scheme == CODE_OFFSET

    def test_validation(self):
        tag = hash_key(np.ones(8, dtype=np.uint8))
        with pytest.raises(ValueError):
            HelperData(SYNDROME, tag, "00" * 32)  # missing w
        with pytest.raises(ValueError):
            HelperData("other", tag, "00" * 32, w=BitVector([1]))
