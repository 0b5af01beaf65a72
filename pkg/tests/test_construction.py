import json

import numpy as np
import pytest

from polarpuf.construction import (
    CodeSpec,
    PuncturePattern,
    bhattacharyya_profile,
    choose_frozen_set,
    construct_code,
    default_puncture,
    quasi_uniform_puncture,
)


def scalar_profile(n, p):
    """Oracle: the child recursion written out one value at a time."""
    values = [2.0 * (p * (1.0 - p)) ** 0.5]
    for _ in range(n):
        nxt = []
        for z in values:
            nxt.append(2.0 * z - z * z)
            nxt.append(z * z)
        values = nxt
    return values


class TestBhattacharyyaProfile:
    def test_useless_channel_stays_useless(self):
        prof = bhattacharyya_profile(1, 0.5)
        assert prof.z[0] == 1.0 and prof.z[1] == 1.0

    def test_near_perfect_channel_stays_near_perfect(self):
        prof = bhattacharyya_profile(1, 1e-9)
        assert np.all(prof.z < 1e-3)

    def test_n2_p015_matches_scalar_recursion(self):
        # z_root = 2*sqrt(0.1275) ~ 0.714143; level 1 = (0.918286, 0.51);
        # leaves = (0.993323, 0.843249, 0.7599, 0.2601)
        prof = bhattacharyya_profile(2, 0.15)
        assert np.allclose(prof.z, scalar_profile(2, 0.15), atol=1e-14)
        assert np.allclose(prof.z, [0.99332263, 0.84324864, 0.7599, 0.2601], atol=1e-7)

    @pytest.mark.parametrize("n", [1, 3, 6, 10])
    def test_matches_scalar_recursion(self, n):
        prof = bhattacharyya_profile(n, 0.22)
        assert np.allclose(prof.z, scalar_profile(n, 0.22), atol=1e-13)

    def test_monotone_in_p(self):
        grid = [0.05, 0.15, 0.25, 0.35, 0.45]
        profs = [bhattacharyya_profile(6, p).z for p in grid]
        for a, b in zip(profs, profs[1:]):
            assert np.all(b >= a - 1e-12)

    def test_degradation_ordering(self):
        rng = np.random.default_rng(0)
        z = rng.uniform(0.01, 0.99, 200)
        upper = 2 * z - z * z
        lower = z * z
        assert np.all(upper > z) and np.all(z > lower)

    def test_p_half_all_ones_exactly(self):
        assert np.all(bhattacharyya_profile(8, 0.5).z == 1.0)

    def test_rejects_bad_p(self):
        with pytest.raises(ValueError):
            bhattacharyya_profile(3, 0.0)
        with pytest.raises(ValueError):
            bhattacharyya_profile(3, 0.6)


class TestChooseFrozenSet:
    def test_k_n_minus_1_freezes_argmax(self):
        prof = bhattacharyya_profile(3, 0.2)
        frozen, info = choose_frozen_set(prof, 7)
        assert frozen == (int(np.argmax(prof.z)) + 1,)
        assert len(info) == 7

    def test_n2_p015_single_info_bit(self):
        frozen, info = choose_frozen_set(bhattacharyya_profile(2, 0.15), 1)
        assert info == (4,)
        assert frozen == (1, 2, 3)

    def test_strictly_increasing_z(self):
        from polarpuf.construction import ReliabilityProfile

        prof = ReliabilityProfile(2, np.array([0.1, 0.2, 0.3, 0.4]))
        frozen, info = choose_frozen_set(prof, 2)
        assert info == (1, 2) and frozen == (3, 4)

    def test_tie_break_freezes_smaller_index(self):
        from polarpuf.construction import ReliabilityProfile

        prof = ReliabilityProfile(2, np.full(4, 0.7))
        frozen, info = choose_frozen_set(prof, 1)
        assert frozen == (1, 2, 3) and info == (4,)

    @pytest.mark.parametrize("n,k", [(3, 2), (5, 7), (8, 100)])
    def test_partition(self, n, k):
        prof = bhattacharyya_profile(n, 0.3)
        frozen, info = choose_frozen_set(prof, k)
        assert sorted(frozen + info) == list(range(1, (1 << n) + 1))


class TestPuncture:
    def test_empty_pattern(self):
        assert default_puncture(1024, 0).m == 0

    def test_tail_1024_50(self):
        pat = default_puncture(1024, 50)
        assert pat.indices == tuple(range(975, 1025))

    def test_tail_8_2(self):
        assert default_puncture(8, 2).indices == (7, 8)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            default_puncture(8, 8)
        with pytest.raises(ValueError):
            default_puncture(8, -1)

    def test_quasi_uniform_spread(self):
        pat = quasi_uniform_puncture(64, 8)
        assert pat.m == 8
        assert pat.indices[0] < 16 and pat.indices[-1] > 48

    def test_pattern_validation(self):
        with pytest.raises(ValueError):
            PuncturePattern((3, 3))
        with pytest.raises(ValueError):
            PuncturePattern((0, 1))


class TestCodeSpec:
    def test_invariants(self):
        with pytest.raises(ValueError):
            CodeSpec(12, 3, tuple(range(1, 10)), 0.15)  # not power of two
        with pytest.raises(ValueError):
            CodeSpec(8, 8, (), 0.15)  # K == N
        with pytest.raises(ValueError):
            CodeSpec(8, 3, (1, 2, 3, 4), 0.15)  # wrong frozen size
        with pytest.raises(ValueError):
            CodeSpec(8, 3, (1, 2, 3, 4, 9), 0.15)  # out of range
        with pytest.raises(ValueError):
            CodeSpec(8, 7, (1,), 0.15, default_puncture(8, 2))  # N - m < K

    def test_info_is_complement(self):
        spec = CodeSpec(8, 3, (1, 2, 3, 4, 6), 0.15)
        assert spec.info == (5, 7, 8)
        assert spec.n_puf_bits == 8

    def test_json_round_trip_and_fingerprint_stability(self):
        spec = construct_code(64, 16, design_p=0.15, puncture_m=4)
        again = CodeSpec.from_json(spec.to_json())
        assert again == spec
        assert again.fingerprint() == spec.fingerprint()
        doc = json.loads(spec.to_json())
        assert set(doc) == {"N", "K", "design_p", "frozen_set", "puncture", "construction"}
        assert doc["construction"] == "bhattacharyya-v1"

    def test_fingerprint_frozen_value(self):
        # canary against accidental serialization-format drift
        spec = CodeSpec(8, 3, (1, 2, 3, 4, 6), 0.15)
        assert spec.fingerprint() == (
            "d0ef8c7ae723eae541e0acc33deaf010"
            "9b46a82a968203c2280781613aedde6b"
        )

    def test_construct_code_table_sizes(self):
        spec = construct_code(1024, 128, 0.15)
        assert len(spec.frozen) == 896
        punctured = construct_code(1024, 128, 0.15, puncture_m=50)
        assert punctured.n_puf_bits == 974
