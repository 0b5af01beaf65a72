"""Polar transform, log-domain decoding kernels, and successive-cancellation
(list) decoding with helper-data frozen bits and hash-aided selection.

Everything here works in the natural (non-bit-reversed) bit order of
G_N = G_2^{kron n}: the encoder is the ascending-stride butterfly and the
decoder tree pairs positions (j, j + M/2) inside each node, which visits
the input bits in ascending index order.

The list decoder is the single decoding engine: plain successive
cancellation is its L = 1 specialization.  All decode entry points accept
batches internally; operation counters follow the abstract algorithm
(paths fork at information positions, so counts are the same for every
trial of a given code/list size).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .construction import CodeSpec, PuncturePattern
from .gf2 import BitVector
from .hashing import HashTag

__all__ = [
    "LLR_MAX",
    "MIN_SUM",
    "EXACT_TANH",
    "DecoderPolicy",
    "DecodeOutcome",
    "polar_transform",
    "channel_llr",
    "f_kernel",
    "g_kernel",
    "puncture_llrs",
    "sc_decode",
    "scl_decode",
    "adaptive_decode",
    "decode_policy_batch",
]

LLR_MAX = 64.0
MIN_SUM = "min-sum"
EXACT_TANH = "exact-tanh"


# ---------------------------------------------------------------- transform


def polar_transform(x) -> np.ndarray:
    """Apply G_N to the trailing axis of x in O(N log N); self-inverse.

    Accepts a single vector or a batch (..., N) of 0/1 values.
    """
    a = np.asarray(x)
    if a.size and not np.isin(a, (0, 1)).all():
        raise ValueError("input entries must be 0 or 1")
    a = a.astype(np.uint8)
    N = a.shape[-1]
    if N < 1 or (N & (N - 1)) != 0:
        raise ValueError(f"length must be a power of two, got {N}")
    out = a.copy()
    d = 1
    while d < N:
        blocks = out.reshape(out.shape[:-1] + (N // (2 * d), 2 * d))
        blocks[..., :d] ^= blocks[..., d:]
        d *= 2
    return out


# ------------------------------------------------------------------ kernels


def channel_llr(y, p: float):
    """LLR of a BSC(p) observation: (1 - 2y) * ln((1-p)/p), saturated."""
    if not 0.0 < p < 0.5:
        raise ValueError(f"crossover probability must be in (0, 0.5), got {p}")
    y = np.asarray(y)
    if y.size and not np.isin(y, (0, 1)).all():
        raise ValueError("observations must be 0 or 1")
    mag = min(np.log((1.0 - p) / p), LLR_MAX)
    return (1.0 - 2.0 * y.astype(np.float64)) * mag


def _f_min_sum(a, b):
    return np.sign(a) * np.sign(b) * np.minimum(np.abs(a), np.abs(b))


def _f_exact(a, b):
    # 2*atanh(tanh(a/2)*tanh(b/2)) in its numerically stable box-plus form:
    # sign(ab)*min(|a|,|b|) + log1p(e^-|a+b|) - log1p(e^-|a-b|)
    out = np.sign(a) * np.sign(b) * np.minimum(np.abs(a), np.abs(b))
    out = out + np.log1p(np.exp(-np.abs(a + b))) - np.log1p(np.exp(-np.abs(a - b)))
    return np.clip(out, -LLR_MAX, LLR_MAX)


_F_KERNELS = {MIN_SUM: _f_min_sum, EXACT_TANH: _f_exact}


def f_kernel(l1, l2, mode: str = MIN_SUM):
    """Upper-branch LLR combine; exact tanh rule or its min-sum approximation."""
    if mode not in _F_KERNELS:
        raise ValueError(f"unknown f-kernel mode {mode!r}")
    return _F_KERNELS[mode](np.asarray(l1, np.float64), np.asarray(l2, np.float64))


def g_kernel(l1, l2, u_prev):
    """Lower-branch LLR combine: (1 - 2*u_prev) * l1 + l2, saturated."""
    u = np.asarray(u_prev)
    if u.size and not np.isin(u, (0, 1)).all():
        raise ValueError("u_prev must be 0 or 1")
    out = np.where(u == 1, np.subtract(l2, l1), np.add(l1, l2))
    return np.clip(out, -LLR_MAX, LLR_MAX)


# ------------------------------------------------------------------- policy


@dataclass(frozen=True)
class DecoderPolicy:
    """Which regeneration algorithm to run: SC, SCL(L), or adaptive."""

    kind: str
    list_size: int = 1
    schedule: tuple[int, ...] = ()
    f_kernel: str = MIN_SUM

    def __post_init__(self):
        if self.kind not in ("sc", "scl", "adaptive"):
            raise ValueError(f"unknown decoder kind {self.kind!r}")
        if self.f_kernel not in _F_KERNELS:
            raise ValueError(f"unknown f-kernel mode {self.f_kernel!r}")
        if self.list_size < 1:
            raise ValueError("list size must be >= 1")
        if self.kind == "adaptive":
            sched = tuple(int(v) for v in self.schedule)
            if not sched or any(b <= a for a, b in zip(sched, sched[1:])):
                raise ValueError("adaptive schedule must be non-empty and strictly increasing")
            if sched[0] < 2 or sched[-1] != self.list_size:
                raise ValueError("adaptive schedule must start at >= 2 and end at L_max")
            object.__setattr__(self, "schedule", sched)
        elif self.schedule:
            raise ValueError("only adaptive policies carry a schedule")

    @classmethod
    def sc(cls, f_kernel: str = MIN_SUM) -> "DecoderPolicy":
        return cls("sc", 1, (), f_kernel)

    @classmethod
    def scl(cls, list_size: int, f_kernel: str = MIN_SUM) -> "DecoderPolicy":
        return cls("scl", list_size, (), f_kernel)

    @classmethod
    def adaptive(cls, l_max: int = 8, schedule=None, f_kernel: str = MIN_SUM) -> "DecoderPolicy":
        if schedule is None:
            if l_max < 2 or (l_max & (l_max - 1)) != 0:
                raise ValueError("default doubling schedule needs a power-of-two L_max >= 2")
            schedule = tuple(1 << k for k in range(1, l_max.bit_length()))
        return cls("adaptive", l_max, tuple(schedule), f_kernel)

    @classmethod
    def parse(cls, text: str, f_kernel: str = MIN_SUM) -> "DecoderPolicy":
        """Parse the CLI grammar: 'sc', 'scl:L', or 'adaptive:Lmax'."""
        parts = text.strip().lower().split(":")
        if parts[0] == "sc" and len(parts) == 1:
            return cls.sc(f_kernel)
        if parts[0] == "scl" and len(parts) == 2:
            return cls.scl(int(parts[1]), f_kernel)
        if parts[0] == "adaptive" and len(parts) == 2:
            return cls.adaptive(int(parts[1]), f_kernel=f_kernel)
        raise ValueError(f"cannot parse policy {text!r} (want sc, scl:L, or adaptive:Lmax)")

    @property
    def label(self) -> str:
        if self.kind == "sc":
            return "sc"
        return f"{self.kind}:{self.list_size}"


@dataclass(frozen=True)
class DecodeOutcome:
    """Result of one decode: candidate key, tag verdict, kernel-op counts."""

    key_candidate: BitVector
    hash_valid: bool | None
    ops_f: int
    ops_g: int
    list_used: int


# ----------------------------------------------------------- list decoding


class _ListDecoder:
    """Batched SC list decode over one code spec.

    Buffers hold one active node per tree level; forking at information
    positions reorders the path axis of every live buffer.  The root LLR
    level is shared by all paths and is never reordered.
    """

    def __init__(self, llrs: np.ndarray, spec: CodeSpec, w: np.ndarray, L: int, kernel: str):
        B, N = llrs.shape
        self.B, self.N, self.L = B, N, L
        self.n = N.bit_length() - 1
        self.K = spec.key_len
        self.f = _F_KERNELS[kernel]
        self.w = w
        self.frozen_mask = np.zeros(N, dtype=bool)
        self.frozen_mask[spec.frozen_idx0] = True
        self.rank = np.zeros(N, dtype=np.int64)
        self.rank[spec.frozen_idx0] = np.arange(N - self.K)
        self.rank[spec.info_idx0] = np.arange(self.K)

        self.llr_buf = [np.empty((B, L, 1 << lev)) for lev in range(self.n)]
        self.llr_buf.append(np.ascontiguousarray(llrs[:, None, :]))  # root, shared
        self.bit_buf = [np.empty((B, L, 1 << lev), dtype=np.uint8) for lev in range(self.n + 1)]
        self.keys = np.zeros((B, L, self.K), dtype=np.uint8)
        self.metrics = np.full((B, L), np.inf)
        self.metrics[:, 0] = 0.0
        self.paths = 1
        self.ops_f = 0
        self.ops_g = 0

    def run(self):
        self._visit(self.n, 0)
        return self.keys, self.metrics, self.ops_f, self.ops_g

    def _visit(self, lev: int, base: int):
        if lev == 0:
            self._leaf(base)
            return
        half = 1 << (lev - 1)
        lam = self.llr_buf[lev]
        self.ops_f += self.paths * half
        self.llr_buf[lev - 1][...] = self.f(lam[:, :, :half], lam[:, :, half:])
        self._visit(lev - 1, base)

        self.bit_buf[lev][:, :, :half] = self.bit_buf[lev - 1]  # park left partial sums
        lam = self.llr_buf[lev]  # re-read: forks may have reordered paths
        left = self.bit_buf[lev][:, :, :half]
        self.ops_g += self.paths * half
        self.llr_buf[lev - 1][...] = np.clip(
            np.where(left == 1, lam[:, :, half:] - lam[:, :, :half], lam[:, :, :half] + lam[:, :, half:]),
            -LLR_MAX,
            LLR_MAX,
        )
        self._visit(lev - 1, base + half)

        right = self.bit_buf[lev - 1]
        self.bit_buf[lev][:, :, :half] ^= right
        self.bit_buf[lev][:, :, half:] = right

    def _gather(self, src: np.ndarray):
        idx = src[:, :, None]
        for lev in range(self.n):  # root level is path-independent
            self.llr_buf[lev] = np.take_along_axis(self.llr_buf[lev], idx, axis=1)
            self.bit_buf[lev] = np.take_along_axis(self.bit_buf[lev], idx, axis=1)
        self.keys = np.take_along_axis(self.keys, idx, axis=1)

    def _leaf(self, i: int):
        dm = self.llr_buf[0][:, :, 0]  # (B, L)
        if self.frozen_mask[i]:
            u = self.w[:, self.rank[i]].astype(np.uint8)[:, None]
            contradicts = np.where(u == 1, dm > 0, dm < 0)
            self.metrics = self.metrics + np.where(contradicts, np.abs(dm), 0.0)
            self.bit_buf[0][:, :, 0] = u
            return
        pen0 = np.where(dm < 0, -dm, 0.0)
        pen1 = np.where(dm > 0, dm, 0.0)
        pm2 = np.concatenate([self.metrics + pen0, self.metrics + pen1], axis=1)  # (B, 2L)
        if self.L == 1:
            take1 = pm2[:, 1] < pm2[:, 0]  # strict: a tie decides 0
            bit = take1.astype(np.uint8)
            self.metrics = np.where(take1, pm2[:, 1], pm2[:, 0])[:, None]
            self.keys[:, 0, self.rank[i]] = bit
            self.bit_buf[0][:, 0, 0] = bit
        else:
            # stable sort over [all 0-extensions | all 1-extensions]: ties
            # prefer the 0 branch, then the lower path index.
            order = np.argsort(pm2, axis=1, kind="stable")[:, : self.L]
            src = order % self.L
            bit = (order >= self.L).astype(np.uint8)
            self._gather(src)
            self.metrics = np.take_along_axis(pm2, order, axis=1)
            self.keys[:, :, self.rank[i]] = bit
            self.bit_buf[0][:, :, 0] = bit
        self.paths = min(2 * self.paths, self.L)


def _decode_paths(llrs: np.ndarray, spec: CodeSpec, w: np.ndarray, L: int, kernel: str):
    if llrs.ndim != 2 or llrs.shape[1] != spec.block_len:
        raise ValueError(f"expected LLR batch of width {spec.block_len}, got {llrs.shape}")
    if w.shape != (llrs.shape[0], spec.block_len - spec.key_len):
        raise ValueError(
            f"expected helper batch of shape ({llrs.shape[0]}, "
            f"{spec.block_len - spec.key_len}), got {w.shape}"
        )
    return _ListDecoder(llrs, spec, w, L, kernel).run()


def _select_candidates(keys: np.ndarray, metrics: np.ndarray, tags):
    """Pick per trial: lowest-metric tag match, else the lowest-metric path.

    `tags` is a sequence of HashTag or None (None skips the scan).
    Returns (chosen keys (B, K), hash_valid bool array or None).
    """
    B, L, _ = keys.shape
    order = np.argsort(metrics, axis=1, kind="stable")
    chosen = keys[np.arange(B), order[:, 0]].copy()
    if tags is None or all(t is None for t in tags):
        return chosen, None
    valid = np.zeros(B, dtype=bool)
    for b in range(B):
        tag = tags[b]
        if tag is None:
            continue
        for pos in order[b]:
            if not np.isfinite(metrics[b, pos]):
                break
            if tag.matches(keys[b, pos]):
                chosen[b] = keys[b, pos]
                valid[b] = True
                break
    return chosen, valid


def decode_policy_batch(llrs: np.ndarray, spec: CodeSpec, w: np.ndarray, policy: DecoderPolicy, tags=None):
    """Decode a batch of puncture-adjusted LLR vectors under one policy.

    Returns (keys (B, K) uint8, hash_valid (B,) bool or None,
    ops_f (B,), ops_g (B,), list_used (B,)).  Operation counters follow
    the abstract decoder, so SC and fixed-list decodes report the same
    counts for every trial; adaptive decodes vary with escalation depth.
    """
    llrs = np.asarray(llrs, dtype=np.float64)
    w = np.asarray(w, dtype=np.uint8)
    B = llrs.shape[0]
    kern = policy.f_kernel

    if policy.kind == "sc":
        keys, _, fo, go = _decode_paths(llrs, spec, w, 1, kern)
        return (
            keys[:, 0].copy(),
            None,
            np.full(B, fo, dtype=np.int64),
            np.full(B, go, dtype=np.int64),
            np.ones(B, dtype=np.int64),
        )

    if policy.kind == "scl":
        keys, metrics, fo, go = _decode_paths(llrs, spec, w, policy.list_size, kern)
        chosen, valid = _select_candidates(keys, metrics, tags)
        return (
            chosen,
            valid,
            np.full(B, fo, dtype=np.int64),
            np.full(B, go, dtype=np.int64),
            np.full(B, policy.list_size, dtype=np.int64),
        )

    # adaptive: SC first, then the escalation schedule, hash-gated
    if tags is None or any(t is None for t in tags):
        raise ValueError("adaptive decoding requires a hash tag per trial")
    keys1, _, fo, go = _decode_paths(llrs, spec, w, 1, kern)
    chosen = keys1[:, 0].copy()
    ops_f = np.full(B, fo, dtype=np.int64)
    ops_g = np.full(B, go, dtype=np.int64)
    list_used = np.ones(B, dtype=np.int64)
    valid = np.fromiter((tags[b].matches(chosen[b]) for b in range(B)), dtype=bool, count=B)
    pending = ~valid
    for lval in policy.schedule:
        if not pending.any():
            break
        idx = np.nonzero(pending)[0]
        keys_l, metrics_l, fo, go = _decode_paths(llrs[idx], spec, w[idx], lval, kern)
        sub, sub_valid = _select_candidates(keys_l, metrics_l, [tags[i] for i in idx])
        chosen[idx] = sub
        ops_f[idx] += fo
        ops_g[idx] += go
        list_used[idx] = lval
        valid[idx] = sub_valid
        pending[idx] = ~sub_valid
    return chosen, valid, ops_f, ops_g, list_used


# --------------------------------------------------------- single-shot API


def _prep_single(llr_in, spec: CodeSpec, w) -> tuple[np.ndarray, np.ndarray]:
    llr = np.asarray(llr_in, dtype=np.float64)
    if llr.shape != (spec.block_len,):
        raise ValueError(f"expected {spec.block_len} LLRs, got shape {llr.shape}")
    wa = w.to_array() if hasattr(w, "to_array") else np.asarray(w, dtype=np.uint8)
    if wa.shape != (spec.block_len - spec.key_len,):
        raise ValueError(
            f"expected {spec.block_len - spec.key_len} helper bits, got shape {wa.shape}"
        )
    return llr[None, :], wa[None, :]


def sc_decode(llr_in, spec: CodeSpec, w, kernel: str = MIN_SUM) -> DecodeOutcome:
    """Successive-cancellation decode with helper bits on frozen positions."""
    llrs, wb = _prep_single(llr_in, spec, w)
    keys, _, fo, go = _decode_paths(llrs, spec, wb, 1, kernel)
    return DecodeOutcome(BitVector(keys[0, 0]), None, fo, go, 1)


def scl_decode(llr_in, spec: CodeSpec, w, L: int, tag: HashTag | None, kernel: str = MIN_SUM) -> DecodeOutcome:
    """List decode keeping L paths; return the best tag match if any.

    With a tag, candidates are scanned in ascending path-metric order and
    the first hash match is returned (hash_valid True); if none matches,
    the best-metric candidate is returned flagged invalid.  With tag=None
    the best-metric candidate is returned and hash_valid is unset.
    """
    if L < 1:
        raise ValueError("list size must be >= 1")
    llrs, wb = _prep_single(llr_in, spec, w)
    keys, metrics, fo, go = _decode_paths(llrs, spec, wb, L, kernel)
    chosen, valid = _select_candidates(keys, metrics, [tag])
    return DecodeOutcome(
        BitVector(chosen[0]), None if valid is None else bool(valid[0]), fo, go, L
    )


def adaptive_decode(llr_in, spec: CodeSpec, w, policy: DecoderPolicy, tag: HashTag) -> DecodeOutcome:
    """SC first; escalate through the SCL schedule while the tag check fails."""
    if policy.kind != "adaptive":
        raise ValueError("policy must be adaptive")
    llrs, wb = _prep_single(llr_in, spec, w)
    keys, valid, fo, go, used = decode_policy_batch(llrs, spec, wb, policy, [tag])
    return DecodeOutcome(BitVector(keys[0]), bool(valid[0]), int(fo[0]), int(go[0]), int(used[0]))


# --------------------------------------------------------------- puncturing


def puncture_llrs(llr_in, pattern: PuncturePattern) -> np.ndarray:
    """Expand N-m observed LLRs to N by inserting exact zeros at punctured
    positions; accepts a single vector or a batch (..., N-m)."""
    llr = np.asarray(llr_in, dtype=np.float64)
    n_obs = llr.shape[-1]
    N = n_obs + pattern.m
    if pattern.m and pattern.indices[-1] > N:
        raise ValueError(f"puncture indices exceed block length {N}")
    out = np.zeros(llr.shape[:-1] + (N,), dtype=np.float64)
    mask = np.ones(N, dtype=bool)
    mask[pattern.index_array() - 1] = False
    out[..., mask] = llr
    return out
