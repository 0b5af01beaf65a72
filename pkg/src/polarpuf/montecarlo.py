"""Monte Carlo harness for failure-rate and complexity estimation.

Every trial draws a fresh device, enrolls it, re-reads it through the
noise model, regenerates, and compares the regenerated key against the
enrolled key directly (tag collisions are tracked separately so short
simulation tags cannot mask decoder failures).  Per-trial randomness is
keyed by (sweep seed, point index, trial index), so results are
bit-identical for any worker count and any batch schedule; early
stopping truncates at batch granularity in deterministic batch order.
"""

from __future__ import annotations

import hashlib
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .channel import RNG_ALGO, PufModel, derive_seed, draw_authentication, draw_enrollment, trial_model
from .codec import DecoderPolicy, channel_llr, decode_policy_batch, polar_transform, puncture_llrs
from .construction import CodeSpec
from .hashing import HashConfig, hash_key
from .scheme import CODE_OFFSET, SYNDROME

__all__ = [
    "SweepConfig",
    "PointResult",
    "SimulationReport",
    "binomial_ci",
    "run_point",
    "run_sweep",
]

DEFAULT_BATCH = 4096


def binomial_ci(failures: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    """Exact (Clopper-Pearson) two-sided confidence interval."""
    if not 0 <= failures <= trials or trials < 1:
        raise ValueError(f"need 0 <= failures <= trials, got {failures}/{trials}")
    if not 0.0 < confidence < 1.0:
        raise ValueError(f"confidence must be in (0, 1), got {confidence}")
    alpha = 1.0 - confidence
    low = 0.0 if failures == 0 else float(stats.beta.ppf(alpha / 2, failures, trials - failures + 1))
    high = 1.0 if failures == trials else float(stats.beta.ppf(1 - alpha / 2, failures + 1, trials - failures))
    return low, high


@dataclass(frozen=True)
class SweepConfig:
    """One sweep: a code, a p grid, a policy list, and trial bookkeeping."""

    spec: CodeSpec
    p_values: tuple[float, ...]
    policies: tuple[DecoderPolicy, ...]
    trials_per_point: int
    seed: int
    m_bits: int = 32
    scheme: str = SYNDROME
    max_failures: int | None = None
    batch_size: int = DEFAULT_BATCH

    def __post_init__(self):
        if self.trials_per_point < 1:
            raise ValueError("trials_per_point must be >= 1")
        if any(not 0.0 < p < 0.5 for p in self.p_values):
            raise ValueError("every p must lie in (0, 0.5)")
        if self.scheme not in (SYNDROME, CODE_OFFSET):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.max_failures is not None and self.max_failures < 1:
            raise ValueError("max_failures must be >= 1 when set")
        object.__setattr__(self, "p_values", tuple(float(p) for p in self.p_values))
        object.__setattr__(self, "policies", tuple(self.policies))

    def points(self) -> list[tuple[float, DecoderPolicy]]:
        """Cartesian product, p-major; list position is the point index."""
        return [(p, pol) for p in self.p_values for pol in self.policies]

    def to_json_dict(self) -> dict:
        return {
            "spec": self.spec.to_json_dict(),
            "p_values": list(self.p_values),
            "policies": [pol.label for pol in self.policies],
            "f_kernel": self.policies[0].f_kernel if self.policies else "min-sum",
            "trials_per_point": self.trials_per_point,
            "seed": self.seed,
            "m_bits": self.m_bits,
            "scheme": self.scheme,
            "max_failures": self.max_failures,
            "batch_size": self.batch_size,
        }

    @classmethod
    def from_json_dict(cls, doc: dict, spec: CodeSpec | None = None) -> "SweepConfig":
        """Parse a sweep document.

        The "spec" field is either an inline code document or a bare
        fingerprint string; in the latter case the caller must supply the
        resolved `spec`, which is checked against the fingerprint.
        """
        ref = doc["spec"]
        if isinstance(ref, str):
            if spec is None:
                raise ValueError(
                    f"sweep references spec by fingerprint {ref[:12]}...; "
                    "a resolved spec document is required"
                )
            if spec.fingerprint() != ref:
                raise ValueError("supplied spec does not match the sweep's fingerprint")
            resolved = spec
        else:
            resolved = CodeSpec.from_json_dict(ref)
        kern = doc.get("f_kernel", "min-sum")
        return cls(
            spec=resolved,
            p_values=tuple(float(p) for p in doc["p_values"]),
            policies=tuple(DecoderPolicy.parse(t, kern) for t in doc["policies"]),
            trials_per_point=int(doc["trials_per_point"]),
            seed=int(doc["seed"]),
            m_bits=int(doc.get("m_bits", 32)),
            scheme=str(doc.get("scheme", SYNDROME)),
            max_failures=(None if doc.get("max_failures") is None else int(doc["max_failures"])),
            batch_size=int(doc.get("batch_size", DEFAULT_BATCH)),
        )

    @classmethod
    def from_json(cls, text: str, spec: CodeSpec | None = None) -> "SweepConfig":
        return cls.from_json_dict(json.loads(text), spec)

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_json_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("ascii")).hexdigest()


@dataclass(frozen=True)
class PointResult:
    """Counts and derived statistics for one (p, policy) grid point."""

    p: float
    policy: str
    list_size: int
    trials: int
    failures: int
    ci_low: float
    ci_high: float
    mean_ops_f: float
    mean_ops_g: float
    mean_list_used: float
    tag_false_accepts: int = 0
    censored: bool = False

    @property
    def failure_rate(self) -> float:
        return self.failures / self.trials

    def csv_row(self) -> str:
        return ",".join(
            [
                repr(self.p),
                self.policy,
                str(self.list_size),
                str(self.trials),
                str(self.failures),
                repr(self.failure_rate),
                repr(self.ci_low),
                repr(self.ci_high),
                repr(self.mean_ops_f),
                repr(self.mean_ops_g),
                repr(self.mean_list_used),
            ]
        )


CSV_HEADER = "p,policy,L,trials,failures,rate,ci_low,ci_high,mean_ops_f,mean_ops_g,mean_list_used"


@dataclass(frozen=True)
class SimulationReport:
    """Full sweep output; the CSV form is byte-stable for a given config."""

    config: SweepConfig
    points: tuple[PointResult, ...]
    wall_time_s: float

    @property
    def seed(self) -> int:
        return self.config.seed

    @property
    def spec_fingerprint(self) -> str:
        return self.config.spec.fingerprint()

    def to_csv(self) -> str:
        lines = [
            f"# seed={self.config.seed} spec={self.spec_fingerprint} "
            f"m_bits={self.config.m_bits} scheme={self.config.scheme} rng={RNG_ALGO}",
            CSV_HEADER,
        ]
        lines.extend(pt.csv_row() for pt in self.points)
        return "\n".join(lines) + "\n"

    def to_json_dict(self) -> dict:
        return {
            "config": self.config.to_json_dict(),
            "spec_fingerprint": self.spec_fingerprint,
            "rng_algo": RNG_ALGO,
            "wall_time_s": self.wall_time_s,
            "points": [
                {
                    "p": pt.p,
                    "policy": pt.policy,
                    "L": pt.list_size,
                    "trials": pt.trials,
                    "failures": pt.failures,
                    "rate": pt.failure_rate,
                    "ci_low": pt.ci_low,
                    "ci_high": pt.ci_high,
                    "mean_ops_f": pt.mean_ops_f,
                    "mean_ops_g": pt.mean_ops_g,
                    "mean_list_used": pt.mean_list_used,
                    "tag_false_accepts": pt.tag_false_accepts,
                    "censored": pt.censored,
                }
                for pt in self.points
            ],
        }

    def write(self, csv_path, json_path=None) -> None:
        with open(csv_path, "w", encoding="ascii") as fh:
            fh.write(self.to_csv())
        if json_path is not None:
            with open(json_path, "w", encoding="ascii") as fh:
                json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
                fh.write("\n")


# ------------------------------------------------------------- batch worker


@dataclass(frozen=True)
class _BatchSums:
    trials: int
    failures: int
    ops_f: int
    ops_g: int
    list_used: int
    tag_false_accepts: int


def _simulate_batch(
    spec: CodeSpec,
    p: float,
    policy: DecoderPolicy,
    scheme: str,
    point_seed: int,
    start: int,
    count: int,
    m_bits: int,
) -> _BatchSums:
    """Simulate trials [start, start+count) of one point."""
    N, K = spec.block_len, spec.key_len
    n_puf = spec.n_puf_bits
    cfg = HashConfig(m_bits)
    base = PufModel(n_puf, p, point_seed)

    xs = np.empty((count, n_puf), dtype=np.uint8)
    ys = np.empty((count, n_puf), dtype=np.uint8)
    fills = np.empty((count, spec.puncture.m), dtype=np.uint8)
    chosen = np.empty((count, K), dtype=np.uint8)  # code-offset chosen keys
    for t in range(count):
        model = trial_model(base, start + t)
        xs[t] = draw_enrollment(model)
        ys[t] = draw_authentication(xs[t], model, 0)
        extra = np.random.Generator(np.random.Philox(key=derive_seed(model.seed, "aux")))
        if spec.puncture.m:
            fills[t] = extra.integers(0, 2, spec.puncture.m, dtype=np.uint8)
        if scheme == CODE_OFFSET:
            chosen[t] = extra.integers(0, 2, K, dtype=np.uint8)

    if scheme == SYNDROME:
        x_full = np.empty((count, N), dtype=np.uint8)
        x_full[:, spec.unpunctured_idx0] = xs
        if spec.puncture.m:
            x_full[:, spec.punctured_idx0] = fills
        c = polar_transform(x_full)
        true_keys = c[:, spec.info_idx0]
        w = c[:, spec.frozen_idx0]
        llrs = puncture_llrs(channel_llr(ys, p), spec.puncture)
    else:
        if spec.puncture.m:
            raise ValueError("code-offset simulation does not support punctured specs")
        u = np.zeros((count, N), dtype=np.uint8)
        u[:, spec.info_idx0] = chosen
        c = polar_transform(u)
        true_keys = chosen
        w = np.zeros((count, N - K), dtype=np.uint8)
        # decoder sees offset xor y = c xor noise; noise = xs xor ys
        llrs = channel_llr(c ^ xs ^ ys, p)

    tags = None
    if policy.kind in ("scl", "adaptive"):
        tags = [hash_key(true_keys[t], cfg) for t in range(count)]

    keys, hash_valid, ops_f, ops_g, list_used = decode_policy_batch(llrs, spec, w, policy, tags)
    wrong = np.any(keys != true_keys, axis=1)
    false_accepts = int(np.sum(wrong & hash_valid)) if hash_valid is not None else 0
    return _BatchSums(
        trials=count,
        failures=int(np.sum(wrong)),
        ops_f=int(np.sum(ops_f)),
        ops_g=int(np.sum(ops_g)),
        list_used=int(np.sum(list_used)),
        tag_false_accepts=false_accepts,
    )


def _run_batch_task(args) -> tuple[int, int, _BatchSums]:
    point_idx, batch_idx, spec, p, policy, scheme, point_seed, start, count, m_bits = args
    sums = _simulate_batch(spec, p, policy, scheme, point_seed, start, count, m_bits)
    return point_idx, batch_idx, sums


def _finalize_point(
    p: float,
    policy: DecoderPolicy,
    batches: list[_BatchSums],
    max_failures: int | None,
) -> PointResult:
    """Reduce per-batch sums in batch order, honoring the early-stop rule."""
    trials = failures = ops_f = ops_g = list_used = false_acc = 0
    censored = False
    for sums in batches:
        trials += sums.trials
        failures += sums.failures
        ops_f += sums.ops_f
        ops_g += sums.ops_g
        list_used += sums.list_used
        false_acc += sums.tag_false_accepts
        if max_failures is not None and failures >= max_failures:
            censored = True
            break
    low, high = binomial_ci(failures, trials)
    return PointResult(
        p=p,
        policy=policy.kind,
        list_size=policy.list_size,
        trials=trials,
        failures=failures,
        ci_low=low,
        ci_high=high,
        mean_ops_f=ops_f / trials,
        mean_ops_g=ops_g / trials,
        mean_list_used=list_used / trials,
        tag_false_accepts=false_acc,
        censored=censored,
    )


def _batch_plan(cfg: SweepConfig) -> list[tuple]:
    tasks = []
    for point_idx, (p, policy) in enumerate(cfg.points()):
        point_seed = derive_seed(cfg.seed, "point", point_idx)
        start = 0
        batch_idx = 0
        while start < cfg.trials_per_point:
            count = min(cfg.batch_size, cfg.trials_per_point - start)
            tasks.append(
                (point_idx, batch_idx, cfg.spec, p, policy, cfg.scheme, point_seed, start, count, cfg.m_bits)
            )
            start += count
            batch_idx += 1
    return tasks


def _load_checkpoint(path, cfg: SweepConfig) -> dict[tuple[int, int], _BatchSums]:
    """Read completed batch sums from a checkpoint file, if it exists."""
    results: dict[tuple[int, int], _BatchSums] = {}
    try:
        with open(path, "r", encoding="ascii") as fh:
            lines = fh.read().splitlines()
    except FileNotFoundError:
        return results
    if not lines:
        return results
    head = json.loads(lines[0])
    if head.get("sweep_fingerprint") != cfg.fingerprint():
        raise ValueError(f"checkpoint {path} belongs to a different sweep config")
    for line in lines[1:]:
        if not line.strip():
            continue
        rec = json.loads(line)
        results[(rec["point"], rec["batch"])] = _BatchSums(
            trials=rec["trials"],
            failures=rec["failures"],
            ops_f=rec["ops_f"],
            ops_g=rec["ops_g"],
            list_used=rec["list_used"],
            tag_false_accepts=rec["tag_false_accepts"],
        )
    return results


def _checkpoint_record(point_idx: int, batch_idx: int, sums: _BatchSums) -> str:
    return json.dumps(
        {
            "point": point_idx,
            "batch": batch_idx,
            "trials": sums.trials,
            "failures": sums.failures,
            "ops_f": sums.ops_f,
            "ops_g": sums.ops_g,
            "list_used": sums.list_used,
            "tag_false_accepts": sums.tag_false_accepts,
        },
        sort_keys=True,
    )


def run_sweep(cfg: SweepConfig, workers: int = 1, progress=None, checkpoint=None) -> SimulationReport:
    """Run every (p, policy) point; deterministic for any worker count.

    With max_failures set, points stop at the first batch (in batch-index
    order) whose cumulative failure count reaches the limit; batches a
    parallel run may have computed beyond that boundary are discarded, so
    reported trials always equal the trials actually counted.

    With `checkpoint` set, each finished batch is appended to that file
    and an interrupted sweep resumes where it left off; counter-keyed
    trial randomness makes the resumed report identical to an
    uninterrupted one.
    """
    t0 = time.perf_counter()
    tasks = _batch_plan(cfg)
    results: dict[tuple[int, int], _BatchSums] = {}
    ckpt_fh = None
    if checkpoint is not None:
        results = _load_checkpoint(checkpoint, cfg)
        fresh = not results
        ckpt_fh = open(checkpoint, "a", encoding="ascii")
        if fresh and ckpt_fh.tell() == 0:
            ckpt_fh.write(json.dumps({"sweep_fingerprint": cfg.fingerprint()}) + "\n")
            ckpt_fh.flush()

    def record(point_idx: int, batch_idx: int, sums: _BatchSums):
        results[(point_idx, batch_idx)] = sums
        if ckpt_fh is not None:
            ckpt_fh.write(_checkpoint_record(point_idx, batch_idx, sums) + "\n")
            ckpt_fh.flush()
        if progress is not None:
            progress(len(results), len(tasks))

    pending = [t for t in tasks if (t[0], t[1]) not in results]
    try:
        if workers <= 1:
            fails_so_far: dict[int, int] = {}
            if cfg.max_failures is not None:
                for point_idx, batch_idx, sums in sorted(
                    ((k[0], k[1], v) for k, v in results.items())
                ):
                    fails_so_far[point_idx] = fails_so_far.get(point_idx, 0) + sums.failures
            stopped = {
                pt for pt, f in fails_so_far.items()
                if cfg.max_failures is not None and f >= cfg.max_failures
            }
            for task in pending:
                if task[0] in stopped:
                    continue
                point_idx, batch_idx, sums = _run_batch_task(task)
                record(point_idx, batch_idx, sums)
                if cfg.max_failures is not None:
                    fails_so_far[point_idx] = fails_so_far.get(point_idx, 0) + sums.failures
                    if fails_so_far[point_idx] >= cfg.max_failures:
                        stopped.add(point_idx)
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                for point_idx, batch_idx, sums in pool.map(_run_batch_task, pending, chunksize=1):
                    record(point_idx, batch_idx, sums)
    finally:
        if ckpt_fh is not None:
            ckpt_fh.close()

    points = []
    for point_idx, (p, policy) in enumerate(cfg.points()):
        batches = []
        batch_idx = 0
        while (point_idx, batch_idx) in results:
            batches.append(results[(point_idx, batch_idx)])
            batch_idx += 1
        points.append(_finalize_point(p, policy, batches, cfg.max_failures))
    return SimulationReport(cfg, tuple(points), time.perf_counter() - t0)


def run_point(
    spec: CodeSpec,
    p: float,
    policy: DecoderPolicy,
    trials: int,
    seed: int,
    m_bits: int = 32,
    scheme: str = SYNDROME,
    max_failures: int | None = None,
    batch_size: int = DEFAULT_BATCH,
    workers: int = 1,
) -> PointResult:
    """Single-point convenience wrapper around run_sweep."""
    cfg = SweepConfig(
        spec=spec,
        p_values=(p,),
        policies=(policy,),
        trials_per_point=trials,
        seed=seed,
        m_bits=m_bits,
        scheme=scheme,
        max_failures=max_failures,
        batch_size=batch_size,
    )
    return run_sweep(cfg, workers=workers).points[0]
