"""Command-line interface: construct codes, enroll and regenerate keys
against files, audit leakage, and run Monte Carlo sweeps.

Exit codes: 0 success, 1 declared regeneration failure, 2 usage or
file errors, 3 helper/spec fingerprint mismatch.
"""

from __future__ import annotations

import argparse
import json
import os
import secrets
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from .channel import PufModel, draw_enrollment, read_sram_dump, write_sram_dump
from .codec import DecoderPolicy, EXACT_TANH, MIN_SUM
from .construction import CodeSpec, construct_code
from .hashing import HashConfig
from .montecarlo import SweepConfig, run_sweep
from .scheme import (
    FingerprintMismatch,
    HelperData,
    embed_with_fill,
    enroll_syndrome,
    leakage_audit,
    regenerate_syndrome,
)

EXIT_OK = 0
EXIT_REGEN_FAILED = 1
EXIT_USAGE = 2
EXIT_FINGERPRINT = 3

_AUDIT_PRINT_LIMIT = 2048  # rank checks above this take minutes; use `audit`
WORKERS_ENV = "POLARPUF_WORKERS"


class _CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_USAGE):
        super().__init__(message)
        self.code = code


def _load_spec(path: str) -> CodeSpec:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise _CliError(f"spec not found: {exc}") from exc
    try:
        return CodeSpec.from_json(text)
    except (ValueError, KeyError, TypeError) as exc:
        raise _CliError(f"invalid spec document {path}: {exc}") from exc


def _load_helper(path: str) -> HelperData:
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise _CliError(f"helper data not found: {exc}") from exc
    try:
        return HelperData.from_bytes(blob)
    except (ValueError, IndexError) as exc:
        raise _CliError(f"invalid helper container {path}: {exc}") from exc


def _load_readout(path: str, expected_len: int) -> np.ndarray:
    try:
        bits = read_sram_dump(path)
    except OSError as exc:
        raise _CliError(f"cannot read PUF input: {exc}") from exc
    except ValueError as exc:
        raise _CliError(f"bad PUF input {path}: {exc}") from exc
    if bits.size != expected_len:
        raise _CliError(f"PUF input has {bits.size} bits, expected {expected_len}")
    return bits


def _policy(text: str, kernel: str) -> DecoderPolicy:
    try:
        return DecoderPolicy.parse(text, kernel)
    except ValueError as exc:
        raise _CliError(str(exc)) from exc


# ------------------------------------------------------------- subcommands


def cmd_construct(args) -> int:
    try:
        spec = construct_code(args.n, args.k, args.p_design, args.puncture_m, args.puncture_kind)
    except ValueError as exc:
        raise _CliError(str(exc)) from exc
    Path(args.out).write_text(json.dumps(spec.to_json_dict(), indent=2) + "\n")
    print(f"wrote {args.out}")
    print(f"  N={spec.block_len} K={spec.key_len} design_p={spec.design_p}")
    print(f"  frozen set: {len(spec.frozen)} indices; punctured: {spec.puncture.m}; "
          f"PUF bits needed: {spec.n_puf_bits}")
    print(f"  fingerprint: {spec.fingerprint()}")
    if spec.block_len <= _AUDIT_PRINT_LIMIT:
        audit = leakage_audit(spec)
        verdict = "PASS" if audit.passed else "FAIL"
        print(f"  leakage audit: ranks ({audit.rank_frozen}, {audit.rank_info}, "
              f"{audit.rank_joint}) -> {verdict}")
    else:
        print("  leakage audit: skipped at this size (run `polarpuf audit`)")
    return EXIT_OK


def cmd_enroll(args) -> int:
    spec = _load_spec(args.spec)
    if (args.puf_in is None) == (not args.random):
        raise _CliError("provide exactly one of --puf-in or --random")
    if args.puf_in:
        puf_bits = _load_readout(args.puf_in, spec.n_puf_bits)
    else:
        seed = args.seed if args.seed is not None else secrets.randbits(63)
        model = PufModel(spec.n_puf_bits, 0.0, seed)
        puf_bits = draw_enrollment(model)
        print(f"drew {spec.n_puf_bits} enrollment bits (seed={seed})")
        if args.puf_out:
            write_sram_dump(args.puf_out, puf_bits)
            print(f"wrote readout dump: {args.puf_out}")
    # fill bits are always fresh OS randomness and never stored, so
    # punctured enrollments are not reproducible even with --seed
    fill_rng = np.random.Generator(np.random.Philox(key=secrets.randbits(127)))
    x = embed_with_fill(puf_bits, spec, fill_rng)
    key, helper = enroll_syndrome(x, spec, HashConfig(args.m_bits))
    Path(args.helper_out).write_bytes(helper.to_bytes())
    print(f"wrote helper data: {args.helper_out} "
          f"({len(helper.w)} syndrome bits + {helper.tag.m_bits}-bit tag)")
    if args.key_out:
        Path(args.key_out).write_text(key.to_hex() + "\n")
        print(f"WARNING: secret key written to disk: {args.key_out}", file=sys.stderr)
    return EXIT_OK


def cmd_regen(args) -> int:
    spec = _load_spec(args.spec)
    helper = _load_helper(args.helper)
    bits = _load_readout(args.puf_in, spec.n_puf_bits)
    policy = _policy(args.policy, args.f_kernel)
    try:
        result = regenerate_syndrome(bits, helper, spec, args.p, policy)
    except FingerprintMismatch as exc:
        raise _CliError(str(exc), EXIT_FINGERPRINT) from exc
    except ValueError as exc:
        raise _CliError(str(exc)) from exc
    out = result.outcome
    print(f"ops_f={out.ops_f} ops_g={out.ops_g} list_used={out.list_used}")
    if not result.success:
        print("regeneration FAILED (tag mismatch)")
        return EXIT_REGEN_FAILED
    print("regeneration OK")
    if args.key_out:
        Path(args.key_out).write_text(result.key.to_hex() + "\n")
        print(f"WARNING: secret key written to disk: {args.key_out}", file=sys.stderr)
    else:
        print(f"key: {result.key.to_hex()}")
    return EXIT_OK


def cmd_audit(args) -> int:
    spec = _load_spec(args.spec)
    audit = leakage_audit(spec)
    n, k = spec.block_len, spec.key_len
    print(f"rank(G_frozen) = {audit.rank_frozen} (expect {n - k})")
    print(f"rank(G_info)   = {audit.rank_info} (expect {k})")
    print(f"rank(joint)    = {audit.rank_joint} (expect {n})")
    print("PASS" if audit.passed else "FAIL")
    return EXIT_OK if audit.passed else EXIT_REGEN_FAILED


def cmd_info(args) -> int:
    if args.spec:
        spec = _load_spec(args.spec)
        print(f"code spec: N={spec.block_len} K={spec.key_len} design_p={spec.design_p}")
        print(f"  construction: {spec.construction}")
        print(f"  punctured positions: {spec.puncture.m}; PUF bits: {spec.n_puf_bits}")
        print(f"  fingerprint: {spec.fingerprint()}")
    if args.helper:
        helper = _load_helper(args.helper)
        print(f"helper data: scheme={helper.scheme}")
        print(f"  payload bits: {len(helper.payload)}")
        print(f"  tag: {helper.tag.m_bits} bits ({helper.tag.algo_id})")
        print(f"  spec fingerprint: {helper.spec_fingerprint}")
    if not args.spec and not args.helper:
        raise _CliError("nothing to describe: pass --spec and/or --helper")
    return EXIT_OK


def _resolve_sweep(ref: str) -> str:
    if ref.startswith("preset:"):
        name = ref.split(":", 1)[1]
        try:
            return resources.files("polarpuf.presets").joinpath(f"{name}.json").read_text()
        except (FileNotFoundError, ModuleNotFoundError) as exc:
            raise _CliError(f"unknown preset {name!r}") from exc
    try:
        return Path(ref).read_text()
    except OSError as exc:
        raise _CliError(f"sweep config not found: {exc}") from exc


def cmd_simulate(args) -> int:
    text = _resolve_sweep(args.sweep)
    spec = _load_spec(args.spec) if args.spec else None
    try:
        cfg = SweepConfig.from_json(text, spec)
    except (ValueError, KeyError, TypeError) as exc:
        raise _CliError(f"invalid sweep config: {exc}") from exc
    workers = args.workers or int(os.environ.get(WORKERS_ENV, "1"))

    def progress(done, total):
        print(f"\r  batches {done}/{total}", end="", file=sys.stderr, flush=True)

    try:
        report = run_sweep(
            cfg,
            workers=workers,
            progress=progress if not args.quiet else None,
            checkpoint=args.checkpoint,
        )
    except ValueError as exc:
        raise _CliError(str(exc)) from exc
    if not args.quiet:
        print(file=sys.stderr)
    out = Path(args.out)
    report.write(out, out.with_suffix(".json"))
    written = [str(out), str(out.with_suffix(".json"))]
    if not args.no_figures:
        from .figures import render_report_figures

        written += [str(p) for p in render_report_figures(report, os.fspath(out.with_suffix("")))]
    print(f"wrote {', '.join(written)} ({report.wall_time_s:.1f}s)")
    print(f"{'p':>6} {'policy':>12} {'trials':>9} {'failures':>9} {'rate':>12} "
          f"{'ci_high':>12} {'ops_f+g':>10}")
    for pt in report.points:
        label = pt.policy if pt.policy == "sc" else f"{pt.policy}:{pt.list_size}"
        print(f"{pt.p:>6} {label:>12} {pt.trials:>9} {pt.failures:>9} "
              f"{pt.failure_rate:>12.3e} {pt.ci_high:>12.3e} "
              f"{pt.mean_ops_f + pt.mean_ops_g:>10.1f}")
    return EXIT_OK


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polarpuf",
        description="Polar-code secret-key generation for SRAM PUFs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", help="build a code spec and write it as JSON")
    p.add_argument("--n", type=int, required=True, help="block length (power of two)")
    p.add_argument("--k", type=int, required=True, help="key length")
    p.add_argument("--p-design", type=float, default=0.15, dest="p_design",
                   help="design bit error probability (default 0.15)")
    p.add_argument("--puncture-m", type=int, default=0, dest="puncture_m",
                   help="number of punctured codeword positions")
    p.add_argument("--puncture-kind", choices=["tail", "quasi-uniform"], default="tail",
                   dest="puncture_kind")
    p.add_argument("--out", required=True, help="output spec JSON path")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("enroll", help="enroll a PUF readout: write helper data")
    p.add_argument("--spec", required=True)
    p.add_argument("--puf-in", dest="puf_in", help="SRAM dump with N-m readout bits")
    p.add_argument("--random", action="store_true", help="draw a synthetic readout")
    p.add_argument("--seed", type=int, help="seed for --random")
    p.add_argument("--puf-out", dest="puf_out",
                   help="with --random: also save the drawn readout as an SRAM dump")
    p.add_argument("--m-bits", type=int, default=128, dest="m_bits",
                   help="hash tag width (default 128)")
    p.add_argument("--helper-out", required=True, dest="helper_out")
    p.add_argument("--key-out", dest="key_out", help="ALSO write the secret key (hex)")
    p.set_defaults(func=cmd_enroll)

    p = sub.add_parser("regen", help="regenerate the key from a noisy readout")
    p.add_argument("--spec", required=True)
    p.add_argument("--helper", required=True)
    p.add_argument("--puf-in", dest="puf_in", required=True)
    p.add_argument("--p", type=float, required=True, help="channel bit error probability")
    p.add_argument("--policy", default="adaptive:8", help="sc | scl:L | adaptive:Lmax")
    p.add_argument("--f-kernel", choices=[MIN_SUM, EXACT_TANH], default=MIN_SUM,
                   dest="f_kernel")
    p.add_argument("--key-out", dest="key_out")
    p.set_defaults(func=cmd_regen)

    p = sub.add_parser("audit", help="zero-leakage rank audit of a spec")
    p.add_argument("--spec", required=True)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("info", help="describe spec/helper files")
    p.add_argument("--spec")
    p.add_argument("--helper")
    p.set_defaults(func=cmd_info)

    p = sub.add_parser("simulate", help="run a Monte Carlo sweep, write CSV/JSON/figures")
    p.add_argument("--sweep", required=True, help="sweep JSON path or preset:<name>")
    p.add_argument("--spec", help="spec file, required when the sweep references a fingerprint")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--workers", type=int, default=0,
                   help=f"parallel workers (default ${WORKERS_ENV} or 1)")
    p.add_argument("--checkpoint", help="batch-level resume file for long runs")
    p.add_argument("--no-figures", action="store_true", dest="no_figures")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_simulate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except _CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except BrokenPipeError:
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
