"""Figure rendering for sweep reports: failure-rate and complexity plots
written next to the delimited output.  Kept separate from the harness so
the library's report path stays plain CSV/JSON; this module (and the CLI)
consume those reports."""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path

from matplotlib.figure import Figure

from .montecarlo import SimulationReport

__all__ = ["render_report_figures"]

_STYLE = {
    "sc": dict(color="tab:blue", marker="o"),
    "scl": dict(color="tab:red", marker="s"),
    "adaptive": dict(color="tab:green", marker="^"),
}


def _series(report: SimulationReport):
    """Group points by policy label, ordered by p."""
    groups = defaultdict(list)
    for pt in report.points:
        label = pt.policy if pt.policy == "sc" else f"{pt.policy} L={pt.list_size}"
        groups[label].append(pt)
    for label, pts in groups.items():
        yield label, sorted(pts, key=lambda pt: pt.p)


def _style_for(label: str) -> dict:
    return _STYLE.get(label.split()[0], dict(color="tab:gray", marker="x"))


def render_failure_figure(report: SimulationReport, path) -> Path:
    """Failure rate vs p per policy with exact binomial error bars."""
    fig = Figure(figsize=(6.0, 4.2))
    ax = fig.subplots()
    floor = 0.5 / max(pt.trials for pt in report.points)
    for label, pts in _series(report):
        x = [pt.p for pt in pts]
        y = [max(pt.failure_rate, floor) for pt in pts]
        lo = [max(pt.failure_rate - pt.ci_low, 0.0) for pt in pts]
        hi = [max(pt.ci_high - pt.failure_rate, 0.0) for pt in pts]
        ax.errorbar(x, y, yerr=[lo, hi], label=label, capsize=3, **_style_for(label))
    ax.set_yscale("log")
    ax.set_xlabel("bit error probability p")
    ax.set_ylabel("key regeneration failure rate")
    ax.set_title(f"N={report.config.spec.block_len}, K={report.config.spec.key_len}")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    return path


def render_ops_figure(report: SimulationReport, path) -> Path:
    """Mean f+g kernel operations per decode vs p per policy."""
    fig = Figure(figsize=(6.0, 4.2))
    ax = fig.subplots()
    for label, pts in _series(report):
        x = [pt.p for pt in pts]
        y = [pt.mean_ops_f + pt.mean_ops_g for pt in pts]
        ax.plot(x, y, label=label, **_style_for(label))
    ax.set_xlabel("bit error probability p")
    ax.set_ylabel("mean f+g operations per decode")
    ax.set_title(f"N={report.config.spec.block_len}, K={report.config.spec.key_len}")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    return path


def render_report_figures(report: SimulationReport, out_prefix) -> list[Path]:
    """Write <prefix>.failure.png and <prefix>.ops.png; returns the paths."""
    return [
        render_failure_figure(report, Path(f"{out_prefix}.failure.png")),
        render_ops_figure(report, Path(f"{out_prefix}.ops.png")),
    ]
