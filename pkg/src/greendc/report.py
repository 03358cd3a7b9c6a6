"""Report files and report comparison."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

from .engine import MetricsReport
from .errors import GreenDCError

INTERVALS_HEADER = [
    "t", "server_w", "cooling_w", "total_w", "renewable_w", "brown_w", "green_w",
    "demand_units", "active_hosts", "mean_rt_ms", "deactivated_pct",
]

# summary keys compared by ``compare``; lower is better for all of them except green_kwh and renewable_share
COMPARED = [
    "brown_kwh", "green_kwh", "total_kwh", "night_brown_kwh", "renewable_share",
    "mean_rt_ms", "p95_rt_ms", "p99_rt_ms", "deadline_violations", "deactivation_pct",
]


class ReportError(GreenDCError):
    pass


class SchemaMismatch(ReportError):
    pass


def _fmt(x: float) -> str:
    return repr(float(x))


def emit_report(report: MetricsReport, out_dir: str | Path, plots: bool = False, extra: dict | None = None) -> Path:
    """Write ``intervals.csv`` and ``summary.json`` (and ``plots/`` if asked)."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        with (out / "intervals.csv").open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(INTERVALS_HEADER)
            for r in report.intervals:
                s = r.sample
                w.writerow([
                    r.t, _fmt(s.server_watts), _fmt(s.cooling_watts), _fmt(s.total_watts),
                    _fmt(s.renewable_watts), _fmt(s.brown_watts), _fmt(s.green_used_watts),
                    _fmt(r.demand_units), r.active_hosts, _fmt(r.mean_rt_ms), _fmt(r.deactivated_pct),
                ])
        summary = report.summary()
        if extra:
            summary.update(extra)
        (out / "summary.json").write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n")
        if plots:
            write_plots(report, out / "plots")
    except OSError as exc:
        raise ReportError(f"cannot write report to {out}: {exc}") from exc
    return out


def write_plots(report: MetricsReport, plot_dir: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plot_dir.mkdir(parents=True, exist_ok=True)
    hours = [r.t * report.dt / 3600.0 for r in report.intervals]
    series = {
        "power.png": [
            ("total", [r.sample.total_watts for r in report.intervals]),
            ("renewable", [r.sample.renewable_watts for r in report.intervals]),
            ("brown", [r.sample.brown_watts for r in report.intervals]),
        ],
        "active_hosts.png": [("active hosts", [r.active_hosts for r in report.intervals])],
        "response_time.png": [("mean rt (ms)", [r.mean_rt_ms for r in report.intervals])],
    }
    for name, lines in series.items():
        fig, ax = plt.subplots(figsize=(8, 3))
        for label, ys in lines:
            ax.plot(hours, ys, label=label)
        ax.set_xlabel("hour")
        ax.legend()
        fig.tight_layout()
        fig.savefig(plot_dir / name, dpi=100)
        plt.close(fig)


def load_summary(path: str | Path) -> dict:
    p = Path(path)
    if p.is_dir():
        p = p / "summary.json"
    try:
        data = json.loads(p.read_text())
    except FileNotFoundError:
        raise ReportError(f"{p}: no such file") from None
    except json.JSONDecodeError as exc:
        raise ReportError(f"{p}: not valid JSON ({exc})") from None
    missing = [k for k in ("horizon", "dt", "brown_kwh", "green_kwh", "mean_rt_ms", "rt_percentiles") if k not in data]
    if missing:
        raise SchemaMismatch(f"{p}: missing keys {missing}")
    return data


def _flat(summary: dict) -> dict[str, float]:
    out = {k: summary[k] for k in COMPARED if k in summary}
    pct = summary.get("rt_percentiles", {})
    out["p95_rt_ms"] = pct.get("p95", math.nan)
    out["p99_rt_ms"] = pct.get("p99", math.nan)
    return out


def compare(a: dict, b: dict) -> list[tuple[str, float, float, float, float]]:
    """Rows of (metric, a, b, b - a, percent change relative to a)."""
    for key in ("horizon", "dt"):
        if a.get(key) != b.get(key):
            raise SchemaMismatch(f"{key} differs: {a.get(key)} vs {b.get(key)}")
    fa, fb = _flat(a), _flat(b)
    rows = []
    for k in COMPARED:
        if k not in fa or k not in fb:
            continue
        va, vb = float(fa[k]), float(fb[k])
        delta = vb - va
        pct = 0.0 if delta == 0 else (delta / va * 100.0 if va != 0 else math.inf)
        rows.append((k, va, vb, delta, pct))
    return rows


def format_comparison(rows, label_a: str = "A", label_b: str = "B") -> str:
    lines = [f"{'metric':<20} {label_a:>12} {label_b:>12} {'delta':>12} {'delta %':>9}"]
    for k, va, vb, d, p in rows:
        lines.append(f"{k:<20} {va:>12.4f} {vb:>12.4f} {d:>+12.4f} {p:>+8.2f}%")
    return "\n".join(lines)
