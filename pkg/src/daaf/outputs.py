"""CSV and SVG artifacts for experiment summaries and sweeps.

CSV files are RFC-4180 (CRLF, header row, '.' decimal separator, UTF-8).
Floats are written with ``repr``, which round-trips exactly; rerunning the
same experiment with a different worker count reproduces the files byte for
byte.  SVG plots are presentation-only.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Dict, List, Tuple

import numpy as np

from .harness import ExperimentSummary, SweepResult


def _fmt(x: float) -> str:
    return repr(float(x))


def write_outputs(summary: ExperimentSummary, out_dir) -> List[Path]:
    """Write trajectories.csv, summary.csv, ratios.csv, meta.json, and one
    SVG per mean/ratio series.  Returns the paths written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: List[Path] = []

    path = out / "trajectories.csv"
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["policy", "replication", "t", "cum_regret"])
        for label in summary.labels:
            traj = summary.trajectories[label]
            for r in range(traj.shape[0]):
                row = traj[r]
                for i, t in enumerate(summary.checkpoints):
                    writer.writerow([label, r, int(t), _fmt(row[i])])
    written.append(path)

    path = out / "summary.csv"
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["policy", "t", "mean", "stderr"])
        for label in summary.labels:
            for i, t in enumerate(summary.checkpoints):
                writer.writerow([label, int(t), _fmt(summary.mean[label][i]), _fmt(summary.stderr[label][i])])
    written.append(path)

    path = out / "ratios.csv"
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["numerator", "denominator", "t", "ratio"])
        for a, b in summary.ratio_pairs:
            series = summary.ratios[(a, b)]
            for i, t in enumerate(summary.checkpoints):
                value = series[i]
                if not math.isnan(value):
                    writer.writerow([a, b, int(t), _fmt(value)])
    written.append(path)

    path = out / "meta.json"
    with path.open("w", encoding="utf-8") as fh:
        json.dump(
            {
                "master_seed": summary.master_seed,
                "replications": summary.replications,
                "config_digest": summary.config_digest,
                "wall_time": summary.wall_time,
            },
            fh,
            indent=2,
        )
        fh.write("\n")
    written.append(path)

    ts = np.asarray(summary.checkpoints)
    for label in summary.labels:
        written.append(
            _line_plot(
                out / f"mean_{_slug(label)}.svg",
                ts,
                summary.mean[label],
                f"mean pseudo-regret: {label}",
                "cumulative pseudo-regret",
            )
        )
    for a, b in summary.ratio_pairs:
        written.append(
            _line_plot(
                out / f"ratio_{_slug(a)}_over_{_slug(b)}.svg",
                ts,
                summary.ratios[(a, b)],
                f"regret ratio: {a} / {b}",
                "ratio",
            )
        )
    return written


def read_summary(out_dir) -> ExperimentSummary:
    """Rebuild a summary from the CSVs written by :func:`write_outputs`."""
    out = Path(out_dir)
    trajectories_rows: Dict[str, Dict[int, Dict[int, float]]] = {}
    labels: List[str] = []
    with (out / "trajectories.csv").open(newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            label = row["policy"]
            if label not in trajectories_rows:
                trajectories_rows[label] = {}
                labels.append(label)
            trajectories_rows[label].setdefault(int(row["replication"]), {})[int(row["t"])] = float(
                row["cum_regret"]
            )

    mean_rows: Dict[str, Dict[int, float]] = {}
    stderr_rows: Dict[str, Dict[int, float]] = {}
    checkpoint_set: Dict[int, None] = {}
    with (out / "summary.csv").open(newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            label = row["policy"]
            if label not in mean_rows:
                mean_rows[label] = {}
                stderr_rows[label] = {}
                if label not in labels:
                    labels.append(label)
            t = int(row["t"])
            checkpoint_set[t] = None
            mean_rows[label][t] = float(row["mean"])
            stderr_rows[label][t] = float(row["stderr"])

    checkpoints = np.asarray(sorted(checkpoint_set), dtype=np.int64)
    trajectories = {}
    for label, reps in trajectories_rows.items():
        mat = np.zeros((len(reps), len(checkpoints)))
        for r, by_t in reps.items():
            mat[r] = [by_t[int(t)] for t in checkpoints]
        trajectories[label] = mat
    mean = {label: np.asarray([by_t[int(t)] for t in checkpoints]) for label, by_t in mean_rows.items()}
    stderr = {label: np.asarray([by_t[int(t)] for t in checkpoints]) for label, by_t in stderr_rows.items()}

    ratio_pairs: List[Tuple[str, str]] = []
    ratios: Dict[Tuple[str, str], np.ndarray] = {}
    with (out / "ratios.csv").open(newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            pair = (row["numerator"], row["denominator"])
            if pair not in ratios:
                ratio_pairs.append(pair)
                ratios[pair] = np.full(len(checkpoints), np.nan)
            i = int(np.searchsorted(checkpoints, int(row["t"])))
            ratios[pair][i] = float(row["ratio"])

    meta = json.loads((out / "meta.json").read_text(encoding="utf-8"))
    return ExperimentSummary(
        checkpoints=checkpoints,
        labels=labels,
        trajectories=trajectories,
        mean=mean,
        stderr=stderr,
        final_mean={label: float(mean[label][-1]) for label in labels},
        ratio_pairs=ratio_pairs,
        ratios=ratios,
        master_seed=meta["master_seed"],
        replications=meta["replications"],
        config_digest=meta["config_digest"],
        wall_time=meta["wall_time"],
    )


def write_sweep(sweep: SweepResult, out_dir) -> List[Path]:
    """sweep.csv plus one relative-regret SVG per policy."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: List[Path] = []
    path = out / "sweep.csv"
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["policy", "mu0", "mean_delay", "final_regret_mean", "final_regret_stderr", "relative_regret"]
        )
        for label, points in sweep.points.items():
            for pt in points:
                writer.writerow(
                    [label, _fmt(pt.mu0), _fmt(pt.mean_delay), _fmt(pt.final_mean), _fmt(pt.final_stderr), _fmt(pt.ratio)]
                )
    written.append(path)
    for label, points in sweep.points.items():
        written.append(
            _line_plot(
                out / f"sweep_{_slug(label)}.svg",
                np.asarray([pt.mu0 for pt in points]),
                np.asarray([pt.ratio for pt in points]),
                f"relative regret vs delay location: {label}",
                "final regret / baseline",
                xlabel="delay location parameter",
                marker="o",
            )
        )
    return written


def _slug(label: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_" else "-" for ch in label)


def _line_plot(path: Path, x, y, title: str, ylabel: str, xlabel: str = "round t", marker=None) -> Path:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(x, y, marker=marker)
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path
