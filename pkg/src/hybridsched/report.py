"""Aggregation of run records into a summary table and figures.

The summary CSV carries two metric kinds per (family, algorithm) group:

* ``ratio_vs_lp`` — statistics of makespan over the relaxation optimum;
* ``pairwise_makespan`` — statistics of makespan(a)/makespan(b) joined on
  (instance, platform), for every ordered algorithm pair.

The report path also renders the same aggregates as PNG figures next to the
CSV: a per-family box/strip plot of ratios by algorithm (mean highlighted)
and a per-family heatmap of mean pairwise ratios.
"""

from __future__ import annotations

import csv
import io
import itertools
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .errors import GraphParseError

SUMMARY_COLUMNS = [
    "metric",
    "family",
    "algorithm",
    "algorithm_b",
    "n",
    "mean",
    "min",
    "max",
]


@dataclass
class Summary:
    # (family, algorithm) -> list of makespan/lp_star ratios
    lp_ratios: dict[tuple[str, str], list[float]]
    # (family, algo_a, algo_b) -> list of pairwise makespan ratios
    pair_ratios: dict[tuple[str, str, str], list[float]]

    def mean_lp_ratio(self, family: str, algorithm: str) -> float:
        vals = self.lp_ratios[(family, algorithm)]
        return sum(vals) / len(vals)


def summarize_runs(csv_text: str) -> Summary:
    """Aggregate a run CSV (see ``bench.CSV_COLUMNS``)."""
    reader = csv.DictReader(io.StringIO(csv_text))
    if reader.fieldnames is None or "algorithm" not in reader.fieldnames:
        raise GraphParseError("not a run-record CSV")
    ok_rows = []
    for row in reader:
        if row.get("status") != "ok":
            continue
        ok_rows.append(row)

    lp_ratios: dict[tuple[str, str], list[float]] = defaultdict(list)
    by_cell: dict[tuple[str, str], dict[str, float]] = defaultdict(dict)
    families: dict[str, str] = {}
    for row in ok_rows:
        fam, algo = row["family"], row["algorithm"]
        if row["ratio"]:
            lp_ratios[(fam, algo)].append(float(row["ratio"]))
        if row["makespan"]:
            cell = (row["instance"], row["platform"])
            by_cell[cell][algo] = float(row["makespan"])
            families[row["instance"]] = fam

    pair_ratios: dict[tuple[str, str, str], list[float]] = defaultdict(list)
    for (instance, _platform), algos in by_cell.items():
        fam = families[instance]
        for a, b in itertools.permutations(sorted(algos), 2):
            if algos[b] > 0:
                pair_ratios[(fam, a, b)].append(algos[a] / algos[b])
    return Summary(lp_ratios=dict(lp_ratios), pair_ratios=dict(pair_ratios))


def summary_to_csv(summary: Summary) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SUMMARY_COLUMNS)
    for (fam, algo) in sorted(summary.lp_ratios):
        vals = summary.lp_ratios[(fam, algo)]
        writer.writerow(
            [
                "ratio_vs_lp",
                fam,
                algo,
                "",
                len(vals),
                repr(sum(vals) / len(vals)),
                repr(min(vals)),
                repr(max(vals)),
            ]
        )
    for (fam, a, b) in sorted(summary.pair_ratios):
        vals = summary.pair_ratios[(fam, a, b)]
        writer.writerow(
            [
                "pairwise_makespan",
                fam,
                a,
                b,
                len(vals),
                repr(sum(vals) / len(vals)),
                repr(min(vals)),
                repr(max(vals)),
            ]
        )
    return buf.getvalue()


def parse_summary_csv(csv_text: str) -> dict[tuple, dict]:
    """Summary CSV back into {(metric, family, algo, algo_b): stats}."""
    reader = csv.DictReader(io.StringIO(csv_text))
    if reader.fieldnames != SUMMARY_COLUMNS:
        raise GraphParseError("not a summary CSV")
    out = {}
    for row in reader:
        key = (row["metric"], row["family"], row["algorithm"], row["algorithm_b"])
        out[key] = {
            "n": int(row["n"]),
            "mean": float(row["mean"]),
            "min": float(row["min"]),
            "max": float(row["max"]),
        }
    return out


# ---------------------------------------------------------------------------
# Figures
# ---------------------------------------------------------------------------

def render_figures(summary: Summary, outdir: str | Path) -> list[Path]:
    """Write the report figures; returns the created paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    families = sorted({fam for fam, _ in summary.lp_ratios})
    for fam in families:
        written.append(_ratio_figure(summary, fam, outdir))
        pair_path = _pairwise_figure(summary, fam, outdir)
        if pair_path is not None:
            written.append(pair_path)
    return written


def _ratio_figure(summary: Summary, family: str, outdir: Path) -> Path:
    algos = sorted(a for f, a in summary.lp_ratios if f == family)
    data = [summary.lp_ratios[(family, a)] for a in algos]

    fig, ax = plt.subplots(figsize=(1.6 + 1.1 * len(algos), 4.0))
    ax.boxplot(data, tick_labels=algos, showfliers=False)
    for pos, vals in enumerate(data, start=1):
        spread = np.linspace(-0.18, 0.18, num=len(vals)) if len(vals) > 1 else [0.0]
        ax.plot(pos + np.asarray(spread), sorted(vals), ".", color="gray", ms=3, alpha=0.6)
        ax.plot([pos], [np.mean(vals)], "o", color="red", ms=8, zorder=3)
    ax.set_ylabel("makespan / LP lower bound")
    ax.set_title(f"{family}: ratio to lower bound (red dot = mean)")
    ax.axhline(1.0, color="black", lw=0.8, ls=":")
    fig.tight_layout()
    path = outdir / f"ratio_by_algorithm_{family}.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def _pairwise_figure(summary: Summary, family: str, outdir: Path) -> Path | None:
    algos = sorted({a for f, a, _ in summary.pair_ratios if f == family})
    if not algos:
        return None
    grid = np.ones((len(algos), len(algos)))
    for i, a in enumerate(algos):
        for j, b in enumerate(algos):
            vals = summary.pair_ratios.get((family, a, b))
            if vals:
                grid[i, j] = sum(vals) / len(vals)

    fig, ax = plt.subplots(figsize=(2.0 + 0.9 * len(algos), 1.8 + 0.9 * len(algos)))
    im = ax.imshow(grid, cmap="RdYlGn_r", vmin=grid.min(), vmax=max(grid.max(), 1.0001))
    ax.set_xticks(range(len(algos)), algos, rotation=45, ha="right")
    ax.set_yticks(range(len(algos)), algos)
    for i in range(len(algos)):
        for j in range(len(algos)):
            ax.text(j, i, f"{grid[i, j]:.3f}", ha="center", va="center", fontsize=8)
    ax.set_title(f"{family}: mean makespan(row) / makespan(col)")
    fig.colorbar(im, ax=ax, shrink=0.8)
    fig.tight_layout()
    path = outdir / f"pairwise_mean_{family}.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
