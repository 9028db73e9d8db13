"""Figure rendering for CLI reports.

Figures are written next to the delimited outputs they summarize; the Agg
backend keeps everything headless.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def save_trace_plot(trace, path: str | Path) -> None:
    """Objective value and accepted step sizes over the sweeps of a fit."""
    objs = trace.objectives
    steps = trace.steps
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6, 6), sharex=True)
    ax1.plot(range(len(objs)), objs, marker=".", lw=1)
    ax1.set_ylabel("objective")
    ax1.grid(alpha=0.3)
    if steps:
        arr = list(zip(*steps))
        for k, etas in enumerate(arr):
            ax2.semilogy(range(1, len(steps) + 1), etas, lw=1, label=f"mode {k + 1}")
        ax2.legend(fontsize=8)
    ax2.set_xlabel("iteration")
    ax2.set_ylabel("accepted step")
    ax2.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_bench_plot(rows: Sequence[dict], path: str | Path) -> None:
    """Wall time against total dimension, one line per (N, density) cell group."""
    fig, ax = plt.subplots(figsize=(6, 4))
    groups: dict[tuple, list[tuple[int, float]]] = {}
    for row in rows:
        groups.setdefault((row["n_samples"], row["density"]), []).append(
            (row["d"], row["wall_seconds"])
        )
    for (n, dens), pts in sorted(groups.items()):
        pts.sort()
        ax.loglog([p[0] for p in pts], [p[1] for p in pts], marker="o",
                  label=f"N={n}, density={dens:g}")
    ax.set_xlabel("total dimension d")
    ax.set_ylabel("wall time (s)")
    ax.grid(alpha=0.3, which="both")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_nrmse_plot(values: Sequence[float], path: str | Path) -> None:
    """Histogram of per-sample prediction NRMSE."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(values, bins=min(30, max(5, len(values) // 5 + 1)), alpha=0.8)
    ax.axvline(float(sum(values)) / max(len(values), 1), color="k", ls="--", lw=1,
               label="mean")
    ax.set_xlabel("NRMSE")
    ax.set_ylabel("samples")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
