"""Figure rendering for run statistics (saved next to the CSV output)."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .icp import RunRecord
from .orchestrator import reporting_convergence

_CONVERGED_COLOR = "#2166ac"
_FAILED_COLOR = "#b2182b"


def render_loss_histogram(
    losses: np.ndarray,
    converged: np.ndarray,
    path,
    title: str = "final reconstruction loss over runs",
) -> None:
    """Histogram of final losses, converged runs highlighted.

    ``converged`` flags the runs counted as converged under the reporting
    rule; non-finite losses are dropped from the plot.
    """
    losses = np.asarray(losses, dtype=np.float64)
    converged = np.asarray(converged, dtype=bool)
    finite = np.isfinite(losses)
    losses, converged = losses[finite], converged[finite]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    if losses.size:
        bins = np.histogram_bin_edges(losses, bins=min(30, max(5, losses.size)))
        ax.hist(
            [losses[converged], losses[~converged]],
            bins=bins,
            stacked=True,
            color=[_CONVERGED_COLOR, _FAILED_COLOR],
            label=["converged", "not converged"],
        )
        ax.legend(frameon=False)
    ax.set_xlabel("final reconstruction loss")
    ax.set_ylabel("runs")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(Path(path), dpi=120)
    plt.close(fig)


def render_loss_traces(
    records: list[RunRecord],
    path,
    max_traces: int = 40,
    title: str = "reconstruction loss per epoch",
) -> None:
    """Per-epoch loss curves, blue for converged runs and red otherwise."""
    flags = reporting_convergence(records)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    shown = 0
    for record, flag in zip(records, flags):
        if shown >= max_traces:
            break
        trace = [r.reconstruction_loss for r in record.reports]
        if not trace:
            continue
        ax.plot(
            trace,
            color=_CONVERGED_COLOR if flag else _FAILED_COLOR,
            alpha=0.55,
            linewidth=1.0,
        )
        shown += 1
    ax.set_xlabel("epoch")
    ax.set_ylabel("reconstruction loss")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(Path(path), dpi=120)
    plt.close(fig)


def render_run_report(records: list[RunRecord], out_dir, prefix: str = "run_stats"):
    """Write the standard figure set for a cohort of runs; returns the paths."""
    out_dir = Path(out_dir)
    flags = reporting_convergence(records)
    losses = np.array([r.final_loss for r in records])
    hist_path = out_dir / f"{prefix}.png"
    render_loss_histogram(losses, flags, hist_path)
    trace_path = out_dir / f"{prefix}_traces.png"
    render_loss_traces(records, trace_path)
    return hist_path, trace_path
