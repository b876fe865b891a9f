"""Figure rendering for the report path.

Each function takes already-computed data and writes one PNG next to the
delimited output. Matplotlib is imported lazily with the Agg backend so
the data-only paths never touch a display stack.
"""
from __future__ import annotations

import numpy as np

__all__ = [
    "render_trajectory",
    "render_ensemble_histograms",
    "render_sweep",
]


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def render_trajectory(trajectory: np.ndarray, path: str) -> None:
    """Objective and gradient norm against the iteration count."""
    plt = _pyplot()
    iterations = trajectory[:, 0]
    fig, (ax_obj, ax_grad) = plt.subplots(2, 1, sharex=True, figsize=(6.4, 6.0))
    ax_obj.plot(iterations, trajectory[:, 1], color="tab:blue")
    ax_obj.set_ylabel("objective")
    ax_obj.grid(True, alpha=0.3)
    ax_grad.semilogy(iterations, np.maximum(trajectory[:, 2], 1e-300), color="tab:red")
    ax_grad.set_ylabel("gradient norm")
    ax_grad.set_xlabel("iteration")
    ax_grad.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_ensemble_histograms(
    iteration_counts: np.ndarray,
    iteration_edges: np.ndarray,
    initial_counts: np.ndarray,
    initial_edges: np.ndarray,
    path: str,
) -> None:
    """Side-by-side histograms: iterations to success and initial objectives."""
    plt = _pyplot()
    fig, (ax_it, ax_j0) = plt.subplots(1, 2, figsize=(9.6, 3.8))
    ax_it.bar(
        iteration_edges[:-1],
        iteration_counts,
        width=np.diff(iteration_edges),
        align="edge",
        color="tab:blue",
        edgecolor="white",
    )
    ax_it.set_xlabel("iterations to reach target")
    ax_it.set_ylabel("runs")
    ax_j0.bar(
        initial_edges[:-1],
        initial_counts,
        width=np.diff(initial_edges),
        align="edge",
        color="tab:green",
        edgecolor="white",
    )
    ax_j0.set_xlabel("initial objective")
    ax_j0.set_ylabel("runs")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_sweep(rows, path: str) -> None:
    """Failure counts for both optimizers and mean iterations vs amplitude bound.

    ``rows`` are (c0, n_fail_grape, n_fail_bfgs, mean_iters_grape) tuples.
    """
    plt = _pyplot()
    rows = list(rows)
    c0 = np.array([row[0] for row in rows], dtype=float)
    fig, ax_fail = plt.subplots(figsize=(6.8, 4.4))
    ax_fail.plot(c0, [row[1] for row in rows], "o-", color="tab:blue", label="gradient ascent")
    ax_fail.plot(c0, [row[2] for row in rows], "s--", color="tab:cyan", label="BFGS")
    ax_fail.set_xlabel("initial amplitude bound c0")
    ax_fail.set_ylabel("failed runs")
    ax_fail.grid(True, alpha=0.3)
    ax_iter = ax_fail.twinx()
    mean_iters = np.array([row[3] for row in rows], dtype=float)
    ax_iter.plot(c0, mean_iters, "^-", color="tab:green", label="mean iterations")
    ax_iter.set_ylabel("mean iterations (successful runs)")
    handles1, labels1 = ax_fail.get_legend_handles_labels()
    handles2, labels2 = ax_iter.get_legend_handles_labels()
    ax_fail.legend(handles1 + handles2, labels1 + labels2, loc="upper right")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
