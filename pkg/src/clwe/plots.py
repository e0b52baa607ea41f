"""Figure rendering for run reports.

Every figure sits next to the TSV it visualizes; the TSVs remain the
machine-readable record. Uses the Agg backend so rendering works headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def plot_bli_summary(
    train_p1: float, test_p1: float, title: str, path: str
) -> None:
    """Bar chart of train vs test P@1 for one run."""
    fig, ax = plt.subplots(figsize=(4, 3))
    bars = ax.bar(["train", "test"], [train_p1, test_p1], color=["#d62772", "#e8862d"])
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel("P@1")
    ax.set_title(title)
    for bar, value in zip(bars, (train_p1, test_p1)):
        ax.text(
            bar.get_x() + bar.get_width() / 2, value + 0.02, f"{value:.3f}",
            ha="center", fontsize=9,
        )
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_objective_trace(
    trace: list[tuple[float, float, float]], path: str
) -> None:
    """Retrofit objective (L and its two parts) per sweep, log-scaled."""
    sweeps = range(1, len(trace) + 1)
    fig, ax = plt.subplots(figsize=(4.5, 3))
    ax.plot(sweeps, [t[0] for t in trace], marker="o", label="L")
    ax.plot(sweeps, [t[1] for t in trace], marker=".", ls="--", label="L_a")
    ax.plot(sweeps, [t[2] for t in trace], marker=".", ls="--", label="L_b")
    ax.set_xlabel("sweep")
    ax.set_ylabel("objective")
    if all(v > 0 for t in trace for v in t):
        ax.set_yscale("log")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
