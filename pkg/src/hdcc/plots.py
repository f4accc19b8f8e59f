"""Figure rendering for reports: sweep curves, histograms, training curves.

Every delimited report the harness writes gets a matching PNG next to it.
Rendering uses the Agg backend so it works headless; figures are written
atomically like every other report artifact.
"""

from __future__ import annotations

import io
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .io import atomic_write_bytes  # noqa: E402

__all__ = ["save_sweep_figure", "save_hist_figure", "save_history_figure"]


def _save(fig, path) -> None:
    buf = io.BytesIO()
    fig.savefig(buf, format=os.path.splitext(os.fspath(path))[1].lstrip(".") or "png")
    plt.close(fig)
    atomic_write_bytes(path, buf.getvalue())


def save_sweep_figure(aggregates: list[dict], path, title: str = "") -> None:
    """Mean test/train accuracy vs. threshold, with std error bars."""
    alphas = [a["alpha"] for a in aggregates]
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for key, label, marker in (
        ("test_acc", "test", "o"),
        ("train_acc", "train", "s"),
    ):
        means = [a[f"{key}_mean"] for a in aggregates]
        stds = [a[f"{key}_std"] for a in aggregates]
        ax.errorbar(alphas, means, yerr=stds, marker=marker, capsize=3, label=label)
    best = max(aggregates, key=lambda a: a["test_acc_mean"])
    ax.axvline(best["alpha"], color="grey", ls=":", lw=1)
    ax.set_xlabel("confidence threshold (pct points)")
    ax.set_ylabel("accuracy (%)")
    if title:
        ax.set_title(title)
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    _save(fig, path)


def save_hist_figure(bins: list[tuple[float, float, int]], path, title: str = "") -> None:
    """Confidence histogram: one bar per [bin_low, bin_high) bin."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    lows = [b[0] for b in bins]
    widths = [b[1] - b[0] for b in bins]
    counts = [b[2] for b in bins]
    ax.bar(lows, counts, width=widths, align="edge", edgecolor="white", linewidth=0.3)
    ax.set_xlabel("confidence (pct points)")
    ax.set_ylabel("correctly classified samples")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    _save(fig, path)


def save_history_figure(accuracy: list[float], best_iteration: int, path) -> None:
    """Per-iteration training accuracy with the saved-best iteration marked."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    iters = range(1, len(accuracy) + 1)
    ax.plot(iters, [100.0 * a for a in accuracy], lw=1)
    if best_iteration:
        ax.axvline(best_iteration, color="grey", ls=":", lw=1)
    ax.set_xlabel("iteration")
    ax.set_ylabel("train accuracy (%)")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    _save(fig, path)
