"""Figures written next to the CSV reports (PNG files, headless backend)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _save(fig, path):
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_entropy_profile(profile, path):
    """Bar chart of marginal entropy per pyramid component."""
    labels = [label for label, _ in profile]
    values = [value for _, value in profile]
    fig, ax = plt.subplots(figsize=(max(4.0, 0.45 * len(labels) + 2), 3.2))
    ax.bar(range(len(labels)), values, color="tab:blue")
    ax.set_xticks(range(len(labels)), labels, rotation=45, ha="right")
    ax.set_ylabel("entropy (bits)")
    ax.grid(axis="y", alpha=0.3)
    return _save(fig, path)


def plot_mi_curves(curves: dict, path):
    """Mutual information against pixel distance, one line per component."""
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    for label, curve in curves.items():
        ax.plot(curve.distances, curve.mi_bits, marker="o", markersize=2.5, label=label)
    ax.set_xlabel("distance (pixels)")
    ax.set_ylabel("mutual information (bits)")
    ax.set_yscale("symlog", linthresh=1e-2)
    ax.legend(fontsize=7, ncol=2)
    ax.grid(alpha=0.3)
    return _save(fig, path)


def plot_rate_report(report, path):
    """Per-level bits/dim (bars) against the share of samples in each level (line)."""
    labels = [lv.label for lv in report.levels]
    fig, ax = plt.subplots(figsize=(max(4.0, 0.45 * len(labels) + 2), 3.2))
    x = range(len(labels))
    ax.bar(x, [lv.bits_per_dim for lv in report.levels], color="tab:red", alpha=0.8)
    ax.set_ylabel("bits/dim", color="tab:red")
    ax.set_xticks(x, labels, rotation=45, ha="right")
    twin = ax.twinx()
    twin.plot(x, [100 * lv.pixel_share for lv in report.levels], color="tab:blue", marker="o")
    twin.set_ylabel("share of samples (%)", color="tab:blue")
    return _save(fig, path)
