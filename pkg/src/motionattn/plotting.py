"""Matplotlib figure export for the report paths.

Figures are rendered headlessly to files next to the delimited outputs they
visualize (training report, evaluation report, attention-map export). They
are a convenience view; the CSV/PGM files remain the machine-readable
contract.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_METRIC_KEYS = ("MPJPE", "PA-MPJPE", "MPVPE", "ACC-ERR")


def save_map_figure(maps: dict[str, np.ndarray], path) -> Path:
    """Heatmap panel of named T x T attention maps."""
    path = Path(path)
    fig, axes = plt.subplots(1, len(maps), figsize=(3.2 * len(maps), 3.2))
    if len(maps) == 1:
        axes = [axes]
    for ax, (name, values) in zip(axes, maps.items()):
        im = ax.imshow(values, cmap="viridis", vmin=0.0)
        ax.set_title(name)
        ax.set_xlabel("frame")
        ax.set_ylabel("frame")
        fig.colorbar(im, ax=ax, fraction=0.046)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def save_training_curves(rows, path) -> Path:
    """Loss and validation-metric curves from per-epoch report rows."""
    path = Path(path)
    epochs = [r.epoch for r in rows]
    fig, (ax_loss, ax_metric) = plt.subplots(1, 2, figsize=(9.0, 3.4))
    ax_loss.plot(epochs, [r.train_loss for r in rows], marker="o")
    ax_loss.set_xlabel("epoch")
    ax_loss.set_ylabel("train loss")
    ax_loss.grid(alpha=0.3)
    for key in _METRIC_KEYS:
        ax_metric.plot(epochs, [r.metrics[key] for r in rows], marker=".", label=key)
    ax_metric.set_xlabel("epoch")
    ax_metric.set_ylabel("validation error (mm)")
    ax_metric.legend(fontsize=8)
    ax_metric.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def save_eval_figure(per_sequence: dict[str, list[float]], path) -> Path:
    """Per-sequence metric traces for an evaluation run."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(7.0, 3.4))
    for name, values in per_sequence.items():
        ax.plot(values, marker=".", label=name)
    ax.set_xlabel("sequence index")
    ax.set_ylabel("error (mm)")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path
