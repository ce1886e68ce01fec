"""Matplotlib rendering of phase images and error maps for evaluation reports."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def save_phase_figure(path, phase: np.ndarray, title: str) -> None:
    """Render a wrapped-phase raster with the standard [-pi, pi) gray scale."""
    fig, ax = plt.subplots(figsize=(4.2, 4.0), constrained_layout=True)
    im = ax.imshow(phase, cmap="gray", vmin=-np.pi, vmax=np.pi, interpolation="nearest")
    ax.set_title(title)
    ax.set_xticks([])
    ax.set_yticks([])
    cbar = fig.colorbar(im, ax=ax, fraction=0.046)
    cbar.set_ticks([-np.pi, 0, np.pi])
    cbar.set_ticklabels([r"$-\pi$", "0", r"$\pi$"])
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_error_figure(path, error: np.ndarray, title: str) -> None:
    """Render an absolute wrapped-error map."""
    fig, ax = plt.subplots(figsize=(4.2, 4.0), constrained_layout=True)
    im = ax.imshow(error, cmap="magma", vmin=0.0, interpolation="nearest")
    ax.set_title(title)
    ax.set_xticks([])
    ax.set_yticks([])
    fig.colorbar(im, ax=ax, fraction=0.046, label="|wrapped error| (rad)")
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_report_figures(out_dir, est_wrapped: np.ndarray, truth_wrapped: np.ndarray,
                        error: np.ndarray) -> list[str]:
    """Write the three standard evaluation figures into ``out_dir``."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for name, renderer, data, title in (
        ("estimate.png", save_phase_figure, est_wrapped, "estimated wrapped phase"),
        ("truth.png", save_phase_figure, truth_wrapped, "true wrapped phase"),
        ("error.png", save_error_figure, error, "absolute wrapped error"),
    ):
        path = os.path.join(out_dir, name)
        renderer(path, data, title)
        paths.append(path)
    return paths
