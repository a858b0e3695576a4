"""Matplotlib rendering for report output.

Everything here draws to files with the Agg backend so reports work in
headless environments. Figures are deliberately plain: the point is a
quick visual check of a run, not publication graphics.
"""

from __future__ import annotations

from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["render_image_png", "render_kernel_png"]


def _plot_1d(ax, axis, values, background, standard_error):
    ax.plot(axis, values, color="tab:blue", lw=1.2, label="correlation")
    ax.plot(axis, background, color="0.4", ls="--", lw=1.0, label="background")
    if standard_error is not None:
        se = np.asarray(standard_error, dtype=float)
        if np.all(np.isfinite(se)):
            ax.fill_between(
                axis,
                values - 3.0 * se,
                values + 3.0 * se,
                color="tab:blue",
                alpha=0.2,
                lw=0,
                label="+/- 3 SE",
            )
    ax.set_xlabel("scan position (m)")
    ax.set_ylabel("photocurrent correlation")
    ax.legend(loc="best", frameon=False)


def _plot_2d(fig, ax, axes, values):
    x, y = axes
    extent = (x[0], x[-1], y[0], y[-1])
    im = ax.imshow(
        np.asarray(values, dtype=float).T,
        origin="lower",
        extent=extent,
        aspect="equal",
        cmap="magma",
    )
    ax.set_xlabel("scan x (m)")
    ax.set_ylabel("scan y (m)")
    fig.colorbar(im, ax=ax, label="photocurrent correlation")


def render_image_png(
    axes: Sequence[np.ndarray],
    values: np.ndarray,
    background: np.ndarray,
    out_path: str,
    standard_error: Optional[np.ndarray] = None,
    title: Optional[str] = None,
) -> str:
    """Render a ghost image (1-D trace or 2-D map) to a PNG file."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0), dpi=150)
    try:
        if len(axes) == 1:
            _plot_1d(ax, axes[0], np.asarray(values, dtype=float),
                     np.asarray(background, dtype=float), standard_error)
        else:
            _plot_2d(fig, ax, axes, values)
        if title:
            ax.set_title(title)
        fig.tight_layout()
        fig.savefig(out_path)
    finally:
        plt.close(fig)
    return out_path


def render_kernel_png(
    axis: np.ndarray,
    values: np.ndarray,
    out_path: str,
    title: Optional[str] = None,
) -> str:
    """Render the magnitude of a two-point correlation kernel as a heatmap."""
    mag = np.abs(np.asarray(values))
    fig, ax = plt.subplots(figsize=(5.0, 4.4), dpi=150)
    try:
        extent = (axis[0], axis[-1], axis[0], axis[-1])
        im = ax.imshow(mag.T, origin="lower", extent=extent,
                       aspect="equal", cmap="viridis")
        ax.set_xlabel("x1 (m)")
        ax.set_ylabel("x2 (m)")
        fig.colorbar(im, ax=ax, label="|K(x1, x2)|")
        if title:
            ax.set_title(title)
        fig.tight_layout()
        fig.savefig(out_path)
    finally:
        plt.close(fig)
    return out_path
