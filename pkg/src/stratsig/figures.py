"""Figure rendering for the report-producing commands.

All figures are written straight to files with a headless backend and fixed
metadata, so re-running a command reproduces them byte for byte.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_SAVE_KW = {"dpi": 150, "metadata": {"Software": "stratsig"}}


def _new_axes(width=6.0, height=4.0):
    fig, ax = plt.subplots(figsize=(width, height))
    ax.grid(True, alpha=0.3)
    return fig, ax


def save_tailbound_figure(ks, empirical, wilson, bounds, eps, fname):
    """Histogram of the visit count against the clamped tail bound."""
    fig, ax = _new_axes()
    ks = np.asarray(ks)
    ax.bar(ks, empirical, width=0.9, color="steelblue", alpha=0.7, label="empirical P(count = k)")
    ax.plot(ks, wilson, drawstyle="steps-mid", color="darkorange", lw=1.0, label="99% Wilson upper")
    finite = [(k, b) for k, b in zip(ks, bounds) if b is not None]
    if finite:
        kk, bb = zip(*finite)
        ax.plot(kk, bb, "r--", lw=1.2, label="tail bound (clamped)")
    ax.set_xlabel("boxes visited k")
    ax.set_ylabel("probability")
    ax.set_yscale("log")
    ax.set_title(f"visit-count tail at eps = {eps:g}")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(fname, **_SAVE_KW)
    plt.close(fig)


def save_convergence_figure(summaries, fname):
    """Median distances against the box scale, log-log."""
    fig, ax = _new_axes()
    eps = [s["eps"] for s in summaries]
    for key, label, style in (
        ("median_frechet", "extracted word vs path", "o-"),
        ("median_sup_small", "small-box polygonal", "s--"),
        ("median_sup_modified", "modified large-box polygonal", "d:"),
    ):
        vals = [s[key] for s in summaries]
        ax.loglog(eps, vals, style, label=label)
    ax.set_xlabel("box scale eps")
    ax.set_ylabel("median distance")
    ax.set_title("convergence of the reconstructions")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(fname, **_SAVE_KW)
    plt.close(fig)


def save_reconstruction_figure(path_points, word_points, eps, fname):
    """Overlay of one simulated path and its scaled extracted word."""
    fig, ax = _new_axes(5.5, 5.5)
    ax.plot(path_points[:, 0], path_points[:, 1], color="gray", lw=0.6, label="diffusion path")
    ax.plot(word_points[:, 0], word_points[:, 1], "o-", color="crimson", ms=3, lw=1.2, label="scaled word")
    ax.set_aspect("equal")
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    ax.set_title(f"reconstruction at eps = {eps:g}")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(fname, **_SAVE_KW)
    plt.close(fig)
