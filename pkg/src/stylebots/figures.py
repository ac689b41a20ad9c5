"""Figure rendering for evaluation reports.

Every function takes already-computed tables (the same rounded values the
CSVs hold) and writes a PNG next to them. Rendering is head-less; nothing
here feeds back into the numbers.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .behavior import DIM_NAMES, N_DIMS
from .evaluation import BoxStats, convex_hull

_DIM_LABELS = [name.replace("_", " ") for name in DIM_NAMES]


def render_radar(path, target, means, sigmas) -> Path:
    """Polar profile: dashed target, solid achieved mean, shaded +-1 sigma."""
    path = Path(path)
    angles = [2 * math.pi * d / N_DIMS for d in range(N_DIMS)]
    angles_closed = angles + angles[:1]

    def closed(vals):
        vals = list(vals)
        return vals + vals[:1]

    fig, ax = plt.subplots(figsize=(6, 6), subplot_kw={"projection": "polar"})
    ax.plot(angles_closed, closed(target), "k--", linewidth=1.5, label="target")
    ax.plot(angles_closed, closed(means), "-", color="tab:blue", linewidth=2, label="achieved")
    lo = [max(0.0, m - s) for m, s in zip(means, sigmas)]
    hi = [min(1.0, m + s) for m, s in zip(means, sigmas)]
    ax.fill_between(angles_closed, closed(lo), closed(hi), color="tab:blue", alpha=0.2)
    ax.set_xticks(angles)
    ax.set_xticklabels(_DIM_LABELS, fontsize=9)
    ax.set_ylim(0, 1)
    ax.legend(loc="upper right", bbox_to_anchor=(1.25, 1.1))
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_error_boxes(path, stats_by_dim: dict[str, BoxStats]) -> Path:
    """Box-and-whisker chart from precomputed per-dimension statistics."""
    path = Path(path)
    boxes = []
    for name, s in stats_by_dim.items():
        boxes.append(
            {
                "label": name.replace("_", " "),
                "whislo": s.lo_whisker,
                "q1": s.q1,
                "med": s.median,
                "q3": s.q3,
                "whishi": s.hi_whisker,
                "mean": s.mean,
                "fliers": [],
            }
        )
    fig, ax = plt.subplots(figsize=(8, 4.5))
    ax.bxp(boxes, showmeans=True, meanline=True)
    ax.set_ylabel("|achieved - target|")
    ax.tick_params(axis="x", rotation=20)
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_pca_scatter(path, xs, ys, errors, labels, conditioned_label="conditioned") -> Path:
    """Shared-plane scatter: conditioned points colored by target error,
    unconditioned points as triangles, with both groups' hulls outlined."""
    path = Path(path)
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    labels = np.asarray(labels)
    cond = labels == conditioned_label

    fig, ax = plt.subplots(figsize=(7, 6))
    if cond.any():
        errs = np.array([e if e is not None else np.nan for e in errors], dtype=np.float64)
        sc = ax.scatter(
            xs[cond], ys[cond], c=errs[cond], cmap="Greens_r", s=22,
            edgecolors="gray", linewidths=0.3, label=conditioned_label,
        )
        fig.colorbar(sc, ax=ax, label="behavior error")
    if (~cond).any():
        ax.scatter(
            xs[~cond], ys[~cond], marker="^", color="tab:blue", s=30,
            label=str(labels[~cond][0]),
        )
    for mask, color in ((cond, "tab:green"), (~cond, "tab:blue")):
        pts = np.column_stack([xs[mask], ys[mask]])
        if len(pts) >= 3:
            hull = convex_hull(pts)
            if len(hull) >= 3:
                loop = np.vstack([hull, hull[:1]])
                ax.plot(loop[:, 0], loop[:, 1], color=color, alpha=0.5, linewidth=1)
    ax.set_xlabel("component 1")
    ax.set_ylabel("component 2")
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_curves(path, steps, columns: dict[str, list]) -> Path:
    """Training curve panel, one subplot per metric column."""
    path = Path(path)
    n = len(columns)
    fig, axes = plt.subplots(n, 1, figsize=(7, 2.2 * n), sharex=True)
    if n == 1:
        axes = [axes]
    for ax, (name, values) in zip(axes, columns.items()):
        pairs = [(s, v) for s, v in zip(steps, values) if v is not None]
        if pairs:
            ax.plot([p[0] for p in pairs], [p[1] for p in pairs], linewidth=1.2)
        ax.set_ylabel(name.replace("_", " "), fontsize=8)
        ax.grid(alpha=0.3)
    axes[-1].set_xlabel("environment transitions")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
