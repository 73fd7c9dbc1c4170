"""Matplotlib figure rendering for the CLI report paths (files only)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
from matplotlib.collections import PatchCollection
from matplotlib.patches import Rectangle


def render_avd_regions(regions, path: str, title: str = "approximate Voronoi regions"):
    """Draw exported 2d regions, colored by representative id."""
    fig, ax = plt.subplots(figsize=(7, 7))
    patches = []
    colors = []
    for reg in regions:
        outer = reg.outer
        lo = outer.low()
        side = outer.side
        patches.append(Rectangle(lo, side, side))
        colors.append(reg.rep)
        if reg.inner is not None:
            # hole drawn on top in white to hint the subtracted cube
            ilo = reg.inner.low()
            patches.append(Rectangle(ilo, reg.inner.side, reg.inner.side))
            colors.append(-1)
    pc = PatchCollection(patches, cmap="tab20", edgecolor="none", alpha=0.9)
    pc.set_array([c % 20 if c >= 0 else 0 for c in colors])
    ax.add_collection(pc)
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.set_aspect("equal")
    ax.set_title(title)
    fig.savefig(path, dpi=130, bbox_inches="tight")
    plt.close(fig)


def render_bench(row: dict, path: str):
    fig, ax = plt.subplots(figsize=(5, 4))
    labels = ["structure", "brute force"]
    vals = [row["avg_query_ns"] / 1e3, row["brute_force_query_ns"] / 1e3]
    ax.bar(labels, vals, color=["tab:blue", "tab:gray"])
    ax.set_ylabel("avg query time (us)")
    ax.set_title(f"n={row['n']}: query time")
    for i, v in enumerate(vals):
        ax.text(i, v, f"{v:.0f}", ha="center", va="bottom")
    fig.savefig(path, dpi=130, bbox_inches="tight")
    plt.close(fig)
