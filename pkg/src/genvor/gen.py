"""Random instance generators used by the self-test battery, the benchmark
command and the acceptance suite."""

from __future__ import annotations

import math

import numpy as np


def gen_mult_offset(n, dim, rng, weighted=True, offsets=True) -> dict:
    pts = rng.uniform(0.0, 1.0, size=(n, dim))
    sites = []
    for i in range(n):
        site = {"point": [float(v) for v in pts[i]]}
        if weighted:
            site["weight"] = float(rng.uniform(0.4, 3.0))
        if offsets and rng.random() < 0.35:
            site["offset"] = float(rng.uniform(0.0, 0.3))
        sites.append(site)
    return {
        "family": "mult_offset",
        "dim": dim,
        "epsilon": 0.5,
        "seed": int(rng.integers(1 << 30)),
        "sites": sites,
    }


def convex_blob(center, scale, rng, k=None) -> np.ndarray:
    """Convex polygon vertices: an irregular ellipse sampled at jittered
    regular angles (jitter below half a step keeps the center inside)."""
    k = int(rng.integers(5, 10)) if k is None else k
    phase = rng.uniform(0, 2 * math.pi)
    angles = (np.arange(k) + rng.uniform(0.0, 0.45, size=k)) * (2 * math.pi / k)
    a = scale * rng.uniform(0.55, 1.0)
    b = scale * rng.uniform(0.55, 1.0)
    rot = rng.uniform(0, 2 * math.pi)
    cr, sr = math.cos(rot), math.sin(rot)
    xs = a * np.cos(angles + phase)
    ys = b * np.sin(angles + phase)
    pts = np.stack([cr * xs - sr * ys, sr * xs + cr * ys], axis=1) + center
    # convex hull of ellipse samples is the polygon itself (sorted angles)
    return pts


def gen_scaling2d(n, rng) -> dict:
    centers = rng.uniform(0.05, 0.95, size=(n, 2))
    sites = []
    for i in range(n):
        scale = float(rng.uniform(0.01, 0.07))
        verts = convex_blob(centers[i], scale, rng)
        sites.append(
            {
                "center": [float(v) for v in centers[i]],
                "vertices": [[float(x), float(y)] for x, y in verts],
            }
        )
    return {
        "family": "scaling2d",
        "dim": 2,
        "epsilon": 0.5,
        "seed": int(rng.integers(1 << 30)),
        "sites": sites,
    }


def spiky_star(center, scale, spikes=7, thin=0.08) -> tuple[np.ndarray, np.ndarray]:
    """A star-shaped but not rounded-fat polygon (deep thin notches)."""
    center = np.asarray(center, dtype=np.float64)
    angles = np.linspace(0, 2 * math.pi, 2 * spikes, endpoint=False)
    radii = np.where(np.arange(2 * spikes) % 2 == 0, scale, scale * thin)
    verts = center + np.stack([radii * np.cos(angles), radii * np.sin(angles)], axis=1)
    return center, verts


def gen_nearest_furthest(n, dim, rng, pts_range=(3, 10)) -> dict:
    anchors = rng.uniform(0.05, 0.95, size=(n, dim))
    sites = []
    for i in range(n):
        m = int(rng.integers(pts_range[0], pts_range[1] + 1))
        spread = rng.uniform(0.01, 0.08)
        pts = anchors[i] + rng.normal(scale=spread, size=(m, dim))
        sites.append({"points": [[float(v) for v in p] for p in pts]})
    return {
        "family": "nearest_furthest",
        "dim": dim,
        "epsilon": 0.5,
        "seed": int(rng.integers(1 << 30)),
        "sites": sites,
    }


def gen_instance(kind: str, n: int, dim: int, rng) -> dict:
    if kind == "mult_offset":
        return gen_mult_offset(n, dim, rng)
    if kind == "scaling2d":
        return gen_scaling2d(n, rng)
    if kind == "nearest_furthest":
        return gen_nearest_furthest(n, dim, rng)
    raise ValueError(f"unknown family kind {kind!r}")


def gen_queries(m, dim, rng, outside_frac=0.25) -> np.ndarray:
    """Queries in normalized coordinates: mostly inside the unit cube."""
    qs = rng.uniform(0.0, 1.0, size=(m, dim))
    flip = rng.random(m) < outside_frac
    shift = rng.uniform(0.05, 2.0, size=(m, dim)) * np.sign(rng.normal(size=(m, dim)))
    qs[flip] = 0.5 + shift[flip]
    return qs
