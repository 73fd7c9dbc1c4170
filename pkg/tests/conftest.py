import numpy as np
import pytest

from genvor.families import MultOffsetFamily, NearestFurthestFamily, Scaling2DFamily
from genvor.gen import convex_blob


def unit_points_family(points):
    return MultOffsetFamily(np.asarray(points, dtype=np.float64))


def random_mo_family(rng, n, dim, weighted=True, offsets=True):
    pts = rng.uniform(0.28, 0.72, size=(n, dim))
    w = rng.uniform(0.4, 3.0, size=n) if weighted else None
    a = None
    if offsets:
        a = np.where(rng.random(n) < 0.35, rng.uniform(0.0, 0.15, size=n), 0.0)
    return MultOffsetFamily(pts, w, a)


def random_scaling_family(rng, n, scale_range=(0.008, 0.05)):
    centers = rng.uniform(0.28, 0.72, size=(n, 2))
    verts = [convex_blob(centers[i], float(rng.uniform(*scale_range)), rng) for i in range(n)]
    return Scaling2DFamily(centers, verts)


def random_fnn_family(rng, n, dim, eps=0.5, pts_range=(3, 9)):
    anchors = rng.uniform(0.3, 0.7, size=(n, dim))
    sets = []
    for i in range(n):
        m = int(rng.integers(*pts_range))
        sets.append(anchors[i] + rng.normal(scale=rng.uniform(0.01, 0.05), size=(m, dim)))
    return NearestFurthestFamily(sets, eps)


def family_of_kind(kind, rng, n, dim=2, eps=0.5):
    if kind == "mult_offset":
        return random_mo_family(rng, n, dim)
    if kind == "scaling2d":
        return random_scaling_family(rng, n)
    return random_fnn_family(rng, n, dim, eps)


@pytest.fixture
def rng():
    return np.random.default_rng(0xC0FFEE)
