import math

import numpy as np
import pytest

from genvor.geometry import (
    BallRegion,
    CanonicalCell,
    PointRegion,
    cell_of_point,
    cells_covering,
    floor_scaled,
    floor_scaled_array,
    grid_level_for,
    point_in_cell,
)


def test_grid_level_examples():
    # direct evaluations of the dyadic side formula
    assert grid_level_for(1.0, 2) == 1  # side 0.5
    assert grid_level_for(0.5, 2) == 2  # side 0.25
    assert grid_level_for(math.sqrt(2), 2) == 0  # side 1.0


def test_grid_level_errors():
    with pytest.raises(ValueError):
        grid_level_for(0.0, 2)
    with pytest.raises(ValueError):
        grid_level_for(-1.0, 2)
    with pytest.raises(ValueError):
        grid_level_for(float("nan"), 2)


def test_grid_level_monotone_and_halving():
    rng = np.random.default_rng(5)
    for _ in range(200):
        r = float(rng.uniform(1e-6, 1.4))
        assert grid_level_for(r, 2) >= grid_level_for(r * 1.5, 2)
    # halving r adds exactly one level when r/sqrt(d) is 2^k * u, u in (1, 2]
    for k in range(1, 8):
        r = math.sqrt(2) * (2.0**-k) * 1.5
        assert grid_level_for(r / 2, 2) == grid_level_for(r, 2) + 1


def test_floor_scaled_exactness():
    rng = np.random.default_rng(7)
    xs = rng.uniform(0, 1, size=500)
    for k in (0, 1, 3, 9, 17, 30):
        want = np.array([math.floor(float(x) * (1 << k)) for x in xs])
        got_scalar = np.array([floor_scaled(float(x), k) for x in xs])
        got_vec = floor_scaled_array(xs, k)
        assert np.array_equal(want, got_scalar)
        assert np.array_equal(want, got_vec)
    # powers of two land exactly on grid lines
    assert floor_scaled(0.25, 2) == 1
    assert floor_scaled(0.5, 1) == 1


def test_point_in_cell_faces():
    c = CanonicalCell(2, (1, 1))  # [0.25, 0.5)^2
    assert point_in_cell((0.3, 0.3), c)
    assert not point_in_cell((0.5, 0.3), c)  # open upper face
    assert point_in_cell((0.25, 0.25), c)  # closed lower face
    with pytest.raises(ValueError):
        point_in_cell((0.3, 0.3, 0.3), c)


def test_cell_nesting_invariant():
    rng = np.random.default_rng(11)
    for _ in range(300):
        l1, l2 = int(rng.integers(0, 6)), int(rng.integers(0, 6))
        c1 = cell_of_point(rng.uniform(0, 1, 2), l1)
        c2 = cell_of_point(rng.uniform(0, 1, 2), l2)
        lo1, hi1 = c1.low(), c1.high()
        lo2, hi2 = c2.low(), c2.high()
        open_overlap = np.all(np.maximum(lo1, lo2) < np.minimum(hi1, hi2))
        # canonical cells: interiors overlap iff one contains the other
        assert open_overlap == c1.overlaps(c2)


def test_cells_covering_point():
    cover = cells_covering(PointRegion((0.3, 0.3)), 0.5, 2)
    assert cover == {CanonicalCell(2, (1, 1))}


def test_cells_covering_disk_exact():
    # enumerate all level-2 cells and test disk intersection directly
    disk = BallRegion((0.5, 0.5), 0.1)
    got = cells_covering(disk, 0.4, 2)
    want = set()
    for i in range(4):
        for j in range(4):
            lo = np.array([i, j]) * 0.25
            near = np.clip(disk.center, lo, lo + 0.25)
            if np.sum((near - disk.center) ** 2) <= 0.1**2:
                want.add(CanonicalCell(2, (i, j)))
    assert got == want
    assert len(got) == 4


def test_cells_covering_empty():
    assert cells_covering(BallRegion((3.0, 3.0), 0.2), 0.5, 2) == set()


def test_cover_sandwich_property():
    rng = np.random.default_rng(13)
    for _ in range(60):
        center = rng.uniform(0.2, 0.8, size=2)
        radius = float(rng.uniform(0.01, 0.2))
        r = float(rng.uniform(0.05, 0.9))
        region = BallRegion(center, radius)
        cover = cells_covering(region, r, 2)
        # X subset of the union: sampled points of X land in some cover cell
        for _ in range(20):
            u = rng.normal(size=2)
            p = center + u / np.linalg.norm(u) * rng.uniform(0, radius)
            p = np.clip(p, 0, 1 - 1e-12)
            if np.linalg.norm(p - center) <= radius:
                assert any(c.contains_point(p) for c in cover)
        # union within X + ball(0, r): every cover point is r-close to X
        for c in cover:
            far_corner = np.where(center < c.low() + c.side / 2, c.high(), c.low())
            gap = np.linalg.norm(np.clip(center, c.low(), c.high()) - center)
            assert gap <= radius + 1e-12  # no false cells
            assert np.linalg.norm(far_corner - center) <= radius + r * (1 + 1e-9) + c.side * 1e-9


def test_normalizer_maps_bbox_into_inner_box():
    from genvor.geometry import Normalizer

    rng = np.random.default_rng(47)
    for _ in range(40):
        d = int(rng.integers(1, 4))
        pts = rng.normal(size=(int(rng.integers(2, 30)), d)) * rng.uniform(0.1, 50)
        norm = Normalizer.fit(pts)
        mapped = norm.forward(pts)
        assert np.all(mapped >= 0.25 - 1e-9) and np.all(mapped <= 0.75 + 1e-9)
        assert np.allclose(norm.backward(mapped), pts, rtol=1e-9, atol=1e-9)
        # one uniform scale on every axis preserves shape
        d2 = Normalizer.from_dict(norm.to_dict())
        assert np.allclose(d2.forward(pts), mapped)
