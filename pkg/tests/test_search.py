import math

import numpy as np
import pytest

from genvor import build, flatten, query
from genvor.families import MultOffsetFamily
from genvor.oracle import exact_min
from genvor.search import (
    InternalNode,
    LeafNode,
    SearchParams,
    export_regions,
    query_scan_ids,
    query_verbose,
)
from genvor.serialize import load_artifact, save_artifact
from conftest import family_of_kind, random_mo_family

KINDS = ["mult_offset", "scaling2d", "nearest_furthest"]


def test_params_invariants():
    fam = MultOffsetFamily(np.full((100, 2), 0.5) + np.arange(100)[:, None] * 1e-3)
    p = SearchParams.make(fam, 0.5, 100)
    assert p.depth_bound == math.ceil(math.log(100) / math.log(8 / 7)) + 2
    assert p.delta == 0.5 / (8 * p.depth_bound)
    assert (1 + p.delta) ** p.depth_bound <= 1 + 0.5 / 4 + 1e-12
    assert 10.0 <= p.log2_n_big <= 200.0


def test_single_function_tree():
    fam = MultOffsetFamily([[0.4, 0.6]])
    t = build(fam, 0.5, seed=1)
    assert isinstance(t.root, LeafNode)
    q = np.array([0.9, 0.1])
    fid, val = query(t, q)
    assert fid == 0
    assert val == pytest.approx(fam.eval_one(0, q))  # n=1 answers exactly


def test_two_functions_tree_structure():
    fam = MultOffsetFamily([[0.3, 0.5], [0.7, 0.5]])
    t = build(fam, 0.5, seed=1)
    assert t.max_depth <= t.params.depth_bound
    for q in ([0.31, 0.5], [0.69, 0.5], [0.5, 0.9]):
        fid, val = query(t, np.array(q))
        oid, oval = exact_min(fam, q)
        assert val <= (1 + 0.5) * oval * (1 + 1e-9)


def test_query_at_site_is_zero():
    fam = MultOffsetFamily([[0.3, 0.5], [0.7, 0.5], [0.5, 0.2]])
    t = build(fam, 0.5, seed=2)
    fid, val = query(t, np.array([0.7, 0.5]))
    assert fid == 1 and val == 0.0  # only 0 satisfies (1+eps)*0


@pytest.mark.parametrize("kind", KINDS)
def test_ann_ratio_sweep(kind):
    rng = np.random.default_rng((hash(kind) + 11) % 2**31)
    for eps in (0.5, 0.1):
        fam = family_of_kind(kind, rng, 20, eps=eps)
        t = build(fam, eps, seed=5)
        assert t.max_depth <= t.params.depth_bound
        for _ in range(150):
            q = rng.uniform(-0.2, 1.2, size=fam.dim)
            fid, val = query(t, q)
            _, best = exact_min(fam, q)
            assert val >= best * (1 - 1e-9)
            assert val <= (1 + eps) * best * (1 + 1e-9) + 1e-15


def test_locates_bounded_by_depth():
    rng = np.random.default_rng(3)
    fam = random_mo_family(rng, 40, 2)
    t = build(fam, 0.5, seed=3)
    for _ in range(300):
        q = rng.uniform(0, 1, size=2)
        _, _, locates = query_verbose(t, q)
        assert locates <= t.max_depth + 1


def test_every_split_in_build_is_verified():
    # splitting distances are re-verified inside splitting_distance; a build
    # that finishes certifies every x it used
    rng = np.random.default_rng(9)
    for n in (8, 24, 60):
        fam = random_mo_family(rng, n, 2)
        t = build(fam, 0.5, seed=n)
        assert t.split_stats.calls >= 1
        assert t.split_stats.fallback_rate <= 0.01 or t.split_stats.fallbacks <= 1


def test_out_of_cube_queries():
    rng = np.random.default_rng(13)
    fam = random_mo_family(rng, 24, 2)
    t = build(fam, 0.5, seed=7)
    for scale in (1.1, 2.0, 10.0, 1e4, 1e9):
        q = np.array([0.5, 0.5]) + np.array([scale, scale / 2])
        fid, val = query(t, q)
        _, best = exact_min(fam, q)
        assert val <= 1.5 * best * (1 + 1e-9)
        assert val >= best * (1 - 1e-9)
    # far queries flow through the root sketch (not the full scan)
    far = np.array([1e8, 1e8])
    assert t.family.global_value_lower_bound(far) >= t.root_sketch_from


@pytest.mark.parametrize("kind", KINDS)
def test_flatten_equivalence(kind):
    rng = np.random.default_rng((hash(kind) + 23) % 2**31)
    fam = family_of_kind(kind, rng, 16)
    t = build(fam, 0.5, seed=11)
    avd = flatten(t)
    for _ in range(800):
        q = rng.uniform(0, 1, size=fam.dim)
        a, _ = query(t, q)
        b, _ = avd.query(q)
        assert a == b
    # region count never exceeds the overlay's node count
    assert avd.region_count <= avd.overlay.node_count()


def test_flatten_single_function_covers_cube():
    fam = MultOffsetFamily([[0.5, 0.5]])
    t = build(fam, 0.5, seed=1)
    avd = flatten(t)
    regions = export_regions(avd)
    assert len(regions) >= 1
    assert {r.rep for r in regions} == {0}
    total_area = sum(
        r.outer.side ** 2 - (r.inner.side ** 2 if r.inner else 0.0) for r in regions
    )
    assert total_area == pytest.approx(1.0)


def test_exported_regions_are_valid_anns():
    rng = np.random.default_rng(17)
    fam = random_mo_family(rng, 12, 2)
    eps = 0.5
    t = build(fam, eps, seed=3)
    regions = export_regions(flatten(t))
    # regions partition the cube
    total = sum(r.outer.side ** 2 - (r.inner.side ** 2 if r.inner else 0.0) for r in regions)
    assert total == pytest.approx(1.0, rel=1e-9)
    checked = 0
    for reg in regions:
        lo, hi = reg.outer.low(), reg.outer.high()
        for _ in range(3):
            q = rng.uniform(lo, hi)
            if reg.inner is not None and reg.inner.contains_point(q):
                continue
            _, best = exact_min(fam, q)
            val = fam.eval_one(reg.rep, q)
            assert val <= (1 + eps) * best * (1 + 1e-9) + 1e-15
            checked += 1
    assert checked > len(regions)


def test_serialization_round_trip(tmp_path):
    rng = np.random.default_rng(19)
    fam = random_mo_family(rng, 18, 2)
    t = build(fam, 0.5, seed=21)
    path = str(tmp_path / "tree.gvor")
    save_artifact(path, t, {"family": "mult_offset", "normalizer": {"lo": [0, 0], "scale": 1.0, "dim": 2}, "value_scale": 1.0})
    t2, header = load_artifact(path)
    assert header["n"] == 18 and header["seed"] == 21
    for _ in range(400):
        q = rng.uniform(-0.1, 1.1, size=2)
        assert query(t, q) == query(t2, q)


def test_deterministic_builds():
    rng = np.random.default_rng(23)
    pts = rng.uniform(0.3, 0.7, size=(30, 2))
    fam1 = MultOffsetFamily(pts)
    fam2 = MultOffsetFamily(pts.copy())
    t1 = build(fam1, 0.5, seed=9)
    t2 = build(fam2, 0.5, seed=9)
    assert t1.summary() == t2.summary()
    for _ in range(200):
        q = rng.uniform(0, 1, size=2)
        assert query(t1, q) == query(t2, q)


def test_node_growth_is_near_linear():
    rng = np.random.default_rng(29)
    counts = []
    for n in (50, 100, 200):
        fam = random_mo_family(rng, n, 2, weighted=False, offsets=False)
        t = build(fam, 0.5, seed=n)
        counts.append(t.cell_count + t.node_count)
    for a, b in zip(counts, counts[1:]):
        assert b / a <= 2.6


def test_resketch_combines_cluster_sketches():
    from genvor.search import Part, resketch

    fam = MultOffsetFamily([[0.3, 0.5], [0.7, 0.5], [0.5, 0.8]],
                           weights=[2.0, 1.0, 3.0])
    params = SearchParams.make(fam, 0.5, 3)
    single = [Part((1,), valid_from=0.5, cr_bound=0.1, layers=1)]
    out = resketch(fam, params, single, cr_bound=1.0, ceiling=1e12)
    assert set(out.members) <= {1}
    assert out.valid_from >= 0.5
    # two singleton clusters: the family sketch of the pair (min weight wins)
    pair = [Part((0,), 0.0, 0.0, 0), Part((1,), 0.0, 0.0, 0)]
    out = resketch(fam, params, pair, cr_bound=0.4, ceiling=1e12)
    assert out.members == (1,)
    assert out.layers == 1
    # sublevel containment at levels above the validity floor
    rng = np.random.default_rng(31)
    for mult in (1.0, 5.0):
        y = max(out.valid_from * mult, 1e-3)
        for i in (0, 1):
            seed = fam.sublevel_seed_point(i)
            for _ in range(40):
                u = rng.normal(size=2)
                u /= np.linalg.norm(u)
                lo_t, hi_t = 0.0, 10.0 * y
                if fam.eval_one(i, seed) > y:
                    continue
                for _ in range(40):
                    mid = (lo_t + hi_t) / 2
                    if fam.eval_one(i, seed + mid * u) <= y:
                        lo_t = mid
                    else:
                        hi_t = mid
                x = seed + lo_t * u
                assert fam.eval_one(out.members[0], x) <= (1 + params.delta) * y * (1 + 1e-9)
    # ceiling violations are construction-time failures
    from genvor.search import BuildError
    with pytest.raises(BuildError):
        resketch(fam, params, pair, cr_bound=0.4, ceiling=1e-9)
