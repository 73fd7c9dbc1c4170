import numpy as np
import pytest

from genvor.families import MultOffsetFamily, Scaling2DFamily
from genvor.gen import spiky_star
from genvor.validate import validate_family
from conftest import family_of_kind


@pytest.mark.parametrize("kind", ["mult_offset", "scaling2d", "nearest_furthest"])
def test_all_properties_pass(kind):
    rng = np.random.default_rng((hash(kind) + 31) % 2**31)
    fam = family_of_kind(kind, rng, 14)
    report = validate_family(fam, budget=500, seed=4)
    assert report.passed, report.to_dict()
    names = {c.name for c in report.checks}
    assert {
        "zero_sublevel_trivial",
        "positive_connectivity",
        "segment_containment",
        "segment_compact_cover",
        "sketch_connectivity",
        "sketch_distance_rule",
        "not_both_near",
        "bounded_growth",
    } <= names


def test_offset_family_vacuous_zero_level():
    fam = MultOffsetFamily([[0.4, 0.5], [0.6, 0.5]], offsets=[0.3, 0.3])
    report = validate_family(fam, budget=200, seed=1)
    check = {c.name: c for c in report.checks}["zero_sublevel_trivial"]
    assert check.passed  # sublevel below the offset is empty, vacuously fine


def test_not_both_near_exhaustive_grid():
    fam = MultOffsetFamily([[0.3, 0.5], [0.7, 0.5]])
    sep = fam.pairwise_sep(0, 1)
    assert sep == pytest.approx(0.2)
    xs = np.linspace(0, 1, 100)
    for x in xs:
        for y in np.linspace(0, 1, 20):
            q = np.array([x, y])
            assert max(fam.eval_one(0, q), fam.eval_one(1, q)) >= sep * (1 - 1e-9)


def test_spiky_star_fails_growth_audit():
    center, verts = spiky_star((0.5, 0.5), 0.2)
    fam = Scaling2DFamily(np.array([center, center + 0.01]),
                          [verts, verts + 0.01], validate=False)
    report = validate_family(fam, budget=800, seed=2)
    check = {c.name: c for c in report.checks}["bounded_growth"]
    assert not check.passed  # negative control: the notched star violates P2


def test_report_is_serializable():
    rng = np.random.default_rng(5)
    fam = family_of_kind("mult_offset", rng, 8)
    report = validate_family(fam, budget=200, seed=3)
    doc = report.to_dict()
    assert isinstance(doc["passed"], bool)
    assert all("name" in c and "samples" in c for c in doc["checks"])
