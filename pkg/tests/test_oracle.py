import numpy as np
import pytest

from genvor.families import MultOffsetFamily
from genvor.oracle import bisect_sep, exact_ccs, exact_cr, exact_meb, exact_min
from conftest import random_mo_family


def test_exact_min_single_and_tie():
    fam = MultOffsetFamily([[0.4, 0.5]])
    assert exact_min(fam, (0.9, 0.5)) == (0, pytest.approx(0.5))
    fam2 = MultOffsetFamily([[0.25, 0.5], [0.75, 0.5]])  # dyadic: exact tie
    fid, val = exact_min(fam2, (0.5, 0.5))  # smaller id wins the tie
    assert fid == 0 and val == pytest.approx(0.25)


def test_bisect_sep_examples():
    fam = MultOffsetFamily(
        [[0.3, 0.5], [0.7, 0.5], [0.2, 0.2], [0.5, 0.2], [0.4, 0.4], [0.4, 0.4]],
        weights=[1, 1, 1, 3, 1, 1],
        offsets=[0, 0, 0, 0.1, 0.3, 0.1],
    )
    assert bisect_sep(fam, 0, 1, 1e-10) == pytest.approx(0.2, abs=1e-8)
    assert bisect_sep(fam, 2, 3, 1e-10) == pytest.approx(fam.pairwise_sep(2, 3), rel=1e-7)
    # coincident offset points: max of the offsets
    assert bisect_sep(fam, 4, 5, 1e-10) == pytest.approx(0.3, abs=1e-8)


def test_bisect_sep_agrees_with_closed_form():
    rng = np.random.default_rng(7)
    for _ in range(100):
        fam = random_mo_family(rng, 4, 2)
        i, j = (int(v) for v in rng.choice(4, size=2, replace=False))
        assert bisect_sep(fam, i, j, 1e-10) == pytest.approx(
            fam.pairwise_sep(i, j), rel=1e-6, abs=1e-9
        )


def test_exact_ccs_and_cr_guard():
    fam = MultOffsetFamily([[0.1, 0.5], [0.3, 0.5], [0.7, 0.5]])
    assert exact_ccs(fam, [0, 1, 2], 0.15) == [(0, 1), (2,)]
    assert exact_cr(fam, [0, 1, 2]) == pytest.approx(0.2)
    big = MultOffsetFamily(np.random.default_rng(1).uniform(size=((1 << 10) + 1, 2)))
    with pytest.raises(ValueError):
        exact_ccs(big, range((1 << 10) + 1), 0.5)


def test_exact_meb_guard_and_degenerate():
    pts = np.array([[0.0, 0.0], [0.2, 0.0], [0.6, 0.0]])
    c, r = exact_meb(pts)
    assert np.allclose(c, [0.3, 0.0], atol=1e-10)
    assert r == pytest.approx(0.3)
    with pytest.raises(ValueError):
        exact_meb(np.zeros((65, 2)))
