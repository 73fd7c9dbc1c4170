"""Randomized property harness for distance families.

Checks the structural facts every admissible family must satisfy: trivial
zero-sublevels, positive connectivity levels, segment containment inside
inflated sublevel sets, sketch soundness for connectivity and for distances,
the two-functions observation, and the bounded-growth inflation itself.
Each check reports pass/fail with a counterexample payload on failure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .family import DistanceFamily

REL_TOL = 1e-9


@dataclass
class CheckResult:
    name: str
    passed: bool
    samples: int
    counterexample: dict | None = None

    def to_dict(self) -> dict:
        out = {"name": self.name, "passed": self.passed, "samples": self.samples}
        if self.counterexample is not None:
            out["counterexample"] = self.counterexample
        return out


@dataclass
class ValidationReport:
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "checks": [c.to_dict() for c in self.checks]}


def _sample_in_sublevel(family, fn, y, rng, tries=60):
    """Sample a point with f(x) <= y, biased toward the boundary: jitter
    around the sublevel's seed point at the growth scale."""
    seed = family.sublevel_seed_point(fn)
    zeta = family.growth_constant()
    radius = max(zeta * family.growth(fn, y), 1e-12)
    best = None
    for _ in range(tries):
        u = rng.normal(size=family.dim)
        u *= rng.uniform(0, radius) / np.linalg.norm(u)
        x = seed + u
        v = family.eval_one(fn, x)
        if v <= y and (best is None or v > best[1]):
            best = (x, v)
            if v >= 0.7 * y:
                break
    return best


def validate_family(family: DistanceFamily, budget: int = 1000, seed: int = 0) -> ValidationReport:
    rng = np.random.default_rng(seed)
    n = family.size()
    report = ValidationReport()
    zeta = family.growth_constant()

    # level-zero sublevels: empty when the threshold is positive, otherwise a
    # single point (its grid cover at a tiny resolution is one cell cluster)
    fails = None
    reps = min(n, max(4, budget // 100))
    for fn in rng.choice(n, size=reps, replace=False):
        fn = int(fn)
        thr = family.sublevel_threshold(fn)
        if thr > 0:
            if family.sublevel_cells(fn, thr * 0.5, max(thr, 1e-3)):
                fails = {"fn": fn, "why": "cells below the empty threshold"}
                break
        else:
            cover = family.sublevel_cells(fn, 0.0, 1e-3)
            if len(cover) > 2**family.dim:
                fails = {"fn": fn, "why": f"zero sublevel spans {len(cover)} cells"}
                break
    report.checks.append(CheckResult("zero_sublevel_trivial", fails is None, reps, fails))

    # positive connectivity levels for distinct functions
    fails = None
    trials = min(budget // 10, 200)
    for _ in range(trials):
        i, j = rng.choice(n, size=2, replace=False) if n >= 2 else (0, 0)
        if n >= 2 and family.sep_key(int(i), int(j))[0] <= 0 and int(i) != int(j):
            coincident = family.exact_cr([int(i), int(j)]) == 0.0
            if coincident:
                fails = {"pair": [int(i), int(j)], "why": "zero connectivity level"}
                break
    report.checks.append(CheckResult("positive_connectivity", fails is None, trials, fails))

    # segments between points of one sublevel set stay in the inflated union
    fails = None
    trials = max(8, budget // 20)
    done = 0
    for _ in range(trials):
        fn = int(rng.integers(n))
        thr = family.sublevel_threshold(fn)
        y = max(thr, 1e-6) * rng.uniform(1.05, 3.0)
        a = _sample_in_sublevel(family, fn, y, rng)
        b = _sample_in_sublevel(family, fn, y, rng)
        if a is None or b is None:
            continue
        done += 1
        for s in rng.uniform(0, 1, size=8):
            w = a[0] + s * (b[0] - a[0])
            vmin = float(np.min(family.eval_all(w)))
            if vmin > (1 + zeta / 2.0) * y * (1 + REL_TOL) + 1e-12:
                fails = {"fn": fn, "y": y, "point": w.tolist(), "value": vmin}
                break
        if fails:
            break
    report.checks.append(CheckResult("segment_containment", fails is None, done, fails))

    # a covered segment connects the compact sets covering it (interval form)
    fails = None
    trials = max(8, budget // 50)
    for _ in range(trials):
        k = int(rng.integers(2, 7))
        cuts = np.sort(rng.uniform(0, 1, size=2 * k - 2))
        intervals = [(0.0, float(cuts[0]))] + [
            (float(cuts[2 * i - 1]), float(cuts[2 * i])) for i in range(1, k - 1)
        ] + [(float(cuts[-1]), 1.0)]
        # overlap them slightly so the union covers [0, 1]
        grown = [(max(0.0, a - 0.06), min(1.0, b + 0.06)) for a, b in intervals]
        if any(g[0] > p[1] for g, p in zip(grown[1:], grown[:-1])):
            continue
        merged = 1
        cur_hi = grown[0][1]
        for a, b in grown[1:]:
            if a > cur_hi:
                merged += 1
            cur_hi = max(cur_hi, b)
        if merged != 1:
            fails = {"intervals": grown, "why": "covering sets not connected"}
            break
    report.checks.append(CheckResult("segment_compact_cover", fails is None, trials, fails))

    # sketch connectivity level bound
    fails = None
    trials = max(4, budget // 100)
    done = 0
    for _ in range(trials):
        if n < 2:
            break
        m = int(rng.integers(2, min(n, 12) + 1))
        ids = sorted(int(v) for v in rng.choice(n, size=m, replace=False))
        delta = float(rng.uniform(0.1, 1.0))
        sk = family.sketch(ids, delta)
        cr_g = family.exact_cr(ids)
        cr_h = family.exact_cr(sk.members)
        bound = (1 + delta) * (1 + zeta / 2.0) * max(sk.valid_from, cr_g)
        done += 1
        if cr_h > bound * (1 + REL_TOL) + 1e-12:
            fails = {"ids": ids, "delta": delta, "cr_h": cr_h, "bound": bound}
            break
    report.checks.append(CheckResult("sketch_connectivity", fails is None, done, fails))

    # sketch distance rule: far queries lose at most (1+delta)
    fails = None
    trials = max(8, budget // 20)
    done = 0
    for _ in range(trials):
        if n < 2:
            break
        m = int(rng.integers(2, min(n, 12) + 1))
        ids = sorted(int(v) for v in rng.choice(n, size=m, replace=False))
        delta = float(rng.uniform(0.1, 1.0))
        sk = family.sketch(ids, delta)
        ids_arr = np.array(ids)
        direction = rng.normal(size=family.dim)
        direction /= np.linalg.norm(direction)
        q = 0.5 * np.ones(family.dim)
        for scale in (1.0, 2.0, 4.0, 16.0, 256.0, 65536.0):
            cand = 0.5 + direction * scale
            if float(np.min(family.eval_subset(ids_arr, cand))) >= sk.valid_from:
                q = cand
                break
        sep_g = float(np.min(family.eval_subset(ids_arr, q)))
        if sep_g < sk.valid_from:
            continue
        done += 1
        sep_h = float(np.min(family.eval_subset(np.array(sk.members), q)))
        if sep_h > (1 + delta) * sep_g * (1 + REL_TOL):
            fails = {"ids": ids, "delta": delta, "sep_g": sep_g, "sep_h": sep_h}
            break
    report.checks.append(CheckResult("sketch_distance_rule", fails is None, done, fails))

    # no point is near two well-separated functions
    fails = None
    trials = max(8, budget // 10)
    done = 0
    for _ in range(trials):
        if n < 2:
            break
        i, j = (int(v) for v in rng.choice(n, size=2, replace=False))
        s = family.pairwise_sep(i, j)
        if s <= 0:
            continue
        done += 1
        q = rng.uniform(-0.5, 1.5, size=family.dim)
        hi = max(family.eval_one(i, q), family.eval_one(j, q))
        if hi < s * (1 - REL_TOL):
            fails = {"pair": [i, j], "q": q.tolist(), "max_value": hi, "sep": s}
            break
    report.checks.append(CheckResult("not_both_near", fails is None, done, fails))

    # bounded growth: inflating a sublevel set by eps*lambda stays inside the
    # (1+eps)-level
    fails = None
    trials = max(8, budget // 10)
    done = 0
    for _ in range(trials):
        fn = int(rng.integers(n))
        thr = family.sublevel_threshold(fn)
        y = max(thr, 1e-6) * rng.uniform(1.05, 4.0)
        got = _sample_in_sublevel(family, fn, y, rng, tries=200)
        if got is None:
            continue
        x, _ = got
        lam = family.growth(fn, y)
        if lam <= 0:
            continue
        done += 1
        eps_t = float(rng.choice([0.1, 0.5, 1.0]))
        u = rng.normal(size=family.dim)
        u *= eps_t * lam / np.linalg.norm(u)
        val = family.eval_one(fn, x + u)
        if val > (1 + eps_t) * y * (1 + REL_TOL) + 1e-12:
            fails = {"fn": fn, "y": y, "eps": eps_t, "value": val}
            break
    report.checks.append(CheckResult("bounded_growth", fails is None, done, fails))

    return report
