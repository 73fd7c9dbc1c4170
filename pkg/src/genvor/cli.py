"""Command line front end: build, query, export-avd, selftest, bench.

Exit codes: 0 success, 1 failed self-test invariant, 2 schema or dimension
violation, 3 rejected fat body.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import search
from .clustering import approx_clustering
from .deciders import interval_build, interval_query, near_build, near_query
from .gen import gen_instance, gen_queries
from .instance import Instance, InstanceError, SiteRejected, build_family, parse_instance
from .oracle import bisect_sep, exact_ccs, exact_min
from .serialize import ArtifactError, load_artifact, read_header, save_artifact
from .validate import validate_family

FAMILY_KINDS = ["mult_offset", "scaling2d", "nearest_furthest"]


def _load_json(path: str):
    with open(path) as fh:
        return json.load(fh)


def _effective_seed(inst: Instance) -> int:
    env = os.environ.get("GENVOR_SEED")
    return int(env) if env else inst.seed


def cmd_build(args) -> int:
    try:
        inst = parse_instance(_load_json(args.instance))
        family, norm, value_scale = build_family(inst)
    except InstanceError as e:
        print(json.dumps({"error": "schema", "detail": str(e)}), file=sys.stderr)
        return 2
    except SiteRejected as e:
        print(json.dumps({"error": "fat_body_rejected", "site": e.site_index, "detail": str(e)}), file=sys.stderr)
        return 3
    seed = _effective_seed(inst)
    tree = search.build(family, inst.epsilon, seed=seed)
    meta = {
        "family": inst.family_kind,
        "normalizer": norm.to_dict(),
        "value_scale": value_scale,
    }
    nbytes = save_artifact(args.out, tree, meta)
    summary = tree.summary()
    summary.update({"N": 2.0 ** tree.params.log2_n_big, "bytes": nbytes})
    print(json.dumps(summary, sort_keys=True))
    return 0


def cmd_query(args) -> int:
    try:
        tree, header = load_artifact(args.artifact)
    except ArtifactError as e:
        print(json.dumps({"error": "artifact", "detail": str(e)}), file=sys.stderr)
        return 2
    batch = _load_json(args.batch)
    if not isinstance(batch, list):
        print(json.dumps({"error": "schema", "detail": "batch must be a JSON array"}), file=sys.stderr)
        return 2
    from .geometry import Normalizer

    norm = Normalizer.from_dict(header["normalizer"])
    scale = float(header["value_scale"])
    dim = int(header["dim"])
    avd = search.flatten(tree) if args.flatten else None
    for q in batch:
        if not isinstance(q, list) or len(q) != dim:
            print(json.dumps({"error": "dimension", "detail": f"query {q!r} vs dim {dim}"}), file=sys.stderr)
            return 2
        qn = norm.forward(np.array([q], dtype=np.float64))[0]
        fid, val = (avd.query(qn) if avd is not None else search.query(tree, qn))
        print(json.dumps({"id": fid, "value": val, "denormalized_value": val / scale}))
    return 0


def cmd_export_avd(args) -> int:
    try:
        tree, header = load_artifact(args.artifact)
    except ArtifactError as e:
        print(json.dumps({"error": "artifact", "detail": str(e)}), file=sys.stderr)
        return 2
    avd = search.flatten(tree)
    regions = search.export_regions(avd)
    doc = []
    for reg in regions:
        rec = {
            "outer_cell": {"level": reg.outer.level, "index": list(reg.outer.index)},
            "representative_id": reg.rep,
        }
        if reg.inner is not None:
            rec["inner_cell"] = {"level": reg.inner.level, "index": list(reg.inner.index)}
        doc.append(rec)
    with open(args.out, "w") as fh:
        json.dump(doc, fh)
    if args.plot:
        from .report import render_avd_regions

        if tree.family.dim != 2:
            print(json.dumps({"warning": "plotting skipped: regions are not 2d"}), file=sys.stderr)
        else:
            render_avd_regions(regions, args.plot)
    print(json.dumps({"regions": len(doc), "out": args.out}, sort_keys=True))
    return 0


def _selftest_family(kind: str, seed: int, budget: int, fault: bool) -> dict:
    rng = np.random.default_rng(seed)
    inst = parse_instance(gen_instance(kind, 24, 2 if kind == "scaling2d" else 2, rng))
    family, _, _ = build_family(inst)
    report = validate_family(family, budget=budget, seed=seed).to_dict()
    checks = report["checks"]

    # near decider contract versus the exact linear-scan oracle
    ids = list(range(family.size()))
    alpha = 0.35 * float(np.median([family.pairwise_sep(0, j) for j in ids[1:]])) + 1e-4
    eps = 0.5
    dec = near_build(family, ids, alpha, eps)
    if fault:
        dec = near_build(family, ids, alpha * 4.0, 1.0)  # mis-built on purpose
        dec = dec.__class__(dec.tree, alpha, eps, dec.ids, dec.cell_count)
    bad = None
    trials = max(200, budget // 4)
    for _ in range(trials):
        q = rng.uniform(0, 1, size=family.dim)
        yes, wit = near_query(dec, q)
        sep = float(np.min(family.eval_all(q)))
        if yes and family.eval_one(wit, q) > (1 + eps) * alpha * (1 + 1e-9):
            bad = {"q": q.tolist(), "why": "witness above (1+eps)alpha"}
            break
        if not yes and sep <= alpha * (1 - 1e-9):
            bad = {"q": q.tolist(), "why": "missed a near point"}
            break
    checks.append({"name": "near_decider_contract", "passed": bad is None, "samples": trials, **({"counterexample": bad} if bad else {})})

    # interval decider contract
    beta = alpha * 8.0
    iv = interval_build(family, ids, alpha, beta, 0.5)
    bad = None
    for _ in range(max(100, budget // 8)):
        q = rng.uniform(0, 1, size=family.dim)
        kind_out, fn = interval_query(iv, q)
        sep = float(np.min(family.eval_all(q)))
        if kind_out == "below" and family.eval_one(fn, q) >= alpha:
            bad = {"q": q.tolist(), "why": "below witness not below alpha"}
        elif kind_out == "above" and sep <= beta * (1 - 1e-9):
            bad = {"q": q.tolist(), "why": "above verdict with sep <= beta"}
        elif kind_out == "within" and alpha <= sep <= beta:
            if family.eval_one(fn, q) > (1 + 0.5) * sep * (1 + 1e-9):
                bad = {"q": q.tolist(), "why": "within witness too far"}
        if bad:
            break
    checks.append({"name": "interval_contract", "passed": bad is None, "samples": max(100, budget // 8)})

    # clustering sandwich on a random level
    bad = None
    for _ in range(8):
        lvl = float(rng.uniform(0.2, 2.0)) * alpha
        approx = approx_clustering(family, ids, 1.0, lvl)
        lo = exact_ccs(family, ids, lvl)
        hi = exact_ccs(family, ids, 2.0 * lvl)
        from .clustering import is_refinement

        if not (is_refinement(lo, approx) and is_refinement(approx, hi)):
            bad = {"level": lvl, "why": "clustering sandwich violated"}
            break
    checks.append({"name": "clustering_sandwich", "passed": bad is None, "samples": 8})

    # closed-form pair separations versus the bisection oracle
    bad = None
    for _ in range(16):
        i, j = (int(v) for v in rng.choice(family.size(), size=2, replace=False))
        direct = family.pairwise_sep(i, j)
        ref = bisect_sep(family, i, j, tol=1e-9)
        if abs(direct - ref) > 1e-6 * max(1.0, ref):
            bad = {"pair": [i, j], "direct": direct, "bisect": ref}
            break
    checks.append({"name": "pairwise_sep_bisection", "passed": bad is None, "samples": 16})

    # end to end: structure answers within (1+eps) of the oracle
    tree = search.build(family, inst.epsilon, seed=seed)
    bad = None
    for _ in range(max(100, budget // 8)):
        q = rng.uniform(-0.2, 1.2, size=family.dim)
        fid, val = search.query(tree, q)
        _, best = exact_min(family, q)
        if val < best - 1e-12 or val > (1 + inst.epsilon) * best * (1 + 1e-9) + 1e-12:
            bad = {"q": q.tolist(), "value": val, "best": best}
            break
    checks.append({"name": "ann_ratio", "passed": bad is None, "samples": max(100, budget // 8)})

    report["passed"] = all(c["passed"] for c in checks)
    report["family"] = kind
    return report


def cmd_selftest(args) -> int:
    kinds = FAMILY_KINDS if args.family == "all" else [args.family]
    reports = [
        _selftest_family(kind, args.seed + 17 * k, args.budget, args.inject_fault)
        for k, kind in enumerate(kinds)
    ]
    ok = all(r["passed"] for r in reports)
    print(json.dumps({"passed": ok, "reports": reports}, sort_keys=True))
    return 0 if ok else 1


def cmd_bench(args) -> int:
    try:
        inst = parse_instance(_load_json(args.instance))
        family, _, _ = build_family(inst)
    except InstanceError as e:
        print(json.dumps({"error": "schema", "detail": str(e)}), file=sys.stderr)
        return 2
    except SiteRejected as e:
        print(json.dumps({"error": "fat_body_rejected", "site": e.site_index}), file=sys.stderr)
        return 3
    seed = _effective_seed(inst)
    t0 = time.perf_counter()
    tree = search.build(family, inst.epsilon, seed=seed)
    build_ms = (time.perf_counter() - t0) * 1e3
    tmp = args.artifact or (args.instance + ".gvor")
    nbytes = save_artifact(tmp, tree, {"family": inst.family_kind, "normalizer": {"lo": [0.0] * family.dim, "scale": 1.0, "dim": family.dim}, "value_scale": 1.0})

    rng = np.random.default_rng(seed + 1)
    qs = rng.uniform(0.05, 0.95, size=(args.queries, family.dim))
    for q in qs[: min(50, len(qs))]:
        search.query_verbose(tree, q)
    locates = 0
    t0 = time.perf_counter()
    for q in qs:
        locates += search.query_verbose(tree, q)[2]
    query_ns = (time.perf_counter() - t0) / len(qs) * 1e9
    t0 = time.perf_counter()
    for q in qs:
        int(np.argmin(family.eval_all(q)))
    brute_ns = (time.perf_counter() - t0) / len(qs) * 1e9

    row = {
        "n": family.size(),
        "build_ms": build_ms,
        "bytes": nbytes,
        "avg_locates_per_query": locates / len(qs),
        "avg_query_ns": query_ns,
        "brute_force_query_ns": brute_ns,
    }
    print("n,build_ms,bytes,avg_locates_per_query,avg_query_ns,brute_force_query_ns")
    print(
        f"{row['n']},{row['build_ms']:.3f},{row['bytes']},{row['avg_locates_per_query']:.3f},"
        f"{row['avg_query_ns']:.0f},{row['brute_force_query_ns']:.0f}"
    )
    if args.plot:
        from .report import render_bench

        render_bench(row, args.plot)
    return 0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="genvor", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="build and serialize a search structure")
    p.add_argument("instance")
    p.add_argument("out")
    p.set_defaults(fn=cmd_build)

    p = sub.add_parser("query", help="answer a batch of queries")
    p.add_argument("artifact")
    p.add_argument("batch")
    p.add_argument("--flatten", action="store_true", help="answer via the flattened overlay")
    p.set_defaults(fn=cmd_query)

    p = sub.add_parser("export-avd", help="export the region decomposition")
    p.add_argument("artifact")
    p.add_argument("out")
    p.add_argument("--plot", metavar="PNG", help="also render the regions to a figure")
    p.set_defaults(fn=cmd_export_avd)

    p = sub.add_parser("selftest", help="run the invariant battery")
    p.add_argument("--family", choices=FAMILY_KINDS + ["all"], default="all")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=int, default=1000)
    p.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(fn=cmd_selftest)

    p = sub.add_parser("bench", help="build + query timing versus brute force")
    p.add_argument("instance")
    p.add_argument("--queries", type=int, default=200)
    p.add_argument("--artifact", help="where to store the built artifact")
    p.add_argument("--plot", metavar="PNG", help="render a timing figure")
    p.set_defaults(fn=cmd_bench)

    args = ap.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
