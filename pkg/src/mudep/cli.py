"""Command line interface: scan | depgen | stubgen | folds | analyze | score | run-all.

Exit codes: 0 success (flows found or not), 1 infrastructure/stage failure,
2 bad usage.  All outputs are deterministic for a fixed config and seed.
"""

from __future__ import annotations

import argparse
import json
import logging
import shlex
import sys

from mudep import depgen, executor, fixpoint, nativescan, pipeline, stubgen, taintcore
from mudep.depgen import DepGenConfig, DependencyRelation
from mudep.errors import MudepError
from mudep.fixpoint import FoldConfig
from mudep.nativescan import SourceSinkList
from mudep.typesys import GenConfig, TypeRegistry


def _write_json(path: str, data) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write("\n")


def _backend_from_args(args) -> executor.Backend:
    if args.backend == "subprocess":
        if not args.cmd:
            raise MudepError("--cmd is required for the subprocess backend")
        return executor.SubprocessBackend(shlex.split(args.cmd))
    if not args.lib:
        raise MudepError("--lib is required for the inprocess backend")
    return executor.InProcessBackend(args.lib)


def cmd_scan(args) -> int:
    images = [nativescan.load_image(p) for p in args.image]
    ss = nativescan.load_ss(args.ss)
    bridges, warnings = nativescan.scan(images, ss)
    after = nativescan.apply_bridges(ss, bridges)
    _write_json(args.out, {
        "bridges": [{"method": b.method, "role": b.role, "impl": b.impl,
                     "source_return_types": list(b.source_return_types)} for b in bridges],
        "warnings": warnings,
        "ss_after": after.to_json(),
    })
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(f"scan: {len(bridges)} bridge update(s) -> {args.out}")
    return 0


def cmd_depgen(args) -> int:
    reg = TypeRegistry()
    sigs = executor.load_manifest(args.manifest, reg)
    cfg = DepGenConfig(bound=args.bound, depth=args.depth, gen=GenConfig(max_depth=args.depth),
                       seed=args.seed, isolate=args.isolate, budget=args.budget)
    with executor.load(_backend_from_args(args), sigs, reg, budget=args.budget) as handle:
        relations = []
        for sig in sigs:
            rel = depgen.generate(handle, sig, cfg, reg)
            relations.append(rel.to_json())
            for line in depgen.relation_to_report(rel)["text"]:
                print(f"  {line}")
    _write_json(args.out, {"relations": relations})
    print(f"depgen: {len(relations)} relation(s) -> {args.out}")
    return 0


def cmd_stubgen(args) -> int:
    reg = TypeRegistry()
    sigs = {s.name: s for s in executor.load_manifest(args.manifest, reg)}
    with open(args.deps, "r", encoding="utf-8") as f:
        deps_doc = json.load(f)
    relations = deps_doc.get("relations", deps_doc.get("data", {}).get("relations", []))
    stubs = {}
    for rel_doc in relations:
        rel = DependencyRelation.from_json(rel_doc)
        stubs[rel.function] = stubgen.synthesize(sigs[rel.function], rel, reg)
    if args.scan:
        with open(args.scan, "r", encoding="utf-8") as f:
            scan_doc = json.load(f)
        entries = scan_doc.get("bridges", scan_doc.get("data", {}).get("bridges", []))
        bridges = [nativescan.BridgeEntry(b["method"], b["role"], b["impl"],
                                          tuple(b["source_return_types"])) for b in entries]
        fixpoint._update_proxy_stubs(bridges, stubs, sigs, reg, args.depth)
    _write_json(args.out, {"stubs": [stubgen.emit(stubs[k]) for k in sorted(stubs)]})
    print(f"stubgen: {len(stubs)} stub(s) -> {args.out}")
    return 0


def _load_stubs(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    entries = doc.get("stubs", doc.get("data", {}).get("stubs", []))
    return {d["function"]: stubgen.parse(d) for d in entries}


def cmd_folds(args) -> int:
    reg = TypeRegistry()
    sigs = {s.name: s for s in executor.load_manifest(args.manifest, reg)}
    app = taintcore.load_app(args.app, reg)
    images = [nativescan.load_image(p) for p in args.image]
    ss = nativescan.load_ss(args.ss)
    stubs = _load_stubs(args.stubs)
    final, trace = fixpoint.run_folds(app, images, ss, stubs,
                                      FoldConfig(max_folds=args.max_folds),
                                      sigs=sigs, reg=reg)
    _write_json(args.out, final.to_json())
    _write_json(args.trace, trace.to_json())
    print(f"folds: {len(trace.folds)} fold(s), {len(final.sources)} source(s), "
          f"{len(final.sinks)} sink(s) -> {args.out}")
    return 0


def cmd_analyze(args) -> int:
    reg = TypeRegistry()
    app = taintcore.load_app(args.app, reg)
    ss = nativescan.load_ss(args.ss)
    stubs = _load_stubs(args.stubs)
    if args.empty_stubs:
        stubs = taintcore.empty_stubs_for(stubs)
    report = taintcore.analyze(app, ss, stubs)
    _write_json(args.out, {"flows": report.to_json()})
    print(f"analyze: {len(report.flows)} flow(s) -> {args.out}")
    return 0


def cmd_score(args) -> int:
    with open(args.flows, "r", encoding="utf-8") as f:
        flows_doc = json.load(f)
    flows = flows_doc.get("flows", flows_doc.get("data", {}).get("flows", []))
    with open(args.truth, "r", encoding="utf-8") as f:
        truth = json.load(f)["flows"]
    report = taintcore.FlowReport()
    for fl in flows:
        report.add(fl["source"], fl["sink"], fl.get("via", ""))
    metrics = taintcore.score(report, truth)
    if args.out:
        _write_json(args.out, metrics)
    print(json.dumps(metrics, sort_keys=True))
    return 0


def cmd_run_all(args) -> int:
    configs = [pipeline.ProjectConfig.load(p) for p in args.config]
    if len(configs) == 1:
        result = pipeline.run_all(configs[0], from_stage=args.from_stage,
                                  empty_stubs=args.empty_stubs)
        flows = result["flows"]["flows"]
        print(f"run-all: {len(flows)} flow(s) in {configs[0].out_dir}")
        if result["metrics"] is not None:
            print(json.dumps(result["metrics"], sort_keys=True))
        return 0
    table = pipeline.run_batch(configs, jobs=args.jobs, empty_stubs=args.empty_stubs)
    print(table["text"])
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mudep", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scan", help="scan native images for source/sink usage")
    p.add_argument("--image", action="append", required=True)
    p.add_argument("--ss", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_scan)

    p = sub.add_parser("depgen", help="mutation-based dependency generation")
    p.add_argument("--manifest", required=True)
    p.add_argument("--backend", choices=["subprocess", "inprocess"], default="subprocess")
    p.add_argument("--cmd", help="subprocess command line")
    p.add_argument("--lib", help="shared library path for the inprocess backend")
    p.add_argument("--bound", type=int, default=15)
    p.add_argument("--depth", type=int, default=5)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--isolate", choices=["unit", "session"], default="session")
    p.add_argument("--budget", type=float, default=2.0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_depgen)

    p = sub.add_parser("stubgen", help="synthesize taint-summary stubs")
    p.add_argument("--deps", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--scan", help="scan output for proxy-source merging")
    p.add_argument("--depth", type=int, default=5)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_stubgen)

    p = sub.add_parser("folds", help="iterative source/sink list refinement")
    p.add_argument("--app", required=True)
    p.add_argument("--image", action="append", required=True)
    p.add_argument("--ss", required=True)
    p.add_argument("--stubs", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--max-folds", type=int, default=2)
    p.add_argument("--out", required=True)
    p.add_argument("--trace", required=True)
    p.set_defaults(fn=cmd_folds)

    p = sub.add_parser("analyze", help="whole-program taint analysis")
    p.add_argument("--app", required=True)
    p.add_argument("--ss", required=True)
    p.add_argument("--stubs", required=True)
    p.add_argument("--empty-stubs", action="store_true", help="baseline: cut off native summaries")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("score", help="compare flows against ground truth")
    p.add_argument("--flows", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_score)

    p = sub.add_parser("run-all", help="full pipeline from a project config")
    p.add_argument("--config", action="append", required=True)
    p.add_argument("--from", dest="from_stage", choices=pipeline.STAGES,
                   help="reuse cached artifacts up to this stage")
    p.add_argument("--empty-stubs", action="store_true")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(fn=cmd_run_all)
    return ap


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except MudepError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
