"""Pipeline orchestration: scan -> depgen -> stubgen -> folds -> analyze -> score.

Every stage writes one JSON artifact carrying a provenance header (tool
version, seed, config hash, input digests).  Reruns with the same config and
seed reproduce the artifacts byte for byte; ``--from STAGE`` reuses upstream
artifacts only when their recorded input digests still match.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import shlex
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from mudep import __version__, depgen, executor, fixpoint, nativescan, stubgen, taintcore
from mudep.depgen import DepGenConfig, DependencyRelation
from mudep.errors import StageError
from mudep.fixpoint import FoldConfig
from mudep.nativescan import SourceSinkList
from mudep.typesys import GenConfig, TypeRegistry

log = logging.getLogger(__name__)

STAGES = ("scan", "depgen", "stubgen", "folds", "analyze", "score")


@dataclass
class ProjectConfig:
    app: str
    images: list[str]
    manifest: str
    ss: str
    out_dir: str
    backend: dict = field(default_factory=dict)  # {"kind": "subprocess", "cmd": ...} | {"kind": "inprocess", "lib": ...}
    truth: str | None = None
    bound: int = 15
    depth: int = 5
    seed: int = 1
    isolate: str = "session"
    budget: float = 2.0
    max_folds: int = 2
    name: str = "project"

    @classmethod
    def from_json(cls, doc: dict, base_dir: str = ".") -> "ProjectConfig":
        def p(x):
            return x if x is None or os.path.isabs(x) else os.path.normpath(os.path.join(base_dir, x))

        backend = dict(doc.get("backend", {}))
        if "lib" in backend:
            backend["lib"] = p(backend["lib"])
        return cls(
            app=p(doc["app"]), images=[p(i) for i in doc["images"]], manifest=p(doc["manifest"]),
            ss=p(doc["ss"]), out_dir=p(doc.get("out_dir", "out")), backend=backend,
            truth=p(doc.get("truth")), bound=int(doc.get("bound", 15)), depth=int(doc.get("depth", 5)),
            seed=int(doc.get("seed", 1)), isolate=doc.get("isolate", "session"),
            budget=float(doc.get("budget", 2.0)), max_folds=int(doc.get("max_folds", 2)),
            name=doc.get("name", "project"))

    @classmethod
    def load(cls, path: str) -> "ProjectConfig":
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_json(json.load(f), base_dir=os.path.dirname(os.path.abspath(path)))

    def canonical(self) -> str:
        # out_dir and name are cosmetic: the same config in another directory
        # must reproduce byte-identical artifacts.
        d = {k: v for k, v in self.__dict__.items() if k not in ("out_dir", "name")}
        return json.dumps(d, sort_keys=True, default=str)

    def depgen_config(self) -> DepGenConfig:
        return DepGenConfig(bound=self.bound, depth=self.depth, gen=GenConfig(max_depth=self.depth),
                            seed=self.seed, isolate=self.isolate, budget=self.budget)

    def make_backend(self) -> executor.Backend:
        kind = self.backend.get("kind", "subprocess")
        if kind == "subprocess":
            cmd = self.backend["cmd"]
            argv = shlex.split(cmd) if isinstance(cmd, str) else list(cmd)
            return executor.SubprocessBackend(argv)
        if kind == "inprocess":
            return executor.InProcessBackend(self.backend["lib"])
        raise StageError(f"unknown backend kind {kind!r}")


def _sha256_file(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class Project:
    """One configured analysis run with cached, hash-checked stage artifacts."""

    def __init__(self, cfg: ProjectConfig, empty_stubs: bool = False):
        self.cfg = cfg
        self.empty_stubs = empty_stubs
        self.reg = TypeRegistry()
        self.sigs = {s.name: s for s in executor.load_manifest(cfg.manifest, self.reg)}
        self.app = taintcore.load_app(cfg.app, self.reg)
        self.images = [nativescan.load_image(p) for p in cfg.images]
        self.ss_base = nativescan.load_ss(cfg.ss)
        os.makedirs(cfg.out_dir, exist_ok=True)

    # -- artifact plumbing ---------------------------------------------------

    def _path(self, name: str) -> str:
        return os.path.join(self.cfg.out_dir, name)

    def _header(self, inputs: dict[str, str]) -> dict:
        return {"tool": "mudep", "version": __version__, "seed": self.cfg.seed,
                "empty_stubs": self.empty_stubs,
                "config_hash": _sha256_text(self.cfg.canonical()), "inputs": inputs}

    def _write(self, name: str, inputs: dict[str, str], data) -> str:
        path = self._path(name)
        doc = {"header": self._header(inputs), "data": data}
        with open(path, "w", encoding="utf-8") as f:
            json.dump(doc, f, indent=2, sort_keys=True)
            f.write("\n")
        return path

    def _load_fresh(self, name: str, inputs: dict[str, str]):
        """Load an artifact only when its recorded provenance is current."""
        path = self._path(name)
        if not os.path.exists(path):
            raise StageError(f"missing upstream artifact {name}; rerun from an earlier stage")
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f)
        header = doc.get("header", {})
        if header.get("config_hash") != _sha256_text(self.cfg.canonical()) or header.get("inputs") != inputs:
            raise StageError(f"stale upstream artifact {name}: inputs changed since it was written")
        return doc["data"]

    def _file_inputs(self, *paths: str) -> dict[str, str]:
        return {os.path.basename(p): _sha256_file(p) for p in paths if p}

    # -- stages ----------------------------------------------------------------

    def stage_scan(self, reuse: bool = False) -> dict:
        inputs = self._file_inputs(self.cfg.ss, *self.cfg.images)
        if reuse:
            return self._load_fresh("ss_delta.json", inputs)
        bridges, warnings = nativescan.scan(self.images, self.ss_base)
        ss_after = nativescan.apply_bridges(self.ss_base, bridges)
        data = {
            "bridges": [{"method": b.method, "role": b.role, "impl": b.impl,
                         "source_return_types": list(b.source_return_types)} for b in bridges],
            "warnings": warnings,
            "ss_after": ss_after.to_json(),
        }
        self._write("ss_delta.json", inputs, data)
        return data

    def stage_depgen(self, reuse: bool = False) -> dict:
        inputs = self._file_inputs(self.cfg.manifest)
        inputs["backend"] = _sha256_text(json.dumps(self.cfg.backend, sort_keys=True))
        if reuse:
            return self._load_fresh("deps.json", inputs)
        dep_cfg = self.cfg.depgen_config()
        wanted = sorted(set(self.app.natives.values()))
        with executor.load(self.cfg.make_backend(), [self.sigs[w] for w in wanted], self.reg,
                           budget=self.cfg.budget) as handle:
            relations = [depgen.generate(handle, self.sigs[w], dep_cfg, self.reg).to_json()
                         for w in wanted]
        data = {"relations": relations}
        self._write("deps.json", inputs, data)
        return data

    def stage_stubgen(self, deps: dict, scan_data: dict, reuse: bool = False) -> dict:
        inputs = {"deps": _sha256_text(json.dumps(deps, sort_keys=True)),
                  "scan": _sha256_text(json.dumps(scan_data, sort_keys=True))}
        if reuse:
            return self._load_fresh("stubs.json", inputs)
        stubs: dict[str, stubgen.Stub] = {}
        for rel_doc in deps["relations"]:
            rel = DependencyRelation.from_json(rel_doc)
            sig = self.sigs[rel.function]
            stubs[rel.function] = stubgen.synthesize(sig, rel, self.reg)
        bridges = [nativescan.BridgeEntry(b["method"], b["role"], b["impl"],
                                          tuple(b["source_return_types"]))
                   for b in scan_data["bridges"]]
        # Bridge-name labels for degenerate taint generators, then proxy merge.
        impl_to_method = {b.impl: b.method for b in bridges}
        impl_to_method.update({impl: method for method, impl in self.app.natives.items()})
        for name, stub in list(stubs.items()):
            if stub.kind == stubgen.KIND_TAINT_SOURCE and name in impl_to_method:
                stubs[name] = stub.relabel(impl_to_method[name])
        fixpoint._update_proxy_stubs(bridges, stubs, self.sigs, self.reg, self.cfg.depth)
        data = {"stubs": [stubgen.emit(stubs[k]) for k in sorted(stubs)]}
        self._write("stubs.json", inputs, data)
        return data

    def stage_folds(self, stub_data: dict, reuse: bool = False) -> dict:
        inputs = self._file_inputs(self.cfg.app, *self.cfg.images)
        inputs["stubs"] = _sha256_text(json.dumps(stub_data, sort_keys=True))
        if reuse:
            return self._load_fresh("ss_final.json", inputs)
        stubs = {d["function"]: stubgen.parse(d) for d in stub_data["stubs"]}
        ss_final, trace = fixpoint.run_folds(
            self.app, self.images, self.ss_base, stubs,
            FoldConfig(max_folds=self.cfg.max_folds), sigs=self.sigs, reg=self.reg,
            depth=self.cfg.depth)
        data = {"ss": ss_final.to_json(), "trace": trace.to_json(),
                "stubs": [stubgen.emit(stubs[k]) for k in sorted(stubs)]}
        self._write("ss_final.json", inputs, data)
        with open(self._path("trace.json"), "w", encoding="utf-8") as f:
            json.dump(trace.to_json(), f, indent=2, sort_keys=True)
            f.write("\n")
        return data

    def stage_analyze(self, folds_data: dict, reuse: bool = False) -> dict:
        inputs = self._file_inputs(self.cfg.app)
        inputs["folds"] = _sha256_text(json.dumps(folds_data, sort_keys=True))
        inputs["mode"] = "empty" if self.empty_stubs else "stubs"
        if reuse:
            return self._load_fresh("flows.json", inputs)
        if self.empty_stubs:
            # Baseline: original lists, every native summary cut off.
            ss = self.ss_base
            stubs = taintcore.empty_stubs_for({d["function"]: None for d in folds_data["stubs"]})
        else:
            ss = SourceSinkList.from_json(folds_data["ss"])
            stubs = {d["function"]: stubgen.parse(d) for d in folds_data["stubs"]}
        report = taintcore.analyze(self.app, ss, stubs)
        data = {"flows": report.to_json()}
        self._write("flows.json", inputs, data)
        return data

    def stage_score(self, flows_data: dict, reuse: bool = False) -> dict | None:
        if not self.cfg.truth:
            return None
        inputs = self._file_inputs(self.cfg.truth)
        inputs["flows"] = _sha256_text(json.dumps(flows_data, sort_keys=True))
        if reuse:
            return self._load_fresh("metrics.json", inputs)
        with open(self.cfg.truth, "r", encoding="utf-8") as f:
            truth = json.load(f)["flows"]
        report = taintcore.FlowReport()
        for fl in flows_data["flows"]:
            report.add(fl["source"], fl["sink"], fl.get("via", ""))
        data = taintcore.score(report, truth)
        self._write("metrics.json", inputs, data)
        return data


def run_all(cfg: ProjectConfig, from_stage: str | None = None, empty_stubs: bool = False) -> dict:
    """Run the staged pipeline; stages before from_stage are reused from disk
    (refusing stale artifacts).  Returns the per-stage artifact data."""
    if from_stage is not None and from_stage not in STAGES:
        raise StageError(f"unknown stage {from_stage!r}; expected one of {', '.join(STAGES)}")
    start = STAGES.index(from_stage) if from_stage else 0
    project = Project(cfg, empty_stubs=empty_stubs)

    def reuse(stage: str) -> bool:
        return STAGES.index(stage) < start

    try:
        scan_data = project.stage_scan(reuse=reuse("scan"))
        deps = project.stage_depgen(reuse=reuse("depgen"))
        stub_data = project.stage_stubgen(deps, scan_data, reuse=reuse("stubgen"))
        folds_data = project.stage_folds(stub_data, reuse=reuse("folds"))
        flows = project.stage_analyze(folds_data, reuse=reuse("analyze"))
        metrics = project.stage_score(flows, reuse=reuse("score"))
    except StageError:
        raise
    except Exception as e:
        raise StageError(f"stage failure: {e}") from e
    return {"scan": scan_data, "deps": deps, "stubs": stub_data,
            "folds": folds_data, "flows": flows, "metrics": metrics}


def _run_one(args: tuple) -> tuple[str, dict | None]:
    cfg, empty_stubs = args
    result = run_all(cfg, empty_stubs=empty_stubs)
    return cfg.name, result["metrics"]


def run_batch(configs: list[ProjectConfig], jobs: int = 1, empty_stubs: bool = False) -> dict:
    """Run several projects and micro-average their metrics."""
    results: list[tuple[str, dict | None]] = []
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one, [(c, empty_stubs) for c in configs]))
    else:
        results = [_run_one((c, empty_stubs)) for c in configs]
    return report_metrics(results)


def report_metrics(batch: list[tuple[str, dict | None]]) -> dict:
    """Micro-averaged precision/recall/F1 (counts pooled across apps)."""
    rows = [{"app": name, **m} for name, m in batch if m is not None]
    if not rows:
        return {"apps": [], "aggregate": None, "text": "no data"}
    tp = sum(r["tp"] for r in rows)
    fp = sum(r["fp"] for r in rows)
    fn = sum(r["fn"] for r in rows)
    precision = 100.0 * tp / (tp + fp) if tp + fp else 0.0
    recall = 100.0 * tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    agg = {"tp": tp, "fp": fp, "fn": fn, "precision": round(precision, 2),
           "recall": round(recall, 2), "f1": round(f1, 2)}
    width = max(len(r["app"]) for r in rows)
    lines = [f"{'app':<{width}}  TP FP FN  P%      R%      F1%"]
    for r in sorted(rows, key=lambda r: r["app"]):
        lines.append(f"{r['app']:<{width}}  {r['tp']:>2} {r['fp']:>2} {r['fn']:>2}  "
                     f"{r['precision']:<7} {r['recall']:<7} {r['f1']}")
    lines.append(f"{'TOTAL':<{width}}  {tp:>2} {fp:>2} {fn:>2}  "
                 f"{agg['precision']:<7} {agg['recall']:<7} {agg['f1']}")
    return {"apps": rows, "aggregate": agg, "text": "\n".join(lines)}
