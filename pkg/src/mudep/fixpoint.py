"""Iterative source/sink list refinement (folds).

Fold 1 is the plain native scan.  Each later fold runs data-flow queries that
treat the Java methods called from native code as temporary sources (or
sinks), promotes any method observed feeding a sink-flagged native bridge to
a sink (dually for sources), then rescans the native images with the grown
list.  Growth is monotone and the method set is finite, so a fixpoint is
always reached; max_folds bounds the work.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from mudep import nativescan, stubgen, taintcore
from mudep.executor import FunctionSig
from mudep.nativescan import BridgeEntry, NativeImage, SourceSinkList
from mudep.stubgen import Stub
from mudep.taintcore import AppIR
from mudep.typesys import TypeRegistry

log = logging.getLogger(__name__)

BACKWARD_SINK = "backward_sink"
FORWARD_SOURCE = "forward_source"
BOTH = "both"


@dataclass
class FoldConfig:
    max_folds: int = 2
    direction: str = BOTH

    def __post_init__(self):
        if self.max_folds < 1:
            raise ValueError("max_folds must be >= 1")
        if self.direction not in (BACKWARD_SINK, FORWARD_SOURCE, BOTH):
            raise ValueError(f"unknown fold direction {self.direction!r}")


@dataclass
class FoldTrace:
    folds: list[dict] = field(default_factory=list)

    def record(self, fold: int, added_sources: set[str], added_sinks: set[str],
               flows: list[tuple[str, str]]) -> None:
        self.folds.append({
            "fold": fold,
            "added_sources": sorted(added_sources),
            "added_sinks": sorted(added_sinks),
            "flows": [{"source": a, "sink": b} for a, b in sorted(flows)],
        })

    def to_json(self) -> list[dict]:
        return self.folds


def native_called_java_methods(images: list[NativeImage]) -> list[str]:
    """The m-set: Java methods appearing as java_call targets in native CFGs."""
    out: set[str] = set()
    for img in images:
        for fn in img.functions.values():
            for cs in fn.callsites():
                if cs.kind == "java_call":
                    out.add(cs.target)
    return sorted(out)


def _update_proxy_stubs(bridges: list[BridgeEntry], stubs: dict[str, Stub],
                        sigs: dict[str, FunctionSig], reg: TypeRegistry, depth: int) -> None:
    """Re-derive proxy-source taint injection for source-flagged bridges."""
    for b in bridges:
        if b.role not in ("source", "both"):
            continue
        sig = sigs.get(b.impl)
        if sig is None:
            log.warning("source bridge %s has no manifest signature; skipping proxy", b.impl)
            continue
        proxy = stubgen.proxy_source_stub(sig, list(b.source_return_types), reg,
                                          label=b.method, depth=depth)
        base = stubs.get(b.impl, Stub(b.impl, [], stubgen.KIND_EMPTY))
        has_proxy = any(isinstance(op, stubgen.TaintGen) and op.label == b.method for op in base.ops)
        if not has_proxy:
            stubs[b.impl] = stubgen.merge(base, proxy)


def run_folds(app: AppIR, images: list[NativeImage], ss: SourceSinkList,
              stubs: dict[str, Stub], cfg: FoldConfig,
              sigs: dict[str, FunctionSig] | None = None,
              reg: TypeRegistry | None = None,
              depth: int = 5) -> tuple[SourceSinkList, FoldTrace]:
    """Interleave backward and forward updating until fixpoint or max_folds.

    Mutates ``stubs`` in place as proxy-source semantics become known.
    """
    sigs = sigs or {}
    reg = reg or app.types
    trace = FoldTrace()
    work = ss.copy()

    bridges, _ = nativescan.scan(images, work)
    grown = nativescan.apply_bridges(work, bridges)
    trace.record(1, grown.sources - work.sources, grown.sinks - work.sinks, [])
    work = grown
    _update_proxy_stubs(bridges, stubs, sigs, reg, depth)
    if cfg.max_folds == 1:
        return work, trace

    m_set = native_called_java_methods(images)
    bridge_methods = {b.method for b in bridges}

    for fold in range(2, cfg.max_folds + 1):
        added_sources: set[str] = set()
        added_sinks: set[str] = set()
        flows: list[tuple[str, str]] = []

        if cfg.direction in (BACKWARD_SINK, BOTH):
            native_sinks = bridge_methods & work.sinks
            if m_set and native_sinks:
                query = SourceSinkList(sources=set(m_set), sinks=set(native_sinks))
                rep = taintcore.analyze(app, query, stubs)
                for src, sink in sorted(rep.pairs()):
                    if src in m_set and sink in native_sinks and src not in work.sinks:
                        added_sinks.add(src)
                        flows.append((src, sink))

        if cfg.direction in (FORWARD_SOURCE, BOTH):
            native_sources = bridge_methods & work.sources
            if m_set and native_sources:
                query = SourceSinkList(sources=set(native_sources),
                                       source_return=dict(work.source_return),
                                       sinks=set(m_set))
                rep = taintcore.analyze(app, query, stubs)
                for src, sink in sorted(rep.pairs()):
                    if src in native_sources and sink in m_set and sink not in work.sources:
                        added_sources.add(sink)
                        flows.append((src, sink))

        work.sinks |= added_sinks
        work.sources |= added_sources

        # Rescan with the grown list: newly matching callsites flag more
        # native functions, whose bridges join the lists in the same fold.
        bridges, _ = nativescan.scan(images, work)
        rescanned = nativescan.apply_bridges(work, bridges)
        new_sources = (rescanned.sources - work.sources) | added_sources
        new_sinks = (rescanned.sinks - work.sinks) | added_sinks
        work = rescanned
        bridge_methods |= {b.method for b in bridges}
        _update_proxy_stubs(bridges, stubs, sigs, reg, depth)

        trace.record(fold, new_sources, new_sinks, flows)
        if not new_sources and not new_sinks:
            break

    return work, trace


def backward_sink_update(app: AppIR, images: list[NativeImage], ss: SourceSinkList,
                         stubs: dict[str, Stub], cfg: FoldConfig,
                         **kw) -> tuple[SourceSinkList, FoldTrace]:
    cfg = FoldConfig(cfg.max_folds, BACKWARD_SINK)
    return run_folds(app, images, ss, stubs, cfg, **kw)


def forward_source_update(app: AppIR, images: list[NativeImage], ss: SourceSinkList,
                          stubs: dict[str, Stub], cfg: FoldConfig,
                          **kw) -> tuple[SourceSinkList, FoldTrace]:
    cfg = FoldConfig(cfg.max_folds, FORWARD_SOURCE)
    return run_folds(app, images, ss, stubs, cfg, **kw)
