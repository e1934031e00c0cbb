"""Control-flow scan of declarative native images for source/sink usage.

An image describes a native library: functions with basic blocks and
callsites, an export list, and a dynamic-registration table mapping entry
symbols to bridge method names.  The scan finds direct source/sink callsites,
closes the flags backward over the local call graph, and maps flagged
functions to their bridge methods so the source/sink lists can grow.
Callsite matching is control-flow only; data sensitivity is never checked,
which is deliberate and over-approximate.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

from mudep.errors import SchemaError

log = logging.getLogger(__name__)

JNI_EXPORT_PREFIX = "Java_"


# ---------------------------------------------------------------------------
# Model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Callsite:
    kind: str  # java_call | native_lib_call | local_call
    target: str


@dataclass(frozen=True)
class Block:
    id: str
    callsites: tuple[Callsite, ...]
    successors: tuple[str, ...]


@dataclass(frozen=True)
class NativeFunc:
    name: str
    entry: str
    blocks: tuple[Block, ...]

    def callsites(self):
        for b in self.blocks:
            yield from b.callsites


@dataclass(frozen=True)
class Registration:
    entry: str       # native function symbol
    java_name: str   # bridge method signature
    java_sig: str = ""


@dataclass
class NativeImage:
    functions: dict[str, NativeFunc]
    registrations: list[Registration]
    exports: list[str]


@dataclass
class SourceSinkList:
    """Method signatures or native-library symbols; a source may carry the
    type name its value has (used for proxy taint semantics)."""

    sources: set[str] = field(default_factory=set)
    sinks: set[str] = field(default_factory=set)
    source_return: dict[str, str] = field(default_factory=dict)

    def copy(self) -> "SourceSinkList":
        return SourceSinkList(set(self.sources), set(self.sinks), dict(self.source_return))

    def to_json(self) -> dict:
        return {
            "sources": [{"method": m, **({"return": self.source_return[m]} if m in self.source_return else {})}
                        for m in sorted(self.sources)],
            "sinks": [{"method": m} for m in sorted(self.sinks)],
        }

    @classmethod
    def from_json(cls, d: dict) -> "SourceSinkList":
        ss = cls()
        for e in d.get("sources", []):
            ss.sources.add(e["method"])
            if "return" in e:
                ss.source_return[e["method"]] = e["return"]
        for e in d.get("sinks", []):
            ss.sinks.add(e["method"])
        return ss


def load_ss(path: str) -> SourceSinkList:
    with open(path, "r", encoding="utf-8") as f:
        return SourceSinkList.from_json(json.load(f))


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

def parse_image(doc: dict) -> NativeImage:
    functions: dict[str, NativeFunc] = {}
    for fdoc in doc.get("functions", []):
        fname = fdoc.get("name")
        if not fname:
            raise SchemaError("function without a name", "functions[]")
        blocks = []
        ids = {b.get("id") for b in fdoc.get("blocks", [])}
        for bdoc in fdoc.get("blocks", []):
            for succ in bdoc.get("succ", []):
                if succ not in ids:
                    raise SchemaError(f"dangling successor {succ!r}", f"{fname}/{bdoc.get('id')}")
            sites = []
            for cdoc in bdoc.get("callsites", []):
                kind = cdoc.get("kind")
                if kind not in ("java_call", "native_lib_call", "local_call"):
                    raise SchemaError(f"unknown callsite kind {kind!r}", f"{fname}/{bdoc.get('id')}")
                sites.append(Callsite(kind, cdoc["target"]))
            blocks.append(Block(bdoc["id"], tuple(sites), tuple(bdoc.get("succ", []))))
        entry = fdoc.get("entry")
        if entry not in ids:
            raise SchemaError(f"entry block {entry!r} not found", fname)
        functions[fname] = NativeFunc(fname, entry, tuple(blocks))

    registrations = []
    for rdoc in doc.get("registration", []):
        if rdoc["entry"] not in functions:
            raise SchemaError(f"registration names absent function {rdoc['entry']!r}", "registration")
        registrations.append(Registration(rdoc["entry"], rdoc["java_name"], rdoc.get("java_sig", "")))

    exports = list(doc.get("exports", []))
    for e in exports:
        if e not in functions:
            raise SchemaError(f"export names absent function {e!r}", "exports")

    for fn in functions.values():
        for cs in fn.callsites():
            if cs.kind == "local_call" and cs.target not in functions:
                raise SchemaError(f"local call to absent function {cs.target!r}", fn.name)
    return NativeImage(functions, registrations, exports)


def load_image(path: str) -> NativeImage:
    with open(path, "r", encoding="utf-8") as f:
        return parse_image(json.load(f))


def merge_images(images: list[NativeImage]) -> NativeImage:
    merged = NativeImage({}, [], [])
    for img in images:
        merged.functions.update(img.functions)
        merged.registrations.extend(img.registrations)
        merged.exports.extend(img.exports)
    return merged


# ---------------------------------------------------------------------------
# Scan
# ---------------------------------------------------------------------------

@dataclass
class FuncFlags:
    uses_source: set[str] = field(default_factory=set)
    uses_sink: set[str] = field(default_factory=set)


def find_ss_callsites(img: NativeImage, ss: SourceSinkList) -> dict[str, FuncFlags]:
    """Direct matches per function, java calls and native library calls alike."""
    out: dict[str, FuncFlags] = {}
    for fn in img.functions.values():
        flags = FuncFlags()
        for cs in fn.callsites():
            if cs.kind == "local_call":
                continue
            if cs.target in ss.sources:
                flags.uses_source.add(cs.target)
            if cs.target in ss.sinks:
                flags.uses_sink.add(cs.target)
        out[fn.name] = flags
    return out


def propagate_reachability(img: NativeImage, direct: dict[str, FuncFlags]) -> dict[str, FuncFlags]:
    """Close the flags under reverse local-call reachability: a caller
    inherits everything its callees use.  Terminates on cycles."""
    callers: dict[str, set[str]] = {name: set() for name in img.functions}
    for fn in img.functions.values():
        for cs in fn.callsites():
            if cs.kind == "local_call":
                callers[cs.target].add(fn.name)

    flags = {name: FuncFlags(set(f.uses_source), set(f.uses_sink)) for name, f in direct.items()}
    work = [name for name, f in flags.items() if f.uses_source or f.uses_sink]
    while work:
        callee = work.pop()
        for caller in callers.get(callee, ()):  # pragma: no branch
            cf = flags.setdefault(caller, FuncFlags())
            before = (len(cf.uses_source), len(cf.uses_sink))
            cf.uses_source |= flags[callee].uses_source
            cf.uses_sink |= flags[callee].uses_sink
            if (len(cf.uses_source), len(cf.uses_sink)) != before:
                work.append(caller)
    return flags


def demangle_export(symbol: str) -> str | None:
    """Decode a Java_<pkg>_<Class>_<method> export into a dotted signature.

    The _1 escape stands for a literal underscore; the last undecorated
    segment is the method name.
    """
    if not symbol.startswith(JNI_EXPORT_PREFIX):
        return None
    body = symbol[len(JNI_EXPORT_PREFIX):]
    marker = "\x00"
    parts = body.replace("_1", marker).split("_")
    if len(parts) < 2:
        return None
    parts = [p.replace(marker, "_") for p in parts]
    return ".".join(parts[:-1]) + "." + parts[-1]


@dataclass(frozen=True)
class BridgeEntry:
    method: str
    role: str  # source | sink | both
    impl: str
    source_return_types: tuple[str, ...] = ()


def map_bridges(img: NativeImage, flags: dict[str, FuncFlags],
                ss: SourceSinkList) -> tuple[list[BridgeEntry], list[str]]:
    """Map flagged functions to bridge methods via the registration table or
    the export naming convention; unmapped flagged functions only warn."""
    reg_by_entry: dict[str, Registration] = {}
    for r in img.registrations:
        reg_by_entry[r.entry] = r

    bridges: list[BridgeEntry] = []
    warnings: list[str] = []
    for name in sorted(img.functions):
        f = flags.get(name)
        if f is None or not (f.uses_source or f.uses_sink):
            continue
        if name in reg_by_entry:
            r = reg_by_entry[name]
            method = r.java_name + r.java_sig
        else:
            method = demangle_export(name) if name in img.exports else None
        if method is None:
            msg = f"flagged native function {name!r} has no bridge method"
            warnings.append(msg)
            log.warning("%s", msg)
            continue
        role = "both" if (f.uses_source and f.uses_sink) else ("source" if f.uses_source else "sink")
        ret_types = tuple(sorted({ss.source_return[s] for s in f.uses_source if s in ss.source_return}))
        bridges.append(BridgeEntry(method, role, name, ret_types))
    return bridges, warnings


def scan(images: list[NativeImage], ss: SourceSinkList) -> tuple[list[BridgeEntry], list[str]]:
    img = merge_images(images)
    flags = propagate_reachability(img, find_ss_callsites(img, ss))
    return map_bridges(img, flags, ss)


def apply_bridges(ss: SourceSinkList, bridges: list[BridgeEntry]) -> SourceSinkList:
    """Grow a copy of the list with bridge methods; never removes entries."""
    out = ss.copy()
    for b in bridges:
        if b.role in ("source", "both"):
            out.sources.add(b.method)
            if b.source_return_types:
                out.source_return[b.method] = b.source_return_types[0]
        if b.role in ("sink", "both"):
            out.sinks.add(b.method)
    return out
