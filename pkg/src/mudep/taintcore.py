"""Whole-program taint analysis over a small app IR.

Flow-insensitive, context-insensitive, allocation-site heap abstraction:
every local maps to a fact (points-to set + value taint), every abstract
object carries a taint cell plus per-field facts.  Native calls are
interpreted through their taint-summary stubs; arrays are a single cell.
The least fixpoint terminates because label sets only grow.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

from mudep import stubgen, typesys
from mudep.depgen import FieldPath
from mudep.errors import IRValidationError
from mudep.nativescan import SourceSinkList
from mudep.stubgen import AddTaint, AssignFlow, GetTaintAssign, Stub, SumAssign, TaintGen
from mudep.typesys import ArrayType, Primitive, RecordType, TypeDesc, TypeRegistry

log = logging.getLogger(__name__)

ARRAY_ELEMS = "[]"  # pseudo-field holding an array's element fact


# ---------------------------------------------------------------------------
# App IR
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Stmt:
    op: str
    dst: str | None = None
    src: str | None = None
    obj: str | None = None
    fld: str | None = None
    type: str | None = None
    method: str | None = None
    args: tuple[str, ...] = ()
    value: object = None


@dataclass
class Method:
    name: str
    params: list[tuple[str, TypeDesc]]
    returns: TypeDesc | None
    body: list[Stmt]


@dataclass
class AppIR:
    types: TypeRegistry
    methods: dict[str, Method]
    natives: dict[str, str]  # bridge method signature -> impl symbol
    entries: list[str]


_STMT_OPS = {"new", "new_array", "assign", "load", "store", "array_get", "array_put",
             "const", "const_str", "call", "call_native", "call_source", "call_sink", "return"}


def parse_app(doc: dict, reg: TypeRegistry | None = None) -> AppIR:
    reg = reg or TypeRegistry()
    typesys.register_types(doc.get("types", []), reg)
    natives = {n["method"]: n["impl"] for n in doc.get("natives", [])}
    methods: dict[str, Method] = {}
    for mdoc in doc.get("methods", []):
        body = []
        for s in mdoc.get("body", []):
            if s["op"] not in _STMT_OPS:
                raise IRValidationError(f"unknown statement op {s['op']!r} in {mdoc['name']}")
            body.append(Stmt(
                op=s["op"], dst=s.get("dst"), src=s.get("src"), obj=s.get("obj"),
                fld=s.get("field"), type=s.get("type"),
                method=s.get("method") or s.get("source") or s.get("sink"),
                args=tuple(s.get("args", [])), value=s.get("value")))
        ret = mdoc.get("returns")
        methods[mdoc["name"]] = Method(
            name=mdoc["name"],
            params=[(p["name"], typesys.typedesc_from_json(p["type"], reg)) for p in mdoc.get("params", [])],
            returns=None if ret in (None, {"kind": "void"}) else typesys.typedesc_from_json(ret, reg),
            body=body)
    ir = AppIR(reg, methods, natives, list(doc.get("entries", [])))
    validate_ir(ir)
    return ir


def load_app(path: str, reg: TypeRegistry | None = None) -> AppIR:
    with open(path, "r", encoding="utf-8") as f:
        return parse_app(json.load(f), reg)


def validate_ir(ir: AppIR) -> None:
    for entry in ir.entries:
        if entry not in ir.methods:
            raise IRValidationError(f"entry method {entry!r} is not defined")
    for m in ir.methods.values():
        defined = {p for p, _ in m.params}
        for s in m.body:
            if s.dst:
                defined.add(s.dst)
        for s in m.body:
            for used in (s.src, s.obj) + s.args:
                if used is not None and used not in defined:
                    raise IRValidationError(f"{m.name}: local {used!r} used but never assigned")
            if s.op == "call" and s.method not in ir.methods:
                # Calls to unknown java methods are allowed only as list-driven
                # sources/sinks; they behave as inert externals otherwise.
                log.debug("%s: call to external method %s", m.name, s.method)
            if s.op == "call_native" and s.method not in ir.natives:
                raise IRValidationError(f"{m.name}: native method {s.method!r} not declared")
            if s.op == "new" and not isinstance(ir.types.get(s.type), RecordType):
                raise IRValidationError(f"{m.name}: new of non-record {s.type!r}")


# ---------------------------------------------------------------------------
# Abstract state
# ---------------------------------------------------------------------------

Site = tuple  # ("alloc" | "param" | "native", method, key)


class Fact:
    __slots__ = ("pts", "taint")

    def __init__(self):
        self.pts: set[Site] = set()
        self.taint: set[str] = set()

    def join_from(self, other: "Fact") -> bool:
        before = (len(self.pts), len(self.taint))
        self.pts |= other.pts
        self.taint |= other.taint
        return (len(self.pts), len(self.taint)) != before

    def join_taint(self, labels: set[str]) -> bool:
        before = len(self.taint)
        self.taint |= labels
        return len(self.taint) != before


@dataclass
class FlowReport:
    flows: list[dict] = field(default_factory=list)  # {source, sink, via}
    _seen: set[tuple[str, str]] = field(default_factory=set)

    def add(self, source: str, sink: str, via: str) -> bool:
        key = (source, sink)
        if key in self._seen:
            return False
        self._seen.add(key)
        self.flows.append({"source": source, "sink": sink, "via": via})
        return True

    def pairs(self) -> set[tuple[str, str]]:
        return set(self._seen)

    def to_json(self) -> list[dict]:
        return sorted(self.flows, key=lambda f: (f["source"], f["sink"]))


class _State:
    def __init__(self, ir: AppIR):
        self.ir = ir
        self.var: dict[tuple[str, str], Fact] = {}
        self.ret: dict[str, Fact] = {}
        self.cell: dict[Site, set[str]] = {}
        self.fields: dict[Site, dict[str, Fact]] = {}
        self.changed = False

    def fact(self, method: str, var: str) -> Fact:
        return self.var.setdefault((method, var), Fact())

    def ret_fact(self, method: str) -> Fact:
        return self.ret.setdefault(method, Fact())

    def ensure_obj(self, site: Site) -> None:
        self.cell.setdefault(site, set())
        self.fields.setdefault(site, {})

    def field_fact(self, site: Site, fld: str) -> Fact:
        self.ensure_obj(site)
        return self.fields[site].setdefault(fld, Fact())

    def note(self, did_change: bool) -> None:
        self.changed = self.changed or did_change

    # -- path navigation ----------------------------------------------------

    def facts_at(self, start: Fact, chain: tuple[str, ...]) -> list[Fact]:
        """Facts reachable from start along a field chain (arrays transparent)."""
        current = [start]
        for fld in chain:
            nxt: list[Fact] = []
            for f in self._expand_arrays(current):
                for site in f.pts:
                    nxt.append(self.field_fact(site, fld))
            current = nxt
        return self._expand_arrays(current)

    def _expand_arrays(self, facts: list[Fact]) -> list[Fact]:
        out = list(facts)
        seen: set[int] = {id(f) for f in facts}
        queue = list(facts)
        while queue:
            f = queue.pop()
            for site in f.pts:
                ef = self.fields.get(site, {}).get(ARRAY_ELEMS)
                if ef is not None and id(ef) not in seen:
                    seen.add(id(ef))
                    out.append(ef)
                    queue.append(ef)
        return out

    def collect_deep(self, fact: Fact) -> set[str]:
        """Value taint plus everything reachable through the heap from it."""
        labels = set(fact.taint)
        seen: set[Site] = set()
        queue = list(fact.pts)
        while queue:
            site = queue.pop()
            if site in seen:
                continue
            seen.add(site)
            labels |= self.cell.get(site, set())
            for f in self.fields.get(site, {}).values():
                labels |= f.taint
                queue.extend(f.pts)
        return labels

    def read_path(self, start: Fact, chain: tuple[str, ...]) -> Fact:
        joined = Fact()
        for f in self.facts_at(start, chain):
            joined.pts |= f.pts
            joined.taint |= f.taint
        return joined

    def write_path(self, start: Fact, chain: tuple[str, ...], value: Fact) -> None:
        if not chain:
            # Cannot rebind the caller's argument; taint the objects instead.
            labels = value.taint | self.collect_deep(value)
            for site in start.pts:
                self.ensure_obj(site)
                before = len(self.cell[site])
                self.cell[site] |= labels
                self.note(len(self.cell[site]) != before)
            return
        for parent in self.facts_at(start, chain[:-1]):
            for site in parent.pts:
                self.note(self.field_fact(site, chain[-1]).join_from(value))

    def add_taint_at(self, start: Fact, chain: tuple[str, ...], labels: set[str]) -> None:
        if not labels:
            return
        if not chain:
            for site in start.pts:
                self.ensure_obj(site)
                before = len(self.cell[site])
                self.cell[site] |= labels
                self.note(len(self.cell[site]) != before)
            return
        for parent in self.facts_at(start, chain[:-1]):
            for site in parent.pts:
                self.note(self.field_fact(site, chain[-1]).join_taint(labels))


# ---------------------------------------------------------------------------
# Analysis
# ---------------------------------------------------------------------------

def _reachable_methods(ir: AppIR) -> list[str]:
    seen: list[str] = []
    stack = [e for e in ir.entries if e in ir.methods]
    while stack:
        m = stack.pop()
        if m in seen:
            continue
        seen.append(m)
        for s in ir.methods[m].body:
            if s.op == "call" and s.method in ir.methods:
                stack.append(s.method)
    return sorted(seen)


def analyze(ir: AppIR, ss: SourceSinkList, stubs: dict[str, Stub],
            missing_stub_empty: bool = True) -> FlowReport:
    """Least fixpoint of the transfer rules; reports source->sink flows.

    ``stubs`` is keyed by native implementation symbol.  A native call whose
    stub is missing falls back to the empty stub (cut-off behavior) unless
    missing_stub_empty is False, in which case it is an error.
    """
    state = _State(ir)
    report = FlowReport()
    methods = _reachable_methods(ir)

    for m in methods:
        for pname, ptype in ir.methods[m].params:
            if isinstance(ptype, (RecordType, ArrayType)):
                site: Site = ("param", m, pname)
                state.ensure_obj(site)
                state.fact(m, pname).pts.add(site)

    missing_warned: set[str] = set()

    def transfer(m: str, idx: int, s: Stmt) -> None:
        fact = state.fact
        if s.op == "new" or s.op == "new_array":
            site: Site = ("alloc", m, idx)
            state.ensure_obj(site)
            state.note(site not in fact(m, s.dst).pts)
            fact(m, s.dst).pts.add(site)
        elif s.op == "assign":
            state.note(fact(m, s.dst).join_from(fact(m, s.src)))
        elif s.op == "load":
            for site in list(fact(m, s.obj).pts):
                state.note(fact(m, s.dst).join_from(state.field_fact(site, s.fld)))
        elif s.op == "store":
            for site in list(fact(m, s.obj).pts):
                state.note(state.field_fact(site, s.fld).join_from(fact(m, s.src)))
        elif s.op == "array_get":
            for site in list(fact(m, s.obj).pts):
                state.note(fact(m, s.dst).join_from(state.field_fact(site, ARRAY_ELEMS)))
                state.note(fact(m, s.dst).join_taint(state.cell.get(site, set())))
        elif s.op == "array_put":
            for site in list(fact(m, s.obj).pts):
                state.note(state.field_fact(site, ARRAY_ELEMS).join_from(fact(m, s.src)))
        elif s.op in ("const", "const_str"):
            pass
        elif s.op == "call_source":
            state.note(fact(m, s.dst).join_taint({s.method}))
        elif s.op == "call_sink":
            for a in s.args:
                for label in sorted(state.collect_deep(fact(m, a))):
                    state.note(report.add(label, s.method, m))
        elif s.op == "call":
            callee = ir.methods.get(s.method)
            if callee is not None:
                for (pname, _), a in zip(callee.params, s.args):
                    state.note(fact(s.method, pname).join_from(fact(m, a)))
                if s.dst:
                    state.note(fact(m, s.dst).join_from(state.ret_fact(s.method)))
            if s.method in ss.sources and s.dst:
                state.note(fact(m, s.dst).join_taint({s.method}))
            if s.method in ss.sinks:
                for a in s.args:
                    for label in sorted(state.collect_deep(fact(m, a))):
                        state.note(report.add(label, s.method, m))
        elif s.op == "call_native":
            _native_call(m, idx, s)
        elif s.op == "return":
            if s.src:
                state.note(state.ret_fact(m).join_from(fact(m, s.src)))

    def _native_call(m: str, idx: int, s: Stmt) -> None:
        fact = state.fact
        if s.method in ss.sinks:
            for a in s.args:
                for label in sorted(state.collect_deep(fact(m, a))):
                    state.note(report.add(label, s.method, m))
        impl = ir.natives[s.method]
        stub = stubs.get(impl)
        if stub is None:
            if not missing_stub_empty:
                raise IRValidationError(f"no stub for native method {s.method!r} ({impl})")
            if impl not in missing_warned:
                missing_warned.add(impl)
                log.warning("no stub for %s (%s); treating as empty", s.method, impl)
            if s.method in ss.sources and s.dst:
                state.note(fact(m, s.dst).join_taint({s.method}))
            return
        if s.method in ss.sources and s.dst and not any(isinstance(o, TaintGen) for o in stub.ops):
            state.note(fact(m, s.dst).join_taint({s.method}))
        _apply_stub(m, idx, s, stub)

    def _apply_stub(m: str, idx: int, s: Stmt, stub: Stub) -> None:
        fact = state.fact

        def slot_fact(path: FieldPath) -> Fact:
            if path.is_return:
                if s.dst is None:
                    return Fact()
                return fact(m, s.dst)
            if path.slot >= len(s.args):
                return Fact()
            return fact(m, s.args[path.slot])

        ret_site: Site = ("native", m, idx)
        needs_ret_obj = any(op.out.is_return and (op.out.chain or not isinstance(op, AssignFlow))
                            for op in stub.ops)
        if s.dst is not None and needs_ret_obj:
            state.ensure_obj(ret_site)
            state.note(ret_site not in fact(m, s.dst).pts)
            fact(m, s.dst).pts.add(ret_site)

        def taint_out(out: FieldPath, labels: set[str]) -> None:
            if not labels:
                return
            if out.is_return:
                if s.dst is None:
                    return
                dst = fact(m, s.dst)
                if out.chain:
                    state.add_taint_at(dst, out.chain, labels)
                else:
                    state.note(dst.join_taint(labels))
                    state.add_taint_at(dst, (), labels)
            else:
                state.add_taint_at(slot_fact(out), out.chain, labels)

        for op in stub.ops:
            if isinstance(op, AssignFlow):
                value = state.read_path(slot_fact(op.in_), op.in_.chain)
                if op.out.is_return and not op.out.chain:
                    if s.dst is not None:
                        state.note(fact(m, s.dst).join_from(value))
                else:
                    state.write_path(slot_fact(op.out), op.out.chain, value)
            elif isinstance(op, AddTaint):
                taint_out(op.out, state.collect_deep(state.read_path(slot_fact(op.in_), op.in_.chain)))
            elif isinstance(op, GetTaintAssign):
                taint_out(op.out, state.collect_deep(state.read_path(slot_fact(op.in_), op.in_.chain)))
            elif isinstance(op, SumAssign):
                labels: set[str] = set()
                for p in op.ins:
                    labels |= state.read_path(slot_fact(p), p.chain).taint
                taint_out(op.out, labels)
            elif isinstance(op, TaintGen):
                taint_out(op.out, {op.label})

    # Fixpoint: facts and the report only grow.
    while True:
        state.changed = False
        for m in methods:
            for idx, s in enumerate(ir.methods[m].body):
                transfer(m, idx, s)
        if not state.changed:
            break
    return report


# ---------------------------------------------------------------------------
# Scoring
# ---------------------------------------------------------------------------

def score(report: FlowReport, truth: list[dict]) -> dict:
    """Standard TP/FP/FN and P/R/F1 against expected (source, sink) pairs."""
    expected = {(t["source"], t["sink"]) for t in truth}
    got = report.pairs()
    tp = len(got & expected)
    fp = len(got - expected)
    fn = len(expected - got)
    precision = 100.0 * tp / (tp + fp) if tp + fp else 0.0
    recall = 100.0 * tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return {"tp": tp, "fp": fp, "fn": fn,
            "precision": round(precision, 2), "recall": round(recall, 2), "f1": round(f1, 2)}


def empty_stubs_for(stubs: dict[str, Stub]) -> dict[str, Stub]:
    """Baseline mode: every known native gets the cut-off (empty) stub."""
    return {k: Stub(k, [], stubgen.KIND_EMPTY) for k in stubs}
