"""Taint-summary stub synthesis from dependency relations.

A stub is a tiny ordered program over field paths.  Every dependency edge is
classified by the primitiveness of its endpoint types and lowered to exactly
one op form; several primitive inputs feeding one primitive output collapse
into a single join.  Proxy-source stubs inject fresh taint on every output
field whose type is compatible with a natively-called source's return type.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

from mudep.depgen import RETURN_SLOT, DependencyRelation, FieldPath, MARK_EMPTY_STUB, MARK_TAINT_GEN, MARK_UNKNOWN
from mudep.errors import ConformanceError, PathTypeError
from mudep.executor import FunctionSig
from mudep.typesys import Primitive, TypeDesc, TypeRegistry, leaf_paths, type_name, walk_type

log = logging.getLogger(__name__)

KIND_NORMAL = "normal"
KIND_EMPTY = "empty"
KIND_TAINT_SOURCE = "taint_source"


@dataclass(frozen=True)
class AssignFlow:
    out: FieldPath
    in_: FieldPath
    cast: str | None = None


@dataclass(frozen=True)
class AddTaint:
    out: FieldPath
    in_: FieldPath


@dataclass(frozen=True)
class GetTaintAssign:
    out: FieldPath
    in_: FieldPath
    as_kind: str


@dataclass(frozen=True)
class SumAssign:
    out: FieldPath
    ins: tuple[FieldPath, ...]


@dataclass(frozen=True)
class TaintGen:
    out: FieldPath
    label: str


StubOp = AssignFlow | AddTaint | GetTaintAssign | SumAssign | TaintGen


@dataclass
class Stub:
    function: str
    ops: list[StubOp] = field(default_factory=list)
    kind: str = KIND_NORMAL

    def relabel(self, label: str) -> "Stub":
        """Rewrite taint-generation labels (used when the bridge name is known)."""
        ops = [replace(op, label=label) if isinstance(op, TaintGen) else op for op in self.ops]
        return Stub(self.function, ops, self.kind)


def _endpoint_type(sig: FunctionSig, path: FieldPath, reg: TypeRegistry) -> TypeDesc:
    """Type at the end of a path, honoring concrete tags on abstract slots."""
    if path.is_return:
        root = sig.return_type
    else:
        slots = sig.arg_types(reg)
        if not 0 <= path.slot < len(slots):
            raise PathTypeError(f"{sig.name}: no argument slot {path.slot}")
        root = slots[path.slot]
    if root is None:
        raise PathTypeError(f"{sig.name}: path on void return")
    try:
        tagged = reg.get(path.type_name)
    except Exception:
        tagged = None
    if tagged is not None and type_name(root) != path.type_name:
        root = tagged
    try:
        return walk_type(reg, root, path.chain)
    except ConformanceError as e:
        raise PathTypeError(f"{sig.name}: {e}") from e


def _compatible(a: TypeDesc, b: TypeDesc) -> bool:
    # Identical record name, identical primitive kind, or string<->string.
    return type_name(a) == type_name(b)


def synthesize(sig: FunctionSig, rel: DependencyRelation, reg: TypeRegistry) -> Stub:
    """Lower a dependency relation into stub ops (one op form per edge class)."""
    if rel.marker == MARK_EMPTY_STUB or (rel.marker is None and not rel.witness):
        return Stub(sig.name, [], KIND_EMPTY)
    if rel.marker == MARK_TAINT_GEN:
        ops: list[StubOp] = []
        if sig.return_type is not None:
            ops.append(TaintGen(FieldPath(RETURN_SLOT, (), type_name(sig.return_type)), sig.name))
        for i, t in enumerate(sig.arg_types(reg)):
            if not isinstance(t, Primitive):
                ops.append(TaintGen(FieldPath(i, (), type_name(t)), sig.name))
        if not ops:
            log.warning("%s: taint generation with no observable output; stub left empty", sig.name)
            return Stub(sig.name, [], KIND_EMPTY)
        return Stub(sig.name, ops, KIND_TAINT_SOURCE)
    if rel.marker == MARK_UNKNOWN:
        log.warning("%s: relation unknown; emitting empty stub", sig.name)
        return Stub(sig.name, [], KIND_EMPTY)

    # Primitive->primitive edges joining on one output collapse into a sum.
    ops = []
    prim_ins: dict[FieldPath, list[FieldPath]] = {}
    for out, in_ in rel.sorted_edges():
        out_t = _endpoint_type(sig, out, reg)
        in_t = _endpoint_type(sig, in_, reg)
        out_p, in_p = isinstance(out_t, Primitive), isinstance(in_t, Primitive)
        if out_p and in_p:
            prim_ins.setdefault(out, []).append(in_)
        elif out_p:
            ops.append(GetTaintAssign(out, in_, out_t.kind))
        elif in_p:
            ops.append(AddTaint(out, in_))
        elif _compatible(out_t, in_t):
            ops.append(AssignFlow(out, in_))
        else:
            ops.append(AddTaint(out, in_))
    for out in sorted(prim_ins):
        ins = prim_ins[out]
        out_kind = _endpoint_type(sig, out, reg).kind
        if len(ins) == 1:
            ops.append(AssignFlow(out, ins[0], cast=out_kind))
        else:
            ops.append(SumAssign(out, tuple(sorted(ins))))
    return Stub(sig.name, ops, KIND_NORMAL)


def proxy_source_stub(sig: FunctionSig, source_return_types: list[str], reg: TypeRegistry,
                      label: str | None = None, depth: int = 5) -> Stub:
    """Wrapper analog for a native method flagged as using a source: inject
    taint on the return and every output field type-compatible with the
    source's return type."""
    label = label or sig.name
    wanted = set(source_return_types)
    ops: list[StubOp] = []

    def cover(slot: int, root: TypeDesc) -> None:
        root_name = type_name(root)
        if root_name in wanted:
            ops.append(TaintGen(FieldPath(slot, (), root_name), label))
            return
        for chain, leaf_t in leaf_paths(reg, root, depth):
            if type_name(leaf_t) in wanted:  # empty chain: array of compatible elements
                ops.append(TaintGen(FieldPath(slot, chain, root_name), label))

    if sig.return_type is not None:
        cover(RETURN_SLOT, sig.return_type)
    for i, t in enumerate(sig.arg_types(reg)):
        if not isinstance(t, Primitive):
            cover(i, t)
    if not ops:
        log.warning("%s: no field compatible with source return type(s) %s", sig.name, sorted(wanted))
        return Stub(sig.name, [], KIND_EMPTY)
    return Stub(sig.name, ops, KIND_TAINT_SOURCE)


def merge(dep_stub: Stub, proxy: Stub) -> Stub:
    """Dependency ops first, then proxy taint injection."""
    ops = dep_stub.ops + proxy.ops
    kind = KIND_TAINT_SOURCE if any(isinstance(o, TaintGen) for o in ops) else dep_stub.kind
    if not ops:
        kind = KIND_EMPTY
    return Stub(dep_stub.function, ops, kind)


# ---------------------------------------------------------------------------
# Canonical stub documents
# ---------------------------------------------------------------------------

def _op_to_json(op: StubOp) -> dict:
    if isinstance(op, AssignFlow):
        return {"op": "assign", "out": op.out.to_json(), "in": op.in_.to_json(), "cast": op.cast}
    if isinstance(op, AddTaint):
        return {"op": "add_taint", "out": op.out.to_json(), "in": op.in_.to_json()}
    if isinstance(op, GetTaintAssign):
        return {"op": "get_taint", "out": op.out.to_json(), "in": op.in_.to_json(), "as": op.as_kind}
    if isinstance(op, SumAssign):
        return {"op": "sum", "out": op.out.to_json(), "ins": [i.to_json() for i in op.ins]}
    if isinstance(op, TaintGen):
        return {"op": "taint_gen", "out": op.out.to_json(), "label": op.label}
    raise PathTypeError(f"unknown stub op {op!r}")


def _op_from_json(d: dict) -> StubOp:
    kind = d["op"]
    if kind == "assign":
        return AssignFlow(FieldPath.from_json(d["out"]), FieldPath.from_json(d["in"]), d.get("cast"))
    if kind == "add_taint":
        return AddTaint(FieldPath.from_json(d["out"]), FieldPath.from_json(d["in"]))
    if kind == "get_taint":
        return GetTaintAssign(FieldPath.from_json(d["out"]), FieldPath.from_json(d["in"]), d["as"])
    if kind == "sum":
        return SumAssign(FieldPath.from_json(d["out"]), tuple(FieldPath.from_json(i) for i in d["ins"]))
    if kind == "taint_gen":
        return TaintGen(FieldPath.from_json(d["out"]), d["label"])
    raise PathTypeError(f"unknown stub op document {d!r}")


def emit(stub: Stub) -> dict:
    return {"function": stub.function, "kind": stub.kind, "ops": [_op_to_json(o) for o in stub.ops]}


def parse(doc: dict) -> Stub:
    return Stub(doc["function"], [_op_from_json(o) for o in doc.get("ops", [])], doc.get("kind", KIND_NORMAL))
