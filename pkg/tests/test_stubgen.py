from __future__ import annotations

import logging

import pytest

from mudep import stubgen
from mudep.depgen import DependencyRelation, FieldPath, MARK_EMPTY_STUB, MARK_TAINT_GEN, RETURN_SLOT
from mudep.errors import PathTypeError
from mudep.executor import FunctionSig
from mudep.stubgen import (
    AddTaint, AssignFlow, GetTaintAssign, KIND_EMPTY, KIND_TAINT_SOURCE, SumAssign, TaintGen,
    emit, parse, proxy_source_stub, synthesize,
)
from mudep.typesys import BOOL, INT32, Primitive, RecordType, StringType, TypeRegistry

S = StringType()


@pytest.fixture()
def reg():
    r = TypeRegistry()
    r.register(RecordType("Data", (("s", S),)))
    r.register(RecordType("Eavesdropper", (("s", S),)))
    r.register(RecordType("ImeiBox", (("imei", S), ("ok", BOOL))))
    r.register(RecordType("IntBox", (("x", INT32),)))
    r.register(RecordType("Wrap", (("tag", RecordType("Tag", (("t", S),))),)))
    return r


def rel_of(function, *edges):
    rel = DependencyRelation(function)
    for out, in_ in edges:
        rel.add((out, in_))
    return rel


def path(slot, chain=(), tname=""):
    return FieldPath(slot, tuple(chain), tname)


# --- the four rules -----------------------------------------------------------

def test_prim_to_prim_assign_with_cast(reg):
    sig = FunctionSig("f", True, None, (INT32, INT32), INT32)
    stub = synthesize(sig, rel_of("f", (path(RETURN_SLOT, (), "int32"), path(1, (), "int32"))), reg)
    assert stub.ops == [AssignFlow(path(RETURN_SLOT, (), "int32"), path(1, (), "int32"), cast="int32")]


def test_fig1_relation_rules_one_and_two(reg):
    sig = FunctionSig("propagate", True, None,
                      (reg.get("Data"), reg.get("Eavesdropper"), BOOL), None)
    ev_s = path(1, ("s",), "Eavesdropper")
    rel = rel_of("propagate",
                 (ev_s, path(0, ("s",), "Data")),
                 (ev_s, path(2, (), "bool")))
    stub = synthesize(sig, rel, reg)
    assert stub.ops == [
        AssignFlow(ev_s, path(0, ("s",), "Data")),       # string field to string field
        AddTaint(ev_s, path(2, (), "bool")),              # primitive into object taint
    ]
    assert stub.kind == "normal"


def test_multiple_primitive_inputs_collapse_to_sum(reg):
    sig = FunctionSig("f", True, None, (INT32, INT32), INT32)
    out = path(RETURN_SLOT, (), "int32")
    stub = synthesize(sig, rel_of("f", (out, path(0, (), "int32")), (out, path(1, (), "int32"))), reg)
    assert stub.ops == [SumAssign(out, (path(0, (), "int32"), path(1, (), "int32")))]


def test_prim_out_from_nonprim_in_uses_gettaint(reg):
    sig = FunctionSig("len_of", True, None, (reg.get("Data"),), INT32)
    stub = synthesize(sig, rel_of("len_of",
                                  (path(RETURN_SLOT, (), "int32"), path(0, ("s",), "Data"))), reg)
    assert stub.ops == [GetTaintAssign(path(RETURN_SLOT, (), "int32"), path(0, ("s",), "Data"), "int32")]


def test_incompatible_nonprim_pair_adapts_via_addtaint(reg):
    from mudep.typesys import ArrayType
    sig = FunctionSig("pick", True, None, (S, ArrayType(S)), S)
    stub = synthesize(sig, rel_of("pick",
                                  (path(RETURN_SLOT, (), "string"), path(1, (), "string[]"))), reg)
    assert stub.ops == [AddTaint(path(RETURN_SLOT, (), "string"), path(1, (), "string[]"))]


def test_rule_totality_every_class_maps_to_one_op(reg):
    sig = FunctionSig("f", True, None, (reg.get("Data"), INT32, reg.get("Eavesdropper")), INT32)
    cases = [
        ((path(2, ("s",), "Eavesdropper"), path(0, ("s",), "Data")), AssignFlow),   # np<-np compatible
        ((path(2, ("s",), "Eavesdropper"), path(1, (), "int32")), AddTaint),        # np<-p
        ((path(RETURN_SLOT, (), "int32"), path(0, ("s",), "Data")), GetTaintAssign),  # p<-np
        ((path(RETURN_SLOT, (), "int32"), path(1, (), "int32")), AssignFlow),       # p<-p
    ]
    for edge, expected_op in cases:
        stub = synthesize(sig, rel_of("f", edge), reg)
        assert len(stub.ops) == 1 and isinstance(stub.ops[0], expected_op)


def test_synthesize_never_drops_edges(reg):
    sig = FunctionSig("f", True, None, (reg.get("Data"), INT32, reg.get("Eavesdropper")), INT32)
    rel = rel_of("f",
                 (path(2, ("s",), "Eavesdropper"), path(0, ("s",), "Data")),
                 (path(2, ("s",), "Eavesdropper"), path(1, (), "int32")),
                 (path(RETURN_SLOT, (), "int32"), path(0, ("s",), "Data")),
                 (path(RETURN_SLOT, (), "int32"), path(1, (), "int32")))
    stub = synthesize(sig, rel, reg)
    assert len(stub.ops) == 4


# --- degenerate markers ----------------------------------------------------------

def test_taint_gen_marker_produces_source_stub(reg):
    sig = FunctionSig("counter", True, None, (), Primitive("int64"))
    rel = DependencyRelation("counter", marker=MARK_TAINT_GEN)
    stub = synthesize(sig, rel, reg)
    assert stub.kind == KIND_TAINT_SOURCE
    assert stub.ops == [TaintGen(path(RETURN_SLOT, (), "int64"), "counter")]


def test_empty_marker_produces_empty_stub(reg):
    sig = FunctionSig("mark", True, None, (INT32, INT32), None)
    stub = synthesize(sig, DependencyRelation("mark", marker=MARK_EMPTY_STUB), reg)
    assert stub.kind == KIND_EMPTY and stub.ops == []


def test_relabel_rewrites_taint_gen(reg):
    sig = FunctionSig("counter", True, None, (), Primitive("int64"))
    stub = synthesize(sig, DependencyRelation("counter", marker=MARK_TAINT_GEN), reg)
    assert stub.relabel("com.ex.count.Main.next").ops[0].label == "com.ex.count.Main.next"


# --- proxy source stubs ------------------------------------------------------------

def test_proxy_taints_compatible_return_field_only(reg):
    sig = FunctionSig("getId", True, None, (), reg.get("ImeiBox"))
    stub = proxy_source_stub(sig, ["string"], reg, label="com.x.A.getId")
    assert stub.kind == KIND_TAINT_SOURCE
    assert stub.ops == [TaintGen(path(RETURN_SLOT, ("imei",), "ImeiBox"), "com.x.A.getId")]


def test_proxy_taints_out_argument_field(reg):
    sig = FunctionSig("fill", True, None, (reg.get("IntBox"),), None)
    stub = proxy_source_stub(sig, ["int32"], reg, label="fill")
    assert stub.ops == [TaintGen(path(0, ("x",), "IntBox"), "fill")]


def test_proxy_with_no_compatible_field_warns(reg, caplog):
    sig = FunctionSig("f", True, None, (INT32,), None)
    with caplog.at_level(logging.WARNING):
        stub = proxy_source_stub(sig, ["string"], reg, label="f")
    assert stub.kind == KIND_EMPTY and stub.ops == []
    assert any("no field compatible" in r.message for r in caplog.records)


def test_proxy_whole_string_return(reg):
    sig = FunctionSig("fetch", True, None, (INT32,), S)
    stub = proxy_source_stub(sig, ["string"], reg, label="com.x.A.fetch")
    assert stub.ops == [TaintGen(path(RETURN_SLOT, (), "string"), "com.x.A.fetch")]


def test_proxy_multiple_source_types_union(reg):
    sig = FunctionSig("f", True, None, (reg.get("ImeiBox"), reg.get("IntBox")), None)
    stub = proxy_source_stub(sig, ["string", "int32"], reg, label="f")
    assert {(op.out.slot, op.out.chain) for op in stub.ops} == {(0, ("imei",)), (1, ("x",))}


# --- emission -----------------------------------------------------------------------

def test_emit_parse_roundtrip(reg):
    sig1 = FunctionSig("f", True, None, (INT32, INT32), INT32)
    sig2 = FunctionSig("counter", True, None, (), Primitive("int64"))
    sig3 = FunctionSig("getId", True, None, (), reg.get("ImeiBox"))
    stubs = [
        synthesize(sig1, rel_of("f", (path(RETURN_SLOT, (), "int32"), path(1, (), "int32"))), reg),
        synthesize(sig2, DependencyRelation("counter", marker=MARK_TAINT_GEN), reg),
        proxy_source_stub(sig3, ["string"], reg, label="com.x.A.getId"),
    ]
    for stub in stubs:
        assert parse(emit(stub)) == stub


def test_emission_is_order_stable(reg):
    sig = FunctionSig("f", True, None, (reg.get("Data"), reg.get("Eavesdropper"), BOOL), None)
    ev_s = path(1, ("s",), "Eavesdropper")
    rel_a = rel_of("f", (ev_s, path(0, ("s",), "Data")), (ev_s, path(2, (), "bool")))
    rel_b = rel_of("f", (ev_s, path(2, (), "bool")), (ev_s, path(0, ("s",), "Data")))
    assert emit(synthesize(sig, rel_a, reg)) == emit(synthesize(sig, rel_b, reg))


def test_path_type_error_on_bogus_chain(reg):
    sig = FunctionSig("f", True, None, (reg.get("Data"),), None)
    rel = rel_of("f", (path(0, ("nope",), "Data"), path(0, ("s",), "Data")))
    with pytest.raises(PathTypeError):
        synthesize(sig, rel, reg)


def test_merge_combines_dep_and_proxy(reg):
    sig = FunctionSig("refresh", True, None, (reg.get("ImeiBox"),), None)
    dep_stub = synthesize(sig, DependencyRelation("refresh"), reg)
    proxy = proxy_source_stub(sig, ["string"], reg, label="com.x.A.refresh")
    merged = stubgen.merge(dep_stub, proxy)
    assert merged.kind == KIND_TAINT_SOURCE
    assert merged.ops == proxy.ops
