#!/usr/bin/env python3
"""Materialize the corpus data tree (manifest, source/sink list, benchmark
apps with native images and ground truths, dependency sidecar, goldens).

Run from the repository root:  python3 corpus/tools/build_data.py
The output under corpus/data/ is committed; rerunning must be a no-op diff.
"""

from __future__ import annotations

import json
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "..", "src"))

from mudep import refcorpus  # noqa: E402

DATA = os.path.normpath(os.path.join(os.path.dirname(__file__), "..", "data"))

GET_DEVICE_ID = "android.telephony.TelephonyManager.getDeviceId"
LOG_V = "android.util.Log.v"
SEND_TEXT = "android.telephony.SmsManager.sendTextMessage"
LOG_NATIVE = "__android_log_print"
SEND_RAW = "__send_raw"


# --- little JSON builders ----------------------------------------------------

def P(kind):
    return {"kind": "primitive", "prim": kind}


def T(name):
    return {"kind": "record", "name": name}


S = {"kind": "string"}


def ARR(elem):
    return {"kind": "array", "elem": elem}


def rec(name, **fields):
    return {"kind": "record", "name": name,
            "fields": [{"name": f, "type": t} for f, t in fields.items()]}


def fn(name, params, returns=None, static=True, receiver=None):
    d = {"name": name, "static": static, "params": params, "returns": returns}
    if receiver:
        d["receiver"] = receiver
    return d


# statements
def src(dst, source=GET_DEVICE_ID):
    return {"op": "call_source", "dst": dst, "source": source}


def snk(sink, *args):
    return {"op": "call_sink", "sink": sink, "args": list(args)}


def new(dst, tname):
    return {"op": "new", "dst": dst, "type": tname}


def newarr(dst):
    return {"op": "new_array", "dst": dst}


def arrput(arr, value):
    return {"op": "array_put", "obj": arr, "src": value}


def sto(obj, fld, value):
    return {"op": "store", "obj": obj, "field": fld, "src": value}


def lod(dst, obj, fld):
    return {"op": "load", "dst": dst, "obj": obj, "field": fld}


def cstr(dst, value=""):
    return {"op": "const_str", "dst": dst, "value": value}


def cprim(dst, value, prim="int32"):
    return {"op": "const", "dst": dst, "value": value, "type": prim}


def callj(dst, method, *args):
    return {"op": "call", "dst": dst, "method": method, "args": list(args)}


def calln(dst, method, *args):
    return {"op": "call_native", "dst": dst, "method": method, "args": list(args)}


def ret(value=None):
    return {"op": "return", "src": value}


def method(name, body, params=(), returns=None):
    return {"name": name, "params": [{"name": n, "type": t} for n, t in params],
            "returns": returns, "body": body}


# native image pieces
def ifn(name, callsites=(), blocks=None):
    if blocks is None:
        blocks = [{"id": "b0", "callsites": [dict(c) for c in callsites], "succ": []}]
    return {"name": name, "entry": "b0", "blocks": blocks}


def jcall(target):
    return {"kind": "java_call", "target": target}


def ncall(target):
    return {"kind": "native_lib_call", "target": target}


def lcall(target):
    return {"kind": "local_call", "target": target}


def image(functions, exports=(), registration=()):
    return {"functions": functions, "exports": list(exports), "registration": list(registration)}


# --- shared registry + manifest ----------------------------------------------

TYPES = [
    rec("Data", s=S),
    rec("Eavesdropper", s=S),
    rec("Holder", v=S),
    rec("Pair", a=S, b=S),
    rec("Complex", secret=S, plain=S),
    rec("Acc", buf=S),
    rec("Circle", r=P("float64")),
    rec("Square", w=P("float64")),
    {"kind": "abstract", "name": "Shape", "subtypes": ["Circle", "Square"]},
]

FUNCTIONS = [
    fn("id_int32", [P("int32")], P("int32")),
    fn("noop_data", [T("Data")]),
    fn("sum_pair", [P("int32"), P("int32")], P("int32")),
    fn("len_of", [T("Data")], P("int32")),
    fn("abstract_area", [{"kind": "abstract", "name": "Shape"}], P("float64")),
    fn("recv_store", [S], None, static=False, receiver="Acc"),
    fn("zero_arg_counter", [], P("int64")),
    fn("prim_void_pair", [P("int32"), P("int32")]),
    fn("nondet_counter", [P("int32")], P("int64")),
    fn("crash_now", [P("int32")], P("int32")),
    fn("hang_forever", [P("int32")], P("int32")),
    fn("Java_com_ex_fig1_MainActivity_propagateData", [T("Data"), T("Eavesdropper"), P("bool")]),
    fn("Java_com_ex_source_Main_getSecret", [P("int32")], S),
    fn("Java_com_ex_nosource_Main_fetch", [P("int32")], S),
    fn("Java_com_ex_srcclean_Main_cleanFetch", [P("int32")], S),
    fn("Java_com_ex_leak_Main_send", [S]),
    fn("Java_com_ex_leakarr_Main_sendArray", [ARR(S)]),
    fn("dynreg_send_impl", [S]),
    fn("dynreg_multi_send_impl", [S]),
    fn("dynreg_multi_fmt_impl", [P("int32")], P("int32")),
    fn("Java_com_ex_noleak_Main_process", [T("Data"), T("Eavesdropper")]),
    fn("Java_com_ex_noleakarr_Main_pick", [S, ARR(S)], S),
    fn("over_process_str_impl", [S], S),
    fn("over_process_int_impl", [P("int32")], P("int32")),
    fn("Java_com_ex_multi_Main_store", [T("Holder"), S]),
    fn("Java_com_ex_multi_Main_send", [S]),
    fn("Java_com_ex_mlib_Main_transform", [T("Data")], S),
    fn("Java_com_ex_mlib_Main_send", [S]),
    fn("Java_com_ex_complex_Main_leak", [T("Complex")]),
    fn("Java_com_ex_complex_Main_check", [T("Complex")]),
    fn("Java_com_ex_stringop_Main_mask", [T("Data")], S),
    fn("Java_com_ex_heap_Main_refresh", [T("Holder")]),
    fn("Java_com_ex_setnative_Main_fill", [T("Pair")]),
    fn("Java_com_ex_setarg_Main_set", [T("Holder"), S]),
    fn("Java_com_ex_setargfield_Main_copy", [T("Holder"), T("Data")]),
    fn("Java_com_ex_iccj2n_Main_deliver", [S]),
    fn("Java_com_ex_iccn2j_Main_fetch", [P("int32")], S),
    fn("fold_sink_impl", [S]),
    fn("fold_helper_impl", [S]),
    fn("fwd_src_impl", [P("int32")], S),
    fn("fwd_pull_impl", [P("int32")], S),
]

SS_BASE = {
    "sources": [
        {"method": GET_DEVICE_ID, "return": "string"},
        {"method": "__read_serial", "return": "string"},
    ],
    "sinks": [
        {"method": LOG_V},
        {"method": SEND_TEXT},
        {"method": LOG_NATIVE},
        {"method": SEND_RAW},
    ],
}


# --- benchmark apps ------------------------------------------------------------

def app_doc(natives, methods, entries, types=()):
    # App files are self-contained: they restate the shared record types so
    # `analyze` can run from the app document alone.
    return {"types": TYPES + list(types), "natives": natives, "methods": methods,
            "entries": entries}


def truth(*pairs):
    return {"flows": [{"source": a, "sink": b} for a, b in pairs]}


def build_apps():
    apps = {}

    apps["native_source"] = (
        app_doc([{"method": "com.ex.source.Main.getSecret", "impl": "Java_com_ex_source_Main_getSecret"}],
                [method("com.ex.source.Main.run",
                        [cprim("c0", 0), calln("s", "com.ex.source.Main.getSecret", "c0"), snk(LOG_V, "s")])],
                ["com.ex.source.Main.run"]),
        [image([ifn("Java_com_ex_source_Main_getSecret", [jcall(GET_DEVICE_ID)])],
               exports=["Java_com_ex_source_Main_getSecret"])],
        truth(("com.ex.source.Main.getSecret", LOG_V)),
        {"tp": 1, "fp": 0, "fn": 0},
    )

    apps["native_nosource"] = (
        app_doc([{"method": "com.ex.nosource.Main.fetch", "impl": "Java_com_ex_nosource_Main_fetch"}],
                [method("com.ex.nosource.Main.run",
                        [cprim("c0", 0), calln("s", "com.ex.nosource.Main.fetch", "c0"), snk(LOG_V, "s")])],
                ["com.ex.nosource.Main.run"]),
        [image([ifn("Java_com_ex_nosource_Main_fetch", [jcall("com.helper.Util.format")])],
               exports=["Java_com_ex_nosource_Main_fetch"])],
        truth(),
        {"tp": 0, "fp": 0, "fn": 0},
    )

    apps["native_source_clean"] = (
        app_doc([{"method": "com.ex.srcclean.Main.cleanFetch", "impl": "Java_com_ex_srcclean_Main_cleanFetch"}],
                [method("com.ex.srcclean.Main.run",
                        [cprim("c0", 0), calln("s", "com.ex.srcclean.Main.cleanFetch", "c0"),
                         cstr("t", "static-info"), snk(LOG_V, "t")])],
                ["com.ex.srcclean.Main.run"]),
        [image([ifn("Java_com_ex_srcclean_Main_cleanFetch", [jcall(GET_DEVICE_ID)])],
               exports=["Java_com_ex_srcclean_Main_cleanFetch"])],
        truth(),
        {"tp": 0, "fp": 0, "fn": 0},
    )

    apps["native_leak"] = (
        app_doc([{"method": "com.ex.leak.Main.send", "impl": "Java_com_ex_leak_Main_send"}],
                [method("com.ex.leak.Main.run",
                        [src("imei"), calln(None, "com.ex.leak.Main.send", "imei")])],
                ["com.ex.leak.Main.run"]),
        [image([ifn("Java_com_ex_leak_Main_send", [ncall(LOG_NATIVE)])],
               exports=["Java_com_ex_leak_Main_send"])],
        truth((GET_DEVICE_ID, "com.ex.leak.Main.send")),
        {"tp": 1, "fp": 0, "fn": 0},
    )

    apps["native_leak_array"] = (
        app_doc([{"method": "com.ex.leakarr.Main.sendArray", "impl": "Java_com_ex_leakarr_Main_sendArray"}],
                [method("com.ex.leakarr.Main.run",
                        [src("imei"), newarr("arr"), arrput("arr", "imei"),
                         calln(None, "com.ex.leakarr.Main.sendArray", "arr")])],
                ["com.ex.leakarr.Main.run"]),
        [image([ifn("Java_com_ex_leakarr_Main_sendArray", [ncall(LOG_NATIVE)])],
               exports=["Java_com_ex_leakarr_Main_sendArray"])],
        truth((GET_DEVICE_ID, "com.ex.leakarr.Main.sendArray")),
        {"tp": 1, "fp": 0, "fn": 0},
    )

    apps["native_leak_dynamic_register"] = (
        app_doc([{"method": "com.ex.dynreg.Main.send", "impl": "dynreg_send_impl"}],
                [method("com.ex.dynreg.Main.run",
                        [src("imei"), calln(None, "com.ex.dynreg.Main.send", "imei")])],
                ["com.ex.dynreg.Main.run"]),
        [image([ifn("dynreg_send_impl", [ncall(LOG_NATIVE)])],
               registration=[{"entry": "dynreg_send_impl", "java_name": "com.ex.dynreg.Main.send"}])],
        truth((GET_DEVICE_ID, "com.ex.dynreg.Main.send")),
        {"tp": 1, "fp": 0, "fn": 0},
    )

    apps["native_dynamic_register_multiple"] = (
        app_doc([{"method": "com.ex.dynmulti.Main.send", "impl": "dynreg_multi_send_impl"},
                 {"method": "com.ex.dynmulti.Main.fmt", "impl": "dynreg_multi_fmt_impl"}],
                [method("com.ex.dynmulti.Main.run",
                        [src("imei"), cprim("x", 7), calln("y", "com.ex.dynmulti.Main.fmt", "x"),
                         snk(LOG_V, "y"), calln(None, "com.ex.dynmulti.Main.send", "imei")])],
                ["com.ex.dynmulti.Main.run"]),
        [image([ifn("dynreg_multi_send_impl", [ncall(LOG_NATIVE)]),
                ifn("dynreg_multi_fmt_impl", [])],
               registration=[{"entry": "dynreg_multi_send_impl", "java_name": "com.ex.dynmulti.Main.send"},
                             {"entry": "dynreg_multi_fmt_impl", "java_name": "com.ex.dynmulti.Main.fmt"}])],
        truth((GET_DEVICE_ID, "com.ex.dynmulti.Main.send")),
        {"tp": 1, "fp": 0, "fn": 0},
    )

    apps["native_noleak"] = (
        app_doc([{"method": "com.ex.noleak.Main.process", "impl": "Java_com_ex_noleak_Main_process"}],
                [method("com.ex.noleak.Main.run",
                        [src("imei"), new("d", "Data"), sto("d", "s", "imei"),
                         new("ev", "Eavesdropper"), cstr("e0"), sto("ev", "s", "e0"),
                         calln(None, "com.ex.noleak.Main.process", "d", "ev"),
                         lod("s2", "ev", "s"), snk(LOG_V, "s2")])],
                ["com.ex.noleak.Main.run"]),
        [image([ifn("Java_com_ex_noleak_Main_process", [])],
               exports=["Java_com_ex_noleak_Main_process"])],
        truth(),
        {"tp": 0, "fp": 0, "fn": 0},
    )

    apps["native_noleak_array"] = (
        app_doc([{"method": "com.ex.noleakarr.Main.pick", "impl": "Java_com_ex_noleakarr_Main_pick"}],
                [method("com.ex.noleakarr.Main.run",
                        [src("imei"), newarr("arr"), cstr("c", "clean"), arrput("arr", "c"),
                         calln("r", "com.ex.noleakarr.Main.pick", "imei", "arr"), snk(LOG_V, "r")])],
                ["com.ex.noleakarr.Main.run"]),
        [image([ifn("Java_com_ex_noleakarr_Main_pick", [])],
               exports=["Java_com_ex_noleakarr_Main_pick"])],
        truth(),
        {"tp": 0, "fp": 0, "fn": 0},
    )

    apps["native_method_overloading"] = (
        app_doc([{"method": "com.ex.over.Main.process(string)", "impl": "over_process_str_impl"},
                 {"method": "com.ex.over.Main.process(int32)", "impl": "over_process_int_impl"}],
                [method("com.ex.over.Main.run",
                        [src("imei"), calln("r", "com.ex.over.Main.process(string)", "imei"),
                         snk(LOG_V, "r"), cprim("x", 5),
                         calln("y", "com.ex.over.Main.process(int32)", "x"), snk(LOG_V, "y")])],
                ["com.ex.over.Main.run"]),
        [image([ifn("over_process_str_impl", []), ifn("over_process_int_impl", [])],
               registration=[{"entry": "over_process_str_impl", "java_name": "com.ex.over.Main.process",
                              "java_sig": "(string)"},
                             {"entry": "over_process_int_impl", "java_name": "com.ex.over.Main.process",
                              "java_sig": "(int32)"}])],
        truth((GET_DEVICE_ID, LOG_V)),
        {"tp": 1, "fp": 0, "fn": 0},
    )

    apps["native_multiple_interactions"] = (
        app_doc([{"method": "com.ex.multi.Main.store", "impl": "Java_com_ex_multi_Main_store"},
                 {"method": "com.ex.multi.Main.send", "impl": "Java_com_ex_multi_Main_send"}],
                [method("com.ex.multi.Main.run",
                        [src("imei"), new("h", "Holder"), cstr("e0"), sto("h", "v", "e0"),
                         calln(None, "com.ex.multi.Main.store", "h", "imei"),
                         lod("x", "h", "v"), calln(None, "com.ex.multi.Main.send", "x")])],
                ["com.ex.multi.Main.run"]),
        [image([ifn("Java_com_ex_multi_Main_store", []),
                ifn("Java_com_ex_multi_Main_send", [ncall(LOG_NATIVE)])],
               exports=["Java_com_ex_multi_Main_store", "Java_com_ex_multi_Main_send"])],
        truth((GET_DEVICE_ID, "com.ex.multi.Main.send")),
        {"tp": 1, "fp": 0, "fn": 0},
    )

    apps["native_multiple_libraries"] = (
        app_doc([{"method": "com.ex.mlib.Main.transform", "impl": "Java_com_ex_mlib_Main_transform"},
                 {"method": "com.ex.mlib.Main.send", "impl": "Java_com_ex_mlib_Main_send"}],
                [method("com.ex.mlib.Main.run",
                        [src("imei"), new("d", "Data"), sto("d", "s", "imei"),
                         calln("t", "com.ex.mlib.Main.transform", "d"),
                         calln(None, "com.ex.mlib.Main.send", "t")])],
                ["com.ex.mlib.Main.run"]),
        [image([ifn("Java_com_ex_mlib_Main_transform", [])],
               exports=["Java_com_ex_mlib_Main_transform"]),
         image([ifn("Java_com_ex_mlib_Main_send", [ncall(LOG_NATIVE)])],
               exports=["Java_com_ex_mlib_Main_send"])],
        truth((GET_DEVICE_ID, "com.ex.mlib.Main.send")),
        {"tp": 1, "fp": 0, "fn": 0},
    )

    apps["native_complexdata"] = (
        app_doc([{"method": "com.ex.complex.Main.leak", "impl": "Java_com_ex_complex_Main_leak"},
                 {"method": "com.ex.complex.Main.check", "impl": "Java_com_ex_complex_Main_check"}],
                [method("com.ex.complex.Main.run",
                        [src("imei"), new("c", "Complex"), sto("c", "secret", "imei"),
                         cstr("p", "meta"), sto("c", "plain", "p"),
                         calln(None, "com.ex.complex.Main.leak", "c"),
                         calln(None, "com.ex.complex.Main.check", "c")])],
                ["com.ex.complex.Main.run"]),
        [image([ifn("Java_com_ex_complex_Main_leak", [ncall(LOG_NATIVE)]),
                ifn("Java_com_ex_complex_Main_check", [ncall(LOG_NATIVE)])],
               exports=["Java_com_ex_complex_Main_leak", "Java_com_ex_complex_Main_check"])],
        truth((GET_DEVICE_ID, "com.ex.complex.Main.leak")),
        {"tp": 1, "fp": 1, "fn": 0},  # conservative sink proxying flags check too
    )

    apps["native_complexdata_stringop"] = (
        app_doc([{"method": "com.ex.stringop.Main.mask", "impl": "Java_com_ex_stringop_Main_mask"}],
                [method("com.ex.stringop.Main.run",
                        [src("imei"), new("d", "Data"), sto("d", "s", "imei"),
                         calln("r", "com.ex.stringop.Main.mask", "d"), snk(LOG_V, "r")])],
                ["com.ex.stringop.Main.run"]),
        [image([ifn("Java_com_ex_stringop_Main_mask", [])],
               exports=["Java_com_ex_stringop_Main_mask"])],
        truth(),
        {"tp": 0, "fp": 0, "fn": 0},
    )

    apps["native_heap_modify"] = (
        app_doc([{"method": "com.ex.heap.Main.refresh", "impl": "Java_com_ex_heap_Main_refresh"}],
                [method("com.ex.heap.Main.run",
                        [new("h", "Holder"), cstr("e0"), sto("h", "v", "e0"),
                         calln(None, "com.ex.heap.Main.refresh", "h"),
                         lod("s", "h", "v"), snk(LOG_V, "s")])],
                ["com.ex.heap.Main.run"]),
        [image([ifn("Java_com_ex_heap_Main_refresh", [jcall(GET_DEVICE_ID)])],
               exports=["Java_com_ex_heap_Main_refresh"])],
        truth(("com.ex.heap.Main.refresh", LOG_V)),
        {"tp": 1, "fp": 0, "fn": 0},
    )

    apps["native_set_field_from_native"] = (
        app_doc([{"method": "com.ex.setnative.Main.fill", "impl": "Java_com_ex_setnative_Main_fill"}],
                [method("com.ex.setnative.Main.run",
                        [new("p", "Pair"), cstr("e0"), sto("p", "a", "e0"), sto("p", "b", "e0"),
                         calln(None, "com.ex.setnative.Main.fill", "p"),
                         lod("x", "p", "a"), snk(LOG_V, "x"),
                         lod("y", "p", "b"), snk(SEND_TEXT, "y")])],
                ["com.ex.setnative.Main.run"]),
        [image([ifn("Java_com_ex_setnative_Main_fill", [jcall(GET_DEVICE_ID)])],
               exports=["Java_com_ex_setnative_Main_fill"])],
        truth(("com.ex.setnative.Main.fill", LOG_V), ("com.ex.setnative.Main.fill", SEND_TEXT)),
        {"tp": 2, "fp": 0, "fn": 0},
    )

    apps["native_set_field_from_arg"] = (
        app_doc([{"method": "com.ex.setarg.Main.set", "impl": "Java_com_ex_setarg_Main_set"}],
                [method("com.ex.setarg.Main.run",
                        [src("imei"), new("h", "Holder"), cstr("e0"), sto("h", "v", "e0"),
                         calln(None, "com.ex.setarg.Main.set", "h", "imei"),
                         lod("x", "h", "v"), snk(LOG_V, "x"), snk(SEND_TEXT, "x")])],
                ["com.ex.setarg.Main.run"]),
        [image([ifn("Java_com_ex_setarg_Main_set", [])],
               exports=["Java_com_ex_setarg_Main_set"])],
        truth((GET_DEVICE_ID, LOG_V), (GET_DEVICE_ID, SEND_TEXT)),
        {"tp": 2, "fp": 0, "fn": 0},
    )

    apps["native_set_field_from_arg_field"] = (
        app_doc([{"method": "com.ex.setargfield.Main.copy", "impl": "Java_com_ex_setargfield_Main_copy"}],
                [method("com.ex.setargfield.Main.run",
                        [src("imei"), new("d", "Data"), sto("d", "s", "imei"),
                         new("h", "Holder"), cstr("e0"), sto("h", "v", "e0"),
                         calln(None, "com.ex.setargfield.Main.copy", "h", "d"),
                         lod("x", "h", "v"), snk(LOG_V, "x"), snk(SEND_TEXT, "x")])],
                ["com.ex.setargfield.Main.run"]),
        [image([ifn("Java_com_ex_setargfield_Main_copy", [])],
               exports=["Java_com_ex_setargfield_Main_copy"])],
        truth((GET_DEVICE_ID, LOG_V), (GET_DEVICE_ID, SEND_TEXT)),
        {"tp": 2, "fp": 0, "fn": 0},
    )

    apps["icc_javatonative"] = (
        app_doc([{"method": "com.ex.iccj2n.Main.deliver", "impl": "Java_com_ex_iccj2n_Main_deliver"}],
                [method("com.ex.iccj2n.A.run",
                        [src("imei"), callj(None, "com.ex.iccj2n.B.handle", "imei")]),
                 method("com.ex.iccj2n.B.handle",
                        [calln(None, "com.ex.iccj2n.Main.deliver", "msg")],
                        params=[("msg", S)])],
                ["com.ex.iccj2n.A.run"]),
        [image([ifn("Java_com_ex_iccj2n_Main_deliver", [ncall(LOG_NATIVE)])],
               exports=["Java_com_ex_iccj2n_Main_deliver"])],
        truth((GET_DEVICE_ID, "com.ex.iccj2n.Main.deliver")),
        {"tp": 1, "fp": 0, "fn": 0},
    )

    apps["icc_nativetojava"] = (
        app_doc([{"method": "com.ex.iccn2j.Main.fetch", "impl": "Java_com_ex_iccn2j_Main_fetch"}],
                [method("com.ex.iccn2j.A.run",
                        [cprim("c0", 0), calln("y", "com.ex.iccn2j.Main.fetch", "c0"),
                         callj(None, "com.ex.iccn2j.B.show", "y")]),
                 method("com.ex.iccn2j.B.show", [snk(LOG_V, "v")], params=[("v", S)])],
                ["com.ex.iccn2j.A.run"]),
        [image([ifn("Java_com_ex_iccn2j_Main_fetch", [jcall(GET_DEVICE_ID)])],
               exports=["Java_com_ex_iccn2j_Main_fetch"])],
        truth(("com.ex.iccn2j.Main.fetch", LOG_V)),
        {"tp": 1, "fp": 0, "fn": 0},
    )

    apps["example_fig1"] = (
        app_doc([{"method": "com.ex.fig1.MainActivity.propagateData",
                  "impl": "Java_com_ex_fig1_MainActivity_propagateData"}],
                [method("com.ex.fig1.MainActivity.onItemSelected",
                        [src("imei"), new("d", "Data"), sto("d", "s", "imei"),
                         new("ev", "Eavesdropper"), cstr("e0"), sto("ev", "s", "e0"),
                         cprim("choice", False, "bool"),
                         calln(None, "com.ex.fig1.MainActivity.propagateData", "d", "ev", "choice"),
                         lod("s2", "ev", "s"),
                         callj(None, "com.ex.fig1.MainActivity.vulnerableMethod", "s2"),
                         snk(LOG_V, "imei")],
                        params=[("this", T("MainActivity"))]),
                 method("com.ex.fig1.MainActivity.vulnerableMethod",
                        [snk(SEND_TEXT, "s")], params=[("s", S)])],
                ["com.ex.fig1.MainActivity.onItemSelected"],
                types=[rec("MainActivity")]),
        [image([ifn("Java_com_ex_fig1_MainActivity_propagateData", blocks=[
                    {"id": "b0", "callsites": [], "succ": ["b1", "b2"]},
                    {"id": "b1", "callsites": [], "succ": []},
                    {"id": "b2", "callsites": [], "succ": []}])],
               exports=["Java_com_ex_fig1_MainActivity_propagateData"])],
        truth((GET_DEVICE_ID, LOG_V), (GET_DEVICE_ID, SEND_TEXT)),
        {"tp": 2, "fp": 0, "fn": 0},
    )

    return apps


def build_scenarios():
    """Fold-refinement scenarios (not benchmark rows)."""
    scenarios = {}

    scenarios["fold_backward"] = (
        app_doc([{"method": "com.ex.fold.Conn.push", "impl": "fold_sink_impl"},
                 {"method": "com.ex.fold.Conn.helperNative", "impl": "fold_helper_impl"}],
                [method("com.ex.fold.Main.run",
                        [cstr("x0", "payload"), callj("x", "com.ex.fold.Conn.encode", "x0"),
                         calln(None, "com.ex.fold.Conn.push", "x")]),
                 method("com.ex.fold.Conn.encode", [ret("s")], params=[("s", S)], returns=S)],
                ["com.ex.fold.Main.run"]),
        [image([ifn("fold_sink_impl", [ncall(SEND_RAW)]),
                ifn("fold_helper_impl", [jcall("com.ex.fold.Conn.encode")])],
               registration=[{"entry": "fold_sink_impl", "java_name": "com.ex.fold.Conn.push"},
                             {"entry": "fold_helper_impl", "java_name": "com.ex.fold.Conn.helperNative"}])],
        truth(),
        None,
    )

    scenarios["fold_forward"] = (
        app_doc([{"method": "com.ex.fwd.Api.fetch", "impl": "fwd_src_impl"},
                 {"method": "com.ex.fwd.Api.pull", "impl": "fwd_pull_impl"}],
                [method("com.ex.fwd.Main.run",
                        [cprim("c0", 0), calln("y", "com.ex.fwd.Api.fetch", "c0"),
                         callj(None, "com.ex.fwd.Api.wrap", "y")]),
                 method("com.ex.fwd.Api.wrap", [ret("v")], params=[("v", S)], returns=S)],
                ["com.ex.fwd.Main.run"]),
        [image([ifn("fwd_src_impl", [jcall(GET_DEVICE_ID)]),
                ifn("fwd_pull_impl", [jcall("com.ex.fwd.Api.wrap")])],
               registration=[{"entry": "fwd_src_impl", "java_name": "com.ex.fwd.Api.fetch"},
                             {"entry": "fwd_pull_impl", "java_name": "com.ex.fwd.Api.pull"}])],
        truth(),
        None,
    )

    scenarios["special_natives"] = (
        app_doc([{"method": "com.ex.count.Main.next", "impl": "zero_arg_counter"},
                 {"method": "com.ex.pvoid.Main.mark", "impl": "prim_void_pair"}],
                [method("com.ex.special.Main.run",
                        [calln("y", "com.ex.count.Main.next"), snk(LOG_V, "y"),
                         cprim("a", 1), cprim("b", 2),
                         calln(None, "com.ex.pvoid.Main.mark", "a", "b")])],
                ["com.ex.special.Main.run"]),
        [image([ifn("zero_arg_counter", []), ifn("prim_void_pair", [])],
               registration=[{"entry": "zero_arg_counter", "java_name": "com.ex.count.Main.next"},
                             {"entry": "prim_void_pair", "java_name": "com.ex.pvoid.Main.mark"}])],
        truth(("com.ex.count.Main.next", LOG_V)),
        None,
    )

    return scenarios


# --- sidecar: ground-truth dependency edges used as oracle -------------------

def dep(out_slot, out_chain, in_slot, in_chain):
    return {"out": {"slot": out_slot, "chain": list(out_chain)},
            "in": {"slot": in_slot, "chain": list(in_chain)}}


SIDECAR = [
    {"function": "id_int32", "behavior": "identity", "deterministic": True,
     "deps": [dep("return", (), 0, ())]},
    {"function": "noop_data", "behavior": "no-leak", "deterministic": True, "deps": []},
    {"function": "sum_pair", "behavior": "multi-primitive-input", "deterministic": True,
     "deps": [dep("return", (), 0, ()), dep("return", (), 1, ())]},
    {"function": "len_of", "behavior": "field-to-primitive", "deterministic": True,
     "deps": [dep("return", (), 0, ("s",))]},
    {"function": "abstract_area", "behavior": "subtype-dispatch", "deterministic": True,
     "deps": [dep("return", (), 0, ("r",)), dep("return", (), 0, ("w",))]},
    {"function": "recv_store", "behavior": "receiver-field-propagation", "deterministic": True,
     "deps": [dep(0, ("buf",), 1, ())]},
    {"function": "zero_arg_counter", "behavior": "zero-arg-static", "deterministic": False,
     "marker": "taint_gen", "deps": []},
    {"function": "prim_void_pair", "behavior": "pure-void", "deterministic": True,
     "marker": "empty_stub", "deps": []},
    {"function": "nondet_counter", "behavior": "nondeterministic", "deterministic": False, "deps": []},
    {"function": "crash_now", "behavior": "crash", "deterministic": False, "deps": []},
    {"function": "hang_forever", "behavior": "hang", "deterministic": False, "deps": []},
    {"function": "Java_com_ex_fig1_MainActivity_propagateData", "behavior": "conditional-propagation",
     "deterministic": True,
     "deps": [dep(1, ("s",), 0, ("s",)), dep(1, ("s",), 2, ())]},
    {"function": "Java_com_ex_source_Main_getSecret", "behavior": "constant-return",
     "deterministic": True, "deps": []},
    {"function": "Java_com_ex_nosource_Main_fetch", "behavior": "constant-return",
     "deterministic": True, "deps": []},
    {"function": "Java_com_ex_srcclean_Main_cleanFetch", "behavior": "constant-return",
     "deterministic": True, "deps": []},
    {"function": "Java_com_ex_leak_Main_send", "behavior": "direct-leak", "deterministic": True, "deps": []},
    {"function": "Java_com_ex_leakarr_Main_sendArray", "behavior": "direct-leak-array",
     "deterministic": True, "deps": []},
    {"function": "dynreg_send_impl", "behavior": "direct-leak", "deterministic": True, "deps": []},
    {"function": "dynreg_multi_send_impl", "behavior": "direct-leak", "deterministic": True, "deps": []},
    {"function": "dynreg_multi_fmt_impl", "behavior": "identity", "deterministic": True,
     "deps": [dep("return", (), 0, ())]},
    {"function": "Java_com_ex_noleak_Main_process", "behavior": "no-leak", "deterministic": True, "deps": []},
    {"function": "Java_com_ex_noleakarr_Main_pick", "behavior": "no-leak-array", "deterministic": True,
     "deps": [dep("return", (), 1, ())]},
    {"function": "over_process_str_impl", "behavior": "identity", "deterministic": True,
     "deps": [dep("return", (), 0, ())]},
    {"function": "over_process_int_impl", "behavior": "identity", "deterministic": True,
     "deps": [dep("return", (), 0, ())]},
    {"function": "Java_com_ex_multi_Main_store", "behavior": "field-propagation", "deterministic": True,
     "deps": [dep(0, ("v",), 1, ())]},
    {"function": "Java_com_ex_multi_Main_send", "behavior": "direct-leak", "deterministic": True, "deps": []},
    {"function": "Java_com_ex_mlib_Main_transform", "behavior": "field-to-return", "deterministic": True,
     "deps": [dep("return", (), 0, ("s",))]},
    {"function": "Java_com_ex_mlib_Main_send", "behavior": "direct-leak", "deterministic": True, "deps": []},
    {"function": "Java_com_ex_complex_Main_leak", "behavior": "direct-leak", "deterministic": True, "deps": []},
    {"function": "Java_com_ex_complex_Main_check", "behavior": "no-leak", "deterministic": True, "deps": []},
    {"function": "Java_com_ex_stringop_Main_mask", "behavior": "constant-return",
     "deterministic": True, "deps": []},
    {"function": "Java_com_ex_heap_Main_refresh", "behavior": "heap-modify", "deterministic": True, "deps": []},
    {"function": "Java_com_ex_setnative_Main_fill", "behavior": "set-field-constant",
     "deterministic": True, "deps": []},
    {"function": "Java_com_ex_setarg_Main_set", "behavior": "field-propagation", "deterministic": True,
     "deps": [dep(0, ("v",), 1, ())]},
    {"function": "Java_com_ex_setargfield_Main_copy", "behavior": "field-to-field", "deterministic": True,
     "deps": [dep(0, ("v",), 1, ("s",))]},
    {"function": "Java_com_ex_iccj2n_Main_deliver", "behavior": "direct-leak", "deterministic": True, "deps": []},
    {"function": "Java_com_ex_iccn2j_Main_fetch", "behavior": "constant-return",
     "deterministic": True, "deps": []},
    {"function": "fold_sink_impl", "behavior": "direct-leak", "deterministic": True, "deps": []},
    {"function": "fold_helper_impl", "behavior": "no-leak", "deterministic": True, "deps": []},
    {"function": "fwd_src_impl", "behavior": "constant-return", "deterministic": True, "deps": []},
    {"function": "fwd_pull_impl", "behavior": "constant-return", "deterministic": True, "deps": []},
]


# --- golden request/response vectors ------------------------------------------

def v_str(s):
    return {"kind": "string", "value": s}


def v_i32(n):
    return {"kind": "int32", "value": n}


def v_bool(b):
    return {"kind": "bool", "value": b}


def v_f64(x):
    return {"kind": "float64", "value": float(x).hex()}


def v_data(s):
    return {"kind": "record", "type": "Data", "fields": {"s": v_str(s)}}


def v_ev(s):
    return {"kind": "record", "type": "Eavesdropper", "fields": {"s": v_str(s)}}


def v_arr_str(*items):
    return {"kind": "array", "elem_type": {"kind": "string"},
            "elems": [v_str(s) for s in items]}


GOLDEN_REQUESTS = [
    ("id_int32", [v_i32(5)]),
    ("id_int32", [v_i32(-2147483648)]),
    ("noop_data", [v_data("hello")]),
    ("sum_pair", [v_i32(2147483647), v_i32(1)]),
    ("sum_pair", [v_i32(20), v_i32(22)]),
    ("len_of", [v_data("abcd")]),
    ("abstract_area", [{"kind": "record", "type": "Circle", "fields": {"r": v_f64(2.5)}}]),
    ("abstract_area", [{"kind": "record", "type": "Square", "fields": {"w": v_f64(3.0)}}]),
    ("recv_store", [{"kind": "record", "type": "Acc", "fields": {"buf": v_str("old")}}, v_str("new")]),
    ("prim_void_pair", [v_i32(1), v_i32(2)]),
    ("Java_com_ex_fig1_MainActivity_propagateData", [v_data("IMEI-8674"), v_ev("idle"), v_bool(False)]),
    ("Java_com_ex_fig1_MainActivity_propagateData", [v_data("IMEI-8674"), v_ev("idle"), v_bool(True)]),
    ("Java_com_ex_source_Main_getSecret", [v_i32(0)]),
    ("Java_com_ex_nosource_Main_fetch", [v_i32(0)]),
    ("Java_com_ex_srcclean_Main_cleanFetch", [v_i32(0)]),
    ("Java_com_ex_leak_Main_send", [v_str("payload")]),
    ("Java_com_ex_leakarr_Main_sendArray", [v_arr_str("a", "b")]),
    ("dynreg_send_impl", [v_str("x")]),
    ("dynreg_multi_send_impl", [v_str("x")]),
    ("dynreg_multi_fmt_impl", [v_i32(41)]),
    ("Java_com_ex_noleak_Main_process", [v_data("secret"), v_ev("before")]),
    ("Java_com_ex_noleakarr_Main_pick", [v_str("secret"), v_arr_str("u", "v", "w")]),
    ("Java_com_ex_noleakarr_Main_pick", [v_str("secret"), v_arr_str()]),
    ("over_process_str_impl", [v_str("mirror")]),
    ("over_process_int_impl", [v_i32(9)]),
    ("Java_com_ex_multi_Main_store",
     [{"kind": "record", "type": "Holder", "fields": {"v": v_str("")}}, v_str("kept")]),
    ("Java_com_ex_multi_Main_send", [v_str("x")]),
    ("Java_com_ex_mlib_Main_transform", [v_data("pass-through")]),
    ("Java_com_ex_mlib_Main_send", [v_str("x")]),
    ("Java_com_ex_complex_Main_leak",
     [{"kind": "record", "type": "Complex", "fields": {"secret": v_str("s"), "plain": v_str("p")}}]),
    ("Java_com_ex_complex_Main_check",
     [{"kind": "record", "type": "Complex", "fields": {"secret": v_str("s"), "plain": v_str("p")}}]),
    ("Java_com_ex_stringop_Main_mask", [v_data("secret")]),
    ("Java_com_ex_heap_Main_refresh",
     [{"kind": "record", "type": "Holder", "fields": {"v": v_str("stale")}}]),
    ("Java_com_ex_setnative_Main_fill",
     [{"kind": "record", "type": "Pair", "fields": {"a": v_str(""), "b": v_str("")}}]),
    ("Java_com_ex_setarg_Main_set",
     [{"kind": "record", "type": "Holder", "fields": {"v": v_str("")}}, v_str("taken")]),
    ("Java_com_ex_setargfield_Main_copy",
     [{"kind": "record", "type": "Holder", "fields": {"v": v_str("")}}, v_data("moved")]),
    ("Java_com_ex_iccj2n_Main_deliver", [v_str("x")]),
    ("Java_com_ex_iccn2j_Main_fetch", [v_i32(0)]),
    ("fold_sink_impl", [v_str("x")]),
    ("fold_helper_impl", [v_str("x")]),
    ("fwd_src_impl", [v_i32(0)]),
    ("fwd_pull_impl", [v_i32(0)]),
]


def build_goldens():
    vectors = []
    for name, args in GOLDEN_REQUESTS:
        request = {"function": name, "args": args}
        response = refcorpus.dispatch(json.loads(json.dumps(request)))
        vectors.append({"request": request, "response": response})
    return {"vectors": vectors}


# --- write everything -----------------------------------------------------------

def write(path, doc):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")


def project_doc(name, n_images, seed):
    return {
        "name": name,
        "app": "app.json",
        "images": ["image.json"] if n_images == 1 else [f"image{i}.json" for i in range(n_images)],
        "manifest": "../../manifest.json",
        "ss": "../../ss_base.json",
        "truth": "truth.json",
        "backend": {"kind": "subprocess", "cmd": ["python3", "-m", "mudep.refcorpus"]},
        "out_dir": "out",
        "bound": 15,
        "depth": 5,
        "seed": seed,
        "max_folds": 2,
    }


def main():
    write(os.path.join(DATA, "manifest.json"), {"types": TYPES, "functions": FUNCTIONS})
    write(os.path.join(DATA, "ss_base.json"), SS_BASE)
    write(os.path.join(DATA, "sidecar.json"), {"entries": SIDECAR})
    write(os.path.join(DATA, "goldens.json"), build_goldens())

    expected = {}
    for i, (name, (app, images, truth_doc, outcome)) in enumerate(sorted(build_apps().items())):
        base = os.path.join(DATA, "apps", name)
        write(os.path.join(base, "app.json"), app)
        if len(images) == 1:
            write(os.path.join(base, "image.json"), images[0])
        else:
            for j, img in enumerate(images):
                write(os.path.join(base, f"image{j}.json"), img)
        write(os.path.join(base, "truth.json"), truth_doc)
        write(os.path.join(base, "project.json"), project_doc(name, len(images), seed=1000 + i))
        expected[name] = outcome
    write(os.path.join(DATA, "expected_outcomes.json"), expected)

    for i, (name, (app, images, truth_doc, _)) in enumerate(sorted(build_scenarios().items())):
        base = os.path.join(DATA, "scenarios", name)
        write(os.path.join(base, "app.json"), app)
        write(os.path.join(base, "image.json"), images[0])
        write(os.path.join(base, "truth.json"), truth_doc)
        write(os.path.join(base, "project.json"), project_doc(name, 1, seed=2000 + i))
    print(f"corpus data written under {DATA}")


if __name__ == "__main__":
    main()
