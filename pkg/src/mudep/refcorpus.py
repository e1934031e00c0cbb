"""Reference corpus backend: the benchmark functions served over the wire protocol.

Runs as ``python -m mudep.refcorpus`` and speaks length-prefixed JSON frames
on stdin/stdout.  Functions operate directly on the raw JSON value documents,
exactly like the compiled shim, so the two implementations stay
golden-comparable.  Behaviors cover direct leaks, field/array propagation,
conditional propagation, no-leak controls, nondeterminism, and crash/hang
entries.
"""

from __future__ import annotations

import copy
import json
import os
import struct
import sys
import time

_counter = 41  # process-local state for the nondeterministic entries


def _sfield(rec: dict, name: str) -> dict:
    return rec["fields"][name]


def _set_field(rec: dict, name: str, value: dict) -> None:
    rec["fields"][name] = copy.deepcopy(value)


def _str(v: str) -> dict:
    return {"kind": "string", "value": v}


def _i32(v: int) -> dict:
    return {"kind": "int32", "value": ((v + 2**31) % 2**32) - 2**31}


def _i64(v: int) -> dict:
    return {"kind": "int64", "value": str(((v + 2**63) % 2**64) - 2**63)}


def _f64(v: float) -> dict:
    return {"kind": "float64", "value": float(v).hex()}


# --- corpus functions -------------------------------------------------------
# Each takes the arg list (JSON value docs, already deep-copied) and returns
# (ret_doc_or_None, args_post).

def fn_id_int32(args):
    return copy.deepcopy(args[0]), args


def fn_noop_data(args):
    return None, args


def fn_sum_pair(args):
    return _i32(args[0]["value"] + args[1]["value"]), args


def fn_len_of(args):
    return _i32(len(_sfield(args[0], "s")["value"])), args


def fn_abstract_area(args):
    shape = args[0]
    if shape["kind"] == "null":
        return _f64(0.0), args
    if shape["type"] == "Circle":
        return _f64(float.fromhex(_sfield(shape, "r")["value"]) * 2.0), args
    return _f64(float.fromhex(_sfield(shape, "w")["value"]) * 3.0), args


def fn_recv_store(args):
    acc, s = args
    if acc["kind"] != "null":
        _set_field(acc, "buf", s)
    return None, args


def fn_zero_arg_counter(args):
    global _counter
    _counter += 1
    return _i64(_counter), args


def fn_prim_void_pair(args):
    return None, args


def fn_nondet_counter(args):
    global _counter
    _counter += 1
    return _i64(_counter), args


def fn_crash_now(args):
    sys.stdout.flush()
    os._exit(13)


def fn_hang_forever(args):
    while True:
        time.sleep(1)


def fn_fig1_propagate(args):
    data, ev, choice = args
    if not choice["value"] and data["kind"] != "null" and ev["kind"] != "null":
        _set_field(ev, "s", _sfield(data, "s"))
    return None, args


def fn_const_secret(args):
    return _str("secret-knowledge"), args


def fn_const_plain(args):
    return _str("plain-data"), args


def fn_void_noop(args):
    return None, args


def fn_noleak_process(args):
    data, ev = args
    if ev["kind"] != "null":
        _set_field(ev, "s", _str("benign"))
    return None, args


def fn_noleak_array_pick(args):
    s, arr = args
    elems = arr["elems"]
    return copy.deepcopy(elems[-1]) if elems else _str(""), args


def fn_over_process_str(args):
    return copy.deepcopy(args[0]), args


def fn_over_process_int(args):
    return copy.deepcopy(args[0]), args


def fn_dynreg_fmt(args):
    return _i32(args[0]["value"] + 1), args


def fn_store_holder(args):
    holder, s = args
    if holder["kind"] != "null":
        _set_field(holder, "v", s)
    return None, args


def fn_mlib_transform(args):
    data = args[0]
    if data["kind"] == "null":
        return _str(""), args
    return copy.deepcopy(_sfield(data, "s")), args


def fn_stringop_mask(args):
    return _str("****"), args


def fn_heap_refresh(args):
    holder = args[0]
    if holder["kind"] != "null":
        _set_field(holder, "v", _str("fetched-native"))
    return None, args


def fn_setnative_fill(args):
    pair = args[0]
    if pair["kind"] != "null":
        _set_field(pair, "a", _str("native-a"))
        _set_field(pair, "b", _str("native-b"))
    return None, args


def fn_copy_field(args):
    holder, data = args
    if holder["kind"] != "null" and data["kind"] != "null":
        _set_field(holder, "v", _sfield(data, "s"))
    return None, args


FUNCTIONS = {
    "id_int32": fn_id_int32,
    "noop_data": fn_noop_data,
    "sum_pair": fn_sum_pair,
    "len_of": fn_len_of,
    "abstract_area": fn_abstract_area,
    "recv_store": fn_recv_store,
    "zero_arg_counter": fn_zero_arg_counter,
    "prim_void_pair": fn_prim_void_pair,
    "nondet_counter": fn_nondet_counter,
    "crash_now": fn_crash_now,
    "hang_forever": fn_hang_forever,
    "Java_com_ex_fig1_MainActivity_propagateData": fn_fig1_propagate,
    "Java_com_ex_source_Main_getSecret": fn_const_secret,
    "Java_com_ex_nosource_Main_fetch": fn_const_plain,
    "Java_com_ex_srcclean_Main_cleanFetch": fn_const_secret,
    "Java_com_ex_leak_Main_send": fn_void_noop,
    "Java_com_ex_leakarr_Main_sendArray": fn_void_noop,
    "dynreg_send_impl": fn_void_noop,
    "dynreg_multi_send_impl": fn_void_noop,
    "dynreg_multi_fmt_impl": fn_dynreg_fmt,
    "Java_com_ex_noleak_Main_process": fn_noleak_process,
    "Java_com_ex_noleakarr_Main_pick": fn_noleak_array_pick,
    "over_process_str_impl": fn_over_process_str,
    "over_process_int_impl": fn_over_process_int,
    "Java_com_ex_multi_Main_store": fn_store_holder,
    "Java_com_ex_multi_Main_send": fn_void_noop,
    "Java_com_ex_mlib_Main_transform": fn_mlib_transform,
    "Java_com_ex_mlib_Main_send": fn_void_noop,
    "Java_com_ex_complex_Main_leak": fn_void_noop,
    "Java_com_ex_complex_Main_check": fn_void_noop,
    "Java_com_ex_stringop_Main_mask": fn_stringop_mask,
    "Java_com_ex_heap_Main_refresh": fn_heap_refresh,
    "Java_com_ex_setnative_Main_fill": fn_setnative_fill,
    "Java_com_ex_setarg_Main_set": fn_store_holder,
    "Java_com_ex_setargfield_Main_copy": fn_copy_field,
    "Java_com_ex_iccj2n_Main_deliver": fn_void_noop,
    "Java_com_ex_iccn2j_Main_fetch": fn_const_secret,
    "fold_sink_impl": fn_void_noop,
    "fold_helper_impl": fn_void_noop,
    "fwd_src_impl": fn_const_secret,
    "fwd_pull_impl": fn_const_plain,
}


def dispatch(request: dict) -> dict:
    name = request.get("function", "")
    if name == "__list__":
        return {"status": "ok",
                "ret": {"kind": "array", "elem_type": {"kind": "string"},
                        "elems": [{"kind": "string", "value": n} for n in sorted(FUNCTIONS)]},
                "args_post": [], "log": ""}
    fn = FUNCTIONS.get(name)
    if fn is None:
        return {"status": "fault", "log": f"unknown function {name!r}"}
    args = copy.deepcopy(request.get("args", []))
    try:
        ret, args_post = fn(args)
    except Exception as e:  # noqa: BLE001 - callee faults must not kill the loop
        return {"status": "fault", "log": f"{type(e).__name__}: {e}"}
    resp = {"status": "ok", "args_post": args_post, "log": ""}
    if ret is not None:
        resp["ret"] = ret
    return resp


def serve(stdin, stdout, dispatch_fn=dispatch) -> None:
    while True:
        header = stdin.read(4)
        if len(header) < 4:
            return
        (n,) = struct.unpack("<I", header)
        if n > 64 * 1024 * 1024:
            body = json.dumps({"status": "fault", "log": "oversized frame"}).encode()
            stdout.write(struct.pack("<I", len(body)) + body)
            stdout.flush()
            return
        payload = stdin.read(n)
        if len(payload) < n:
            return
        try:
            request = json.loads(payload.decode("utf-8"))
            response = dispatch_fn(request)
        except Exception as e:  # malformed frame: answer fault, keep serving
            response = {"status": "fault", "log": f"malformed request: {e}"}
        body = json.dumps(response, separators=(",", ":"), sort_keys=True).encode("utf-8")
        stdout.write(struct.pack("<I", len(body)) + body)
        stdout.flush()


def main() -> None:
    serve(sys.stdin.buffer, sys.stdout.buffer)


if __name__ == "__main__":
    main()
