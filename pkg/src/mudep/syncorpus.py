"""Randomly generated straight-line functions with known dependency edges.

The generator emits a self-contained document: function signatures plus a
list of copy/sum/concat assignments between input leaves and output leaves,
and the ground-truth edge set those assignments imply.  The interpreter in
this module serves that document over the wire protocol
(``python -m mudep.syncorpus SPEC.json``), so the dependency generator can be
measured for false edges and recall against construction-time truth.
"""

from __future__ import annotations

import copy
import json
import random
import sys

from mudep import refcorpus

TYPES = [
    {"kind": "record", "name": "SynPair", "fields": [
        {"name": "p", "type": {"kind": "string"}},
        {"name": "q", "type": {"kind": "primitive", "prim": "int32"}}]},
    {"kind": "record", "name": "SynTri", "fields": [
        {"name": "x", "type": {"kind": "string"}},
        {"name": "y", "type": {"kind": "primitive", "prim": "int64"}},
        {"name": "z", "type": {"kind": "string"}}]},
]

_PARAM_POOL = [
    {"kind": "primitive", "prim": "int32"},
    {"kind": "primitive", "prim": "int64"},
    {"kind": "string"},
    {"kind": "record", "name": "SynPair"},
    {"kind": "record", "name": "SynTri"},
]

_RETURN_POOL = [
    None,
    {"kind": "primitive", "prim": "int32"},
    {"kind": "primitive", "prim": "int64"},
    {"kind": "string"},
    {"kind": "record", "name": "SynPair"},
]

_FIELDS = {"SynPair": [("p", "string"), ("q", "int32")],
           "SynTri": [("x", "string"), ("y", "int64"), ("z", "string")]}


def _leaves(slot: int, tdoc: dict | None) -> list[tuple[int, tuple[str, ...], str]]:
    """(slot, chain, leaf kind) triples for a slot type document."""
    if tdoc is None:
        return []
    if tdoc["kind"] == "primitive":
        return [(slot, (), tdoc["prim"])]
    if tdoc["kind"] == "string":
        return [(slot, (), "string")]
    return [(slot, (f,), k) for f, k in _FIELDS[tdoc["name"]]]


def generate_corpus(seed: int, count: int) -> dict:
    """Build ``count`` functions; each output leaf is written at most once,
    and arg-slot outputs never read their own slot (such dependencies are
    unobservable to pairwise comparison, which skips the mutated slot)."""
    rng = random.Random(seed)
    functions = []
    for n in range(count):
        params = [rng.choice(_PARAM_POOL) for _ in range(rng.randint(1, 3))]
        returns = rng.choice(_RETURN_POOL)

        in_leaves = [lf for i, p in enumerate(params) for lf in _leaves(i, p)]
        out_leaves = [(-1,) + lf[1:] for lf in _leaves(-1, returns)]
        for i, p in enumerate(params):
            if p["kind"] == "record":
                out_leaves.extend(_leaves(i, p))

        # Written leaves may never be read: a source overwritten by an earlier
        # assignment would silently change the function's true dependency set.
        written = {out for out in out_leaves if rng.random() < 0.7}
        ops, truth = [], []
        for out in sorted(written):
            srcs = [lf for lf in in_leaves
                    if lf[2] == out[2] and lf[0] != out[0] and lf not in written]
            if not srcs:
                continue
            if out[2] in ("int32", "int64") and len(srcs) >= 2 and rng.random() < 0.3:
                a, b = rng.sample(srcs, 2)
                ops.append({"kind": "sum", "dst": _pjson(out), "srcs": [_pjson(a), _pjson(b)]})
                truth += [{"out": _pjson(out), "in": _pjson(a)}, {"out": _pjson(out), "in": _pjson(b)}]
            elif out[2] == "string" and len(srcs) >= 2 and rng.random() < 0.2:
                a, b = rng.sample(srcs, 2)
                ops.append({"kind": "concat", "dst": _pjson(out), "srcs": [_pjson(a), _pjson(b)]})
                truth += [{"out": _pjson(out), "in": _pjson(a)}, {"out": _pjson(out), "in": _pjson(b)}]
            else:
                a = rng.choice(srcs)
                ops.append({"kind": "copy", "dst": _pjson(out), "src": _pjson(a)})
                truth.append({"out": _pjson(out), "in": _pjson(a)})
        functions.append({"name": f"synth_{n:03d}", "static": True, "params": params,
                          "returns": returns, "ops": ops, "truth": truth})
    return {"types": TYPES, "functions": functions}


def _pjson(leaf: tuple[int, tuple[str, ...], str]) -> dict:
    slot, chain, _ = leaf
    return {"slot": "return" if slot == -1 else slot, "chain": list(chain)}


def manifest_of(spec: dict) -> dict:
    return {"types": spec["types"],
            "functions": [{"name": f["name"], "static": True, "params": f["params"],
                           "returns": f["returns"]} for f in spec["functions"]]}


# ---------------------------------------------------------------------------
# Interpreter (wire-protocol backend)
# ---------------------------------------------------------------------------

_STR_DEFAULT = {"kind": "string", "value": ""}
_PRIM_DEFAULT = {"int32": {"kind": "int32", "value": 0},
                 "int64": {"kind": "int64", "value": "0"}}


def _default_value(tdoc: dict) -> dict:
    if tdoc["kind"] == "string":
        return dict(_STR_DEFAULT)
    if tdoc["kind"] == "primitive":
        return dict(_PRIM_DEFAULT.get(tdoc["prim"], {"kind": tdoc["prim"], "value": 0}))
    name = tdoc["name"]
    return {"kind": "record", "type": name,
            "fields": {f: _default_value({"kind": "string"} if k == "string"
                                         else {"kind": "primitive", "prim": k})
                       for f, k in _FIELDS[name]}}


def _wrap(v: int, bits: int) -> int:
    return ((v + 2 ** (bits - 1)) % 2 ** bits) - 2 ** (bits - 1)


class Interpreter:
    def __init__(self, spec: dict):
        self.functions = {f["name"]: f for f in spec["functions"]}

    def _read(self, args: list[dict], ret: dict | None, path: dict) -> dict:
        node = ret if path["slot"] == "return" else args[path["slot"]]
        for fld in path["chain"]:
            node = node["fields"][fld]
        return node

    def _write(self, args: list[dict], ret: dict | None, path: dict, value: dict) -> dict | None:
        if not path["chain"]:
            if path["slot"] == "return":
                return copy.deepcopy(value)
            args[path["slot"]] = copy.deepcopy(value)
            return ret
        node = ret if path["slot"] == "return" else args[path["slot"]]
        for fld in path["chain"][:-1]:
            node = node["fields"][fld]
        node["fields"][path["chain"][-1]] = copy.deepcopy(value)
        return ret

    def call(self, name: str, args: list[dict]) -> tuple[dict | None, list[dict]]:
        f = self.functions[name]
        ret = _default_value(f["returns"]) if f["returns"] is not None else None
        for op in f["ops"]:
            if op["kind"] == "copy":
                value = self._read(args, ret, op["src"])
            elif op["kind"] == "sum":
                a = self._read(args, ret, op["srcs"][0])
                b = self._read(args, ret, op["srcs"][1])
                if a["kind"] == "int64":
                    value = {"kind": "int64", "value": str(_wrap(int(a["value"]) + int(b["value"]), 64))}
                else:
                    value = {"kind": "int32", "value": _wrap(a["value"] + b["value"], 32)}
            else:  # concat
                a = self._read(args, ret, op["srcs"][0])
                b = self._read(args, ret, op["srcs"][1])
                value = {"kind": "string", "value": a["value"] + b["value"]}
            ret = self._write(args, ret, op["dst"], value)
        return ret, args

    def dispatch(self, request: dict) -> dict:
        name = request.get("function", "")
        if name == "__list__":
            return {"status": "ok",
                    "ret": {"kind": "array", "elem_type": {"kind": "string"},
                            "elems": [{"kind": "string", "value": n} for n in sorted(self.functions)]},
                    "args_post": [], "log": ""}
        if name not in self.functions:
            return {"status": "fault", "log": f"unknown function {name!r}"}
        args = copy.deepcopy(request.get("args", []))
        try:
            ret, args_post = self.call(name, args)
        except Exception as e:  # noqa: BLE001
            return {"status": "fault", "log": f"{type(e).__name__}: {e}"}
        resp = {"status": "ok", "args_post": args_post, "log": ""}
        if ret is not None:
            resp["ret"] = ret
        return resp


def main() -> None:
    with open(sys.argv[1], "r", encoding="utf-8") as f:
        spec = json.load(f)
    interp = Interpreter(spec)
    refcorpus.serve(sys.stdin.buffer, sys.stdout.buffer, dispatch_fn=interp.dispatch)


if __name__ == "__main__":
    main()
