"""Type and value universe for differential execution of opaque functions.

Defines the recursive type descriptions, concrete value trees, and the three
atomic operations (deep clone, deep compare, random single-leaf mutation)
that the dependency generator composes into operation units.  Also owns the
canonical JSON encoding shared with the executor wire protocol.
"""

from __future__ import annotations

import random
import struct
from dataclasses import dataclass, field

from mudep.errors import ConformanceError, UnknownType

PRIM_KINDS = ("bool", "int32", "int64", "float64", "char")

INT32_MIN, INT32_MAX = -(2**31), 2**31 - 1
INT64_MIN, INT64_MAX = -(2**63), 2**63 - 1


# ---------------------------------------------------------------------------
# Type descriptions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Primitive:
    kind: str  # one of PRIM_KINDS

    def __post_init__(self):
        if self.kind not in PRIM_KINDS:
            raise UnknownType(f"unknown primitive kind {self.kind!r}")


@dataclass(frozen=True)
class StringType:
    """Immutable text; mutation always redraws the whole value."""


@dataclass(frozen=True)
class ArrayType:
    elem: "TypeDesc"


@dataclass(frozen=True)
class RecordType:
    name: str
    fields: tuple[tuple[str, "TypeDesc"], ...]

    def __post_init__(self):
        names = [n for n, _ in self.fields]
        if len(set(names)) != len(names):
            raise ConformanceError(f"duplicate field names in record {self.name!r}")

    def field_type(self, fname: str) -> "TypeDesc":
        for n, t in self.fields:
            if n == fname:
                return t
        raise ConformanceError(f"record {self.name!r} has no field {fname!r}")


@dataclass(frozen=True)
class AbstractType:
    """A named type with declared concrete record subtypes (interface stand-in)."""

    name: str
    subtypes: tuple[str, ...]

    def __post_init__(self):
        if not self.subtypes:
            raise UnknownType(f"abstract type {self.name!r} declares no subtypes")


TypeDesc = Primitive | StringType | ArrayType | RecordType | AbstractType

BOOL = Primitive("bool")
INT32 = Primitive("int32")
INT64 = Primitive("int64")
FLOAT64 = Primitive("float64")
CHAR = Primitive("char")
STRING = StringType()


def type_name(t: TypeDesc) -> str:
    """Short display name used in field paths and reports."""
    if isinstance(t, Primitive):
        return t.kind
    if isinstance(t, StringType):
        return "string"
    if isinstance(t, ArrayType):
        return type_name(t.elem) + "[]"
    return t.name


class TypeRegistry:
    """Named records and abstract types, closed under reference.

    Records may be flagged immutable; an immutable record behaves like a
    string under mutation (whole-value redraw, never field-wise).
    """

    def __init__(self):
        self._types: dict[str, TypeDesc] = {}
        self._immutable: set[str] = set()

    def register(self, t: RecordType | AbstractType, mutable: bool = True) -> None:
        if isinstance(t, RecordType):
            for _, ft in t.fields:
                self._check_closed(ft)
        self._types[t.name] = t
        if not mutable:
            self._immutable.add(t.name)

    def _check_closed(self, t: TypeDesc) -> None:
        if isinstance(t, (RecordType, AbstractType)):
            if t.name not in self._types:
                # Registering the referenced definition inline also closes it.
                if isinstance(t, RecordType):
                    self.register(t)
                else:
                    raise UnknownType(f"abstract type {t.name!r} referenced before registration")
        elif isinstance(t, ArrayType):
            self._check_closed(t.elem)

    def get(self, name: str) -> TypeDesc:
        try:
            return self._types[name]
        except KeyError:
            raise UnknownType(f"type {name!r} is not registered") from None

    def record(self, name: str) -> RecordType:
        t = self.get(name)
        if not isinstance(t, RecordType):
            raise UnknownType(f"type {name!r} is not a record")
        return t

    def is_immutable(self, t: TypeDesc) -> bool:
        return isinstance(t, RecordType) and t.name in self._immutable

    def names(self) -> list[str]:
        return sorted(self._types)

    def validate_closed(self) -> None:
        """Check every abstract subtype resolves to a registered record."""
        for t in self._types.values():
            if isinstance(t, AbstractType):
                for sub in t.subtypes:
                    self.record(sub)


# ---------------------------------------------------------------------------
# Values
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class VBool:
    v: bool


@dataclass(eq=False)
class VInt32:
    v: int


@dataclass(eq=False)
class VInt64:
    v: int


@dataclass(eq=False)
class VFloat64:
    v: float


@dataclass(eq=False)
class VChar:
    v: str


@dataclass(eq=False)
class VStr:
    v: str


@dataclass(eq=False)
class VArr:
    elem_type: TypeDesc
    elems: list["Value"] = field(default_factory=list)


@dataclass(eq=False)
class VRec:
    type_name: str
    fields: dict[str, "Value"] = field(default_factory=dict)


@dataclass(eq=False)
class VNull:
    pass


NULL = VNull()

Value = VBool | VInt32 | VInt64 | VFloat64 | VChar | VStr | VArr | VRec | VNull

_PRIM_VALUE = {"bool": VBool, "int32": VInt32, "int64": VInt64, "float64": VFloat64, "char": VChar}


def _float_bits(x: float) -> bytes:
    return struct.pack("<d", x)


# ---------------------------------------------------------------------------
# Generation
# ---------------------------------------------------------------------------

@dataclass
class GenConfig:
    """Bounds for random construction; defaults match the depth-5 operating point."""

    max_array_len: int = 8
    max_string_len: int = 16
    max_depth: int = 5
    int_min: int = -(2**31)
    int_max: int = 2**31  # exclusive
    float_scale: float = 1.0e6
    alphabet: str = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789"


class Rng:
    """Seedable deterministic stream; same seed reproduces every decision."""

    def __init__(self, seed: int):
        self.seed = seed
        self._r = random.Random(seed)

    def randrange(self, lo: int, hi: int) -> int:
        return self._r.randrange(lo, hi)

    def random(self) -> float:
        return self._r.random()

    def choice(self, seq):
        return seq[self._r.randrange(0, len(seq))]

    def bool(self) -> bool:
        return bool(self._r.getrandbits(1))


def derive_seed(seed: int, *parts: int) -> int:
    """Stable 64-bit child seed from a base seed and index tuple (splitmix-style)."""
    x = seed & 0xFFFFFFFFFFFFFFFF
    for p in parts:
        x = (x + 0x9E3779B97F4A7C15 + (p & 0xFFFFFFFFFFFFFFFF)) & 0xFFFFFFFFFFFFFFFF
        x ^= x >> 30
        x = (x * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
        x ^= x >> 27
        x = (x * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
        x ^= x >> 31
    return x


def _random_prim(kind: str, rng: Rng, cfg: GenConfig) -> Value:
    if kind == "bool":
        return VBool(rng.bool())
    if kind == "int32":
        return VInt32(rng.randrange(max(cfg.int_min, INT32_MIN), min(cfg.int_max, INT32_MAX + 1)))
    if kind == "int64":
        return VInt64(rng.randrange(max(cfg.int_min, INT64_MIN), min(cfg.int_max, INT64_MAX + 1)))
    if kind == "float64":
        return VFloat64((rng.random() * 2.0 - 1.0) * cfg.float_scale)
    if kind == "char":
        return VChar(rng.choice(cfg.alphabet))
    raise UnknownType(kind)


def _random_string(rng: Rng, cfg: GenConfig) -> VStr:
    n = rng.randrange(0, cfg.max_string_len + 1)
    return VStr("".join(rng.choice(cfg.alphabet) for _ in range(n)))


def construct_random(reg: TypeRegistry, t: TypeDesc, rng: Rng, cfg: GenConfig, depth: int = 0) -> Value:
    """Build a random conformant value; recursion is cut at cfg.max_depth
    by emitting Null (records) or an empty array."""
    if isinstance(t, Primitive):
        return _random_prim(t.kind, rng, cfg)
    if isinstance(t, StringType):
        return _random_string(rng, cfg)
    if isinstance(t, ArrayType):
        if depth >= cfg.max_depth:
            return VArr(t.elem, [])
        n = rng.randrange(1, cfg.max_array_len + 1)
        return VArr(t.elem, [construct_random(reg, t.elem, rng, cfg, depth + 1) for _ in range(n)])
    if isinstance(t, AbstractType):
        if depth >= cfg.max_depth:
            return NULL
        sub = reg.record(t.subtypes[rng.randrange(0, len(t.subtypes))])
        return construct_random(reg, sub, rng, cfg, depth)
    if isinstance(t, RecordType):
        if depth >= cfg.max_depth:
            return NULL
        reg.record(t.name)  # raises UnknownType when unregistered
        return VRec(t.name, {n: construct_random(reg, ft, rng, cfg, depth + 1) for n, ft in t.fields})
    raise UnknownType(f"cannot construct {t!r}")


# ---------------------------------------------------------------------------
# clone / cmp / diff
# ---------------------------------------------------------------------------

def clone(v: Value) -> Value:
    """Deep copy sharing no mutable substructure with the original."""
    if isinstance(v, VArr):
        return VArr(v.elem_type, [clone(e) for e in v.elems])
    if isinstance(v, VRec):
        return VRec(v.type_name, {n: clone(f) for n, f in v.fields.items()})
    if isinstance(v, VNull):
        return NULL
    return type(v)(v.v)


def cmp(a: Value, b: Value) -> bool:
    """Deep equality; array lengths compared, floats compared bitwise."""
    if isinstance(a, VNull) or isinstance(b, VNull):
        return isinstance(a, VNull) and isinstance(b, VNull)
    if type(a) is not type(b):
        raise ConformanceError(f"cannot compare {type(a).__name__} with {type(b).__name__}")
    if isinstance(a, VFloat64):
        return _float_bits(a.v) == _float_bits(b.v)
    if isinstance(a, VArr):
        return len(a.elems) == len(b.elems) and all(cmp(x, y) for x, y in zip(a.elems, b.elems))
    if isinstance(a, VRec):
        if a.type_name != b.type_name:
            return False
        if list(a.fields) != list(b.fields):
            raise ConformanceError(f"field mismatch in record {a.type_name!r}")
        return all(cmp(a.fields[n], b.fields[n]) for n in a.fields)
    return a.v == b.v


FieldChain = tuple[str, ...]


def diff_paths(a: Value, b: Value, max_depth: int | None = None) -> set[FieldChain]:
    """Field chains (depth-truncated, array indexes erased) at which a and b differ."""
    out: set[FieldChain] = set()

    def cut(chain: FieldChain) -> FieldChain:
        return chain if max_depth is None else chain[:max_depth]

    def walk(x: Value, y: Value, chain: FieldChain) -> None:
        if isinstance(x, VNull) or isinstance(y, VNull):
            if type(x) is not type(y):
                out.add(cut(chain))
            return
        if type(x) is not type(y):
            raise ConformanceError(f"cannot diff {type(x).__name__} with {type(y).__name__}")
        if isinstance(x, VArr):
            if len(x.elems) != len(y.elems):
                out.add(cut(chain))
            for ex, ey in zip(x.elems, y.elems):
                walk(ex, ey, chain)  # index-insensitive
        elif isinstance(x, VRec):
            if x.type_name != y.type_name:
                out.add(cut(chain))
                return
            for n in x.fields:
                walk(x.fields[n], y.fields[n], chain + (n,))
        elif not cmp(x, y):
            out.add(cut(chain))

    walk(a, b, ())
    return out


# ---------------------------------------------------------------------------
# Mutation
# ---------------------------------------------------------------------------

@dataclass
class MutationResult:
    value: Value
    path: FieldChain
    changed: bool  # False only for empty aggregates / exhausted depth


def _redraw_leaf(reg: TypeRegistry, t: TypeDesc, old: Value, rng: Rng, cfg: GenConfig, depth: int) -> Value:
    # A fresh draw equal to the old value is redrawn; booleans simply flip.
    if isinstance(t, Primitive) and t.kind == "bool":
        return VBool(not old.v)
    for _ in range(64):
        nv = construct_random(reg, t, rng, cfg, depth)
        if not cmp(nv, old):
            return nv
    raise ConformanceError(f"mutation domain of {type_name(t)} too small to produce a fresh value")


def mutate(reg: TypeRegistry, t: TypeDesc, v: Value, rng: Rng, cfg: GenConfig,
           _depth: int = 0) -> MutationResult:
    """Change exactly one randomly selected leaf of v, cloning the rest.

    Primitives, strings, and immutable records redraw the whole value; arrays
    mutate one element (length preserved, index erased from the reported
    chain); mutable records descend into one random field.
    """
    if isinstance(t, AbstractType) and isinstance(v, VRec):
        t = reg.record(v.type_name)
    if isinstance(v, VNull):
        replacement = construct_random(reg, t, rng, cfg, _depth)
        if isinstance(replacement, VNull):
            return MutationResult(NULL, (), False)
        return MutationResult(replacement, (), True)
    if isinstance(t, (Primitive, StringType)) or reg.is_immutable(t):
        return MutationResult(_redraw_leaf(reg, t, v, rng, cfg, _depth), (), True)
    if isinstance(t, ArrayType):
        if not v.elems:
            return MutationResult(clone(v), (), False)
        i = rng.randrange(0, len(v.elems))
        elems = [clone(e) for e in v.elems]
        sub = mutate(reg, t.elem, v.elems[i], rng, cfg, _depth + 1)
        elems[i] = sub.value
        return MutationResult(VArr(v.elem_type, elems), sub.path, sub.changed)
    if isinstance(t, RecordType):
        if not t.fields:
            return MutationResult(clone(v), (), False)
        idx = rng.randrange(0, len(t.fields))
        fname, ftype = t.fields[idx]
        fields = {n: clone(f) for n, f in v.fields.items()}
        sub = mutate(reg, ftype, v.fields[fname], rng, cfg, _depth + 1)
        fields[fname] = sub.value
        return MutationResult(VRec(v.type_name, fields), (fname,) + sub.path, sub.changed)
    raise ConformanceError(f"cannot mutate value of type {type_name(t)}")


def mutate_at(reg: TypeRegistry, t: TypeDesc, v: Value, chain: FieldChain, rng: Rng,
              cfg: GenConfig, _depth: int = 0) -> MutationResult:
    """Directed variant of mutate: change the leaf named by chain.

    Array hops pick one random element (chains are index-insensitive).
    """
    if isinstance(t, AbstractType) and isinstance(v, VRec):
        t = reg.record(v.type_name)
    if isinstance(t, ArrayType) and not isinstance(v, VNull):
        if not v.elems:
            return MutationResult(clone(v), (), False)
        i = rng.randrange(0, len(v.elems))
        elems = [clone(e) for e in v.elems]
        sub = mutate_at(reg, t.elem, v.elems[i], chain, rng, cfg, _depth + 1)
        elems[i] = sub.value
        return MutationResult(VArr(v.elem_type, elems), sub.path, sub.changed)
    if not chain:
        return mutate(reg, t, v, rng, cfg, _depth)
    if isinstance(v, VNull):
        # Cannot reach the requested leaf below a Null; replace the subtree.
        return mutate(reg, t, v, rng, cfg, _depth)
    if not isinstance(t, RecordType) or not isinstance(v, VRec):
        raise ConformanceError(f"chain {'.'.join(chain)!r} does not exist under {type_name(t)}")
    fname = chain[0]
    fields = {n: clone(f) for n, f in v.fields.items()}
    sub = mutate_at(reg, t.field_type(fname), v.fields[fname], chain[1:], rng, cfg, _depth + 1)
    fields[fname] = sub.value
    return MutationResult(VRec(v.type_name, fields), (fname,) + sub.path, sub.changed)


def resolve_concrete(reg: TypeRegistry, t: TypeDesc) -> list[TypeDesc]:
    """Concrete types an argument slot can take: abstract types expand to
    their declared record subtypes, everything else stands for itself."""
    if isinstance(t, AbstractType):
        return [reg.record(s) for s in t.subtypes]
    if isinstance(t, RecordType):
        reg.record(t.name)
    return [t]


# ---------------------------------------------------------------------------
# Conformance and type-tree navigation
# ---------------------------------------------------------------------------

def conforms(reg: TypeRegistry, t: TypeDesc, v: Value) -> bool:
    if isinstance(v, VNull):
        return isinstance(t, (RecordType, AbstractType, ArrayType))
    if isinstance(t, Primitive):
        return isinstance(v, _PRIM_VALUE[t.kind])
    if isinstance(t, StringType):
        return isinstance(v, VStr)
    if isinstance(t, ArrayType):
        return isinstance(v, VArr) and all(conforms(reg, t.elem, e) for e in v.elems)
    if isinstance(t, AbstractType):
        return (isinstance(v, VRec) and v.type_name in t.subtypes
                and conforms(reg, reg.record(v.type_name), v))
    if isinstance(t, RecordType):
        if not isinstance(v, VRec) or v.type_name != t.name:
            return False
        if list(v.fields) != [n for n, _ in t.fields]:
            return False
        return all(conforms(reg, ft, v.fields[n]) for n, ft in t.fields)
    return False


def assert_conforms(reg: TypeRegistry, t: TypeDesc, v: Value) -> None:
    if not conforms(reg, t, v):
        raise ConformanceError(f"value does not conform to {type_name(t)}")


def walk_type(reg: TypeRegistry, t: TypeDesc, chain: FieldChain) -> TypeDesc:
    """Type at the end of a field chain; array hops are implicit (no index).

    Raises ConformanceError when the chain does not exist in the type tree.
    """
    if not chain:
        return t
    while isinstance(t, ArrayType):
        t = t.elem
    if isinstance(t, AbstractType):
        # Any single subtype carrying the field wins; ambiguity is benign here
        # because chains were observed on concrete values.
        for s in t.subtypes:
            sub = reg.record(s)
            if any(n == chain[0] for n, _ in sub.fields):
                return walk_type(reg, sub, chain)
        raise ConformanceError(f"no subtype of {t.name!r} has field {chain[0]!r}")
    if isinstance(t, RecordType):
        return walk_type(reg, t.field_type(chain[0]), chain[1:])
    raise ConformanceError(f"chain {'.'.join(chain)!r} does not exist under {type_name(t)}")


def leaf_paths(reg: TypeRegistry, t: TypeDesc, max_depth: int = 5) -> list[tuple[FieldChain, TypeDesc]]:
    """All (chain, leaf type) pairs reachable within max_depth field hops."""
    out: list[tuple[FieldChain, TypeDesc]] = []

    def walk(t: TypeDesc, chain: FieldChain, depth: int) -> None:
        while isinstance(t, ArrayType):
            t = t.elem
        if isinstance(t, (Primitive, StringType)):
            out.append((chain, t))
            return
        if depth >= max_depth:
            out.append((chain, t))
            return
        if isinstance(t, AbstractType):
            for s in t.subtypes:
                walk(reg.record(s), chain, depth)
            return
        if isinstance(t, RecordType):
            if not t.fields:
                out.append((chain, t))
            for n, ft in t.fields:
                walk(ft, chain + (n,), depth + 1)

    walk(t, (), 0)
    return out


# ---------------------------------------------------------------------------
# Canonical JSON encoding (shared with the wire protocol)
# ---------------------------------------------------------------------------

def typedesc_to_json(t: TypeDesc, full: bool = False) -> dict | None:
    if t is None:
        return None
    if isinstance(t, Primitive):
        return {"kind": "primitive", "prim": t.kind}
    if isinstance(t, StringType):
        return {"kind": "string"}
    if isinstance(t, ArrayType):
        return {"kind": "array", "elem": typedesc_to_json(t.elem, full)}
    if isinstance(t, RecordType):
        if full:
            return {"kind": "record", "name": t.name,
                    "fields": [{"name": n, "type": typedesc_to_json(ft)} for n, ft in t.fields]}
        return {"kind": "record", "name": t.name}
    if isinstance(t, AbstractType):
        if full:
            return {"kind": "abstract", "name": t.name, "subtypes": list(t.subtypes)}
        return {"kind": "abstract", "name": t.name}
    raise UnknownType(repr(t))


def typedesc_from_json(d: dict, reg: TypeRegistry) -> TypeDesc:
    kind = d.get("kind")
    if kind == "primitive":
        return Primitive(d["prim"])
    if kind == "string":
        return StringType()
    if kind == "array":
        return ArrayType(typedesc_from_json(d["elem"], reg))
    if kind in ("record", "abstract"):
        if "fields" in d or "subtypes" in d:
            return register_types([d], reg)[0]
        return reg.get(d["name"])
    raise UnknownType(f"bad type document {d!r}")


def register_types(docs: list[dict], reg: TypeRegistry) -> list[TypeDesc]:
    """Register record/abstract definitions (in reference order) from JSON."""
    done = []
    for d in docs:
        if d["kind"] == "record":
            fields = tuple((f["name"], typedesc_from_json(f["type"], reg)) for f in d.get("fields", []))
            t = RecordType(d["name"], fields)
            reg.register(t, mutable=d.get("mutable", True))
        elif d["kind"] == "abstract":
            t = AbstractType(d["name"], tuple(d["subtypes"]))
            reg.register(t)
        else:
            raise UnknownType(f"bad type definition {d!r}")
        done.append(t)
    reg.validate_closed()
    return done


def value_to_json(v: Value) -> dict:
    if isinstance(v, VBool):
        return {"kind": "bool", "value": v.v}
    if isinstance(v, VInt32):
        return {"kind": "int32", "value": v.v}
    if isinstance(v, VInt64):
        return {"kind": "int64", "value": str(v.v)}  # decimal string keeps 64-bit exact
    if isinstance(v, VFloat64):
        return {"kind": "float64", "value": v.v.hex()}  # IEEE-754 hex literal
    if isinstance(v, VChar):
        return {"kind": "char", "value": v.v}
    if isinstance(v, VStr):
        return {"kind": "string", "value": v.v}
    if isinstance(v, VArr):
        return {"kind": "array", "elem_type": typedesc_to_json(v.elem_type),
                "elems": [value_to_json(e) for e in v.elems]}
    if isinstance(v, VRec):
        return {"kind": "record", "type": v.type_name,
                "fields": {n: value_to_json(f) for n, f in v.fields.items()}}
    if isinstance(v, VNull):
        return {"kind": "null"}
    raise ConformanceError(f"cannot encode {v!r}")


def value_from_json(d: dict, reg: TypeRegistry) -> Value:
    kind = d.get("kind")
    if kind == "bool":
        return VBool(bool(d["value"]))
    if kind == "int32":
        return VInt32(int(d["value"]))
    if kind == "int64":
        return VInt64(int(d["value"]))
    if kind == "float64":
        return VFloat64(float.fromhex(d["value"]))
    if kind == "char":
        return VChar(d["value"])
    if kind == "string":
        return VStr(d["value"])
    if kind == "array":
        et = typedesc_from_json(d["elem_type"], reg)
        return VArr(et, [value_from_json(e, reg) for e in d["elems"]])
    if kind == "record":
        return VRec(d["type"], {n: value_from_json(f, reg) for n, f in d["fields"].items()})
    if kind == "null":
        return NULL
    raise ConformanceError(f"bad value document {d!r}")
