"""Mutation-based dependency generation.

For every input slot of an opaque function, runs BOUND operation units: two
sequential executions whose inputs are identical except for one mutated leaf
of the selected slot.  Any post-state difference in another slot or in the
return value becomes a field-level dependency edge from the mutated input
leaf to the differing output path.
"""

from __future__ import annotations

import logging
import zlib
from dataclasses import dataclass, field

from mudep import typesys
from mudep.executor import ExecutorHandle, FunctionSig
from mudep.typesys import (
    AbstractType, GenConfig, Primitive, Rng, TypeDesc, TypeRegistry,
    clone, construct_random, derive_seed, diff_paths, mutate, resolve_concrete, type_name,
)

log = logging.getLogger(__name__)

RETURN_SLOT = -1

MARK_TAINT_GEN = "taint_gen"
MARK_EMPTY_STUB = "empty_stub"
MARK_UNKNOWN = "unknown"

MAX_UNIT_RETRIES = 3


@dataclass(frozen=True, order=True)
class FieldPath:
    """An argument slot (or the return) plus a field chain, e.g. Data@0.s."""

    slot: int  # RETURN_SLOT for the return value
    chain: tuple[str, ...]
    type_name: str

    @property
    def is_return(self) -> bool:
        return self.slot == RETURN_SLOT

    def render(self) -> str:
        at = "return" if self.is_return else str(self.slot)
        suffix = "".join("." + c for c in self.chain)
        return f"{self.type_name}@{at}{suffix}"

    def to_json(self) -> dict:
        return {"slot": "return" if self.is_return else self.slot,
                "chain": list(self.chain), "type": self.type_name}

    @classmethod
    def from_json(cls, d: dict) -> "FieldPath":
        slot = RETURN_SLOT if d["slot"] == "return" else int(d["slot"])
        return cls(slot, tuple(d["chain"]), d["type"])


Edge = tuple[FieldPath, FieldPath]  # (output path, input path)


@dataclass
class DependencyRelation:
    function: str
    witness: dict[Edge, int] = field(default_factory=dict)
    marker: str | None = None
    units_run: int = 0
    units_failed: int = 0

    @property
    def edges(self) -> set[Edge]:
        return set(self.witness)

    def add(self, edge: Edge) -> None:
        self.witness[edge] = self.witness.get(edge, 0) + 1

    def sorted_edges(self) -> list[Edge]:
        return sorted(self.witness, key=lambda e: (e[0], e[1]))

    def to_json(self) -> dict:
        return {
            "function": self.function,
            "marker": self.marker,
            "units_run": self.units_run,
            "units_failed": self.units_failed,
            "edges": [{"out": o.to_json(), "in": i.to_json(), "witness": self.witness[(o, i)]}
                      for o, i in self.sorted_edges()],
        }

    @classmethod
    def from_json(cls, d: dict) -> "DependencyRelation":
        rel = cls(d["function"], marker=d.get("marker"),
                  units_run=d.get("units_run", 0), units_failed=d.get("units_failed", 0))
        for e in d.get("edges", []):
            rel.witness[(FieldPath.from_json(e["out"]), FieldPath.from_json(e["in"]))] = e.get("witness", 1)
        return rel


@dataclass
class DepGenConfig:
    bound: int = 15
    depth: int = 5
    gen: GenConfig = field(default_factory=GenConfig)
    seed: int = 1
    isolate: str = "session"  # "unit" drops callee state between units
    budget: float = 2.0

    def __post_init__(self):
        if self.bound < 1 or self.depth < 0:
            raise ValueError("bound must be >= 1 and depth >= 0")


def _is_primitive(t: TypeDesc) -> bool:
    return isinstance(t, Primitive)


def run_unit(h: ExecutorHandle, sig: FunctionSig, mutated_slot: int, rng: Rng,
             cfg: DepGenConfig, reg: TypeRegistry,
             concrete: TypeDesc | None = None) -> set[Edge] | None:
    """One operation unit; returns the observed edges, or None when the unit
    must be discarded (execution failure or no mutation was possible)."""
    slot_types = sig.arg_types(reg)
    if concrete is not None:
        slot_types = list(slot_types)
        slot_types[mutated_slot] = concrete

    args: list[typesys.Value] = [construct_random(reg, t, rng, cfg.gen) for t in slot_types]
    xargs: list[typesys.Value] = []
    suffix: tuple[str, ...] = ()
    for k, t in enumerate(slot_types):
        if k == mutated_slot:
            m = mutate(reg, t, args[k], rng, cfg.gen)
            if not m.changed:
                return None
            xargs.append(m.value)
            suffix = m.path
        elif _is_primitive(t):
            xargs.append(args[k])  # immutable across the pair: same copy
        else:
            xargs.append(clone(args[k]))

    first = h.invoke(sig, args, cfg.budget)
    if not first.ok:
        return None
    second = h.invoke(sig, xargs, cfg.budget)
    if not second.ok:
        return None

    in_path = FieldPath(mutated_slot, suffix[:cfg.depth], type_name(slot_types[mutated_slot]))
    edges: set[Edge] = set()
    for k, t in enumerate(slot_types):
        if k == mutated_slot or _is_primitive(t):
            continue
        for chain in diff_paths(first.args_post[k], second.args_post[k], cfg.depth):
            edges.add((FieldPath(k, chain, type_name(t)), in_path))
    if sig.return_type is not None:
        for chain in diff_paths(first.ret, second.ret, cfg.depth):
            edges.add((FieldPath(RETURN_SLOT, chain, type_name(sig.return_type)), in_path))
    return edges


def generate(h: ExecutorHandle, sig: FunctionSig, cfg: DepGenConfig,
             reg: TypeRegistry) -> DependencyRelation:
    """Accumulate edges over all (slot, iteration) operation units.

    Two degenerate shapes are dispatched without execution: a zero-argument
    static function is conservatively a taint generator (its return may still
    vary with hidden native state), and a primitive-only void static function
    gets the empty relation.
    """
    rel = DependencyRelation(sig.name)
    if sig.is_static and not sig.params:
        rel.marker = MARK_TAINT_GEN
        return rel
    if sig.is_static and sig.return_type is None and all(_is_primitive(p) for p in sig.params):
        rel.marker = MARK_EMPTY_STUB
        return rel

    name_tag = zlib.crc32(sig.name.encode("utf-8"))
    slot_types = sig.arg_types(reg)
    any_ok = False
    for i, slot_t in enumerate(slot_types):
        variants = resolve_concrete(reg, slot_t) if isinstance(slot_t, AbstractType) else [None]
        for vi, variant in enumerate(variants):
            for time_ in range(cfg.bound):
                edges = None
                for retry in range(MAX_UNIT_RETRIES + 1):
                    rng = Rng(derive_seed(cfg.seed, name_tag, i, vi, time_, retry))
                    edges = run_unit(h, sig, i, rng, cfg, reg, concrete=variant)
                    if edges is not None:
                        break
                    if cfg.isolate == "unit":
                        h.reset()
                rel.units_run += 1
                if cfg.isolate == "unit":
                    h.reset()
                if edges is None:
                    rel.units_failed += 1
                    continue
                any_ok = True
                for e in edges:
                    rel.add(e)
    if rel.units_run and not any_ok:
        rel.marker = MARK_UNKNOWN
        log.warning("all %d units failed for %s; relation unknown", rel.units_run, sig.name)
    return rel


def relation_to_report(rel: DependencyRelation) -> dict:
    """Stable, sorted rendering with witness counts (text lines + JSON)."""
    lines = [f"{o.render()} <- {i.render()} (w={rel.witness[(o, i)]})" for o, i in rel.sorted_edges()]
    if rel.marker == MARK_TAINT_GEN:
        lines.insert(0, f"{rel.function}: source-like (taint generation)")
    elif rel.marker == MARK_EMPTY_STUB:
        lines.insert(0, f"{rel.function}: no dependency possible (empty stub)")
    elif rel.marker == MARK_UNKNOWN:
        lines.insert(0, f"{rel.function}: unknown (all units failed)")
    return {"json": rel.to_json(), "text": lines}
