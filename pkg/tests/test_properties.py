"""Randomized invariant suite for the value universe.

Types and values are drawn from a seeded generator, so failures reproduce
exactly.  The full 10 000-case run doubles as the determinism/typesys
acceptance gate.
"""

from __future__ import annotations

import random

from mudep.typesys import (
    BOOL, CHAR, FLOAT64, INT32, INT64, STRING,
    AbstractType, ArrayType, GenConfig, RecordType, Rng, TypeRegistry,
    VArr, VRec, VStr,
    clone, cmp, conforms, construct_random, diff_paths, mutate,
    value_from_json, value_to_json,
)

N_CASES = 10_000
SUITE_SEED = 0xC0FFEE

_PRIMS = [BOOL, INT32, INT64, FLOAT64, CHAR, STRING]


def random_typedesc(rng: random.Random, reg: TypeRegistry, uid: list[int], depth: int = 0):
    """Random type tree; records get fresh registered names, one abstract pair
    per record generation keeps subtype resolution in play."""
    roll = rng.random()
    if depth >= 2 or roll < 0.45:
        return rng.choice(_PRIMS)
    if roll < 0.6:
        return ArrayType(random_typedesc(rng, reg, uid, depth + 1))
    uid[0] += 1
    n_fields = rng.randint(1, 3)
    fields = tuple((f"f{i}", random_typedesc(rng, reg, uid, depth + 1)) for i in range(n_fields))
    rec = RecordType(f"R{uid[0]}", fields)
    reg.register(rec, mutable=rng.random() > 0.1)
    if rng.random() < 0.15:
        uid[0] += 1
        other = RecordType(f"R{uid[0]}", (("g0", STRING),))
        reg.register(other)
        uid[0] += 1
        abs_t = AbstractType(f"A{uid[0]}", (rec.name, other.name))
        reg.register(abs_t)
        return abs_t
    return rec


def _poke_in_place(rng: random.Random, v) -> bool:
    """Destructively change one mutable node of v; returns True if changed."""
    if isinstance(v, VRec) and v.fields:
        name = rng.choice(sorted(v.fields))
        child = v.fields[name]
        if _poke_in_place(rng, child):
            return True
        v.fields[name] = VStr("poked")
        return True
    if isinstance(v, VArr):
        if v.elems and _poke_in_place(rng, rng.choice(v.elems)):
            return True
        v.elems.append(VStr("poked"))
        return True
    return False


def _is_prefix(prefix, chain) -> bool:
    return chain[:len(prefix)] == prefix


def run_property_suite(n_cases: int = N_CASES, seed: int = SUITE_SEED) -> dict:
    """Run all invariants over n_cases random (type, value) pairs."""
    meta_rng = random.Random(seed)
    reg = TypeRegistry()
    uid = [0]
    cfg = GenConfig(max_array_len=4, max_string_len=8, max_depth=4)
    stats = {"cases": 0, "mutations": 0, "degenerate": 0}

    for case in range(n_cases):
        t = random_typedesc(meta_rng, reg, uid)
        value_seed = meta_rng.randrange(0, 2**62)
        v = construct_random(reg, t, Rng(value_seed), cfg)

        # Determinism: the same seed reproduces the value bit for bit.
        again = construct_random(reg, t, Rng(value_seed), cfg)
        assert value_to_json(v) == value_to_json(again)

        assert conforms(reg, t, v)

        # clone: deep-equal, no diff, round-trip through the codec.
        c = clone(v)
        assert cmp(v, c)
        assert diff_paths(v, c) == set()
        assert cmp(value_from_json(value_to_json(v), reg), v)

        # clone isolation: destroying the clone never touches the original.
        snapshot = value_to_json(v)
        _poke_in_place(meta_rng, c)
        assert value_to_json(v) == snapshot

        # mutate: exactly one leaf-level change, within the reported chain.
        mut_seed = meta_rng.randrange(0, 2**62)
        m = mutate(reg, t, v, Rng(mut_seed), cfg)
        m2 = mutate(reg, t, v, Rng(mut_seed), cfg)
        assert value_to_json(m.value) == value_to_json(m2.value) and m.path == m2.path
        stats["mutations"] += 1
        if not m.changed:
            stats["degenerate"] += 1
            assert cmp(v, m.value)
        else:
            assert not cmp(v, m.value)
            diffs = diff_paths(v, m.value)
            assert diffs, "changed mutation must produce a diff"
            assert all(_is_prefix(m.path, d) for d in diffs), (m.path, diffs)
            # Truncated diffs collapse onto prefixes of the full chains.
            depth = meta_rng.randint(0, 3)
            truncated = diff_paths(v, m.value, max_depth=depth)
            assert truncated == {d[:depth] for d in diffs}
            # diff-empty iff cmp, on both sides of the equivalence.
            assert (diff_paths(v, m.value) == set()) == cmp(v, m.value)
        stats["cases"] += 1
    return stats


def test_property_suite_10k():
    stats = run_property_suite()
    assert stats["cases"] == N_CASES
    # Degenerate (unmutatable) draws exist but must stay rare.
    assert stats["degenerate"] < N_CASES * 0.05
