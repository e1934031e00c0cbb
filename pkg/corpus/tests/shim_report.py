"""Criterion recording for the corpus shim suite."""

from __future__ import annotations

results: dict[str, str] = {}


def record_criterion(name: str, passed: bool) -> None:
    results[name] = "PASS" if passed else "FAIL"
