"""Shared test plumbing: fixture paths and acceptance-criterion recording."""

from __future__ import annotations

import json
import sys
from pathlib import Path

DATA_DIR = Path(__file__).resolve().parent.parent / "corpus" / "data"

REFCORPUS_CMD = [sys.executable, "-m", "mudep.refcorpus"]

acceptance_results: dict[str, str] = {}


def load_json(path: Path):
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def record_criterion(name: str, passed: bool) -> None:
    acceptance_results[name] = "PASS" if passed else "FAIL"
