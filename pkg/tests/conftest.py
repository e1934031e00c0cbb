from __future__ import annotations

import pytest

import helpers
from mudep import executor
from mudep.typesys import TypeRegistry


@pytest.fixture(scope="session")
def manifest_doc():
    return helpers.load_json(helpers.DATA_DIR / "manifest.json")


@pytest.fixture()
def reg(manifest_doc) -> TypeRegistry:
    r = TypeRegistry()
    executor.parse_manifest(manifest_doc, r)
    return r


@pytest.fixture()
def corpus_sigs(manifest_doc, reg):
    return {s.name: s for s in executor.parse_manifest(manifest_doc, reg)}


@pytest.fixture()
def corpus_handle(corpus_sigs, reg):
    h = executor.load(executor.SubprocessBackend(helpers.REFCORPUS_CMD),
                      list(corpus_sigs.values()), reg)
    yield h
    h.close()


@pytest.fixture(scope="session")
def sidecar():
    doc = helpers.load_json(helpers.DATA_DIR / "sidecar.json")
    return {e["function"]: e for e in doc["entries"]}


def pytest_terminal_summary(terminalreporter):
    if not helpers.acceptance_results:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name in sorted(helpers.acceptance_results):
        terminalreporter.write_line(f"[{helpers.acceptance_results[name]}] {name}")
