from __future__ import annotations

import shim_report


def pytest_terminal_summary(terminalreporter):
    if not shim_report.results:
        return
    terminalreporter.write_sep("=", "acceptance criteria (corpus shim)")
    for name in sorted(shim_report.results):
        terminalreporter.write_line(f"[{shim_report.results[name]}] {name}")
