"""Shared fixtures: verdict recording for the acceptance suite.

Acceptance tests print one ``criterion N (...): PASS/FAIL`` line each.
Captured output only surfaces on failure, so the lines are also replayed
in a terminal-summary section where capture cannot hide them.
"""

import pytest


def pytest_configure(config):
    config._criterion_lines = []


@pytest.fixture
def verdict(request):
    """Record and return a one-line pass/fail verdict for one criterion."""
    lines = request.config._criterion_lines

    def record(num: int, name: str, ok: bool, detail: str) -> str:
        line = f"criterion {num} ({name}): {'PASS' if ok else 'FAIL'} ({detail})"
        print(line, flush=True)
        lines.append(line)
        return line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus):
    lines = getattr(terminalreporter.config, "_criterion_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.line(line)
