"""Shared fixtures and the acceptance PASS/FAIL summary."""

from __future__ import annotations

import pytest

ACCEPTANCE_LINES: list = []


@pytest.fixture
def acceptance():
    """Record one ``PASS``/``FAIL`` line for the terminal summary; returns the verdict."""

    def record(number: int, title: str, ok: bool, detail: str = "") -> bool:
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title}"
        if detail:
            line += f" -- {detail}"
        ACCEPTANCE_LINES.append((number, line))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES, key=lambda t: t[0]):
        terminalreporter.write_line(line)
