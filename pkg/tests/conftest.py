from __future__ import annotations

import pytest
from hypothesis import settings

# deterministic example generation; exact arithmetic makes timing noisy
settings.register_profile("repo", deadline=None, derandomize=True, print_blob=True)
settings.load_profile("repo")


@pytest.fixture
def record_criterion(request):
    """Print one PASS/FAIL line per acceptance criterion and repeat it in
    the terminal summary."""
    lines = request.config.__dict__.setdefault("_acceptance_lines", [])

    def record(number, ok: bool, detail: str) -> None:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.__dict__.get("_acceptance_lines")
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
