from pathlib import Path

import pytest

from nilgeom.pipeline import build_free_array
from nilgeom.scenario import load_scenario

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def scenario_path(name: str) -> Path:
    return SCENARIOS / f"{name}.cfg"


@pytest.fixture(scope="session")
def wide_array():
    """The four-column array on the wide Z scenario, built once per session."""
    return build_free_array(load_scenario(scenario_path("z1_wide")), strict=False)


ACCEPTANCE: list[str] = []


def record(criterion: int, ok: bool, detail: str) -> bool:
    line = f"criterion {criterion:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
