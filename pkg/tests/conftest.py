import pytest

from starlab import study
from starlab.model import INFINITY, ModelParams
from starlab.solver import SolverConfig, solve_star

STANDARD_LADDER = (4.0, 8.0, 16.0, 32.0, 64.0)

_acceptance_lines: dict[int, str] = {}


def record_acceptance(number: int, passed: bool, detail: str) -> None:
    line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
    _acceptance_lines[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_lines:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_acceptance_lines):
        terminalreporter.write_line(_acceptance_lines[number])


@pytest.fixture(scope="session")
def unit():
    return ModelParams()


@pytest.fixture(scope="session")
def limit_star(unit):
    return solve_star(unit, 1.0)


@pytest.fixture(scope="session")
def star_c8(unit):
    return solve_star(unit.with_c(8.0), 1.0)


@pytest.fixture(scope="session")
def c_sweep(unit):
    return study.sweep_c(unit, 1.0, STANDARD_LADDER, workers=1)


@pytest.fixture(scope="session")
def identity_grid(unit):
    out = {}
    for c in STANDARD_LADDER + (INFINITY,):
        for n in (0.5, 1.0, 2.0):
            out[(c, n)] = solve_star(unit.with_c(c), n)
    return out


@pytest.fixture(scope="session")
def picard_pair(unit):
    cfg = SolverConfig(backend="picard")
    return {c: solve_star(unit.with_c(c), 1.0, cfg) for c in (8.0, INFINITY)}
