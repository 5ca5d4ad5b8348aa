import pytest

from gkdv_collide.cascade import solve_cascade
from gkdv_collide.linop import make_context


@pytest.fixture(scope="session")
def fd_ctx():
    return {p: make_context(p, "fd4") for p in (2, 4)}


@pytest.fixture(scope="session")
def sp_ctx():
    return {p: make_context(p, "spectral") for p in (2, 4)}


@pytest.fixture(scope="session")
def cascade4():
    return solve_cascade(4)


@pytest.fixture(scope="session")
def cascade2():
    return solve_cascade(2, gauge="explicit")


ACCEPTANCE_LINES = []


def record(criterion: int, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append(f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
