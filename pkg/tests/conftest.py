import pytest

from bfmech import Additive, Cut, Instance


@pytest.fixture
def path_cut():
    """Unit-weight path 0-1-2, each agent owning its own vertex."""
    return Cut(3, ((0, 1, 1.0), (1, 2, 1.0)), (0, 1, 2))


@pytest.fixture
def additive_pair():
    return Instance((2.0, 2.0), 2.0, Additive((5.0, 3.0)))


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record a one-line verdict for the acceptance summary."""

    def record(number: int, title: str, passed: bool, detail: str = "") -> None:
        status = "PASS" if passed else "FAIL"
        ACCEPTANCE_LINES.append(f"criterion {number}: {status}  {title}" + (f"  ({detail})" if detail else ""))

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
