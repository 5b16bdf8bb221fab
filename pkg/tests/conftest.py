import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from abgnrpa.instance import bundled_instances, find_instance, parse_instance, read_instance  # noqa: E402

TINY = "2 2 1.5\n1 2 1 3 2 5\n1 1 2 4\n"


@pytest.fixture
def tiny():
    return parse_instance(TINY, "tiny")


@pytest.fixture(scope="session")
def k1():
    return read_instance(find_instance("kacem", "k1"), dataset="kacem")


@pytest.fixture(scope="session")
def bundled():
    return bundled_instances()


def pytest_terminal_summary(terminalreporter):
    lines = []
    for status in ("passed", "failed"):
        for rep in terminalreporter.stats.get(status, []):
            for key, value in getattr(rep, "user_properties", ()):
                if key == "criterion":
                    lines.append(value)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
