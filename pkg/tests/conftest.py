import pytest

from macgrid.types import Entity, Sentence

RUNNING_TOKENS = "Sever joint , shoulder and upper body pain .".split()


def running_gold():
    return [
        Entity.of("ADE", (0, 1), (7, 7)),          # Sever joint ... pain
        Entity.of("ADE", (0, 0), (3, 3), (7, 7)),  # Sever ... shoulder ... pain
        Entity.of("ADE", (0, 0), (5, 6), (7, 7)),  # Sever ... upper body pain
        Entity.of("POB", (5, 6)),                  # upper body
        Entity.of("POB", (1, 1)),                  # joint
    ]


@pytest.fixture
def running():
    return Sentence(RUNNING_TOKENS, "running"), running_gold()


# -- acceptance reporting: one PASS/FAIL line per criterion, repeated in the terminal summary

_ACCEPTANCE: list[str] = []


class _Criterion:
    def __init__(self, number: int, title: str):
        self.number, self.title = number, title
        self.ok = False
        self.detail = ""

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is not None and not self.detail:
            self.detail = f"{exc_type.__name__}: {exc}"
        status = "PASS" if self.ok and exc_type is None else "FAIL"
        line = f"[{status}] criterion {self.number:>2}: {self.title} ({self.detail})"
        _ACCEPTANCE.append(line)
        print(line)
        return False


@pytest.fixture
def criterion():
    return _Criterion


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda l: int(l.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
