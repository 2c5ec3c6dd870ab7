import time
from dataclasses import dataclass

import pytest

_RECORDS: dict[int, "Criterion"] = {}


@dataclass
class Criterion:
    number: int
    name: str
    worst: float = float("nan")
    tol: float = float("nan")
    seconds: float = float("nan")
    limit: float = float("nan")
    passed: bool = False

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (f"{verdict} [{self.number:>2}] {self.name:<32} worst={self.worst:.3e} tol={self.tol:.1e} "
                f"time={self.seconds:.2f}s limit={self.limit:.0f}s")


class Recorder:
    """Times one criterion and checks its worst error against the tolerance."""

    def __init__(self, number: int, name: str, tol: float, limit: float):
        self.record = Criterion(number, name, tol=tol, limit=limit)
        _RECORDS[number] = self.record

    def __enter__(self):
        self._start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.record.seconds = time.perf_counter() - self._start
        return False

    def finish(self, worst: float) -> None:
        r = self.record
        r.worst = float(worst)
        r.passed = r.worst <= r.tol and r.seconds <= r.limit
        print(r.line())
        assert r.worst <= r.tol, f"worst error {r.worst:.3e} exceeds {r.tol:.1e}"
        assert r.seconds <= r.limit, f"runtime {r.seconds:.2f}s exceeds {r.limit:.0f}s"


@pytest.fixture
def criterion():
    return Recorder


def pytest_terminal_summary(terminalreporter):
    if not _RECORDS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RECORDS):
        terminalreporter.write_line(_RECORDS[number].line())
