import time
from contextlib import contextmanager

import pytest

_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_KEY] = []


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line[1])


class _Check:
    def __init__(self):
        self.failures = []
        self.details = []

    def __call__(self, ok, detail, show=True):
        if show:
            self.details.append(detail)
        if not ok:
            self.failures.append(detail)


@pytest.fixture
def acceptance(request):
    """Context manager that times one criterion and records a PASS/FAIL line."""
    lines = request.config.stash[_KEY]

    @contextmanager
    def criterion(number, title, budget):
        check = _Check()
        start = time.perf_counter()
        error = None
        try:
            yield check
        except Exception as exc:  # recorded, then re-raised
            error = exc
        elapsed = time.perf_counter() - start
        if elapsed >= budget:
            check.failures.append(f"runtime {elapsed:.2f}s >= {budget}s")
        ok = error is None and not check.failures
        status = "PASS" if ok else "FAIL"
        info = "; ".join(check.failures if not ok else check.details)
        if error is not None:
            info = f"{type(error).__name__}: {error}"
        line = f"[{status}] criterion {number}: {title} ({elapsed:.2f}s / {budget:g}s) {info}"
        lines.append((number, line))
        print(line)
        if error is not None:
            raise error
        assert ok, line

    return criterion
