import time
from contextlib import contextmanager

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def cherry():
    from bilag.torus import cherry_field

    return cherry_field()


@pytest.fixture(scope="session")
def cherry_map(cherry):
    from bilag.torus import return_map

    return return_map(cherry, 512)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)


@pytest.fixture
def criterion(request):
    """Context manager factory: time a criterion and record one PASS/FAIL line.

    The body fills ``result["ok"]`` and ``result["detail"]``; the runtime budget
    (seconds, or ``None``) is part of the verdict.
    """
    lines = request.config.stash[_ACCEPTANCE]

    @contextmanager
    def run(number: int, budget: float | None):
        result = {"ok": False, "detail": "did not finish"}
        t0 = time.perf_counter()
        try:
            yield result
        finally:
            elapsed = time.perf_counter() - t0
            result["elapsed"] = elapsed
            in_time = budget is None or elapsed < budget
            result["passed"] = bool(result["ok"] and in_time)
            limit = f" < {budget:g} s" if budget is not None else ""
            verdict = "PASS" if result["passed"] else "FAIL"
            lines.append(f"criterion {number:2d}: {verdict}  {result['detail']}  [{elapsed:.1f} s{limit}]")
            print(lines[-1])

    return run
