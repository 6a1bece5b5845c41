import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_hermitian(d, rng):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (a + a.conj().T) / 2


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line for an acceptance criterion.

    Usage: ``with criterion(3, "UCR decomposition"): ...``.
    """
    from contextlib import contextmanager

    @contextmanager
    def run(number, title):
        try:
            yield
        except BaseException as exc:
            line = f"criterion {number:2d} FAIL  {title}: {str(exc).splitlines()[0] if str(exc) else type(exc).__name__}"
            ACCEPTANCE_LINES.append(line)
            print(line)
            raise
        line = f"criterion {number:2d} PASS  {title}"
        ACCEPTANCE_LINES.append(line)
        print(line)

    return run


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
