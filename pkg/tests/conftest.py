import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from spanflats import _kernels  # noqa: E402
from spanflats import enumeration as E  # noqa: E402


@pytest.fixture(params=["numba", "numpy"])
def backend(request):
    """Run a test under each kernel backend, restoring the original afterwards."""
    if request.param == "numba" and _kernels.numba is None:
        pytest.skip("numba not installed")
    old = _kernels.backend()
    _kernels.set_backend(request.param)
    E._spanned_flats_cached.cache_clear()
    yield request.param
    _kernels.set_backend(old)
    E._spanned_flats_cached.cache_clear()


def pytest_configure(config):
    config._acceptance_lines = []


@pytest.fixture
def criterion(request):
    """Record and print the one-line verdict of an acceptance criterion."""
    def report(num, ok, detail):
        line = f"criterion {num:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        request.config._acceptance_lines.append(line)
        print(line)
        return ok
    return report


def pytest_terminal_summary(terminalreporter, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
