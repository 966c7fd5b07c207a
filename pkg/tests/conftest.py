import numpy as np
import pytest
from hypothesis import settings

from slext.problem import builtin_bessel, builtin_free, builtin_symmetric_bessel

settings.register_profile("slext", deadline=None, max_examples=15, derandomize=True)
settings.load_profile("slext")


@pytest.fixture(scope="session")
def free():
    return builtin_free(0.0, 1.0)


@pytest.fixture(scope="session")
def bessel03():
    return builtin_bessel(0.3, 0.0, 1.0)


@pytest.fixture(scope="session")
def bessel0():
    return builtin_bessel(0.0, 0.0, 1.0)


@pytest.fixture(scope="session")
def sym_half():
    return builtin_symmetric_bessel(0.5, 0.0, 2.0)


@pytest.fixture
def rng():
    return np.random.default_rng(7)


_ACCEPTANCE = {}


@pytest.fixture(scope="session")
def acceptance_results():
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    from slext.acceptance import format_table

    terminalreporter.section("acceptance criteria")
    terminalreporter.write_line(format_table([_ACCEPTANCE[k] for k in sorted(_ACCEPTANCE)]))
