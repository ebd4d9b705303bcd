import numpy as np
import pytest

from rsscma.ldpc import load_alist
from rsscma.scma import load_codebook_set

# one line per acceptance criterion, filled in by tests/test_acceptance.py
ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture(scope="session")
def cb64():
    return load_codebook_set("bundled:6x4")


@pytest.fixture(scope="session")
def cb615():
    return load_codebook_set("bundled:6x15")


@pytest.fixture(scope="session")
def hamming():
    return load_alist("bundled:hamming_7_4")


@pytest.fixture(scope="session")
def code120():
    return load_alist("bundled:ldpc_n256_k120")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
