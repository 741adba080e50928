import numpy as np
import pytest

from adkrylov.sparse import CsrMatrix

_ACCEPTANCE = []


def record_acceptance(number, passed, detail):
    _ACCEPTANCE.append((number, passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in sorted(_ACCEPTANCE, key=lambda r: r[0]):
        status = {True: "PASS", False: "FAIL", None: "SKIP"}[passed]
        terminalreporter.write_line(f"criterion {number}: {status}  {detail}")


def diag_dominant(rng, n, density=1.0):
    """Random nonsymmetric matrix with a diagonal boost of n."""
    dense = rng.uniform(size=(n, n))
    if density < 1.0:
        dense *= rng.uniform(size=(n, n)) < density
    dense += n * np.eye(n)
    return dense


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def small_system(rng):
    dense = diag_dominant(rng, 20, density=0.4)
    return CsrMatrix.from_dense(dense), dense, rng.uniform(size=20)
