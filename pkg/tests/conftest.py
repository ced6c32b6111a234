import numpy as np
import pytest

from levelscatter.mesh import generate_disk_mesh

_ACCEPTANCE = []


@pytest.fixture(scope="session")
def mesh_coarse():
    return generate_disk_mesh(1.0, 0.1)


@pytest.fixture(scope="session")
def mesh_mid():
    return generate_disk_mesh(1.0, 0.05)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def acceptance_report():
    def record(criterion, passed, detail):
        _ACCEPTANCE.append((criterion, passed, detail))

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, passed, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {criterion}: {detail}")
