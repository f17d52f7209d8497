import numpy as np
import pytest

from bssplit import assemble, build_transformed, disk_mesh_from_rings

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def ring_mesh():
    cache = {}

    def get(n_rings):
        if n_rings not in cache:
            cache[n_rings] = disk_mesh_from_rings(n_rings)
        return cache[n_rings]

    return get


@pytest.fixture(scope="session")
def small_setup(ring_mesh):
    mesh = ring_mesh(3)
    fem = assemble(mesh)
    return mesh, fem, build_transformed(fem)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
