import numpy as np
import pytest

from elastoacoustic.assembly import Material
from elastoacoustic.mesh import Region, build_mesh, generate_mesh, two_rectangle_mesh

TEST1_MATERIAL = dict(rho_e=2.7, lam=51.20, mu=26.29, zeta=0.0, rho_a=1.0, c=1.0)


def unit_square(region=Region.ELASTIC, degree=1, side=1.0):
    """Single square element [0, side]^2 whose four faces are all outer boundary."""
    v = np.array([[0, 0], [side, 0], [side, side], [0, side]], float)
    ix = side if region == Region.ELASTIC else -1.0
    return build_mesh(v, [[0, 1, 2, 3]], [region], degree, (0, side, 0, side), ix)


@pytest.fixture(scope="session")
def material():
    return Material(**TEST1_MATERIAL)


@pytest.fixture(scope="session")
def damped_material():
    return Material(rho_e=2.7, lam=51.20, mu=26.29, zeta=0.4, rho_a=1.3, c=1.5)


@pytest.fixture(scope="session")
def mesh120():
    return generate_mesh(n_elastic=60, n_acoustic=60, degree=2, rng_seed=0)


@pytest.fixture(scope="session")
def mesh50():
    return generate_mesh(n_elastic=25, n_acoustic=25, degree=2, rng_seed=0)


@pytest.fixture(scope="session")
def mesh10():
    return generate_mesh(n_elastic=4, n_acoustic=6, degree=2, rng_seed=3)


@pytest.fixture(scope="session")
def two_rect():
    return two_rectangle_mesh((-1.0, 1.0, 0.0, 1.0), 0.0, degree=1)


# One summary line per acceptance criterion, printed after the test session.
ACCEPTANCE_LINES: list[str] = []


def record_criterion(label: str, ok: bool, detail: str) -> bool:
    ACCEPTANCE_LINES.append(f"criterion {label:<3} {'PASS' if ok else 'FAIL'}  {detail}")
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: (int(s.split()[1].rstrip("abc")), s.split()[1])):
            terminalreporter.write_line(line)
