import os

import numpy as np
import pytest

from frozen_sl import Grid, Potential, ProblemConfig

SEED = int(os.environ.get("FROZEN_SL_SEED", "20240611"))

ALL_CONFIGS = [ProblemConfig(a, b, k) for a in (0, 1) for b in (0, 1) for k in range(1, 6)]


def make_rng(offset: int = 0) -> np.random.Generator:
    return np.random.default_rng(SEED + offset)


def random_cos_potential(rng, k: int, modes: int = 6, rho_max: float = 60.0, unit: bool = True,
                         even_about_a: bool = False) -> Potential:
    """Random complex cosine polynomial, optionally even about ``a = pi/k`` (k = 2 only)."""
    grid = Grid.for_frequency(k, rho_max)
    if even_about_a:
        if k != 2:
            raise ValueError("evenness about a is built for k = 2")
        c = np.zeros(2 * modes - 1, dtype=complex)
        c[::2] = rng.normal(size=modes) + 1j * rng.normal(size=modes)
    else:
        c = rng.normal(size=modes) + 1j * rng.normal(size=modes)
    q = Potential.from_cos(c, grid)
    if unit:
        q = Potential.from_cos(c / q.l2_norm(), grid)
    return q


@pytest.fixture
def rng():
    return make_rng()


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import REPORT
    except ImportError:
        return
    if REPORT:
        terminalreporter.section("acceptance criteria")
        for line in REPORT:
            terminalreporter.write_line(line)
