import numpy as np
import pytest

from thermodelay import PhysicalParams, StateVector, build_grid


@pytest.fixture
def reference_params() -> PhysicalParams:
    """Stable parameter set used by the regression baselines."""
    return PhysicalParams(alpha=1.0, beta=1.0, gamma=0.5, kappa=1.0, tau=0.5, ell=np.pi)


@pytest.fixture
def unit_params() -> PhysicalParams:
    return PhysicalParams(alpha=1.0, beta=1.0, gamma=1.0, kappa=1.0, tau=1.0, ell=1.0)


def random_state(rng: np.random.Generator, g) -> StateVector:
    def draw(*shape):
        return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)

    return StateVector(
        u=draw(g.n_interior),
        v=draw(g.n_interior),
        z=draw(g.n_cells, g.n_rho),
        theta=draw(g.n_cells),
    )


@pytest.fixture
def small_grid():
    return build_grid(16, 8, np.pi)
