import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_instance(rng, num_cells, num_users, phi_scale=1.0):
    """Positive random (beta, gamma, phi) arrays, log-uniform gains."""
    beta = 10.0 ** rng.uniform(-4.0, 0.5, size=(num_cells, num_users, num_cells))
    gamma = 10.0 ** rng.uniform(0.0, 1.5, size=(num_cells, num_users))
    phi = phi_scale * 10.0 ** rng.uniform(-0.5, 1.0, size=(num_cells, num_users))
    return beta, gamma, phi


def random_assignment(rng, num_cells, num_users):
    return np.stack(
        [rng.permutation(num_users) for _ in range(num_cells)]
    ).astype(np.int64)
