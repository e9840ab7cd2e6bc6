import numpy as np
import pytest

from simbound.adversary import perturb_within
from simbound.mdp import random_mdp, random_policy


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_pair(rng, max_states=6, max_actions=3, gamma=0.9):
    n_s = int(rng.integers(1, max_states + 1))
    n_a = int(rng.integers(1, max_actions + 1))
    m = random_mdp(rng, n_s, n_a, gamma, concentration=float(rng.choice([0.1, 1.0])))
    m_hat = perturb_within(m, float(rng.uniform(0, 2)), float(rng.uniform(0, 1)), rng)
    return m, m_hat, random_policy(rng, n_s, n_a)
