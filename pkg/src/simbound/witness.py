"""MDP pairs whose value gap meets the tight bounds with equality.

State 0 is the rewarding state, state 1 the zero-reward absorbing state.
"""
from __future__ import annotations

from typing import List, Tuple

import numpy as np

from .hierarchy import OptionModel
from .mdp import Mdp, Policy


def _check(eps_r: float, eps_t: float) -> None:
    if not 0.0 <= eps_r <= 1.0:
        raise ValueError(f"eps_r must lie in [0, 1], got {eps_r}")
    if not 0.0 <= eps_t <= 2.0:
        raise ValueError(f"eps_t must lie in [0, 2], got {eps_t}")


def _pair(eps_r: float, eps_t: float, discount: float) -> Tuple[Mdp, Mdp]:
    _check(eps_r, eps_t)
    t = np.eye(2).reshape(2, 1, 2)
    r = np.array([[1.0], [0.0]])
    t_hat = t.copy()
    # eps_t / 2 of state 0's self-loop mass leaks to the absorbing state
    t_hat[0, 0] = [1.0 - eps_t / 2.0, eps_t / 2.0]
    r_hat = np.array([[1.0 - eps_r], [0.0]])
    return Mdp(t, r, discount), Mdp(t_hat, r_hat, discount)


def two_state_witness(eps_r: float, eps_t: float, gamma: float) -> Tuple[Mdp, Mdp, Policy]:
    if not 0.0 <= gamma < 1.0:
        raise ValueError(f"gamma must lie in [0, 1), got {gamma}")
    m, m_hat = _pair(eps_r, eps_t, gamma)
    return m, m_hat, Policy(np.ones((2, 1)))


def two_state_witness_fh(eps_r: float, eps_t: float, horizon: int) -> Tuple[Mdp, Mdp, Policy]:
    """Same construction for undiscounted horizon-``horizon`` evaluation."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    m, m_hat = _pair(eps_r, eps_t, 1.0)
    return m, m_hat, Policy(np.ones((horizon, 2, 1)))


def hierarchy_witness(n_states: int, eps_r: float, eps_t: float, gamma: float,
                      r_max: float = 1.0) -> Tuple[List[OptionModel], List[OptionModel], List[int]]:
    """One option per state: uniform discounted moves to every other state.

    The reference set moves with ``gamma / (n - 1)`` per state and earns ``r_max``; the
    approximating set loses ``eps_t`` per entry and ``eps_r`` of reward.
    """
    if n_states < 2:
        raise ValueError("n_states must be >= 2")
    if not 0.0 <= gamma < 1.0:
        raise ValueError(f"gamma must lie in [0, 1), got {gamma}")
    if not 0.0 <= eps_r <= r_max:
        raise ValueError(f"eps_r must lie in [0, r_max], got {eps_r}")
    share = gamma / (n_states - 1)
    if eps_t < 0.0 or share - eps_t < 0.0:
        raise ValueError(f"eps_t={eps_t} makes discounted probabilities negative "
                         f"(per-entry mass is {share})")
    off = 1.0 - np.eye(n_states)
    o_star, o_hat = [], []
    for s in range(n_states):
        o_star.append(OptionModel(s, (s,), [r_max], [share * off[s]], gamma))
        o_hat.append(OptionModel(s, (s,), [r_max - eps_r], [(share - eps_t) * off[s]], gamma))
    return o_star, o_hat, list(range(n_states))
