"""Tabular MDPs, policies, exact policy evaluation and misspecification measurement."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

ROW_TOL = 1e-12
RESIDUAL_TOL = 1e-10


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def _check_stochastic(arr: np.ndarray, name: str, tol: float = ROW_TOL) -> None:
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
        raise ValueError(f"{name} entries must lie in [0, 1]")
    err = np.abs(arr.sum(axis=-1) - 1.0)
    if err.size and err.max() > tol:
        idx = np.unravel_index(int(np.argmax(err)), err.shape)
        raise ValueError(f"{name} row {tuple(int(i) for i in idx)} sums to "
                         f"{arr.sum(axis=-1)[idx]!r}, not 1")


@dataclass(frozen=True, eq=False)
class Mdp:
    """Tabular MDP with transitions ``T[s, a, s']``, rewards ``R[s, a]`` in [0, 1] and a discount.

    ``discount`` may be 1.0 for MDPs only ever used in finite-horizon mode;
    discounted evaluation rejects it.
    """

    transitions: np.ndarray
    rewards: np.ndarray
    discount: float

    def __post_init__(self):
        t = _frozen(self.transitions)
        r = _frozen(self.rewards)
        if t.ndim != 3 or t.shape[0] != t.shape[2] or t.shape[0] < 1 or t.shape[1] < 1:
            raise ValueError(f"transitions must have shape (S, A, S), got {t.shape}")
        if r.shape != t.shape[:2]:
            raise ValueError(f"rewards shape {r.shape} does not match (S, A) = {t.shape[:2]}")
        _check_stochastic(t, "transitions")
        if not np.all(np.isfinite(r)) or r.min() < 0.0 or r.max() > 1.0:
            raise ValueError("rewards must lie in [0, 1]")
        gamma = float(self.discount)
        if not 0.0 <= gamma <= 1.0:
            raise ValueError(f"discount must lie in [0, 1], got {gamma}")
        object.__setattr__(self, "transitions", t)
        object.__setattr__(self, "rewards", r)
        object.__setattr__(self, "discount", gamma)

    @property
    def n_states(self) -> int:
        return self.transitions.shape[0]

    @property
    def n_actions(self) -> int:
        return self.transitions.shape[1]

    def with_discount(self, discount: float) -> "Mdp":
        return Mdp(self.transitions, self.rewards, discount)


@dataclass(frozen=True, eq=False)
class Policy:
    """Action probabilities: shape ``(S, A)`` (stationary) or ``(H, S, A)`` (one matrix per timestep)."""

    probs: np.ndarray

    def __post_init__(self):
        p = _frozen(self.probs)
        if p.ndim not in (2, 3):
            raise ValueError(f"policy probs must be 2-D or 3-D, got shape {p.shape}")
        _check_stochastic(p, "policy")
        object.__setattr__(self, "probs", p)

    @property
    def mode(self) -> str:
        return "stationary" if self.probs.ndim == 2 else "sequence"

    @property
    def horizon(self) -> Optional[int]:
        return None if self.probs.ndim == 2 else self.probs.shape[0]

    @classmethod
    def deterministic(cls, actions, n_actions: int) -> "Policy":
        actions = np.asarray(actions, dtype=int)
        return cls(np.eye(n_actions)[actions])

    @classmethod
    def uniform(cls, n_states: int, n_actions: int) -> "Policy":
        return cls(np.full((n_states, n_actions), 1.0 / n_actions))

    def at(self, h: int) -> "Policy":
        return self if self.mode == "stationary" else Policy(self.probs[h])

    def repeated(self, horizon: int) -> "Policy":
        if self.mode != "stationary":
            raise ValueError("only a stationary policy can be repeated")
        return Policy(np.broadcast_to(self.probs, (horizon,) + self.probs.shape))


@dataclass(frozen=True, eq=False)
class PolicyMatrices:
    p_pi: np.ndarray
    r_pi: np.ndarray


@dataclass(frozen=True)
class MisspecReport:
    eps_t: float
    eps_r: float
    argmax_t: Tuple[int, int]
    argmax_r: Tuple[int, int]


@dataclass(frozen=True, eq=False)
class DistributionSeries:
    """t-step state distributions from a common start under two MDPs, for t = 0..t_max."""

    p: np.ndarray
    p_hat: np.ndarray
    overlap_mass: np.ndarray

    @property
    def l1(self) -> np.ndarray:
        return np.abs(self.p - self.p_hat).sum(axis=1)


def _check_stationary(mdp: Mdp, policy: Policy) -> None:
    if policy.mode != "stationary":
        raise ValueError("a stationary policy is required")
    if policy.probs.shape != (mdp.n_states, mdp.n_actions):
        raise ValueError(f"policy shape {policy.probs.shape} does not match "
                         f"(S, A) = {(mdp.n_states, mdp.n_actions)}")


def _mix(transitions: np.ndarray, rewards: np.ndarray, pi: np.ndarray):
    p_pi = np.einsum("sat,sa->st", transitions, pi)
    r_pi = np.einsum("sa,sa->s", rewards, pi)
    return p_pi, r_pi


def _solve_values(p_pi: np.ndarray, r_pi: np.ndarray, gamma: float) -> np.ndarray:
    if gamma == 0.0:
        return r_pi.copy()
    a = np.eye(len(r_pi)) - gamma * p_pi
    v = np.linalg.solve(a, r_pi)
    for _ in range(3):
        res = r_pi - a @ v
        if np.max(np.abs(res), initial=0.0) <= RESIDUAL_TOL:
            break
        v = v + np.linalg.solve(a, res)
    else:
        raise RuntimeError("value solve did not reach residual tolerance")
    return v


def build_policy_matrices(mdp: Mdp, policy: Policy) -> PolicyMatrices:
    _check_stationary(mdp, policy)
    p_pi, r_pi = _mix(mdp.transitions, mdp.rewards, policy.probs)
    return PolicyMatrices(_frozen(p_pi), _frozen(r_pi))


def exact_value(mdp: Mdp, policy: Policy) -> np.ndarray:
    """Solve ``(I - gamma P^pi) V = R^pi`` exactly (dense solve plus refinement)."""
    if not mdp.discount < 1.0:
        raise ValueError(f"discounted evaluation requires discount < 1, got {mdp.discount}")
    _check_stationary(mdp, policy)
    p_pi, r_pi = _mix(mdp.transitions, mdp.rewards, policy.probs)
    return _solve_values(p_pi, r_pi, mdp.discount)


def finite_horizon_value(mdp: Mdp, policy: Policy, horizon: int) -> np.ndarray:
    """Undiscounted backward recursion; returns ``V[h, s]`` for h = 0..H with ``V[H] = 0``.

    A stationary policy is applied at every step.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if policy.mode == "stationary":
        policy = policy.repeated(horizon)
    if policy.horizon != horizon:
        raise ValueError(f"policy sequence has length {policy.horizon}, horizon is {horizon}")
    if policy.probs.shape[1:] != (mdp.n_states, mdp.n_actions):
        raise ValueError("policy dimensions do not match the MDP")
    v = np.zeros((horizon + 1, mdp.n_states))
    for h in range(horizon - 1, -1, -1):
        p_pi, r_pi = _mix(mdp.transitions, mdp.rewards, policy.probs[h])
        v[h] = r_pi + p_pi @ v[h + 1]
    return v


def t_step_distribution(mdp: Mdp, policy: Policy, s0: int, t: int) -> np.ndarray:
    if t < 0:
        raise ValueError("t must be >= 0")
    p_pi = build_policy_matrices(mdp, policy).p_pi
    d = np.zeros(mdp.n_states)
    d[s0] = 1.0
    for _ in range(t):
        d = d @ p_pi
    return d


def overlap(p, q) -> np.ndarray:
    """Element-wise minimum of two non-negative vectors."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"shape mismatch {p.shape} vs {q.shape}")
    return np.minimum(p, q)


def _check_pair(m: Mdp, m_hat: Mdp) -> None:
    if m.transitions.shape != m_hat.transitions.shape:
        raise ValueError(f"state-action spaces differ: {m.transitions.shape} vs {m_hat.transitions.shape}")
    if m.discount != m_hat.discount:
        raise ValueError(f"discounts differ: {m.discount} vs {m_hat.discount}")


def measure_misspec(m: Mdp, m_hat: Mdp) -> MisspecReport:
    """Largest transition-row L1 distance and reward gap over all (s, a).

    The row distance under a mixed policy is convex in the action weights, so the
    per-(s, a) maximum is also the supremum over stationary policies.
    """
    _check_pair(m, m_hat)
    dt = np.abs(m.transitions - m_hat.transitions).sum(axis=2)
    dr = np.abs(m.rewards - m_hat.rewards)
    it = np.unravel_index(int(np.argmax(dt)), dt.shape)
    ir = np.unravel_index(int(np.argmax(dr)), dr.shape)
    return MisspecReport(float(dt[it]), float(dr[ir]),
                         (int(it[0]), int(it[1])), (int(ir[0]), int(ir[1])))


def overlap_trajectory(m: Mdp, m_hat: Mdp, policy: Policy, s0: int, t_max: int) -> DistributionSeries:
    _check_pair(m, m_hat)
    if t_max < 0:
        raise ValueError("t_max must be >= 0")
    p_pi = build_policy_matrices(m, policy).p_pi
    q_pi = build_policy_matrices(m_hat, policy).p_pi
    d = np.zeros((t_max + 1, m.n_states))
    d_hat = np.zeros_like(d)
    d[0, s0] = d_hat[0, s0] = 1.0
    for t in range(t_max):
        d[t + 1] = d[t] @ p_pi
        d_hat[t + 1] = d_hat[t] @ q_pi
    mass = np.minimum(d, d_hat).sum(axis=1)
    return DistributionSeries(_frozen(d), _frozen(d_hat), _frozen(mass))


def policy_iteration(mdp: Mdp, max_iter: int = 1000) -> Tuple[Policy, np.ndarray]:
    """Howard policy iteration for small MDPs. Returns a deterministic optimal policy and its values."""
    if not mdp.discount < 1.0:
        raise ValueError("policy iteration requires discount < 1")
    actions = np.zeros(mdp.n_states, dtype=int)
    for _ in range(max_iter):
        pol = Policy.deterministic(actions, mdp.n_actions)
        v = exact_value(mdp, pol)
        q = mdp.rewards + mdp.discount * mdp.transitions @ v
        best = q.max(axis=1)
        # keep the current action unless another is strictly better; avoids cycling on ties
        current = q[np.arange(mdp.n_states), actions]
        improve = best > current + 1e-12
        if not improve.any():
            return pol, v
        actions = np.where(improve, q.argmax(axis=1), actions)
    raise RuntimeError("policy iteration did not converge")


def random_mdp(rng: np.random.Generator, n_states: int, n_actions: int, discount: float,
               concentration: float = 1.0) -> Mdp:
    """Dirichlet transition rows and uniform rewards; small concentrations give near-deterministic rows."""
    t = rng.dirichlet(np.full(n_states, concentration), size=(n_states, n_actions))
    # dirichlet rows can drift from 1 by a few ulps
    t = t / t.sum(axis=2, keepdims=True)
    r = rng.uniform(0.0, 1.0, size=(n_states, n_actions))
    return Mdp(t, r, discount)


def random_policy(rng: np.random.Generator, n_states: int, n_actions: int) -> Policy:
    p = rng.dirichlet(np.ones(n_actions), size=n_states)
    return Policy(p / p.sum(axis=1, keepdims=True))
