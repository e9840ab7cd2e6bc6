"""Search for the largest value gap reachable by perturbing an MDP within (eps_t, eps_r).

Transition rows are perturbed by pairwise mass transport (take mass from one successor,
give it to another), which keeps rows on the simplex and moves their L1 distance from the
base row by at most twice the transported mass. Rewards move per (s, a) inside
``[R - eps_r, R + eps_r]`` intersected with [0, 1].

Random streams come from numpy's PCG64 seeded with ``(seed, restart)``, so each restart is
reproducible on its own and restarts can be run in any order.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .bounds import tight_bound
from .mdp import Mdp, Policy, _check_stationary, _mix, _solve_values, exact_value

VIOLATION_TOL = 1e-9
MAX_CANDIDATES = 10_000_000


class BoundViolation(RuntimeError):
    """Raised when a search finds a gap above the tight bound."""

    def __init__(self, mdp: Mdp, mdp_hat: Mdp, policy: Policy, gap: float, bound: float):
        super().__init__(f"value gap {gap!r} exceeds tight bound {bound!r}")
        self.mdp = mdp
        self.mdp_hat = mdp_hat
        self.policy = policy
        self.gap = gap
        self.bound = bound


@dataclass(frozen=True)
class SearchConfig:
    eps_t: float
    eps_r: float
    iterations: int = 2000
    restarts: int = 20
    seed: int = 0
    step: float = 0.1
    decay: float = 0.995
    grid_resolution: Optional[int] = None

    def __post_init__(self):
        if not 0.0 <= self.eps_t <= 2.0 or not 0.0 <= self.eps_r <= 1.0:
            raise ValueError(f"invalid epsilons eps_t={self.eps_t}, eps_r={self.eps_r}")
        if self.iterations < 1 or self.restarts < 1:
            raise ValueError("iterations and restarts must be >= 1")
        if not self.step > 0.0 or not 0.0 < self.decay <= 1.0:
            raise ValueError("step must be positive and decay in (0, 1]")
        if self.grid_resolution is not None and self.grid_resolution < 1:
            raise ValueError("grid_resolution must be >= 1")


@dataclass(frozen=True, eq=False)
class SearchResult:
    best_gap: float
    best_mdp_hat: Mdp
    bound_value: float
    achievement_ratio: float
    trace: Tuple[float, ...]
    best_restart: int = 0


def restart_rng(seed: int, restart: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64([int(seed), int(restart)]))


def _fit_row(p: np.ndarray, q: np.ndarray, budget: float) -> np.ndarray:
    # convex combination of p and q whose L1 distance from p is at most budget
    dist = float(np.abs(q - p).sum())
    lam = 0.0 if dist == 0.0 else min(1.0, budget / dist)
    while True:
        row = (1.0 - lam) * p + lam * q
        if np.abs(row - p).sum() <= budget or lam == 0.0:
            return row
        lam *= 1.0 - 1e-9


def perturb_within(mdp: Mdp, eps_t: float, eps_r: float, seed=None) -> Mdp:
    """Random MDP whose measured misspecification from ``mdp`` is at most (eps_t, eps_r).

    Roughly half the rows use the full budget. Targets are point masses or Dirichlet(0.5)
    draws, which reach both vertex-like and interior perturbations.
    """
    if not 0.0 <= eps_t <= 2.0 or not 0.0 <= eps_r <= 1.0:
        raise ValueError(f"invalid epsilons eps_t={eps_t}, eps_r={eps_r}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n_s, n_a = mdp.n_states, mdp.n_actions
    t = np.array(mdp.transitions)
    for s in range(n_s):
        for a in range(n_a):
            if rng.random() < 1.0 / 3.0:
                q = np.zeros(n_s)
                q[rng.integers(n_s)] = 1.0
            else:
                q = rng.dirichlet(np.full(n_s, 0.5))
            frac = 1.0 if rng.random() < 0.5 else rng.random()
            t[s, a] = _fit_row(mdp.transitions[s, a], q, eps_t * frac)
    shift = np.where(rng.random((n_s, n_a)) < 0.5,
                     rng.choice([-1.0, 1.0], size=(n_s, n_a)),
                     rng.uniform(-1.0, 1.0, size=(n_s, n_a)))
    r = np.clip(mdp.rewards + eps_r * shift, 0.0, 1.0)
    return Mdp(t, r, mdp.discount)


def value_gap(mdp: Mdp, mdp_hat: Mdp, policy: Policy) -> float:
    """Largest per-state ``|V - V_hat|`` under the same stationary policy."""
    return float(np.max(np.abs(exact_value(mdp, policy) - exact_value(mdp_hat, policy))))


class _Objective:
    def __init__(self, mdp: Mdp, policy: Policy):
        _check_stationary(mdp, policy)
        self.pi = policy.probs
        self.gamma = mdp.discount
        self.v = exact_value(mdp, policy)

    def __call__(self, t: np.ndarray, r: np.ndarray) -> float:
        p_pi, r_pi = _mix(t, r, self.pi)
        return float(np.max(np.abs(self.v - _solve_values(p_pi, r_pi, self.gamma))))


def _max_transport(q: np.ndarray, p: np.ndarray, j: int, k: int, eps_t: float) -> float:
    """Largest mass movable from q[j] to q[k] keeping ||q - p||_1 <= eps_t."""
    a = q[j] - p[j]
    b = q[k] - p[k]
    budget = eps_t - (np.abs(q - p).sum() - abs(a) - abs(b))
    # |a - d| + |b + d| is non-increasing up to max(a, -b) and grows with slope 2 after it
    x = min(max(0.0, a, -b), q[j])
    room = budget - abs(a - x) - abs(b + x)
    return float(min(q[j], x + max(room, 0.0) / 2.0))


def _climb_continuous(base: Mdp, f: _Objective, cfg: SearchConfig, rng: np.random.Generator,
                      t: np.ndarray, r: np.ndarray):
    n_s, n_a = base.n_states, base.n_actions
    lo = np.maximum(base.rewards - cfg.eps_r, 0.0)
    hi = np.minimum(base.rewards + cfg.eps_r, 1.0)
    kinds = [k for k, on in (("t", cfg.eps_t > 0 and n_s > 1), ("r", cfg.eps_r > 0)) if on]
    cur = f(t, r)
    step = cfg.step
    for _ in range(cfg.iterations if kinds else 0):
        kind = kinds[rng.integers(len(kinds))]
        s, a = int(rng.integers(n_s)), int(rng.integers(n_a))
        if kind == "r":
            old = r[s, a]
            r[s, a] = np.clip(old + step * rng.choice([-1.0, 1.0]), lo[s, a], hi[s, a])
            g = f(t, r)
            if g > cur:
                cur = g
            else:
                r[s, a] = old
        else:
            j, k = (int(x) for x in rng.choice(n_s, size=2, replace=False))
            d = min(step, _max_transport(t[s, a], base.transitions[s, a], j, k, cfg.eps_t))
            if d > 0.0:
                old = t[s, a].copy()
                t[s, a, j] = max(old[j] - d, 0.0)
                t[s, a, k] = old[k] + d
                g = f(t, r)
                if g > cur:
                    cur = g
                else:
                    t[s, a] = old
        step *= cfg.decay
    return cur, t, r


# ---- grid mode: every perturbation is an integer lattice point shared with brute_force_gap ----

def _grid_units(eps_t: float, eps_r: float, n: int) -> Tuple[float, float]:
    return eps_t / (2 * n), eps_r / n


def _grid_row(base_row: np.ndarray, d: np.ndarray, unit: float) -> np.ndarray:
    return np.maximum(base_row + unit * d, 0.0)


def _grid_reward(base_r, i, unit):
    return np.clip(base_r + unit * i, 0.0, 1.0)


def _row_ok(base_row: np.ndarray, d: np.ndarray, unit: float, n: int) -> bool:
    return int(np.abs(d).sum()) <= 2 * n and bool(np.all(base_row + unit * d >= -1e-12))


def _reward_ok(base_r: float, i: int, unit: float) -> bool:
    return -1e-12 <= base_r + unit * i <= 1.0 + 1e-12


def _row_candidates(base_row: np.ndarray, unit: float, n: int) -> List[np.ndarray]:
    if unit == 0.0:
        return [np.zeros(len(base_row))]
    out = []
    for head in itertools.product(range(-2 * n, 2 * n + 1), repeat=len(base_row) - 1):
        d = np.array(head + (-sum(head),), dtype=float)
        if _row_ok(base_row, d, unit, n):
            out.append(d)
    return out


def _reward_candidates(base_r: float, unit: float, n: int) -> List[int]:
    if unit == 0.0:
        return [0]
    return [i for i in range(-n, n + 1) if _reward_ok(base_r, i, unit)]


def _climb_grid(base: Mdp, f: _Objective, cfg: SearchConfig, rng: np.random.Generator,
                d: np.ndarray, idx: np.ndarray):
    n = cfg.grid_resolution
    n_s, n_a = base.n_states, base.n_actions
    ut, ur = _grid_units(cfg.eps_t, cfg.eps_r, n)
    bt, br = base.transitions, base.rewards

    def build():
        t = np.stack([[_grid_row(bt[s, a], d[s, a], ut) for a in range(n_a)] for s in range(n_s)])
        return t, _grid_reward(br, idx, ur)

    kinds = [k for k, on in (("t", ut > 0 and n_s > 1), ("r", ur > 0)) if on]
    cur = f(*build())
    for _ in range(cfg.iterations if kinds else 0):
        kind = kinds[rng.integers(len(kinds))]
        s, a = int(rng.integers(n_s)), int(rng.integers(n_a))
        if kind == "r":
            step = int(rng.choice([-1, 1]))
            if abs(idx[s, a] + step) > n or not _reward_ok(br[s, a], idx[s, a] + step, ur):
                continue
            idx[s, a] += step
            g = f(*build())
            if g > cur:
                cur = g
            else:
                idx[s, a] -= step
        else:
            j, k = (int(x) for x in rng.choice(n_s, size=2, replace=False))
            new = d[s, a].copy()
            new[j] -= 1
            new[k] += 1
            if not _row_ok(bt[s, a], new, ut, n):
                continue
            old = d[s, a].copy()
            d[s, a] = new
            g = f(*build())
            if g > cur:
                cur = g
            else:
                d[s, a] = old
    t, r = build()
    return cur, t, r


def _random_grid_start(base: Mdp, cfg: SearchConfig, rng: np.random.Generator):
    n = cfg.grid_resolution
    ut, ur = _grid_units(cfg.eps_t, cfg.eps_r, n)
    n_s, n_a = base.n_states, base.n_actions
    d = np.zeros((n_s, n_a, n_s))
    idx = np.zeros((n_s, n_a), dtype=int)
    for s in range(n_s):
        for a in range(n_a):
            rows = _row_candidates(base.transitions[s, a], ut, n)
            d[s, a] = rows[rng.integers(len(rows))]
            rs = _reward_candidates(base.rewards[s, a], ur, n)
            idx[s, a] = rs[rng.integers(len(rs))]
    return d, idx


def hill_climb_max_gap(mdp: Mdp, policy: Policy, config: SearchConfig) -> SearchResult:
    """Random-restart hill climbing on ``max_s |V - V_hat|``.

    Restart 0 starts from ``mdp`` itself; the others from a random point of the
    constraint set. With ``config.grid_resolution`` set, moves are restricted to the
    lattice enumerated by :func:`brute_force_gap`.

    Raises :class:`BoundViolation` if any result exceeds the tight bound.
    """
    if not mdp.discount < 1.0:
        raise ValueError("search needs a discounted MDP")
    f = _Objective(mdp, policy)
    bound = tight_bound(config.eps_r, config.eps_t, mdp.discount)
    best = None
    trace = []
    for restart in range(config.restarts):
        rng = restart_rng(config.seed, restart)
        if config.grid_resolution is None:
            if restart == 0:
                t, r = np.array(mdp.transitions), np.array(mdp.rewards)
            else:
                start = perturb_within(mdp, config.eps_t, config.eps_r, rng)
                t, r = np.array(start.transitions), np.array(start.rewards)
            gap, t, r = _climb_continuous(mdp, f, config, rng, t, r)
        else:
            if restart == 0:
                d = np.zeros(mdp.transitions.shape)
                idx = np.zeros(mdp.rewards.shape, dtype=int)
            else:
                d, idx = _random_grid_start(mdp, config, rng)
            gap, t, r = _climb_grid(mdp, f, config, rng, d, idx)
        trace.append(gap)
        if best is None or gap > best[0]:
            best = (gap, t, r, restart)
    gap, t, r, restart = best
    # drop accumulated rounding in row sums before freezing
    t = t / t.sum(axis=2, keepdims=True)
    mdp_hat = Mdp(t, r, mdp.discount)
    if gap > bound + VIOLATION_TOL:
        raise BoundViolation(mdp, mdp_hat, policy, gap, bound)
    ratio = gap / bound if bound > 0.0 else (1.0 if gap == 0.0 else float("inf"))
    return SearchResult(gap, mdp_hat, bound, min(ratio, 1.0), tuple(trace), restart)


def brute_force_gap(mdp: Mdp, policy: Policy, eps_t: float, eps_r: float,
                    grid_resolution: int) -> float:
    """Exact maximum of ``max_s |V - V_hat|`` over the perturbation lattice.

    Transition rows move in units of ``eps_t / (2 n)`` with at most ``2 n`` units of
    displacement; rewards in units of ``eps_r / n``. Only tiny instances are accepted.
    """
    n = int(grid_resolution)
    if n < 1:
        raise ValueError("grid_resolution must be >= 1")
    if mdp.n_states > 3 or mdp.n_actions > 2:
        raise ValueError(f"brute force supports |S| <= 3 and |A| <= 2, got "
                         f"|S|={mdp.n_states}, |A|={mdp.n_actions}")
    if not mdp.discount < 1.0:
        raise ValueError("brute force needs a discounted MDP")
    f = _Objective(mdp, policy)
    n_s, n_a = mdp.n_states, mdp.n_actions
    ut, ur = _grid_units(eps_t, eps_r, n)
    row_sets = [[_row_candidates(mdp.transitions[s, a], ut, n) for a in range(n_a)] for s in range(n_s)]
    rew_sets = [[_reward_candidates(mdp.rewards[s, a], ur, n) for a in range(n_a)] for s in range(n_s)]
    total = 1
    for s in range(n_s):
        for a in range(n_a):
            total *= len(row_sets[s][a]) * len(rew_sets[s][a])
    if total > MAX_CANDIDATES:
        raise ValueError(f"grid has {total} candidates, more than the limit of {MAX_CANDIDATES}; "
                         f"lower grid_resolution")

    pi = f.pi
    # per state: every mixed row / mixed reward reachable by choosing one candidate per action
    mixed_rows, mixed_rewards = [], []
    for s in range(n_s):
        rows = [[_grid_row(mdp.transitions[s, a], d, ut) for d in row_sets[s][a]] for a in range(n_a)]
        mixed_rows.append(np.array([sum(pi[s, a] * c[a] for a in range(n_a))
                                    for c in itertools.product(*rows)]))
        rews = [[float(_grid_reward(mdp.rewards[s, a], i, ur)) for i in rew_sets[s][a]] for a in range(n_a)]
        mixed_rewards.append(np.array([sum(pi[s, a] * c[a] for a in range(n_a))
                                       for c in itertools.product(*rews)]))

    r_all = np.array(list(itertools.product(*mixed_rewards)))  # (N_r, S)
    best = 0.0
    eye = np.eye(n_s)
    chunk = []

    def flush():
        nonlocal best
        p = np.array(chunk)
        inv = np.linalg.inv(eye - f.gamma * p)
        v_hat = inv @ r_all.T  # (B, S, N_r)
        best = max(best, float(np.abs(v_hat - f.v[None, :, None]).max()))
        chunk.clear()

    for combo in itertools.product(*mixed_rows):
        chunk.append(np.stack(combo))
        if len(chunk) >= 4096:
            flush()
    if chunk:
        flush()
    return best
