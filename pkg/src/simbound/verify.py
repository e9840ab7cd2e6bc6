"""Seeded randomized audits of every inequality the library claims.

Each suite returns the worst observed ratio of measured quantity to bound (so 1.0 means a
bound was met with equality) and a count of violations. Trial 0 of the suites that have a
tightness witness runs that witness, so a correct run reports a max ratio of 1.0 there.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict

import numpy as np

from . import bounds
from .adversary import perturb_within, value_gap
from .hierarchy import PhiOption, StateAbstraction, hierarchy_gap_check, multi_time_model
from .mdp import (Policy, exact_value, finite_horizon_value, measure_misspec, overlap_trajectory,
                  policy_iteration, random_mdp, random_policy)
from .witness import hierarchy_witness, two_state_witness, two_state_witness_fh

TOL = 1e-9
GAMMAS = (0.5, 0.9, 0.99)


@dataclass
class SuiteResult:
    trials: int = 0
    max_ratio: float = 0.0
    violations: int = 0

    def record(self, value, bound, tol: float = TOL) -> None:
        """One trial; ``value`` and ``bound`` may be matching arrays (e.g. one entry per t)."""
        value = np.atleast_1d(np.asarray(value, dtype=float))
        bound = np.atleast_1d(np.asarray(bound, dtype=float))
        self.trials += 1
        if np.any(value > bound + tol):
            self.violations += 1
        # ratios against bounds at rounding level are noise; those entries only count as violations
        pos = bound > tol
        if np.any(pos):
            self.max_ratio = max(self.max_ratio, float(np.max(value[pos] / bound[pos])))
        if np.any(value[~pos] > bound[~pos] + tol):
            self.max_ratio = float("inf")

    def to_dict(self) -> dict:
        ratio = self.max_ratio if np.isfinite(self.max_ratio) else None
        return {"trials": self.trials, "max_ratio": ratio, "violations": self.violations}


def _random_pair(rng, max_states, max_actions, gamma=None):
    n_s = int(rng.integers(1, max_states + 1))
    n_a = int(rng.integers(1, max_actions + 1))
    gamma = float(rng.choice(GAMMAS)) if gamma is None else gamma
    conc = float(rng.choice([0.1, 1.0]))
    m = random_mdp(rng, n_s, n_a, gamma, concentration=conc)
    m_hat = perturb_within(m, float(rng.uniform(0, 2)), float(rng.uniform(0, 1)), rng)
    return m, m_hat


def suite_overlap(rng, trials, max_states, max_actions) -> Dict[str, SuiteResult]:
    """Overlap mass >= (1 - eps_t/2)^t and L1 drift <= min(2, t eps_t), t <= 50.

    The decay ratio is lower bound over observed mass.
    """
    decay, drift = SuiteResult(), SuiteResult()
    for trial in range(trials):
        if trial == 0:
            m, m_hat, policy = two_state_witness(0.0, float(rng.uniform(0, 2)), 0.9)
        else:
            m, m_hat = _random_pair(rng, max_states, max_actions)
            policy = random_policy(rng, m.n_states, m.n_actions)
        eps_t = measure_misspec(m, m_hat).eps_t
        s0 = int(rng.integers(m.n_states))
        series = overlap_trajectory(m, m_hat, policy, s0, 50)
        lower = [bounds.overlap_lower_bound(min(eps_t, 2.0), t) for t in range(51)]
        decay.record(lower, series.overlap_mass, 1e-10)
        cap = [bounds.l1_drift_bound(min(eps_t, 2.0), t) for t in range(51)]
        drift.record(series.l1, cap, 1e-10)
    return {"overlap_decay": decay, "l1_drift": drift}


def suite_simulation_lemma(rng, trials, max_states, max_actions) -> Dict[str, SuiteResult]:
    tight, original = SuiteResult(), SuiteResult()
    for trial in range(trials):
        if trial == 0:
            er, et, g = float(rng.uniform(0, 1)), float(rng.uniform(0, 2)), float(rng.choice(GAMMAS))
            m, m_hat, policy = two_state_witness(er, et, g)
        else:
            m, m_hat = _random_pair(rng, max_states, max_actions)
            policy = random_policy(rng, m.n_states, m.n_actions)
        rep = measure_misspec(m, m_hat)
        gap = value_gap(m, m_hat, policy)
        tight.record(gap, bounds.tight_bound(rep.eps_r, rep.eps_t, m.discount))
        o = bounds.original_bound(rep.eps_r, rep.eps_t, m.discount)
        if o < 1.0 / (1.0 - m.discount):
            original.record(gap, o)
    return {"tight": tight, "original": original}


def suite_finite_horizon(rng, trials, max_states, max_actions) -> Dict[str, SuiteResult]:
    res = SuiteResult()
    for trial in range(trials):
        horizon = int(rng.integers(1, 31))
        if trial == 0:
            er, et = float(rng.uniform(0, 1)), float(rng.uniform(0, 2))
            m, m_hat, policy = two_state_witness_fh(er, et, horizon)
        else:
            m, m_hat = _random_pair(rng, max_states, max_actions, gamma=1.0)
            probs = rng.dirichlet(np.ones(m.n_actions), size=(horizon, m.n_states))
            policy = Policy(probs / probs.sum(axis=2, keepdims=True))
        rep = measure_misspec(m, m_hat)
        v = finite_horizon_value(m, policy, horizon)
        v_hat = finite_horizon_value(m_hat, policy, horizon)
        gap = float(np.max(np.abs(v[0] - v_hat[0])))
        res.record(gap, bounds.fh_tight_bound(rep.eps_r, rep.eps_t, horizon))
    return {"tight": res}


def suite_optimal_loss(rng, trials, max_states, max_actions) -> Dict[str, SuiteResult]:
    res = SuiteResult()
    for _ in range(trials):
        m, m_hat = _random_pair(rng, max_states, max_actions)
        rep = measure_misspec(m, m_hat)
        _, v_star = policy_iteration(m)
        pi_hat, _ = policy_iteration(m_hat)
        loss = float(np.max(v_star - exact_value(m, pi_hat)))
        res.record(loss, bounds.optimal_policy_loss_bound(rep.eps_r, rep.eps_t, m.discount))
    return {"loss": res}


def random_option_pair(rng, max_states, max_actions):
    """Option sets built from a random ground MDP and a perturbed copy, same option policies."""
    n_s = int(rng.integers(2, max(max_states, 2) + 1))
    n_a = int(rng.integers(1, max_actions + 1))
    gamma = float(rng.choice(GAMMAS))
    m = random_mdp(rng, n_s, n_a, gamma, concentration=float(rng.choice([0.2, 1.0])))
    m_hat = perturb_within(m, float(rng.uniform(0, 1)), float(rng.uniform(0, 0.5)), rng)
    n_abs = int(rng.integers(1, n_s + 1))
    mapping = np.concatenate([np.arange(n_abs), rng.integers(0, n_abs, size=n_s - n_abs)])
    phi = StateAbstraction(tuple(int(x) for x in rng.permutation(mapping)))
    o_star, o_hat = [], []
    for home in range(phi.n_abstract):
        opt = PhiOption(home, random_policy(rng, n_s, n_a))
        o_star.append(multi_time_model(m, phi, opt))
        o_hat.append(multi_time_model(m_hat, phi, opt))
    return o_star, o_hat, list(range(phi.n_abstract))


def suite_hierarchy(rng, trials, max_states, max_actions) -> Dict[str, SuiteResult]:
    tight, existing = SuiteResult(), SuiteResult()
    for trial in range(trials):
        if trial == 0:
            n = int(rng.integers(2, 11))
            g = float(rng.choice(GAMMAS))
            o_star, o_hat, pol = hierarchy_witness(n, float(rng.uniform(0, 1)),
                                                   float(rng.uniform(0, g / (n - 1))), g)
        else:
            o_star, o_hat, pol = random_option_pair(rng, max_states, max_actions)
        check = hierarchy_gap_check(o_star, o_hat, pol)
        tight.record(check.report.measured_gap, check.report.tight)
        existing.record(check.report.measured_gap, check.report.original)
    return {"tight": tight, "existing": existing}


def suite_bounds(rng, trials, max_states, max_actions) -> Dict[str, SuiteResult]:
    disc, fh, hier = SuiteResult(), SuiteResult(), SuiteResult()
    for _ in range(trials):
        er, et = float(rng.uniform(0, 1)), float(rng.uniform(0, 2))
        g = float(rng.uniform(0, 0.999))
        disc.record(bounds.tight_bound(er, et, g), bounds.original_bound(er, et, g))
        h = int(rng.integers(1, 51))
        fh.record(bounds.fh_tight_bound(er, et, h), bounds.fh_original_bound(er, et, h))
        n = int(rng.integers(2, 21))
        et_h = float(rng.uniform(0, 1.0 / (n - 1)))
        hier.record(bounds.hierarchy_tight_bound(er, et_h, g, n),
                    bounds.hierarchy_existing_bound(er, et_h, g, n))
    return {"discounted": disc, "finite_horizon": fh, "hierarchy": hier}


SUITES: Dict[str, Callable] = {
    "overlap": suite_overlap,
    "simulation_lemma": suite_simulation_lemma,
    "finite_horizon": suite_finite_horizon,
    "optimal_loss": suite_optimal_loss,
    "hierarchy": suite_hierarchy,
    "bounds": suite_bounds,
}


def run_verify(trials: int, max_states: int = 6, max_actions: int = 3, seed: int = 0) -> dict:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if max_states < 1 or max_actions < 1:
        raise ValueError("max_states and max_actions must be >= 1")
    out = {}
    ok = True
    for k, (name, suite) in enumerate(SUITES.items()):
        rng = np.random.Generator(np.random.PCG64([int(seed), k]))
        results = suite(rng, trials, max_states, max_actions)
        out[name] = {key: r.to_dict() for key, r in results.items()}
        ok = ok and all(r.violations == 0 for r in results.values())
    return {"seed": seed, "trials": trials, "max_states": max_states,
            "max_actions": max_actions, "suites": out, "ok": ok}
