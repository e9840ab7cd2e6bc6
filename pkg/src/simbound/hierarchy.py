"""Options relative to a state abstraction, their multi-time models, and abstract policy evaluation.

An option model stores one row per ground state of its home abstract state. ``p`` has one
column per ground state; after :func:`augment_absorbing` a final column for the absorbing
state ``s_x`` is appended so that every row carries exactly ``gamma`` discounted mass.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple

import numpy as np

from .bounds import BoundReport, hierarchy_report
from .mdp import Mdp, Policy, RESIDUAL_TOL

MASS_TOL = 1e-12


@dataclass(frozen=True)
class StateAbstraction:
    mapping: Tuple[int, ...]

    def __post_init__(self):
        m = tuple(int(x) for x in self.mapping)
        if not m:
            raise ValueError("abstraction must map at least one state")
        if min(m) < 0 or set(m) != set(range(max(m) + 1)):
            raise ValueError("every abstract state 0..n_abstract-1 must contain a ground state")
        object.__setattr__(self, "mapping", m)

    @property
    def n_abstract(self) -> int:
        return max(self.mapping) + 1

    @property
    def n_ground(self) -> int:
        return len(self.mapping)

    def block(self, s_phi: int) -> Tuple[int, ...]:
        return tuple(s for s, a in enumerate(self.mapping) if a == s_phi)

    @classmethod
    def identity(cls, n_states: int) -> "StateAbstraction":
        return cls(tuple(range(n_states)))


@dataclass(frozen=True, eq=False)
class PhiOption:
    """Option that may start anywhere in abstract state ``home`` and ends on leaving it.

    ``policy`` is an (S, A) action distribution; only rows of the home block are used.
    """

    home: int
    policy: Policy


@dataclass(frozen=True, eq=False)
class OptionModel:
    home: int
    states: Tuple[int, ...]
    r: np.ndarray
    p: np.ndarray
    gamma: float
    augmented: bool = False

    def __post_init__(self):
        r = np.array(self.r, dtype=float)
        p = np.array(self.p, dtype=float)
        states = tuple(int(s) for s in self.states)
        if r.shape != (len(states),) or p.ndim != 2 or p.shape[0] != len(states):
            raise ValueError(f"model shapes r={r.shape}, p={p.shape} do not match {len(states)} states")
        if p.size and p.min() < 0.0:
            raise ValueError("discounted transition entries must be non-negative")
        r.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "states", states)

    @property
    def n_ground(self) -> int:
        return self.p.shape[1] - (1 if self.augmented else 0)

    @property
    def ground_p(self) -> np.ndarray:
        return self.p[:, : self.n_ground]

    def to_dict(self) -> dict:
        return {"home": self.home, "states": list(self.states),
                "r": self.r.tolist(), "p": self.ground_p.tolist()}

    @classmethod
    def from_dict(cls, d: dict, gamma: float) -> "OptionModel":
        return cls(int(d["home"]), tuple(d.get("states", [d["home"]])), d["r"], d["p"], gamma)


def multi_time_model(base: Mdp, abstraction: StateAbstraction, option: PhiOption) -> OptionModel:
    """Discounted reward and termination model of ``option`` executed in ``base``.

    Inside the home block the option is a Markov chain; with U = (I - gamma P_in)^-1 the
    discounted reward is U r_in and the discounted exit mass is gamma U P_out.
    """
    gamma = base.discount
    if not gamma < 1.0:
        raise ValueError("multi-time models need discount < 1")
    if abstraction.n_ground != base.n_states:
        raise ValueError("abstraction size does not match the MDP")
    if option.policy.probs.shape != (base.n_states, base.n_actions):
        raise ValueError("option policy must be an (S, A) matrix")
    home = abstraction.block(option.home)
    if not home:
        raise ValueError(f"abstract state {option.home} has no ground states")
    inside = np.array(home)
    outside = np.array([s for s in range(base.n_states) if s not in home], dtype=int)

    p_pi = np.einsum("sat,sa->st", base.transitions, option.policy.probs)
    r_pi = np.einsum("sa,sa->s", base.rewards, option.policy.probs)
    a = np.eye(len(inside)) - gamma * p_pi[np.ix_(inside, inside)]
    rhs = np.column_stack([r_pi[inside], gamma * p_pi[np.ix_(inside, outside)]])
    try:
        sol = np.linalg.solve(a, rhs)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError("singular internal system") from exc
    res = np.max(np.abs(a @ sol - rhs), initial=0.0)
    if res > RESIDUAL_TOL:
        raise RuntimeError(f"multi-time model residual {res:.3e} exceeds tolerance")

    p = np.zeros((len(inside), base.n_states))
    p[:, outside] = sol[:, 1:]
    return OptionModel(option.home, home, sol[:, 0], p, gamma)


def augment_absorbing(model: OptionModel, gamma: Optional[float] = None) -> OptionModel:
    """Append the absorbing column so each row's discounted mass is exactly ``gamma``."""
    gamma = model.gamma if gamma is None else gamma
    if model.augmented:
        return model
    mass = model.p.sum(axis=1)
    if mass.size and mass.max() > gamma + MASS_TOL:
        raise ValueError(f"row mass {mass.max()!r} exceeds discount {gamma}")
    sx = np.maximum(gamma - mass, 0.0)
    return replace(model, p=np.column_stack([model.p, sx]), gamma=gamma, augmented=True)


def _pairs(set_a, set_b, pairing):
    if pairing is None:
        if len(set_a) != len(set_b):
            raise ValueError("option sets differ in size; give an explicit pairing")
        pairing = list(zip(range(len(set_a)), range(len(set_b))))
    out = []
    for i, j in pairing:
        a, b = set_a[i], set_b[j]
        if a.states != b.states or a.home != b.home:
            raise ValueError(f"paired options {i} and {j} have different initiation sets")
        if a.n_ground != b.n_ground:
            raise ValueError("paired options live on different ground spaces")
        out.append((a, b))
    return out


def option_misspec(set_a: Sequence[OptionModel], set_b: Sequence[OptionModel],
                   pairing: Optional[Sequence[Tuple[int, int]]] = None) -> Tuple[float, float]:
    """Per-entry transition gap (absorbing column excluded) and reward gap over paired options."""
    eps_t = eps_r = 0.0
    for a, b in _pairs(set_a, set_b, pairing):
        eps_t = max(eps_t, float(np.abs(a.ground_p - b.ground_p).max(initial=0.0)))
        eps_r = max(eps_r, float(np.abs(a.r - b.r).max(initial=0.0)))
    return eps_t, eps_r


def _selected(models: Sequence[OptionModel], abstract_policy: Sequence[int]):
    n = {m.n_ground for m in models}
    if len(n) != 1:
        raise ValueError("option models disagree on the number of ground states")
    n = n.pop()
    p = np.zeros((n, n))
    r = np.zeros(n)
    covered = np.zeros(n, dtype=int)
    for s_phi, idx in enumerate(abstract_policy):
        m = models[idx]
        if m.home != s_phi:
            raise ValueError(f"option {idx} does not start in abstract state {s_phi}")
        rows = list(m.states)
        p[rows] = m.ground_p
        r[rows] = m.r
        covered[rows] += 1
    if not np.all(covered == 1):
        raise ValueError("abstract policy must select exactly one option for every ground state")
    return p, r


def abstract_value(models: Sequence[OptionModel], abstract_policy: Sequence[int]) -> np.ndarray:
    """Value of executing the selected option in every abstract state, per ground state.

    Discounting lives inside the option models, so this solves V = R + P V. The absorbing
    state has value 0, so augmented and plain models give the same answer.
    """
    p, r = _selected(models, abstract_policy)
    rho = max(abs(np.linalg.eigvals(p))) if len(r) else 0.0
    if rho >= 1.0:
        raise RuntimeError(f"selected option models have spectral radius {rho} >= 1")
    a = np.eye(len(r)) - p
    v = np.linalg.solve(a, r)
    res = np.max(np.abs(a @ v - r), initial=0.0)
    if res > RESIDUAL_TOL:
        v = v + np.linalg.solve(a, r - a @ v)
    return v


@dataclass(frozen=True, eq=False)
class HierarchyGap:
    gaps: np.ndarray
    eps_t: float
    eps_r: float
    report: BoundReport


def hierarchy_gap_check(o_star: Sequence[OptionModel], o_hat: Sequence[OptionModel],
                        abstract_policy: Sequence[int], r_max: Optional[float] = None,
                        pairing: Optional[Sequence[Tuple[int, int]]] = None) -> HierarchyGap:
    """Measured abstract value gap against both hierarchy bounds at the measured epsilons.

    ``r_max`` defaults to the largest option reward in either set (at least 1e-300).
    """
    eps_t, eps_r = option_misspec(o_star, o_hat, pairing)
    gammas = {m.gamma for m in list(o_star) + list(o_hat)}
    if len(gammas) != 1:
        raise ValueError("option sets use different discounts")
    gamma = gammas.pop()
    if r_max is None:
        r_max = max(max(float(m.r.max(initial=0.0)) for m in list(o_star) + list(o_hat)), 1e-300)
    hat_policy = list(abstract_policy)
    if pairing is not None:
        lookup = dict(pairing)
        hat_policy = [lookup[i] for i in abstract_policy]
    gaps = np.abs(abstract_value(o_star, abstract_policy) - abstract_value(o_hat, hat_policy))
    n_states = o_star[0].n_ground
    report = hierarchy_report(eps_r, eps_t, gamma, n_states, r_max, float(gaps.max()))
    return HierarchyGap(gaps, eps_t, eps_r, report)
