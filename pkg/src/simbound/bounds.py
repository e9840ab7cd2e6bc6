"""Closed-form value-error bounds between two MDPs (or two option sets) with bounded misspecification.

All discounted bounds assume rewards in [0, 1]; the hierarchy family takes an explicit ``r_max``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

EPS_SLACK = 1e-12


def _check_eps(eps_r: float, eps_t: float) -> None:
    if not -EPS_SLACK <= eps_r <= 1.0 + EPS_SLACK:
        raise ValueError(f"eps_r must lie in [0, 1], got {eps_r}")
    if not -EPS_SLACK <= eps_t <= 2.0 + EPS_SLACK:
        raise ValueError(f"eps_t must lie in [0, 2], got {eps_t}")


def _check_gamma(gamma: float) -> None:
    if not 0.0 <= gamma < 1.0:
        raise ValueError(f"gamma must lie in [0, 1), got {gamma}")


def _check_horizon(horizon: int) -> None:
    if int(horizon) != horizon or horizon < 1:
        raise ValueError(f"horizon must be a positive integer, got {horizon}")


@dataclass(frozen=True)
class BoundInputs:
    eps_r: float
    eps_t: float
    gamma: Optional[float] = None
    horizon: Optional[int] = None

    def __post_init__(self):
        _check_eps(self.eps_r, self.eps_t)
        if (self.gamma is None) == (self.horizon is None):
            raise ValueError("exactly one of gamma or horizon must be given")
        if self.gamma is not None:
            _check_gamma(self.gamma)
        else:
            _check_horizon(self.horizon)

    @property
    def v_max(self) -> float:
        return 1.0 / (1.0 - self.gamma) if self.gamma is not None else float(self.horizon)


@dataclass(frozen=True)
class BoundReport:
    """Loose (``original``) and tight bounds for one query, optionally with a measured gap."""

    original: float
    tight: float
    v_max: float
    ratio_original_over_tight: Optional[float]
    measured_gap: Optional[float] = None
    family: str = "discounted"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["original_normalized"] = self.original / self.v_max
        d["tight_normalized"] = self.tight / self.v_max
        return d


def original_bound(eps_r: float, eps_t: float, gamma: float) -> float:
    _check_eps(eps_r, eps_t)
    _check_gamma(gamma)
    return eps_r / (1.0 - gamma) + gamma * eps_t / (2.0 * (1.0 - gamma) ** 2)


def tight_bound(eps_r: float, eps_t: float, gamma: float) -> float:
    _check_eps(eps_r, eps_t)
    _check_gamma(gamma)
    return 1.0 / (1.0 - gamma) - (1.0 - eps_r) / (1.0 - gamma * (1.0 - eps_t / 2.0))


def overlap_lower_bound(eps_t: float, t: int) -> float:
    """Minimum overlap mass of two t-step distributions whose one-step rows differ by at most eps_t in L1."""
    _check_eps(0.0, eps_t)
    if t < 0:
        raise ValueError("t must be >= 0")
    return max(0.0, 1.0 - eps_t / 2.0) ** t


def l1_drift_bound(eps_t: float, t: int) -> float:
    """Linear drift ``t * eps_t``, capped at 2."""
    _check_eps(0.0, eps_t)
    if t < 0:
        raise ValueError("t must be >= 0")
    return min(2.0, t * eps_t)


def fh_original_bound(eps_r: float, eps_t: float, horizon: int) -> float:
    _check_eps(eps_r, eps_t)
    _check_horizon(horizon)
    return eps_r * horizon + eps_t * horizon * (horizon - 1) / 4.0


def fh_tight_bound(eps_r: float, eps_t: float, horizon: int) -> float:
    _check_eps(eps_r, eps_t)
    _check_horizon(horizon)
    if eps_t == 0.0:
        return eps_r * horizon
    # 1 - (1 - eps_t/2)^H without cancellation for small eps_t
    lost = 1.0 if eps_t >= 2.0 else -math.expm1(horizon * math.log1p(-eps_t / 2.0))
    return horizon - (1.0 - eps_r) * (2.0 / eps_t) * lost


def _check_hierarchy(eps_r, eps_t, gamma, n_states, r_max) -> None:
    _check_gamma(gamma)
    if n_states < 1:
        raise ValueError("n_states must be >= 1")
    if not r_max > 0.0:
        raise ValueError("r_max must be positive")
    if not -EPS_SLACK <= eps_r <= r_max * (1.0 + EPS_SLACK):
        raise ValueError(f"eps_r must lie in [0, r_max], got {eps_r}")
    if eps_t < -EPS_SLACK:
        raise ValueError(f"eps_t must be non-negative, got {eps_t}")


def hierarchy_existing_bound(eps_r: float, eps_t: float, gamma: float,
                             n_states: int, r_max: float = 1.0) -> float:
    """Previously published option-model bound; ``eps_t`` is a per-entry gap."""
    _check_hierarchy(eps_r, eps_t, gamma, n_states, r_max)
    return (eps_r + n_states * eps_t * r_max) / (1.0 - gamma) ** 2


def hierarchy_tight_bound(eps_r: float, eps_t: float, gamma: float,
                          n_states: int, r_max: float = 1.0) -> float:
    _check_hierarchy(eps_r, eps_t, gamma, n_states, r_max)
    return r_max / (1.0 - gamma) - (r_max - eps_r) / (1.0 - gamma + (n_states - 1) * eps_t)


def optimal_policy_loss_bound(eps_r: float, eps_t: float, gamma: float) -> float:
    """Bound on how much worse the model-optimal policy does on the true MDP."""
    return 2.0 * tight_bound(eps_r, eps_t, gamma)


def linearization_gap(eps_r: float, eps_t: float, gamma: float) -> float:
    """``original_bound - tight_bound``, evaluated in a cancellation-free form.

    With d = 1 - gamma and c = gamma * eps_t / 2 the difference reduces to
    c (eps_r d + c) / (d^2 (d + c)), which is what is returned.
    """
    _check_eps(eps_r, eps_t)
    _check_gamma(gamma)
    d = 1.0 - gamma
    c = gamma * eps_t / 2.0
    return c * (eps_r * d + c) / (d * d * (d + c))


def _ratio(original: float, tight: float) -> Optional[float]:
    return original / tight if tight > 0.0 else None


def bound_report(inputs: BoundInputs, measured_gap: Optional[float] = None) -> BoundReport:
    if inputs.gamma is not None:
        o = original_bound(inputs.eps_r, inputs.eps_t, inputs.gamma)
        t = tight_bound(inputs.eps_r, inputs.eps_t, inputs.gamma)
        family = "discounted"
    else:
        o = fh_original_bound(inputs.eps_r, inputs.eps_t, inputs.horizon)
        t = fh_tight_bound(inputs.eps_r, inputs.eps_t, inputs.horizon)
        family = "finite_horizon"
    return BoundReport(o, t, inputs.v_max, _ratio(o, t), measured_gap, family)


def hierarchy_report(eps_r: float, eps_t: float, gamma: float, n_states: int,
                     r_max: float = 1.0, measured_gap: Optional[float] = None) -> BoundReport:
    o = hierarchy_existing_bound(eps_r, eps_t, gamma, n_states, r_max)
    t = hierarchy_tight_bound(eps_r, eps_t, gamma, n_states, r_max)
    return BoundReport(o, t, r_max / (1.0 - gamma), _ratio(o, t), measured_gap, "hierarchy")
