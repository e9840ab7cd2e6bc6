"""JSON file formats for MDPs, policies, option sets and search results."""
from __future__ import annotations

import json
from pathlib import Path
from typing import List, Sequence

import numpy as np

from .adversary import SearchResult
from .hierarchy import OptionModel
from .mdp import Mdp, Policy


def mdp_to_dict(mdp: Mdp) -> dict:
    return {
        "n_states": mdp.n_states,
        "n_actions": mdp.n_actions,
        "discount": mdp.discount,
        "transitions": mdp.transitions.tolist(),
        "rewards": mdp.rewards.tolist(),
    }


def mdp_from_dict(d: dict) -> Mdp:
    mdp = Mdp(np.array(d["transitions"], dtype=float), np.array(d["rewards"], dtype=float),
              float(d["discount"]))
    if (mdp.n_states, mdp.n_actions) != (d["n_states"], d["n_actions"]):
        raise ValueError("n_states/n_actions do not match the transition tensor")
    return mdp


def policy_to_dict(policy: Policy) -> dict:
    return {"mode": policy.mode, "probs": policy.probs.tolist()}


def policy_from_dict(d: dict) -> Policy:
    policy = Policy(np.array(d["probs"], dtype=float))
    if d.get("mode", policy.mode) != policy.mode:
        raise ValueError(f"policy mode {d['mode']!r} does not match probs of rank {policy.probs.ndim}")
    return policy


def options_to_dict(models: Sequence[OptionModel]) -> dict:
    gammas = {m.gamma for m in models}
    if len(gammas) != 1:
        raise ValueError("options must share one discount")
    return {"gamma": gammas.pop(), "options": [m.to_dict() for m in models]}


def options_from_dict(d: dict) -> List[OptionModel]:
    gamma = float(d["gamma"])
    return [OptionModel.from_dict(o, gamma) for o in d["options"]]


def search_result_to_dict(result: SearchResult) -> dict:
    return {
        "best_gap": result.best_gap,
        "bound_value": result.bound_value,
        "achievement_ratio": result.achievement_ratio,
        "best_restart": result.best_restart,
        "trace": list(result.trace),
        "best_mdp_hat": mdp_to_dict(result.best_mdp_hat),
    }


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False)


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj) + "\n")


def read_json(path) -> dict:
    return json.loads(Path(path).read_text())
