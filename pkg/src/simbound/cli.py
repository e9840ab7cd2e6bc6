"""Command-line front end: ``simbound {bound,sweep,witness,verify,search}``.

JSON results go to stdout, diagnostics to stderr. Exit status is 0 only when every
asserted inequality holds; argument errors exit with 2.
"""
from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import bounds
from .adversary import BoundViolation, SearchConfig, hill_climb_max_gap
from .hierarchy import augment_absorbing, hierarchy_gap_check
from .io import (dumps, mdp_to_dict, options_to_dict, policy_from_dict, policy_to_dict,
                 read_json, mdp_from_dict, search_result_to_dict, write_json)
from .mdp import Policy, exact_value, finite_horizon_value
from .verify import run_verify
from .witness import hierarchy_witness, two_state_witness, two_state_witness_fh

WITNESS_TOL = 1e-9
SWEEP_COLUMNS = ["sweep_value", "original", "tight", "original_normalized", "tight_normalized"]


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def cmd_bound(args) -> int:
    if args.n_states is not None and args.gamma is None:
        raise ValueError("hierarchy bounds (--n-states) need --gamma")
    inputs = bounds.BoundInputs(args.eps_r, args.eps_t, args.gamma, args.horizon)
    out = bounds.bound_report(inputs).to_dict()
    if args.gamma is not None:
        out["optimal_policy_loss"] = bounds.optimal_policy_loss_bound(args.eps_r, args.eps_t, args.gamma)
        out["linearization_gap"] = bounds.linearization_gap(args.eps_r, args.eps_t, args.gamma)
    if args.n_states is not None:
        h = bounds.hierarchy_report(args.eps_r, args.eps_t, args.gamma, args.n_states, args.r_max)
        out["hierarchy"] = h.to_dict()
    print(dumps(out))
    return 0


def sweep_rows(variable: str, start: float, stop: float, steps: int,
               eps_r: float, eps_t: float, gamma: float):
    """Rows of (sweep_value, original, tight, original/V_MAX, tight/V_MAX), ascending."""
    values = np.linspace(start, stop, steps) if steps > 1 else np.array([start])
    rows = []
    for x in np.sort(values):
        x = float(x)
        er, et, g = eps_r, eps_t, gamma
        if variable == "gamma":
            g = x
        elif variable == "eps-t":
            et = x
        elif variable == "eps-r":
            er = x
        else:
            er = et = x
        o = bounds.original_bound(er, et, g)
        t = bounds.tight_bound(er, et, g)
        v_max = 1.0 / (1.0 - g)
        rows.append((x, o, t, o / v_max, t / v_max))
    return rows


def write_sweep_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def cmd_sweep(args) -> int:
    if args.steps < 1:
        raise ValueError("--steps must be >= 1")
    if args.stop < args.start:
        raise ValueError("--stop must be >= --start")
    rows = sweep_rows(args.variable, args.start, args.stop, args.steps,
                      args.eps_r, args.eps_t, args.gamma)
    try:
        write_sweep_csv(args.output, rows)
    except OSError as exc:
        print(f"error: cannot write {args.output}: {exc}", file=sys.stderr)
        return 1
    print(dumps({"output": str(args.output), "rows": len(rows)}))
    return 0


def cmd_witness(args) -> int:
    out_dir = Path(args.output_dir) if args.output_dir else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)
    if args.family == "hierarchy":
        if args.gamma is None or args.n_states is None:
            raise ValueError("hierarchy witness needs --gamma and --n-states")
        o_star, o_hat, pol = hierarchy_witness(args.n_states, args.eps_r, args.eps_t, args.gamma, args.r_max)
        check = hierarchy_gap_check(o_star, o_hat, pol, r_max=args.r_max)
        gap, bound = float(check.gaps.max()), check.report.tight
        rows = np.array([augment_absorbing(m).p.sum() for m in o_star + o_hat])
        extra = {"augmented_row_mass_error": float(np.max(np.abs(rows - args.gamma)))}
        if out_dir:
            write_json(out_dir / "o_star.json", options_to_dict(o_star))
            write_json(out_dir / "o_hat.json", options_to_dict(o_hat))
    else:
        if args.family == "two-state":
            if args.gamma is None:
                raise ValueError("two-state witness needs --gamma")
            m, m_hat, policy = two_state_witness(args.eps_r, args.eps_t, args.gamma)
            gap = float(exact_value(m, policy)[0] - exact_value(m_hat, policy)[0])
            bound = bounds.tight_bound(args.eps_r, args.eps_t, args.gamma)
        else:
            if args.horizon is None:
                raise ValueError("fh witness needs --horizon")
            m, m_hat, policy = two_state_witness_fh(args.eps_r, args.eps_t, args.horizon)
            gap = float(finite_horizon_value(m, policy, args.horizon)[0, 0]
                        - finite_horizon_value(m_hat, policy, args.horizon)[0, 0])
            bound = bounds.fh_tight_bound(args.eps_r, args.eps_t, args.horizon)
        extra = {}
        if out_dir:
            write_json(out_dir / "m.json", mdp_to_dict(m))
            write_json(out_dir / "m_hat.json", mdp_to_dict(m_hat))
            write_json(out_dir / "policy.json", policy_to_dict(policy))
    ok = abs(gap - bound) <= WITNESS_TOL
    print(dumps({"family": args.family, "gap": gap, "bound": bound,
                 "abs_error": abs(gap - bound), "ok": ok, **extra}))
    if not ok:
        print(f"witness gap {gap!r} differs from bound {bound!r}", file=sys.stderr)
    return 0 if ok else 1


def cmd_verify(args) -> int:
    summary = run_verify(args.trials, args.max_states, args.max_actions, args.seed)
    print(dumps(summary))
    if not summary["ok"]:
        print("inequality violated; see suite violation counts", file=sys.stderr)
    return 0 if summary["ok"] else 1


def cmd_search(args) -> int:
    if args.base:
        mdp = mdp_from_dict(read_json(args.base))
        policy = (policy_from_dict(read_json(args.policy)) if args.policy
                  else Policy.uniform(mdp.n_states, mdp.n_actions))
    else:
        if args.gamma is None:
            raise ValueError("--witness needs --gamma")
        mdp, _, policy = two_state_witness(0.0, 0.0, args.gamma)
    config = SearchConfig(args.eps_t, args.eps_r, args.iterations, args.restarts, args.seed,
                          args.step, args.decay, args.grid)
    try:
        result = hill_climb_max_gap(mdp, policy, config)
    except BoundViolation as exc:
        print(f"BOUND VIOLATION: {exc}", file=sys.stderr)
        dump = {"mdp": mdp_to_dict(exc.mdp), "mdp_hat": mdp_to_dict(exc.mdp_hat),
                "policy": policy_to_dict(exc.policy), "gap": exc.gap, "bound": exc.bound}
        if args.output:
            write_json(Path(args.output).with_suffix(".counterexample.json"), dump)
        print(dumps(dump))
        return 1
    out = search_result_to_dict(result)
    if args.output:
        write_json(args.output, out)
    print(dumps(out))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="simbound", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bound", help="evaluate all applicable bounds")
    p.add_argument("--eps-r", type=float, required=True)
    p.add_argument("--eps-t", type=float, required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--gamma", type=float)
    g.add_argument("--horizon", type=int)
    p.add_argument("--n-states", type=int, help="also report the hierarchy bounds for |S| states")
    p.add_argument("--r-max", type=float, default=1.0)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("sweep", help="bound curves as CSV")
    p.add_argument("--variable", choices=["gamma", "eps", "eps-t", "eps-r"], default="gamma",
                   help="'eps' sweeps eps_r = eps_t together")
    p.add_argument("--start", type=float, default=0.0)
    p.add_argument("--stop", type=float, default=0.99)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--eps-r", type=float, default=0.0)
    p.add_argument("--eps-t", type=float, default=0.2)
    p.add_argument("--gamma", type=float, default=0.9)
    p.add_argument("--output", "-o", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("witness", help="build a tightness witness and check its gap")
    p.add_argument("--family", choices=["two-state", "fh", "hierarchy"], default="two-state")
    p.add_argument("--eps-r", type=float, required=True)
    p.add_argument("--eps-t", type=float, required=True)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--gamma", type=float)
    g.add_argument("--horizon", type=int)
    p.add_argument("--n-states", type=int)
    p.add_argument("--r-max", type=float, default=1.0)
    p.add_argument("--output-dir")
    p.set_defaults(func=cmd_witness)

    p = sub.add_parser("verify", help="randomized soundness audit of all bounds")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--max-states", type=int, default=6)
    p.add_argument("--max-actions", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("search", help="hill-climb for the worst value gap")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--base", help="base MDP JSON file")
    src.add_argument("--witness", choices=["two-state"], help="use the two-state witness base MDP")
    p.add_argument("--policy", help="policy JSON file (default: uniform)")
    p.add_argument("--gamma", type=float, help="discount for --witness")
    p.add_argument("--eps-r", type=float, required=True)
    p.add_argument("--eps-t", type=float, required=True)
    p.add_argument("--iterations", type=int, default=2000)
    p.add_argument("--restarts", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--step", type=float, default=0.1)
    p.add_argument("--decay", type=float, default=0.995)
    p.add_argument("--grid", type=int, help="restrict moves to a lattice of this resolution")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_search)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        parser.error(str(exc))


if __name__ == "__main__":
    sys.exit(main())
