"""Command-line interface.

Subcommands::

    pnplan plan      --env ENV --automaton AUT [--out PLAN.json] [--svg OUT.svg]
    pnplan verify    --env ENV --automaton AUT --plan PLAN.json
    pnplan export-lp --env ENV --automaton AUT --k K [--final STATE] [--out F.lp]
    pnplan render    --env ENV [--plan PLAN.json] [--svg OUT.svg]

Exit codes: 0 on success, 2 when the instance is infeasible or a plan fails
verification, 1 on usage or input errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from .buchi import build_buchi_pn, parse_automaton
from .compose import compose
from .environment import build_rmpn, parse_environment
from .errors import PnplanError
from .milp import build_reachability_milp, export_lp
from .planner import InfeasibleReport, Plan, plan, verify_plan
from .quotient import build_quotient
from .render import render_svg


def _read(path):
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _load_inputs(args):
    env = parse_environment(_read(args.env))
    aut = parse_automaton(_read(args.automaton)) if getattr(args, "automaton", None) else None
    return env, aut


def _plan_to_json(p: Plan, normalize: bool) -> dict:
    stats = dict(p.stats)
    if normalize:
        stats.pop("time", None)
    return {
        "method": p.method,
        "initial_state": p.initial_state,
        "final_state": p.final_state,
        "prefix": [list(step) for step in p.prefix],
        "suffix": [list(step) for step in p.suffix],
        "word_prefix": [sorted(letter) for letter in p.word_prefix],
        "word_suffix": [sorted(letter) for letter in p.word_suffix],
        "cost": p.cost,
        "k": p.k,
        "suffix_kind": p.suffix_kind,
        "stats": stats,
    }


def _plan_from_json(data: dict) -> Plan:
    return Plan(
        method=data.get("method", "milp"),
        initial_state=data["initial_state"],
        final_state=data["final_state"],
        prefix=[tuple(step) for step in data["prefix"]],
        suffix=[tuple(step) for step in data["suffix"]],
        word_prefix=[frozenset(w) for w in data.get("word_prefix", [])],
        word_suffix=[frozenset(w) for w in data.get("word_suffix", [])],
        cost=int(data.get("cost", 0)),
        k=data.get("k"),
        suffix_kind=data.get("suffix_kind", "stationary"),
        stats=data.get("stats", {}),
    )


def _cmd_plan(args):
    env, aut = _load_inputs(args)
    result = plan(env, aut, k_init=args.k_init, node_limit=args.node_limit,
                  node_budget=args.node_budget,
                  explore_all_finals=args.explore_all_finals,
                  strict=not args.relaxed_enabledness)
    if isinstance(result, InfeasibleReport):
        print("infeasible:", result.reason)
        print(f"  horizons tried: {list(result.k_tried)} (cap {result.k_cap})")
        for d in result.details:
            print("  -", d)
        return 2
    doc = _plan_to_json(result, args.normalize_timings)
    text = json.dumps(doc, indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    if args.svg:
        with open(args.svg, "w", encoding="utf-8") as fh:
            fh.write(render_svg(env, result))
    print(f"plan found: cost={result.cost} method={result.method} "
          f"final={result.final_state} suffix={result.suffix_kind}",
          file=sys.stderr)
    return 0


def _cmd_verify(args):
    env, aut = _load_inputs(args)
    with open(args.plan, encoding="utf-8") as fh:
        p = _plan_from_json(json.load(fh))
    verdict = verify_plan(env, aut, p)
    if verdict.ok:
        print(f"valid plan (cost {verdict.cost})")
        return 0
    print("invalid plan:")
    for r in verdict.reasons:
        print("  -", r)
    return 2


def _cmd_export_lp(args):
    env, aut = _load_inputs(args)
    rmpn = build_rmpn(env)
    quotient = build_quotient(rmpn)
    if args.final:
        finals = [args.final]
    else:
        finals = [aut.final[0]]
    aut1 = replace(aut, initial=(aut.initial[0],))
    composed = compose(quotient, build_buchi_pn(aut1), rmpn.robot_count)
    rm = build_reachability_milp(composed, composed.m0, args.k,
                                 final_place=finals[0])
    text = export_lp(rm.model)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        print(text, end="")
    return 0


def _cmd_render(args):
    env = parse_environment(_read(args.env))
    p = None
    if args.plan:
        with open(args.plan, encoding="utf-8") as fh:
            p = _plan_from_json(json.load(fh))
    text = render_svg(env, p)
    if args.svg:
        with open(args.svg, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        print(text, end="")
    return 0


def _build_parser():
    ap = argparse.ArgumentParser(prog="pnplan",
                                 description="Multi-robot trajectory planning "
                                             "from automaton specifications")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, automaton=True):
        p.add_argument("--env", required=True, help="environment file")
        if automaton:
            p.add_argument("--automaton", required=True, help="automaton file")

    p = sub.add_parser("plan", help="compute a plan")
    common(p)
    p.add_argument("--k-init", type=int, default=4)
    p.add_argument("--node-limit", type=int, default=5_000,
                   help="branch-and-bound node cap per optimization")
    p.add_argument("--node-budget", type=int, default=25_000,
                   help="branch-and-bound node cap per planning call")
    p.add_argument("--explore-all-finals", action="store_true")
    p.add_argument("--relaxed-enabledness", action="store_true",
                   help="only enforce firing enabledness at automaton steps")
    p.add_argument("--normalize-timings", action="store_true",
                   help="omit wall-clock stats for reproducible output")
    p.add_argument("--out", help="write the plan as JSON to this path")
    p.add_argument("--svg", help="also render the plan to this SVG path")
    p.set_defaults(func=_cmd_plan)

    p = sub.add_parser("verify", help="verify a previously computed plan")
    common(p)
    p.add_argument("--plan", required=True, help="plan JSON file")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("export-lp", help="export the reachability program")
    common(p)
    p.add_argument("--k", type=int, default=4, help="horizon parameter")
    p.add_argument("--final", help="target final state (default: first)")
    p.add_argument("--out", help="output .lp path (default: stdout)")
    p.set_defaults(func=_cmd_export_lp)

    p = sub.add_parser("render", help="render the environment to SVG")
    common(p, automaton=False)
    p.add_argument("--plan", help="optional plan JSON to overlay")
    p.add_argument("--svg", help="output path (default: stdout)")
    p.set_defaults(func=_cmd_render)
    return ap


def main(argv=None) -> int:
    ap = _build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except PnplanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
