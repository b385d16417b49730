"""Command-line surface: classify, lcp, synth, verify, simulate.

Exit codes: 0 success / feasible / Q / certified; 1 infeasible / NotQ;
2 input or runtime error; 3 synthesis failure; 4 unsupported game class.
Identical inputs and seed produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .game_core import GameError, classify, load_game
from .lcp_solver import LcpProblem, is_q_matrix, solve_lcp
from .auxiliary_games import classify_ql_nql
from .sunspot_synth import (
    SynthesisError,
    synth_general_quitting,
    synth_nql,
    synth_ql,
    synth_spotted,
)
from .strategies import load_strategy, save_strategy
from .verifier import DEFAULT_LAM_GRID, DEFAULT_T_GRID, certify_uniform, monte_carlo

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_ERROR = 2
EXIT_SYNTH_FAILED = 3
EXIT_UNSUPPORTED = 4


def _thread_cap() -> None:
    cap = os.environ.get("ABSORBEQ_THREADS")
    if cap:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, cap)


def _emit(payload: dict, args) -> None:
    payload = {"version": __version__, **payload}
    if args.format == "json":
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    elif args.format == "csv":
        lines = []
        for key, value in sorted(payload.items()):
            if isinstance(value, list) and value and isinstance(value[0], dict):
                cols = sorted(value[0])
                lines.append(",".join([key] + cols))
                for row in value:
                    lines.append(",".join([""] + [str(row.get(c, "")) for c in cols]))
            else:
                lines.append(f"{key},{json.dumps(value, sort_keys=True)}")
        text = "\n".join(lines) + "\n"
    else:
        lines = []
        for key, value in sorted(payload.items()):
            lines.append(f"{key}: {json.dumps(value, sort_keys=True)}")
        text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _float_list(text: str):
    return [float(x) for x in text.split(",") if x.strip()]


def _int_list(text: str):
    return [int(float(x)) for x in text.split(",") if x.strip()]


def cmd_classify(args) -> int:
    game = load_game(args.game)
    cls = classify(game)
    payload = {"classification": cls.flags()}
    if cls.l_labeling is not None:
        lab = cls.l_labeling
        payload["l_labeling"] = {
            "player1": lab.player1,
            "player2": lab.player2,
            "a1": list(lab.a1),
            "a2": list(lab.a2),
            "a3": list(lab.a3),
            "a4": list(lab.a4),
        }
    if cls.partition is not None:
        payload["continue_actions"] = [sorted(c) for c in cls.partition.continue_actions]
        payload["quitting_actions"] = [sorted(q) for q in cls.partition.quitting_actions]
    _emit(payload, args)
    return EXIT_OK


def cmd_lcp(args) -> int:
    with open(args.matrix, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    R = np.array(data["R"], dtype=float)
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        raise GameError(f"matrix must be square, got shape {R.shape}")
    if args.qtest:
        verdict = is_q_matrix(R, density=args.density, diag_bound=args.diag_bound)
        payload = {
            "status": verdict.status,
            "density": verdict.density,
            "diag_bound": verdict.diag_bound,
        }
        if verdict.witness is not None:
            payload["witness"] = [float(x) for x in verdict.witness]
        _emit(payload, args)
        return EXIT_OK if verdict.is_q else EXIT_NEGATIVE
    qvec = data.get("q")
    if qvec is None:
        raise GameError("matrix file must contain \"q\" unless --qtest is given")
    q = np.array(qvec, dtype=float)
    if q.shape != (R.shape[0],):
        raise GameError(f"q has wrong length {q.shape} for matrix {R.shape}")
    sol = solve_lcp(LcpProblem(R, q), diag_bound=args.diag_bound)
    if sol is None:
        _emit({"status": "infeasible"}, args)
        return EXIT_NEGATIVE
    _emit(
        {
            "status": "feasible",
            "w": [float(x) for x in sol.w],
            "z": [float(x) for x in sol.z],
            "support": list(sol.support),
            "diag_bound_holds": sol.diag_bound_holds,
        },
        args,
    )
    return EXIT_OK


def cmd_synth(args) -> int:
    game = load_game(args.game)
    cls = classify(game)
    kwargs = dict(
        epsilon=args.epsilon,
        density=args.density,
        seed=args.seed,
        budget_secs=args.budget_secs,
    )
    try:
        if cls.spotted:
            result = synth_spotted(game, **kwargs)
        elif cls.l_shaped:
            kind = classify_ql_nql(game, density=args.density).kind
            if kind == "QL":
                result = synth_ql(game, **kwargs)
            elif kind == "NQL":
                result = synth_nql(game, **kwargs)
            else:
                _emit({"error": "L-shaped game unresolved by the QL/NQL test"}, args)
                return EXIT_SYNTH_FAILED
        elif cls.general_quitting:
            result = synth_general_quitting(game, **kwargs)
        else:
            _emit({"error": "unsupported game class", "classification": cls.flags()}, args)
            return EXIT_UNSUPPORTED
    except SynthesisError as exc:
        _emit({"error": str(exc), "diagnostics": exc.diagnostics}, args)
        return EXIT_SYNTH_FAILED

    if args.strategy_out:
        save_strategy(result.strategy, args.strategy_out)
    payload = {
        "route": result.route,
        "epsilon": args.epsilon,
        "seed": args.seed,
        "budget_secs": args.budget_secs,
        "report": result.report.to_json_obj(),
    }
    _emit(payload, args)
    return EXIT_OK


def cmd_verify(args) -> int:
    game = load_game(args.game)
    strategy = load_strategy(args.strategy)
    report = certify_uniform(
        game,
        strategy,
        args.epsilon,
        lam_grid=tuple(args.lambda_grid),
        t_grid=tuple(args.t_grid),
    )
    _emit({"report": report.to_json_obj()}, args)
    return EXIT_OK if report.verdict else EXIT_NEGATIVE


def cmd_simulate(args) -> int:
    game = load_game(args.game)
    strategy = load_strategy(args.strategy)
    summary = monte_carlo(
        game, strategy, runs=args.runs, horizon=args.horizon, seed=args.seed,
        lam=args.lambda_grid[0],
    )
    _emit({"summary": summary.to_json_obj()}, args)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="absorbeq",
        description="Absorbing stochastic games: classification, complementarity "
        "solving, equilibrium synthesis, certification, and simulation.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--epsilon", type=float, default=0.05, help="target slack")
        p.add_argument("--lambda-grid", type=_float_list, default=list(DEFAULT_LAM_GRID),
                       help="comma-separated discount grid")
        p.add_argument("--t-grid", type=_int_list, default=list(DEFAULT_T_GRID),
                       help="comma-separated horizon grid")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--density", type=int, default=40, help="Q-test sampling density")
        p.add_argument("--budget-secs", type=float, default=600.0)
        p.add_argument("--out", help="write the report here instead of stdout")
        p.add_argument("--format", choices=("json", "csv", "text"), default="json")

    p = sub.add_parser("classify", help="taxonomy flags and canonical labeling")
    p.add_argument("game")
    common(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("lcp", help="solve a normalized complementarity problem or test a matrix")
    p.add_argument("matrix", help="JSON file with \"R\" (and \"q\" unless --qtest)")
    p.add_argument("--qtest", action="store_true", help="test solvability for every q")
    p.add_argument("--diag-bound", action="store_true",
                   help="require w >= diag(R) in every coordinate")
    common(p)
    p.set_defaults(func=cmd_lcp)

    p = sub.add_parser("synth", help="synthesize a certified equilibrium strategy")
    p.add_argument("game")
    p.add_argument("--strategy-out", help="write the strategy JSON here")
    common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("verify", help="certify a strategy file against a game")
    p.add_argument("game")
    p.add_argument("strategy")
    common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="seeded Monte Carlo simulation")
    p.add_argument("game")
    p.add_argument("strategy")
    p.add_argument("--runs", type=int, default=10000)
    p.add_argument("--horizon", type=int, default=5000)
    common(p)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    _thread_cap()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (GameError, OSError, json.JSONDecodeError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
