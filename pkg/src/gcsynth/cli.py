"""``gcsynth`` command-line front end.

Exit codes: 0 success, 1 infeasible or cost bound violated, 2 usage or
data error.
"""

from __future__ import annotations

import argparse
import sys
import warnings

from . import __version__
from .config import (
    ConfigError,
    dump_json,
    load_config,
    load_result,
    point_from_flags,
    result_to_dict,
    sweep_csv,
    trajectory_csv,
)
from .errors import GcsynthError, ModelError, NonFiniteState
from .sim import ConvergenceWarning, Realization, simulate
from .synthesis import InfeasiblePoint, evaluate_point, search

EXIT_OK, EXIT_INFEASIBLE, EXIT_USAGE = 0, 1, 2


class _UsageError(Exception):
    pass


def _write(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)


def _g(v) -> str:
    return repr(float(v))


def cmd_check(args) -> int:
    cfg = load_config(args.config)
    point = point_from_flags(args.tau, args.lam, cfg.plant)
    out = evaluate_point(cfg.plant, point)
    pis = out.pi_counts if isinstance(out, InfeasiblePoint) else out.diagnostics.pi_counts
    dets = out.detU11s if isinstance(out, InfeasiblePoint) else out.diagnostics.detU11s
    print(f"tau: {', '.join(_g(t) for t in point.tau)}")
    for i, lam in enumerate(point.lam):
        print(f"lambda{i+1}: {', '.join(_g(v) for v in lam)}")
    for i, (p, d) in enumerate(zip(pis, dets)):
        print(f"channel {i+1}: pi_count = {p}, detU11 = {_g(d)}")
    if isinstance(out, InfeasiblePoint):
        print(f"infeasible: {out.reason}: {out.detail}")
        return EXIT_INFEASIBLE
    d = out.diagnostics
    for i, m in enumerate(d.d11_margins):
        print(f"channel {i+1}: d11_margin = {_g(m)}")
    print(f"ARE: stabilizing, residual = {_g(d.are_residual)}")
    print(f"V_tau = {_g(out.Vtau)}")
    print("feasible")
    return EXIT_OK


def _run_search(args):
    cfg = load_config(args.config, seed=args.seed)
    if cfg.search is None:
        raise _UsageError("config has no 'search' block")
    return search(cfg.plant, cfg.search, workers=args.workers)


def cmd_synth(args) -> int:
    rep = _run_search(args)
    print(f"evaluated: {rep.evaluated}, feasible: {rep.feasible}")
    for reason, count in rep.infeasible_reasons.items():
        print(f"  {reason}: {count}")
    if rep.best is None:
        print("no feasible multiplier point in the search space")
        return EXIT_INFEASIBLE
    best = rep.best
    print(f"tau: {', '.join(_g(t) for t in best.point.tau)}")
    for i, lam in enumerate(best.point.lam):
        print(f"lambda{i+1}: {', '.join(_g(v) for v in lam)}")
    print(f"V_tau = {_g(best.Vtau)}")
    dump_json(result_to_dict(best), args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    rep = _run_search(args)
    _write(args.out, sweep_csv(rep))
    if rep.best is None:
        print("no feasible multiplier point in the search space", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    res = load_result(args.controller, cfg.plant)
    try:
        real = Realization.parse(args.realization) if args.realization else cfg.realization
    except ValueError as exc:
        raise _UsageError(str(exc)) from None
    dt = args.dt if args.dt is not None else cfg.dt
    t_final = args.t_final if args.t_final is not None else cfg.t_final
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ConvergenceWarning)
        try:
            traj = simulate(cfg.plant, res["K"], realization=real, dt=dt, t_final=t_final)
        except NonFiniteState as exc:
            if exc.trajectory is not None:
                _write(args.out, trajectory_csv(exc.trajectory))
            print(f"diverged: {exc}", file=sys.stderr)
            return EXIT_INFEASIBLE
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    _write(args.out, trajectory_csv(traj))
    J = float(traj.running_cost[-1])
    V = res.get("V_tau")
    msg = f"J = {_g(J)}"
    if V is not None:
        msg += f", V_tau = {_g(V)}"
    print(msg, file=sys.stderr if args.out in (None, "-") else sys.stdout)
    if V is not None and J > float(V):
        print("cost bound violated", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def _positive(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gcsynth", description="Guaranteed-cost state-feedback synthesis with IQC multipliers.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("-c", "--config", required=True, help="JSON plant/search/sim config")

    p = sub.add_parser("check", help="evaluate one multiplier point")
    common(p)
    p.add_argument("--tau", required=True, help="comma-separated tau, one per uncertainty channel")
    p.add_argument("--lambda", dest="lam", action="append", default=[],
                   help="comma-separated lambda triple; repeat once per nonlinear channel")
    p.set_defaults(func=cmd_check)

    for name, func, help_, default_out in (
        ("synth", cmd_synth, "search multipliers and write the best controller", "result.json"),
        ("sweep", cmd_sweep, "write the search trace as CSV", "-"),
    ):
        p = sub.add_parser(name, help=help_)
        common(p)
        p.add_argument("-o", "--out", default=default_out)
        p.add_argument("--seed", type=int, default=0, help="refinement jitter seed")
        p.add_argument("--workers", type=int, default=1)
        p.set_defaults(func=func)

    p = sub.add_parser("simulate", help="simulate the closed loop with a synthesized gain")
    common(p)
    p.add_argument("--controller", required=True, help="result JSON from 'synth'")
    p.add_argument("-o", "--out", default="-")
    p.add_argument("--dt", type=_positive)
    p.add_argument("--t-final", dest="t_final", type=_positive)
    p.add_argument("--realization", help="'zero' or 'scaled:<delta>'")
    p.set_defaults(func=cmd_simulate)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (_UsageError, ConfigError, ModelError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except GcsynthError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
