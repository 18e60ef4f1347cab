"""Command-line front end: ``solve``, ``simulate``, ``reproduce`` and ``trace``.

Exit codes: 0 success, 1 internal error, 2 invalid or infeasible input.
Every run writes a ``manifest.json`` (output directory, or ``--manifest``).
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import time

from . import __version__
from .core import (
    InfeasibleInstance,
    InvalidInstance,
    TwoHopInstance,
    age_area,
    area_from_epochs,
    age_curve_from_epochs,
    instance_from_dict,
    instance_to_dict,
    to_single_hop,
    validate_single_hop,
    validate_two_hop,
    x_to_single_hop_tx,
)
from .experiments import (
    fmt,
    reproduce_aoi_vs_horizon,
    reproduce_offline,
    reproduce_online_sweep,
    schedule_dict,
    write_csv,
)
from .offline import (
    Branch,
    objective,
    offline_greedy_two_hop,
    solve_single_hop,
    solve_two_hop,
)
from .online import SWEEP_FIELDS, OnlineConfig, Policy, parse_grid, sweep
from .oracle import numeric_area, oracle_solve

EXIT_OK, EXIT_INTERNAL, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def _read_instance(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"parse error in {path} at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return instance_from_dict(obj)


def _require(inst):
    verdict = validate_two_hop(inst) if isinstance(inst, TwoHopInstance) else validate_single_hop(inst)
    for note in verdict.warnings:
        print(f"warning: {note}", file=sys.stderr)
    if not verdict:
        raise InfeasibleInstance(verdict.violations)


def config_hash(config: dict) -> str:
    blob = json.dumps(fmt(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def write_manifest(path, argv, config: dict, seeds, outputs, started: float) -> None:
    manifest = {
        "command_line": list(argv),
        "config_hash": config_hash(config),
        "config": fmt(config),
        "artifact_version": __version__,
        "seeds": list(seeds),
        "outputs": sorted(outputs),
        "wall_clock_seconds": round(time.perf_counter() - started, 6),
    }
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")


# --- solve / trace -------------------------------------------------------------

def solve_result(inst, check: bool = False, greedy: bool = False):
    """Solve and collect the JSON payload; also returns the age curve."""
    _require(inst)
    if isinstance(inst, TwoHopInstance):
        sched, trace = solve_two_hop(inst)
        area, curve = age_area(sched, inst.deadline)
        single = to_single_hop(inst)
        payload = {"kind": "two-hop", "schedule": schedule_dict(sched)}
    else:
        single = inst
        x, trace = solve_single_hop(inst)
        tx = x_to_single_hop_tx(x, inst.service)
        deliveries = tx + inst.service
        area = area_from_epochs(tx, deliveries, inst.deadline)
        curve = age_curve_from_epochs(tx, deliveries, inst.deadline)
        payload = {"kind": "single-hop", "schedule": {"tx": tx.tolist(), "deliveries": deliveries.tolist()}}
    payload.update({
        "x_e": None if trace.x_e is None else trace.x_e.tolist(),
        "x_star": trace.x_star.tolist(),
        "branch": trace.branch.value,
        "n0": trace.n0,
        "area": area,
        "objective": objective(trace.x_star),
    })
    if check:
        x_o, obj_o = oracle_solve(single)
        gap = abs(payload["objective"] - obj_o)
        num = numeric_area(curve)
        payload["check"] = {
            "oracle_x": x_o.tolist(), "oracle_objective": obj_o, "solver_objective": payload["objective"],
            "gap": gap, "numeric_area": num,
            "ok": bool(gap <= 1e-6 * (1 + obj_o) and abs(num - area) <= 1e-6 * max(1.0, area)),
        }
    if greedy:
        if not isinstance(inst, TwoHopInstance):
            raise InputError("--greedy needs a two-hop instance")
        g, meets = offline_greedy_two_hop(inst)
        g_area, _ = age_area(g, inst.deadline) if meets else (float("nan"), None)
        payload["greedy"] = {"schedule": schedule_dict(g), "area": g_area, "meets_deadline": meets}
    return payload, curve


def cmd_solve(args):
    inst = _read_instance(args.instance)
    payload, curve = solve_result(inst, check=args.check, greedy=args.greedy)
    outputs = []
    if args.age_csv:
        curve.to_csv(args.age_csv)
        outputs.append(args.age_csv)
    print(json.dumps(fmt(payload), indent=2))
    code = EXIT_OK
    if args.check and not payload["check"]["ok"]:
        print("error: oracle check failed", file=sys.stderr)
        code = EXIT_INTERNAL
    return {"instance": instance_to_dict(inst), "check": args.check, "greedy": args.greedy}, outputs, code


def _num(v) -> str:
    return f"{v:.12g}"


def trace_lines(inst) -> list[str]:
    _require(inst)
    lines = []
    if isinstance(inst, TwoHopInstance):
        single = to_single_hop(inst)
        lines.append(f"two-hop instance: N={inst.n}, d={_num(inst.source_service)}, "
                     f"dbar={_num(inst.relay_service)}, T={_num(inst.deadline)}")
        lines.append("combined node: s' = [" + ", ".join(_num(s) for s in single.arrivals)
                     + f"], d' = {_num(single.service)}, T' = {_num(single.deadline)}")
    else:
        single = inst
        lines.append(f"single-hop instance: N={inst.n}, d={_num(inst.service)}, T={_num(inst.deadline)}")
    n, d, T = single.n, single.service, single.deadline
    x, trace = solve_single_hop(single)
    if trace.branch is Branch.SMALL_HORIZON:
        lines.append(f"N d = {_num(n * d)} <= T = {_num(T)} < (N+1) d = {_num((n + 1) * d)}: "
                     "closed-form branch SmallHorizon, no balancing runs")
    else:
        lines.append(f"T = {_num(T)} >= (N+1) d = {_num((n + 1) * d)}: inter-update balancing")
        for k, seg in enumerate(trace.segments, start=1):
            cands = ", ".join(f"{idx}:{_num(v)}" for idx, v in zip(range(seg.start, n + 2), seg.candidates))
            lines.append(f"run {k}: i{k}={seg.end}, value {_num(seg.value)} "
                         f"(x_{seg.start}..x_{seg.end}; candidates {{{cands}}}, argmax + d)")
        lines.append("x_e = [" + ", ".join(_num(v) for v in trace.x_e) + "]")
        if trace.n0 is None:
            lines.append("amendment: x_e already feasible, branch BalancedFeasible")
        elif trace.branch is Branch.AMENDED_AT_N0:
            lines.append(f"amendment: n0={trace.n0}; x_i = 2d for {trace.n0} <= i <= {n}, "
                         "last gap absorbs the slack (branch AmendedAtN0)")
        else:
            lines.append(f"amendment: n0={trace.n0} with x_1 > s_1 + d: "
                         "closed form applies (branch AmendedViaSmallHorizonBranch)")
    lines.append("x_star = [" + ", ".join(_num(v) for v in x) + "]")
    return lines


def cmd_trace(args):
    inst = _read_instance(args.instance)
    for line in trace_lines(inst):
        print(line)
    return {"instance": instance_to_dict(inst)}, [], EXIT_OK


# --- simulate / reproduce --------------------------------------------------------

def cmd_simulate(args):
    template = OnlineConfig(args.d, args.dbar, args.horizon, args.reps, args.seed)
    if args.policy == "all":
        policies = tuple(Policy)
    elif args.policy:
        policies = (Policy(args.policy),)
    else:
        policies = (Policy.BEST_EFFORT_UNIFORM, Policy.GREEDY) if args.sweep else (Policy.BEST_EFFORT_UNIFORM,)
    grid = parse_grid(args.sweep) if args.sweep else [template.service]
    rows = sweep(grid, template, policies=policies, workers=args.workers)
    outputs = []
    if args.out:
        parent = os.path.dirname(os.path.abspath(args.out))
        os.makedirs(parent, exist_ok=True)
        write_csv(args.out, SWEEP_FIELDS, rows)
        outputs.append(args.out)
    else:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(SWEEP_FIELDS), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (f"{r[k]:.12g}" if isinstance(r[k], float) else r[k]) for k in SWEEP_FIELDS})
        sys.stdout.write(buf.getvalue())
    config = {"d": args.d, "dbar": args.dbar, "horizon": args.horizon, "reps": args.reps, "seed": args.seed,
              "policies": [p.value for p in policies], "grid": grid}
    return config, outputs, EXIT_OK


def cmd_reproduce(args):
    out_dir = args.out_dir
    if args.which == "offline_examples":
        outputs = reproduce_offline(out_dir)
    elif args.which == "online_sweep":
        outputs = reproduce_online_sweep(out_dir, reps=args.reps, horizon=args.horizon, seed=args.seed,
                                         workers=args.workers)
    else:
        outputs = reproduce_aoi_vs_horizon(out_dir, reps=args.reps, seed=args.seed, workers=args.workers)
    for p in outputs:
        print(p)
    config = {"which": args.which, "reps": args.reps, "horizon": args.horizon, "seed": args.seed}
    return config, outputs, EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="relay-aoi", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="optimal offline schedule for a JSON instance")
    s.add_argument("instance")
    s.add_argument("--check", action="store_true", help="cross-check against the reference oracle")
    s.add_argument("--age-csv", help="write the optimal AoI curve breakpoints here")
    s.add_argument("--greedy", action="store_true", help="add the offline greedy baseline")
    s.add_argument("--manifest", default="manifest.json")

    t = sub.add_parser("trace", help="step-by-step solver trace")
    t.add_argument("instance")
    t.add_argument("--manifest", default="manifest.json")

    m = sub.add_parser("simulate", help="Monte Carlo run of the online policies")
    m.add_argument("--d", type=float, default=0.125)
    m.add_argument("--dbar", type=float, default=0.125)
    m.add_argument("--horizon", type=float, default=5000.0)
    m.add_argument("--reps", type=int, default=100)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--policy", choices=[pol.value for pol in Policy] + ["all"])
    m.add_argument("--sweep", metavar="LO:HI:STEP", help="sweep d + dbar, keeping the d : dbar ratio")
    m.add_argument("--out", help="CSV output path (default: stdout)")
    m.add_argument("--workers", type=int, default=1)
    m.add_argument("--manifest")

    r = sub.add_parser("reproduce", help="regenerate the worked examples and plots")
    r.add_argument("which", choices=["offline_examples", "online_sweep", "aoi_vs_T"])
    r.add_argument("--out-dir", default="results")
    r.add_argument("--reps", type=int, default=100)
    r.add_argument("--horizon", type=float, default=5000.0)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--workers", type=int, default=1)
    return p


COMMANDS = {"solve": cmd_solve, "trace": cmd_trace, "simulate": cmd_simulate, "reproduce": cmd_reproduce}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    started = time.perf_counter()
    try:
        config, outputs, code = COMMANDS[args.command](args)
    except (InputError, InvalidInstance) as exc:
        msg = str(exc)
        print(f"error: {msg if msg.startswith(('invalid instance', 'parse error')) else 'invalid instance: ' + msg}",
              file=sys.stderr)
        return EXIT_INPUT
    except InfeasibleInstance as exc:
        print("error: invalid instance (infeasible); violated conditions:", file=sys.stderr)
        for v in exc.violations:
            print(f"  {v}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    if args.command == "reproduce":
        manifest = os.path.join(args.out_dir, "manifest.json")
    elif args.command == "simulate" and not args.manifest:
        manifest = os.path.join(os.path.dirname(os.path.abspath(args.out)), "manifest.json") if args.out \
            else "manifest.json"
    else:
        manifest = args.manifest
    seeds = [args.seed] if hasattr(args, "seed") else []
    write_manifest(manifest, ["relay-aoi", *argv], {"command": args.command, **config}, seeds, outputs, started)
    return code


if __name__ == "__main__":
    sys.exit(main())
