"""Reproduction runs: worked offline examples, policy sweep, AoI versus horizon."""
from __future__ import annotations

import csv
import os
from dataclasses import replace

import numpy as np

from . import plotting
from .core import TwoHopInstance, age_area, instance_to_dict, to_single_hop
from .offline import offline_greedy_two_hop, solve_two_hop
from .online import (
    SWEEP_FIELDS,
    OnlineConfig,
    Policy,
    lower_bound,
    run_policy,
    summarize,
    sweep,
)

OFFLINE_EXAMPLES = {
    "example1": TwoHopInstance([2, 6, 7, 11, 13], [1, 4, 9, 10, 15], 1, 2, 19),
    "example2_T16": TwoHopInstance([0, 4, 4, 9, 13], [1, 3, 6, 10, 12], 1, 2, 16),
    "example2_T18": TwoHopInstance([0, 4, 4, 9, 13], [1, 3, 6, 10, 12], 1, 2, 18),
}

SWEEP_GRID = [round(0.1 * k, 12) for k in range(1, 21)]
HORIZONS = [10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10000]
AOI_T_FIELDS = ("horizon", "policy", "mean_aoi", "std_aoi", "lower_bound", "reps", "d_plus_dbar", "seed")


def fmt(v):
    """12 significant digits for floats, everything else untouched."""
    if isinstance(v, (float, np.floating)):
        return float(f"{float(v):.12g}")
    if isinstance(v, dict):
        return {k: fmt(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [fmt(x) for x in v]
    if isinstance(v, np.integer):
        return int(v)
    return v


def schedule_dict(sched) -> dict:
    return {"source_tx": list(sched.source_tx), "relay_tx": list(sched.relay_tx),
            "deliveries": list(sched.deliveries)}


def offline_example(inst: TwoHopInstance) -> dict:
    sched, trace = solve_two_hop(inst)
    area, curve = age_area(sched, inst.deadline)
    greedy, meets = offline_greedy_two_hop(inst)
    g_area, g_curve = age_area(greedy, inst.deadline)
    reduced = to_single_hop(inst)
    return {
        "instance": instance_to_dict(inst),
        "reduced": {"arrivals": list(reduced.arrivals), "d": reduced.service, "T": reduced.deadline},
        "branch": trace.branch.value,
        "n0": trace.n0,
        "x_e": None if trace.x_e is None else trace.x_e.tolist(),
        "x_star": trace.x_star.tolist(),
        "schedule": schedule_dict(sched),
        "area": area,
        "greedy": {"schedule": schedule_dict(greedy), "area": g_area, "meets_deadline": meets},
        "_curves": (curve, g_curve),
    }


def write_csv(path, fields, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(fields))
        w.writeheader()
        for r in rows:
            w.writerow({k: (f"{r[k]:.12g}" if isinstance(r[k], float) else r[k]) for k in fields})


def reproduce_offline(out_dir) -> list[str]:
    import json

    os.makedirs(out_dir, exist_ok=True)
    written = []
    for name, inst in OFFLINE_EXAMPLES.items():
        res = offline_example(inst)
        curve, g_curve = res.pop("_curves")
        path = os.path.join(out_dir, f"{name}.json")
        with open(path, "w") as fh:
            json.dump(fmt(res), fh, indent=2, sort_keys=True)
            fh.write("\n")
        written.append(path)
        for tag, c in (("optimal", curve), ("greedy", g_curve)):
            p = os.path.join(out_dir, f"{name}_{tag}_age.csv")
            c.to_csv(p)
            written.append(p)
        svg = os.path.join(out_dir, f"{name}_age.svg")
        plotting.line_plot({"optimal": (curve.times, curve.ages), "offline greedy": (g_curve.times, g_curve.ages)},
                           svg, title=f"AoI at destination ({name})", xlabel="time", ylabel="age")
        written.append(svg)
    return written


def reproduce_online_sweep(out_dir, reps: int = 100, horizon: float = 5000, seed: int = 0,
                           grid=None, workers: int = 1) -> list[str]:
    os.makedirs(out_dir, exist_ok=True)
    grid = SWEEP_GRID if grid is None else grid
    template = OnlineConfig(0.5, 0.5, horizon, reps, seed)
    rows = sweep(grid, template, workers=workers)
    csv_path = os.path.join(out_dir, "online_sweep.csv")
    write_csv(csv_path, SWEEP_FIELDS, rows)
    series = {}
    for pol in (Policy.BEST_EFFORT_UNIFORM, Policy.GREEDY):
        sel = [r for r in rows if r["policy"] == pol.value]
        series[pol.value] = ([r["d_plus_dbar"] for r in sel], [r["mean_aoi"] for r in sel])
    series["lower bound"] = (list(grid), [lower_bound(s, 0.0) for s in grid])
    svg = os.path.join(out_dir, "online_sweep.svg")
    plotting.line_plot(series, svg, title=f"Average AoI vs d + dbar (T={horizon:g}, {reps} reps)",
                       xlabel="d + dbar", ylabel="time-average AoI")
    return [csv_path, svg]


def aoi_vs_horizon(d_plus_dbar: float = 0.25, horizons=None, reps: int = 100, seed: int = 0,
                   workers: int = 1) -> list[dict]:
    horizons = HORIZONS if horizons is None else horizons
    rows = []
    base = OnlineConfig(d_plus_dbar / 2, d_plus_dbar / 2, horizons[0], reps, seed)
    for T in horizons:
        for pol in (Policy.BEST_EFFORT_UNIFORM, Policy.GREEDY):
            summ = summarize(run_policy(replace(base, horizon=float(T), policy=pol), workers))
            rows.append({"horizon": float(T), "policy": pol.value, "mean_aoi": summ.mean_aoi,
                         "std_aoi": summ.std_aoi, "lower_bound": lower_bound(base.d, base.d_bar),
                         "reps": reps, "d_plus_dbar": d_plus_dbar, "seed": seed})
    return rows


def reproduce_aoi_vs_horizon(out_dir, reps: int = 100, seed: int = 0, workers: int = 1) -> list[str]:
    os.makedirs(out_dir, exist_ok=True)
    rows = aoi_vs_horizon(reps=reps, seed=seed, workers=workers)
    csv_path = os.path.join(out_dir, "aoi_vs_T.csv")
    write_csv(csv_path, AOI_T_FIELDS, rows)
    series = {}
    for pol in (Policy.BEST_EFFORT_UNIFORM, Policy.GREEDY):
        sel = [r for r in rows if r["policy"] == pol.value]
        series[pol.value] = ([r["horizon"] for r in sel], [r["mean_aoi"] for r in sel])
    series["lower bound"] = (HORIZONS, [rows[0]["lower_bound"]] * len(HORIZONS))
    svg = os.path.join(out_dir, "aoi_vs_T.svg")
    plotting.line_plot(series, svg, title="Average AoI vs horizon (d + dbar = 0.25)",
                       xlabel="T", ylabel="time-average AoI", logx=True)
    return [csv_path, svg]
