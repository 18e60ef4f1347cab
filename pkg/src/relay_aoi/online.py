"""Monte Carlo simulation of online update policies under unit-rate Poisson energy.

Each replication draws two independent arrival streams (source, relay) from
its own seed-derived stream, so every policy sees the same sample paths for a
given ``(seed, replication)`` pair.
"""
from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats

from .core import AgeCurve, age_curve_from_epochs, area_from_epochs

SOURCE, RELAY = 0, 1


class Policy(str, enum.Enum):
    BEST_EFFORT_UNIFORM = "BestEffortUniform"
    GREEDY = "Greedy"
    BEST_EFFORT_WITH_DUMPING = "BestEffortWithDumping"


class DegenerateHorizon(ValueError):
    pass


@dataclass(frozen=True)
class OnlineConfig:
    d: float
    d_bar: float
    horizon: float
    replications: int = 1
    seed: int = 0
    policy: Policy = Policy.BEST_EFFORT_UNIFORM

    def __post_init__(self):
        if self.d < 0 or self.d_bar < 0 or self.d + self.d_bar <= 0:
            raise ValueError("need d, d_bar >= 0 and d + d_bar > 0")
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        object.__setattr__(self, "policy", Policy(self.policy))

    @property
    def service(self) -> float:
        return self.d + self.d_bar

    @property
    def slot(self) -> float:
        return max(1.0, self.service)


@dataclass
class BatteryState:
    source_units: int = 1
    relay_units: int = 1

    def can_send(self) -> bool:
        return self.source_units >= 1 and self.relay_units >= 1

    def send(self) -> None:
        if not self.can_send():
            raise ValueError("empty battery")
        self.source_units -= 1
        self.relay_units -= 1


@dataclass
class SimResult:
    time_avg_aoi: float
    delivered: int
    failed_slots: int
    update_rate: float
    failure_runs: list[int]
    tx_times: np.ndarray = field(repr=False)
    source_arrivals: int = 0
    relay_arrivals: int = 0
    age_curve_sample: AgeCurve | None = field(default=None, repr=False)


def lower_bound(d: float, d_bar: float) -> float:
    """Long-run average AoI no online policy can beat."""
    s = d + d_bar
    if s <= 0:
        raise ValueError("d + d_bar must be positive")
    return max(0.5 + s, 1.5 * s)


def rate_bound(d: float, d_bar: float) -> float:
    s = d + d_bar
    if s <= 0:
        raise ValueError("d + d_bar must be positive")
    return min(1.0, 1.0 / s)


def stream(seed: int, replication: int, node: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(replication, node))
    return np.random.Generator(np.random.PCG64(ss))


def sample_poisson(horizon: float, rng: np.random.Generator, rate: float = 1.0) -> np.ndarray:
    """Ordered arrival epochs in [0, horizon) of a Poisson process."""
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    # fixed chunk size: a longer horizon extends the same path instead of redrawing it
    chunk = 4096
    parts, last = [], 0.0
    while last < horizon:
        gaps = rng.exponential(1.0 / rate, size=chunk)
        times = last + np.cumsum(gaps)
        parts.append(times)
        last = times[-1]
    arr = np.concatenate(parts)
    return arr[arr < horizon]


def sample_paths(cfg: OnlineConfig, replication: int) -> tuple[np.ndarray, np.ndarray]:
    return (sample_poisson(cfg.horizon, stream(cfg.seed, replication, SOURCE)),
            sample_poisson(cfg.horizon, stream(cfg.seed, replication, RELAY)))


def _slot_times(m: float, horizon: float) -> np.ndarray:
    n_slots = int(math.ceil(horizon / m))
    times = np.arange(n_slots) * m
    return times[times < horizon]


def _runs_of_failures(success: np.ndarray) -> list[int]:
    """Lengths of maximal failed-slot runs that end in a success (censored tail dropped)."""
    runs, cur = [], 0
    for ok in success.tolist():
        if ok:
            if cur:
                runs.append(cur)
            cur = 0
        else:
            cur += 1
    return runs


def _uniform_tx(src, rel, m, horizon):
    slots = _slot_times(m, horizon)
    # energy usable at slot n = arrivals strictly before l_n (left limit)
    c_src = np.searchsorted(src, slots, side="left")
    c_rel = np.searchsorted(rel, slots, side="left")
    n_max = min(len(src), len(rel))
    i = np.arange(n_max + 1)
    # first slot at which the i-th unit (beyond the initial one) is available at both nodes
    q = np.maximum(np.searchsorted(c_src, i, side="left"), np.searchsorted(c_rel, i, side="left"))
    k = i + np.maximum.accumulate(q - i)
    k = k[k < len(slots)]
    success = np.zeros(len(slots), dtype=bool)
    success[k] = True
    return slots[k], success


def _dumping_tx(src, rel, m, horizon):
    slots = _slot_times(m, horizon)
    c_src = np.diff(np.searchsorted(src, slots, side="left"), prepend=0).tolist()
    c_rel = np.diff(np.searchsorted(rel, slots, side="left"), prepend=0).tolist()
    battery = BatteryState()
    success = np.zeros(len(slots), dtype=bool)
    for n in range(len(slots)):
        battery.source_units += c_src[n]
        battery.relay_units += c_rel[n]
        if battery.can_send():
            battery.send()
            success[n] = True
        else:
            battery.source_units = battery.relay_units = 0
    return slots[success], success


def _greedy_tx(src, rel, service, horizon):
    n_max = min(len(src), len(rel))
    ready = np.zeros(n_max + 1)
    ready[1:] = np.maximum(src[:n_max], rel[:n_max])
    i = np.arange(n_max + 1)
    tx = i * service + np.maximum.accumulate(ready - i * service)
    tx = np.maximum(tx, ready)  # rounding must not move a send ahead of its energy
    return tx[tx < horizon]


def simulate_path(src, rel, d: float, d_bar: float, horizon: float,
                  policy: Policy = Policy.BEST_EFFORT_UNIFORM, keep_curve: bool = False) -> SimResult:
    """Run one policy on given arrival epochs (each node starts with one unit)."""
    policy = Policy(policy)
    service = d + d_bar
    m = max(1.0, service)
    if horizon < m:
        raise DegenerateHorizon(f"horizon {horizon} shorter than one slot ({m})")
    src = np.asarray(src, dtype=float)
    rel = np.asarray(rel, dtype=float)
    if policy is Policy.GREEDY:
        tx = _greedy_tx(src, rel, service, horizon)
        failed, runs = 0, []
    else:
        fn = _uniform_tx if policy is Policy.BEST_EFFORT_UNIFORM else _dumping_tx
        tx, success = fn(src, rel, m, horizon)
        failed = int((~success).sum())
        runs = _runs_of_failures(success)
    deliveries = tx + service
    ok = deliveries <= horizon
    g, D = tx[ok], deliveries[ok]
    area = area_from_epochs(g, D, horizon)
    return SimResult(
        time_avg_aoi=area / horizon,
        delivered=int(ok.sum()),
        failed_slots=failed,
        update_rate=float(ok.sum()) / horizon,
        failure_runs=runs,
        tx_times=tx,
        source_arrivals=len(src),
        relay_arrivals=len(rel),
        age_curve_sample=age_curve_from_epochs(g, D, horizon) if keep_curve else None,
    )


def simulate_replication(cfg: OnlineConfig, replication: int, keep_curve: bool = False) -> SimResult:
    src, rel = sample_paths(cfg, replication)
    return simulate_path(src, rel, cfg.d, cfg.d_bar, cfg.horizon, cfg.policy, keep_curve)


def _rep_task(args):
    cfg, rep = args
    return rep, simulate_replication(cfg, rep)


def run_policy(cfg: OnlineConfig, workers: int = 1) -> list[SimResult]:
    """All replications of ``cfg`` in replication order (serial and parallel agree)."""
    if cfg.horizon < cfg.slot:
        raise DegenerateHorizon(f"horizon {cfg.horizon} shorter than one slot ({cfg.slot})")
    tasks = [(cfg, r) for r in range(cfg.replications)]
    if workers <= 1:
        return [simulate_replication(cfg, r) for r in range(cfg.replications)]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        done = list(ex.map(_rep_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    return [res for _, res in sorted(done, key=lambda p: p[0])]


@dataclass(frozen=True)
class Summary:
    mean_aoi: float
    std_aoi: float
    mean_rate: float
    reps: int


def summarize(results: list[SimResult]) -> Summary:
    aoi = np.array([r.time_avg_aoi for r in results])
    rate = np.array([r.update_rate for r in results])
    std = float(aoi.std(ddof=1)) if len(aoi) > 1 else 0.0
    return Summary(float(aoi.mean()), std, float(rate.mean()), len(results))


# --- failure-run statistics --------------------------------------------------

def failure_success_prob(d: float, d_bar: float) -> float:
    """p^2: chance that both nodes harvest at least one unit within one slot."""
    p = 1.0 - math.exp(-max(1.0, d + d_bar))
    return p * p


@dataclass(frozen=True)
class GofReport:
    verdict: str  # "pass", "fail" or "inconclusive"
    statistic: float
    dof: int
    p_value: float
    n_runs: int
    bins: tuple[str, ...] = ()
    observed: tuple[int, ...] = ()
    expected: tuple[float, ...] = ()


def geometric_chi_square(runs, q: float, alpha: float = 0.01, min_runs: int = 500,
                         min_expected: float = 5.0) -> GofReport:
    """Chi-square fit of run lengths (>= 1) to Geometric(q).

    Bins are 1, 2, ..., K-1 and a pooled tail ``>= K``, with K as large as
    possible while every bin keeps an expected count of at least ``min_expected``.
    """
    runs = np.asarray(runs, dtype=int)
    n = len(runs)
    if n < min_runs:
        return GofReport("inconclusive", float("nan"), 0, float("nan"), n)
    k = 1
    # bin k is kept as a point bin while it and the tail beyond it stay large enough
    while n * q * (1 - q) ** (k - 1) >= min_expected and n * (1 - q) ** k >= min_expected:
        k += 1
    probs = [q * (1 - q) ** (j - 1) for j in range(1, k)] + [(1 - q) ** (k - 1)]
    observed = [int(np.sum(runs == j)) for j in range(1, k)] + [int(np.sum(runs >= k))]
    expected = [n * p for p in probs]
    if len(probs) < 2:
        return GofReport("inconclusive", float("nan"), 0, float("nan"), n)
    stat, pval = stats.chisquare(observed, expected)
    labels = [str(j) for j in range(1, k)] + [f">={k}"]
    return GofReport("pass" if pval >= alpha else "fail", float(stat), len(probs) - 1, float(pval), n,
                     tuple(labels), tuple(observed), tuple(expected))


def collect_failure_runs(cfg: OnlineConfig, min_runs: int = 0, max_replications: int = 10_000) -> list[int]:
    """Failure runs pooled over replications 0, 1, ... of ``cfg``.

    At least ``cfg.replications`` replications are used; more are added (in
    order) until ``min_runs`` runs are pooled or ``max_replications`` is hit.
    """
    runs: list[int] = []
    rep = 0
    while rep < max_replications and (rep < cfg.replications or len(runs) < min_runs):
        runs.extend(simulate_replication(cfg, rep).failure_runs)
        rep += 1
    return runs


def failure_run_test(cfg: OnlineConfig, alpha: float = 0.01, min_runs: int = 500, extend: bool = False) -> GofReport:
    """Chi-square test of the dumping policy's failure-run lengths.

    With ``extend`` the sample grows replication by replication until
    ``min_runs`` runs are available; otherwise a short sample is inconclusive.
    """
    cfg = replace(cfg, policy=Policy.BEST_EFFORT_WITH_DUMPING)
    runs = collect_failure_runs(cfg, min_runs if extend else 0)
    return geometric_chi_square(runs, failure_success_prob(cfg.d, cfg.d_bar), alpha, min_runs)


# --- sweeps ---------------------------------------------------------------------

SWEEP_FIELDS = ("d_plus_dbar", "policy", "mean_aoi", "std_aoi", "mean_rate", "lower_bound", "reps", "horizon", "seed")


def split_service(total: float, template: OnlineConfig) -> tuple[float, float]:
    """Split an aggregate service time in the template's d : d_bar ratio."""
    frac = template.d / template.service
    return total * frac, total * (1.0 - frac)


def sweep(grid, template: OnlineConfig,
          policies=(Policy.BEST_EFFORT_UNIFORM, Policy.GREEDY), workers: int = 1) -> list[dict]:
    grid = list(grid)
    if not grid:
        raise ValueError("empty sweep grid")
    rows = []
    for total in grid:
        d, d_bar = split_service(total, template)
        for pol in policies:
            cfg = replace(template, d=d, d_bar=d_bar, policy=Policy(pol))
            summ = summarize(run_policy(cfg, workers))
            rows.append({
                "d_plus_dbar": total, "policy": Policy(pol).value,
                "mean_aoi": summ.mean_aoi, "std_aoi": summ.std_aoi, "mean_rate": summ.mean_rate,
                "lower_bound": lower_bound(d, d_bar), "reps": summ.reps,
                "horizon": cfg.horizon, "seed": cfg.seed,
            })
    return rows


def parse_grid(text: str) -> list[float]:
    """``lo:hi:step`` inclusive of ``hi`` (up to rounding)."""
    try:
        lo, hi, step = (float(v) for v in text.split(":"))
    except ValueError:
        raise ValueError(f"bad grid {text!r}, expected lo:hi:step") from None
    if step <= 0 or hi < lo:
        raise ValueError(f"bad grid {text!r}")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [round(lo + k * step, 12) for k in range(n)]
