"""Exact offline schedules: small-horizon closed form, inter-update balancing,
feasibility amendment, and the earliest-possible greedy baseline."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .core import (
    REL_TOL,
    InternalConsistencyError,
    SingleHopInstance,
    TwoHopInstance,
    TwoHopSchedule,
    check_x,
    close,
    geq,
    require_feasible,
    to_single_hop,
    x_to_two_hop,
)


class Branch(str, enum.Enum):
    SMALL_HORIZON = "SmallHorizon"
    BALANCED_FEASIBLE = "BalancedFeasible"
    AMENDED_AT_N0 = "AmendedAtN0"
    AMENDED_VIA_SMALL_HORIZON = "AmendedViaSmallHorizonBranch"


class WrongBranch(ValueError):
    pass


@dataclass(frozen=True)
class Segment:
    """One balancing run: x_start..x_end (1-based, inclusive) all equal ``value``."""

    start: int
    end: int
    value: float
    candidates: tuple[float, ...] = ()  # values maximized over, indexed start..N+1


@dataclass
class SolveTrace:
    branch: Branch
    n0: int | None = None
    segments: list[Segment] = field(default_factory=list)
    x_e: np.ndarray | None = None
    x_star: np.ndarray | None = None

    def to_dict(self) -> dict:
        return {
            "branch": self.branch.value,
            "n0": self.n0,
            "segments": [(s.start, s.end, s.value) for s in self.segments],
            "x_e": None if self.x_e is None else self.x_e.tolist(),
            "x_star": None if self.x_star is None else self.x_star.tolist(),
        }


def _small_horizon_x(inst: SingleHopInstance) -> np.ndarray:
    n, d, T = inst.n, inst.service, inst.deadline
    s = np.asarray(inst.arrivals)
    k = np.arange(1, n + 1)
    x1 = max((T - (n - 2) * d) / 2.0, float(np.max(s - (k - 2) * d)))
    x = np.full(n + 1, 2.0 * d)
    x[0] = x1
    x[n] = T - (n - 2) * d - x1
    return x


def solve_small_horizon(inst: SingleHopInstance) -> np.ndarray:
    """All updates back to back; only x_1 (and hence x_{N+1}) is free."""
    n, d, T = inst.n, inst.service, inst.deadline
    if not (geq(T, n * d) and T < (n + 1) * d):
        raise WrongBranch(f"small-horizon form needs N d <= T < (N+1) d, got T={T}, N={n}, d={d}")
    return _small_horizon_x(inst)


def inter_update_balancing(inst: SingleHopInstance) -> tuple[np.ndarray, SolveTrace]:
    """Optimum of the problem with energy-causality constraints only.

    Each run restarts from the last tight arrival, equalizes the remaining
    gaps as far as the next arrivals allow, and breaks argmax ties towards
    the largest index.
    """
    n, d, T = inst.n, inst.service, inst.deadline
    s = np.asarray(inst.arrivals, dtype=float)
    x = np.empty(n + 1)
    trace = SolveTrace(Branch.BALANCED_FEASIBLE)
    ref, ref_time = 0, 0.0
    while ref < n + 1:
        j = np.arange(ref + 1, n + 2)
        targets = np.append(s[ref:], T - d)
        vals = (targets - ref_time) / (j - ref)
        best = float(vals.max())
        ties = np.nonzero(vals >= best - REL_TOL * (1.0 + abs(best)))[0]
        k = int(j[ties[-1]])
        x[ref:k] = best + d
        trace.segments.append(Segment(ref + 1, k, best + d, tuple(vals.tolist())))
        ref, ref_time = k, (s[k - 1] if k <= n else T - d)
    trace.x_e = x.copy()
    return x, trace


def first_infeasible_index(x: np.ndarray, d: float) -> int | None:
    """1-based n0: first i in 2..N+1 with x_i < 2d (i <= N) or x_{N+1} < d."""
    n = len(x) - 1
    for i in range(2, n + 1):
        if not geq(x[i - 1], 2 * d):
            return i
    if not geq(x[n], d):
        return n + 1
    return None


def amend(x_e: np.ndarray, inst: SingleHopInstance, trace: SolveTrace | None = None) -> tuple[np.ndarray, SolveTrace]:
    n, d, T = inst.n, inst.service, inst.deadline
    if trace is None:
        trace = SolveTrace(Branch.BALANCED_FEASIBLE, x_e=np.array(x_e, dtype=float))
    x_e = np.asarray(x_e, dtype=float)
    n0 = first_infeasible_index(x_e, d)
    trace.n0 = n0
    if n0 is None:
        trace.branch = Branch.BALANCED_FEASIBLE
        x = x_e.copy()
    elif n0 == n + 1:
        raise InternalConsistencyError("first infeasible index is N+1; instance cannot be feasible")
    elif n0 > 2 or close(x_e[0], inst.arrivals[0] + d):
        trace.branch = Branch.AMENDED_AT_N0
        x = x_e.copy()
        x[n0 - 1:n] = 2 * d
        x[n] = T + n * d - x[:n].sum()
    else:
        trace.branch = Branch.AMENDED_VIA_SMALL_HORIZON
        x = _small_horizon_x(inst)
    trace.x_star = x.copy()
    return x, trace


def solve_single_hop(inst: SingleHopInstance) -> tuple[np.ndarray, SolveTrace]:
    require_feasible(inst)
    n, d, T = inst.n, inst.service, inst.deadline
    if T < (n + 1) * d:
        x = solve_small_horizon(inst)
        trace = SolveTrace(Branch.SMALL_HORIZON, x_star=x.copy())
    else:
        x_e, trace = inter_update_balancing(inst)
        x, trace = amend(x_e, inst, trace)
    problems = check_x(x, inst, tol=1e-8)
    if problems:
        raise InternalConsistencyError("solver output infeasible: " + "; ".join(problems))
    return x, trace


def solve_two_hop(inst: TwoHopInstance) -> tuple[TwoHopSchedule, SolveTrace]:
    require_feasible(inst)
    x, trace = solve_single_hop(to_single_hop(inst))
    return x_to_two_hop(x, inst), trace


def offline_greedy_two_hop(inst: TwoHopInstance) -> tuple[TwoHopSchedule, bool]:
    """Send as early as energy and the previous relay forward allow.

    Returns the schedule and whether its last delivery meets the deadline.
    """
    d, db = inst.source_service, inst.relay_service
    t, tb = [], []
    nxt = inst.source_arrivals[0]
    for s, sb in zip(inst.source_arrivals, inst.relay_arrivals):
        ti = max(s, nxt)
        tbi = max(sb, ti + d)
        t.append(ti)
        tb.append(tbi)
        nxt = tbi + db
    sched = TwoHopSchedule(tuple(t), tuple(tb), db)
    return sched, geq(inst.deadline, tb[-1] + db)


def objective(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(np.dot(x, x))


def necessary_condition_violations(x, inst: SingleHopInstance, tol: float = 1e-7) -> list[str]:
    """Structural conditions every optimal inter-update vector satisfies."""
    x = np.asarray(x, dtype=float)
    n, d = inst.n, inst.service
    s = inst.arrivals
    prefix = np.cumsum(x[:n])

    def tight(i):  # prefix sum through x_i meets its energy constraint
        return close(prefix[i - 1], s[i - 1] + i * d, tol)

    def gt(a, b):
        return a > b + tol * (1.0 + max(abs(a), abs(b)))

    out = []
    for i in range(2, n):
        a, b = x[i - 1], x[i]
        if gt(b, a):
            out.append(f"x_{i} < x_{i + 1}")
        elif gt(a, b) and not tight(i):
            out.append(f"x_{i} > x_{i + 1} without tight prefix at {i}")
    if n >= 2:
        if gt(x[0], x[1]) and not close(x[0], s[0] + d, tol):
            out.append("x_1 > x_2 but x_1 != s_1 + d")
        if gt(x[1], x[0]) and not all(close(v, 2 * d, tol) for v in x[1:n]):
            out.append("x_1 < x_2 but some x_i != 2d")
    xn, xn1 = x[n - 1], x[n]
    if gt(xn1, xn):
        out.append("x_N < x_{N+1}")
    elif gt(xn, xn1) and not (tight(n) or (n >= 2 and close(xn, 2 * d, tol))):
        out.append("x_N > x_{N+1} without tight prefix or x_N = 2d")
    return out


def balancing_condition_violations(x_e, inst: SingleHopInstance, tol: float = 1e-7) -> list[str]:
    """Balancing output is non-increasing and only drops right after a tight prefix."""
    x = np.asarray(x_e, dtype=float)
    n, d = inst.n, inst.service
    prefix = np.cumsum(x[:n])
    out = []
    for j in range(1, n + 1):
        a, b = x[j - 1], x[j]
        if b > a + tol * (1.0 + abs(a)):
            out.append(f"balanced x_{j} < x_{j + 1}")
        elif a > b + tol * (1.0 + abs(a)) and not close(prefix[j - 1], inst.arrivals[j - 1] + j * d, tol):
            out.append(f"balanced drop at {j} without tight prefix")
    return out
