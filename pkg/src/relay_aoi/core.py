"""Instances, feasibility checks, two-hop/single-hop reduction and exact AoI areas.

Times are plain floats. Equality checks use a relative tolerance of ``REL_TOL``.
"""
from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

REL_TOL = 1e-9


def close(a: float, b: float, tol: float = REL_TOL) -> bool:
    return abs(a - b) <= tol * (1.0 + max(abs(a), abs(b)))


def geq(a: float, b: float, tol: float = REL_TOL) -> bool:
    """``a >= b`` up to relative tolerance."""
    return a >= b - tol * (1.0 + max(abs(a), abs(b)))


class InvalidInstance(ValueError):
    pass


class InfeasibleInstance(ValueError):
    def __init__(self, violations: Sequence["Violation"]):
        self.violations = list(violations)
        lines = "; ".join(str(v) for v in self.violations[:10])
        more = "" if len(self.violations) <= 10 else f" (+{len(self.violations) - 10} more)"
        super().__init__(f"infeasible instance: {lines}{more}")


class InvalidSchedule(ValueError):
    pass


class InternalConsistencyError(RuntimeError):
    """A solver produced output violating its own guarantees."""


@dataclass(frozen=True)
class Violation:
    index: int  # 1-based update index
    condition: str
    lhs: float
    rhs: float

    def __str__(self) -> str:
        return f"i={self.index}: {self.condition} ({self.lhs:.12g} < {self.rhs:.12g})"


@dataclass(frozen=True)
class Verdict:
    ok: bool
    violations: tuple[Violation, ...] = ()
    warnings: tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.ok


def _sorted_times(values: Iterable[float], name: str, notes: list[str]) -> tuple[float, ...]:
    arr = [float(v) for v in values]
    if any(not np.isfinite(v) for v in arr):
        raise InvalidInstance(f"{name} contains non-finite values")
    if any(v < 0 for v in arr):
        raise InvalidInstance(f"{name} contains negative times")
    if any(b < a for a, b in zip(arr, arr[1:])):
        notes.append(f"{name} was not sorted; sorted automatically")
        arr.sort()
    return tuple(arr)


@dataclass(frozen=True)
class SingleHopInstance:
    arrivals: tuple[float, ...]
    service: float
    deadline: float
    notes: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        notes: list[str] = list(self.notes)
        arr = _sorted_times(self.arrivals, "arrivals", notes)
        if not arr:
            raise InvalidInstance("invalid instance: empty arrival list")
        if self.service < 0 or not np.isfinite(self.service):
            raise InvalidInstance("invalid instance: service time must be non-negative")
        if not np.isfinite(self.deadline):
            raise InvalidInstance("invalid instance: deadline must be finite")
        object.__setattr__(self, "arrivals", arr)
        object.__setattr__(self, "service", float(self.service))
        object.__setattr__(self, "deadline", float(self.deadline))
        object.__setattr__(self, "notes", tuple(notes))

    @property
    def n(self) -> int:
        return len(self.arrivals)


@dataclass(frozen=True)
class TwoHopInstance:
    source_arrivals: tuple[float, ...]
    relay_arrivals: tuple[float, ...]
    source_service: float
    relay_service: float
    deadline: float
    notes: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        notes: list[str] = list(self.notes)
        src = _sorted_times(self.source_arrivals, "source_arrivals", notes)
        rel = _sorted_times(self.relay_arrivals, "relay_arrivals", notes)
        if not src or not rel:
            raise InvalidInstance("invalid instance: empty arrival list")
        if len(src) != len(rel):
            n = min(len(src), len(rel))
            notes.append(f"arrival lists have unequal lengths ({len(src)}, {len(rel)}); truncated to {n}")
            src, rel = src[:n], rel[:n]
        for name in ("source_service", "relay_service"):
            v = getattr(self, name)
            if v < 0 or not np.isfinite(v):
                raise InvalidInstance(f"invalid instance: {name} must be non-negative")
        if not np.isfinite(self.deadline):
            raise InvalidInstance("invalid instance: deadline must be finite")
        object.__setattr__(self, "source_arrivals", src)
        object.__setattr__(self, "relay_arrivals", rel)
        object.__setattr__(self, "source_service", float(self.source_service))
        object.__setattr__(self, "relay_service", float(self.relay_service))
        object.__setattr__(self, "deadline", float(self.deadline))
        object.__setattr__(self, "notes", tuple(notes))

    @property
    def n(self) -> int:
        return len(self.source_arrivals)

    @property
    def total_service(self) -> float:
        return self.source_service + self.relay_service


@dataclass(frozen=True)
class TwoHopSchedule:
    source_tx: tuple[float, ...]
    relay_tx: tuple[float, ...]
    relay_service: float

    @property
    def deliveries(self) -> tuple[float, ...]:
        return tuple(t + self.relay_service for t in self.relay_tx)


@dataclass(frozen=True)
class AgeCurve:
    """Vertices of the AoI sawtooth. A drop is two vertices sharing a time."""

    times: np.ndarray
    ages: np.ndarray

    def __len__(self) -> int:
        return len(self.times)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["time", "age"])
            for t, a in zip(self.times, self.ages):
                w.writerow([f"{t:.12g}", f"{a:.12g}"])


# --- validation -------------------------------------------------------------

def validate_single_hop(inst: SingleHopInstance) -> Verdict:
    n, d, T = inst.n, inst.service, inst.deadline
    bad = []
    for i, s in enumerate(inst.arrivals, start=1):
        rhs = s + (n - i + 1) * d
        if not geq(T, rhs):
            bad.append(Violation(i, "T >= s_i + (N-i+1)d", T, rhs))
    if not geq(T, n * d):
        bad.append(Violation(n, "T >= N d", T, n * d))
    return Verdict(not bad, tuple(bad), inst.notes)


def validate_two_hop(inst: TwoHopInstance) -> Verdict:
    """Check every per-update feasibility condition of a two-hop instance.

    Besides the relay and source families, the combined-node condition
    ``T + d >= max(sbar_i, s_i + d) + (N-i+1)(d + dbar)`` is checked; it implies
    the other two and is the one that actually guarantees a schedule exists
    (the relay must also leave room for the source between its forwards).
    """
    n, d, db, T = inst.n, inst.source_service, inst.relay_service, inst.deadline
    bad = []
    for i, (s, sb) in enumerate(zip(inst.source_arrivals, inst.relay_arrivals), start=1):
        k = n - i + 1
        if not geq(T, sb + k * db):
            bad.append(Violation(i, "T >= sbar_i + (N-i+1)dbar", T, sb + k * db))
        if not geq(T, s + k * (d + db)):
            bad.append(Violation(i, "T >= s_i + (N-i+1)(d+dbar)", T, s + k * (d + db)))
        combined = max(sb, s + d) + k * (d + db)
        if not geq(T + d, combined):
            bad.append(Violation(i, "T+d >= max(sbar_i, s_i+d) + (N-i+1)(d+dbar)", T + d, combined))
    return Verdict(not bad, tuple(bad), inst.notes)


def require_feasible(inst) -> None:
    verdict = validate_two_hop(inst) if isinstance(inst, TwoHopInstance) else validate_single_hop(inst)
    if not verdict:
        raise InfeasibleInstance(verdict.violations)
    for note in verdict.warnings:
        warnings.warn(note, stacklevel=3)


# --- transformations ----------------------------------------------------------

def to_single_hop(inst: TwoHopInstance) -> SingleHopInstance:
    """Merge source and relay into one node: s'_i = max(sbar_i, s_i + d), d' = d + dbar, T' = T + d."""
    d = inst.source_service
    arr = tuple(max(sb, s + d) for s, sb in zip(inst.source_arrivals, inst.relay_arrivals))
    return SingleHopInstance(arr, d + inst.relay_service, inst.deadline + d)


def x_to_single_hop_tx(x: Sequence[float], service: float) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.cumsum(x[:-1]) - np.arange(1, len(x)) * service


def single_hop_tx_to_x(tx: Sequence[float], service: float, deadline: float) -> np.ndarray:
    tx = np.asarray(tx, dtype=float)
    x = np.empty(len(tx) + 1)
    x[0] = tx[0] + service
    x[1:-1] = np.diff(tx) + service
    x[-1] = deadline - tx[-1]
    return x


def check_x(x: Sequence[float], inst: SingleHopInstance, tol: float = REL_TOL) -> list[str]:
    """Return the list of violated constraints of the inter-update problem."""
    x = np.asarray(x, dtype=float)
    n, d, T = inst.n, inst.service, inst.deadline
    out = []
    if len(x) != n + 1:
        return [f"expected {n + 1} entries, got {len(x)}"]
    if not close(float(x.sum()), T + n * d, tol):
        out.append(f"sum x = {x.sum():.12g} != T + N d = {T + n * d:.12g}")
    prefix = np.cumsum(x[:-1])
    for k in range(n):
        rhs = inst.arrivals[k] + (k + 1) * d
        if not geq(prefix[k], rhs, tol):
            out.append(f"prefix {k + 1}: {prefix[k]:.12g} < {rhs:.12g}")
    for i in range(1, n):
        if not geq(x[i], 2 * d, tol):
            out.append(f"x_{i + 1} = {x[i]:.12g} < 2d")
    if not geq(x[n], d, tol):
        out.append(f"x_{n + 1} = {x[n]:.12g} < d")
    return out


def x_to_two_hop(x: Sequence[float], inst: TwoHopInstance) -> TwoHopSchedule:
    """Rebuild source/relay epochs from the reduced inter-update vector.

    The relay plays the single-hop transmitter; the source sends exactly ``d``
    earlier so nothing waits in the relay buffer.
    """
    d = inst.source_service
    relay = x_to_single_hop_tx(x, inst.total_service)
    source = relay - d
    sched = TwoHopSchedule(tuple(source.tolist()), tuple(relay.tolist()), inst.relay_service)
    problems = check_two_hop_schedule(sched, inst)
    if problems:
        raise InternalConsistencyError("reconstructed schedule violates constraints: " + "; ".join(problems))
    return sched


def two_hop_to_x(sched: TwoHopSchedule, inst: TwoHopInstance) -> np.ndarray:
    return single_hop_tx_to_x(sched.relay_tx, inst.total_service, inst.deadline + inst.source_service)


def check_two_hop_schedule(sched: TwoHopSchedule, inst: TwoHopInstance, tol: float = REL_TOL) -> list[str]:
    d, db, T = inst.source_service, inst.relay_service, inst.deadline
    t, tb = sched.source_tx, sched.relay_tx
    out = []
    if len(t) != inst.n or len(tb) != inst.n:
        return [f"expected {inst.n} transmissions"]
    for i in range(inst.n):
        if not geq(t[i], inst.source_arrivals[i], tol):
            out.append(f"source energy causality at {i + 1}")
        if not geq(tb[i], inst.relay_arrivals[i], tol):
            out.append(f"relay energy causality at {i + 1}")
        if not geq(tb[i], t[i] + d, tol):
            out.append(f"data causality at {i + 1}")
        if i + 1 < inst.n and not geq(t[i + 1], tb[i] + db, tol):
            out.append(f"half-duplex at {i + 1}")
    if not geq(T, tb[-1] + db, tol):
        out.append("last delivery after T")
    return out


# --- age areas ---------------------------------------------------------------

def area_from_epochs(generated: Sequence[float], delivered: Sequence[float], horizon: float) -> float:
    """Exact integral of the AoI on [0, horizon] with a(0) = 0.

    ``generated[i]`` is the generation epoch of the update delivered at
    ``delivered[i]``; deliveries must be sorted and not later than ``horizon``.
    """
    g = np.asarray(generated, dtype=float)
    D = np.asarray(delivered, dtype=float)
    if len(g) == 0:
        return 0.5 * horizon * horizon
    prev = np.concatenate(([0.0], g[:-1]))
    return float(0.5 * np.sum((D - prev) ** 2 - (D - g) ** 2) + 0.5 * (horizon - g[-1]) ** 2)


def age_curve_from_epochs(generated: Sequence[float], delivered: Sequence[float], horizon: float) -> AgeCurve:
    g = np.asarray(generated, dtype=float)
    D = np.asarray(delivered, dtype=float)
    n = len(g)
    times = np.empty(2 * n + 2)
    ages = np.empty(2 * n + 2)
    times[0] = ages[0] = 0.0
    prev = np.concatenate(([0.0], g[:-1])) if n else g
    times[1:-1:2] = D
    ages[1:-1:2] = D - prev
    times[2:-1:2] = D
    ages[2:-1:2] = D - g
    times[-1] = horizon
    ages[-1] = horizon - (g[-1] if n else 0.0)
    return AgeCurve(times, ages)


def _check_epochs(generated, delivered, horizon) -> None:
    D = np.asarray(delivered, dtype=float)
    g = np.asarray(generated, dtype=float)
    if len(D) and np.any(np.diff(D) < 0):
        raise InvalidSchedule("deliveries must be sorted")
    if len(D) and not geq(horizon, float(D[-1])):
        raise InvalidSchedule(f"delivery at {D[-1]:.12g} after horizon {horizon:.12g}")
    if np.any(D < g):
        raise InvalidSchedule("delivery before generation")


def age_area(sched: TwoHopSchedule, horizon: float) -> tuple[float, AgeCurve]:
    """True area under the destination AoI curve, plus the curve itself."""
    _check_epochs(sched.source_tx, sched.deliveries, horizon)
    g, D = sched.source_tx, sched.deliveries
    return area_from_epochs(g, D, horizon), age_curve_from_epochs(g, D, horizon)


def objective_value(sched: TwoHopSchedule, horizon: float) -> float:
    """Objective of the offline two-hop problem as stated (twice the true area)."""
    return 2.0 * area_from_epochs(sched.source_tx, sched.deliveries, horizon)


# --- instance I/O --------------------------------------------------------------

def instance_from_dict(obj: dict):
    if not isinstance(obj, dict):
        raise InvalidInstance("invalid instance: expected a JSON object")
    try:
        src = obj["source_arrivals"]
        d = obj["d"]
        T = obj["T"]
    except KeyError as exc:
        raise InvalidInstance(f"invalid instance: missing field {exc.args[0]!r}") from None
    if "relay_arrivals" in obj or "d_bar" in obj:
        try:
            return TwoHopInstance(src, obj["relay_arrivals"], d, obj["d_bar"], T)
        except KeyError as exc:
            raise InvalidInstance(f"invalid instance: missing field {exc.args[0]!r}") from None
    return SingleHopInstance(src, d, T)


def instance_to_dict(inst) -> dict:
    if isinstance(inst, TwoHopInstance):
        return {"source_arrivals": list(inst.source_arrivals), "relay_arrivals": list(inst.relay_arrivals),
                "d": inst.source_service, "d_bar": inst.relay_service, "T": inst.deadline}
    return {"source_arrivals": list(inst.arrivals), "d": inst.service, "T": inst.deadline}


def load_instance(path):
    with open(path) as fh:
        text = fh.read()
    return instance_from_dict(json.loads(text))
