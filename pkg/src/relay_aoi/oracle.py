"""Independent checks for the offline solver.

``oracle_solve`` minimizes sum(x**2) over the inter-update polytope with a
generic method (accelerated projected gradient on the dual, followed by an
exact solve on the detected active set). It knows nothing about balancing
or amendment. ``numeric_area`` integrates an age curve on a fine grid.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .core import AgeCurve, SingleHopInstance, validate_single_hop


class OracleFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class OracleConfig:
    max_iterations: int = 200_000
    step_tolerance: float = 1e-10
    objective_tolerance: float = 1e-8
    active_tolerance: float = 1e-6
    restart_every: int = 500

    def __post_init__(self):
        for name in ("max_iterations", "step_tolerance", "objective_tolerance", "active_tolerance", "restart_every"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def constraint_system(inst: SingleHopInstance) -> tuple[np.ndarray, np.ndarray, float]:
    """Rows G x >= h of the polytope, plus the equality target sum(x) = c."""
    n, d = inst.n, inst.service
    rows, rhs = [], []
    for k in range(1, n + 1):
        r = np.zeros(n + 1)
        r[:k] = 1.0
        rows.append(r)
        rhs.append(inst.arrivals[k - 1] + k * d)
    for i in range(2, n + 1):
        r = np.zeros(n + 1)
        r[i - 1] = 1.0
        rows.append(r)
        rhs.append(2 * d)
    r = np.zeros(n + 1)
    r[n] = 1.0
    rows.append(r)
    rhs.append(d)
    return np.array(rows), np.array(rhs), inst.deadline + n * d


def _project_affine(G: np.ndarray, h: np.ndarray, c: float, active) -> np.ndarray:
    """Minimum-norm point of {G_A x = h_A, sum(x) = c}."""
    m = G.shape[1]
    M = np.vstack([G[list(active)], np.ones((1, m))]) if len(active) else np.ones((1, m))
    b = np.append(h[list(active)], c)
    x, *_ = np.linalg.lstsq(M, b, rcond=None)
    return x


def _kkt_ok(G, h, c, x, active, tol) -> bool:
    if np.min(G @ x - h) < -tol or abs(x.sum() - c) > tol * (1 + abs(c)):
        return False
    # x = G_A^T lam + nu 1 with lam >= 0
    A = list(active)
    M = np.vstack([G[A], np.ones((1, G.shape[1]))]).T if A else np.ones((G.shape[1], 1))
    coef, *_ = np.linalg.lstsq(M, x, rcond=None)
    if np.linalg.norm(M @ coef - x) > 1e-7 * (1 + np.linalg.norm(x)):
        return False
    return bool(np.all(coef[:-1] >= -1e-7 * (1 + np.abs(coef).max())))


def oracle_solve(inst: SingleHopInstance, cfg: OracleConfig = OracleConfig(), order=None) -> tuple[np.ndarray, float]:
    """Global minimizer of sum(x**2) and its value.

    ``order`` optionally permutes the inequality rows; the result must not
    depend on it.
    """
    if not validate_single_hop(inst):
        raise ValueError("oracle needs a feasible instance")
    G, h, c = constraint_system(inst)
    if order is not None:
        G, h = G[list(order)], h[list(order)]
    m = G.shape[1]
    # Dual of min 1/2|x|^2 s.t. Gx >= h, 1.x = c: x(lam, nu) = G^T lam + nu 1.
    K = np.vstack([G, np.ones((1, m))])
    L = np.linalg.norm(K, 2) ** 2
    y = np.zeros(K.shape[0])
    z, y_prev, t = y.copy(), y.copy(), 1.0
    target = np.append(h, c)
    prev_obj = np.inf
    x = None
    converged = False
    for it in range(1, cfg.max_iterations + 1):
        x_z = K.T @ z
        grad = target - K @ x_z
        y = z + grad / L
        y[:-1] = np.maximum(y[:-1], 0.0)
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        z = y + ((t - 1.0) / t_next) * (y - y_prev)
        step = np.linalg.norm(y - y_prev)
        y_prev, t = y, t_next
        if it % cfg.restart_every == 0:
            z, t = y.copy(), 1.0
        x = K.T @ y
        obj = float(x @ x)
        if it % 50 == 0:
            slack = G @ x - h
            primal_ok = slack.min() > -cfg.active_tolerance and abs(x.sum() - c) < cfg.active_tolerance
            if primal_ok and (step <= cfg.step_tolerance * (1 + np.linalg.norm(y))
                              or abs(prev_obj - obj) <= cfg.objective_tolerance * 1e-3):
                converged = True
                break
            prev_obj = obj
    if x is None:
        raise OracleFailure("no iterations performed")

    tol = cfg.active_tolerance * (1 + np.abs(h).max())
    for scale in (1.0, 10.0, 100.0, 0.1):
        active = np.nonzero(G @ x - h <= tol * scale)[0]
        cand = _project_affine(G, h, c, active)
        if _kkt_ok(G, h, c, cand, active, 1e-9 * (1 + abs(c))):
            return cand, float(cand @ cand)
    slack = G @ x - h
    if converged and slack.min() >= -1e-8 and abs(x.sum() - c) <= 1e-8 * (1 + c):
        return x, float(x @ x)
    raise OracleFailure(f"no KKT point found after {cfg.max_iterations} iterations")


def brute_force_solve(inst: SingleHopInstance) -> tuple[np.ndarray, float]:
    """Enumerate active sets; exponential, for tiny instances only."""
    G, h, c = constraint_system(inst)
    best = None
    for r in range(G.shape[0] + 1):
        for active in itertools.combinations(range(G.shape[0]), r):
            x = _project_affine(G, h, c, active)
            if np.min(G @ x - h) < -1e-9 or abs(x.sum() - c) > 1e-9 * (1 + c):
                continue
            val = float(x @ x)
            if best is None or val < best[1] - 1e-12:
                best = (x, val)
    if best is None:
        raise OracleFailure("no feasible active set")
    return best


def numeric_area(curve: AgeCurve, step: float = 1e-4) -> float:
    """Composite trapezoid rule, with each linear piece sampled at spacing <= step."""
    if step <= 0:
        raise ValueError("step must be positive")
    t, a = np.asarray(curve.times), np.asarray(curve.ages)
    total = 0.0
    for k in range(len(t) - 1):
        t0, t1 = t[k], t[k + 1]
        if t1 <= t0:
            continue  # vertical drop
        npts = int(np.ceil((t1 - t0) / step)) + 1
        grid = np.linspace(t0, t1, npts)
        vals = a[k] + (grid - t0) * (a[k + 1] - a[k]) / (t1 - t0)
        total += float(np.sum(0.5 * (vals[1:] + vals[:-1]) * np.diff(grid)))
    return total
