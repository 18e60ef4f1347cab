"""Random feasible instances for property tests and the acceptance run."""
from __future__ import annotations

import numpy as np

from .core import SingleHopInstance, TwoHopInstance, TwoHopSchedule, validate_single_hop, validate_two_hop
from .offline import offline_greedy_two_hop


def random_two_hop(rng: np.random.Generator, n_max: int = 8, t_range=(5.0, 50.0),
                   service_scale: float = 2.0, max_tries: int = 10_000) -> TwoHopInstance:
    """N ~ U{1..n_max}; arrivals sorted U[0, T/2]; d, dbar ~ U(0, T/(scale (N+1))]; reject infeasible.

    The default scale of 2 never produces a small-horizon reduced instance;
    ``service_scale=1`` does.
    """
    for _ in range(max_tries):
        n = int(rng.integers(1, n_max + 1))
        T = float(rng.uniform(*t_range))
        src = np.sort(rng.uniform(0, T / 2, n))
        rel = np.sort(rng.uniform(0, T / 2, n))
        hi = T / (service_scale * (n + 1))
        d, db = hi - rng.uniform(0, hi, 2)  # (0, hi]
        inst = TwoHopInstance(src, rel, d, db, T)
        if validate_two_hop(inst):
            return inst
    raise RuntimeError("no feasible instance found")


def random_single_hop(rng: np.random.Generator, n_max: int = 8, mode: str = "mixed") -> SingleHopInstance:
    """Single-hop instances hitting every solver branch.

    ``small`` draws N d <= T < (N+1) d; ``large`` draws T >= (N+1) d with
    arrivals spread over the whole horizon (so amendments happen);
    ``mixed`` picks one of the two at random.
    """
    if mode == "mixed":
        mode = "small" if rng.random() < 0.4 else "large"
    while True:
        n = int(rng.integers(1, n_max + 1))
        d = float(rng.uniform(0.1, 3.0))
        if mode == "small":
            T = float(rng.uniform(n * d, (n + 1) * d))
            s = np.sort(rng.uniform(0, T - n * d, n))
        else:
            T = float(rng.uniform((n + 1) * d, 4 * (n + 1) * d))
            s = np.sort(rng.uniform(0, T * rng.uniform(0.3, 1.0), n))
        inst = SingleHopInstance(s, d, T)
        if validate_single_hop(inst):
            return inst


def random_schedule(rng: np.random.Generator, n_max: int = 8) -> tuple[TwoHopSchedule, TwoHopInstance]:
    """A random valid (generally suboptimal) two-hop schedule and its instance.

    Starts from the greedy schedule, delays it by a non-decreasing random
    shift, then lets each update wait a random time in the relay buffer.
    """
    inst = random_two_hop(rng, n_max)
    greedy, _ = offline_greedy_two_hop(inst)
    db, T = inst.relay_service, inst.deadline
    shift = np.sort(rng.uniform(0, T - greedy.deliveries[-1], inst.n))
    t = np.asarray(greedy.source_tx) + shift
    tb = np.asarray(greedy.relay_tx) + shift
    room = np.append(t[1:], T) - tb - db
    tb = tb + rng.uniform(0, 1, inst.n) * np.maximum(room, 0.0)
    return TwoHopSchedule(tuple(t.tolist()), tuple(tb.tolist()), db), inst
