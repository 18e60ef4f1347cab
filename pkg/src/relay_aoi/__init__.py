"""Optimal status-update scheduling for energy-harvesting two-hop networks."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    AgeCurve,
    InfeasibleInstance,
    InvalidInstance,
    SingleHopInstance,
    TwoHopInstance,
    TwoHopSchedule,
    age_area,
    to_single_hop,
    validate_two_hop,
    x_to_two_hop,
)
from .offline import Branch, offline_greedy_two_hop, solve_single_hop, solve_two_hop  # noqa: E402
from .online import OnlineConfig, Policy, lower_bound, rate_bound, run_policy  # noqa: E402
