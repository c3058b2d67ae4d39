"""Multi-hour transmission switching with switching budgets and candidate screening."""

from importlib import resources

from .case_io import CaseFile, generate_case, load_case, parse_case, serialize_case
from .milp import PlanningConfig, SolveStatus, build_model, dc_opf, solve
from .network import Bus, DemandProfile, Generator, Line, Network, Topology, make_network
from .reduction import plan_switching, screen_candidates
from .sensitivity import lodf, post_outage_flow, ptdf_cross, ptdf_self, sensitivity_set
from .wear import DutyCurve, remaining_operations, weight_at

__version__ = "0.1.0"


def fixture_path(name: str):
    """Path of a bundled case file, e.g. ``fixture_path("triangle")``."""
    fname = name if name.endswith(".json") else f"{name}.json"
    return resources.files("tswitch") / "data" / fname


__all__ = [
    "Bus",
    "CaseFile",
    "DemandProfile",
    "DutyCurve",
    "Generator",
    "Line",
    "Network",
    "PlanningConfig",
    "SolveStatus",
    "Topology",
    "build_model",
    "dc_opf",
    "fixture_path",
    "generate_case",
    "load_case",
    "lodf",
    "make_network",
    "parse_case",
    "plan_switching",
    "post_outage_flow",
    "ptdf_cross",
    "ptdf_self",
    "remaining_operations",
    "screen_candidates",
    "sensitivity_set",
    "serialize_case",
    "solve",
    "weight_at",
]
