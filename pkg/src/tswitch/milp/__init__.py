"""Switching MILP: model assembly, solver backends and the fixed-topology DC-OPF."""

from .backend import SolveStatus, SolverOptions, solve_milp
from .dcopf import dc_opf, dc_opf_horizon
from .model import (
    HourDispatch,
    MilpModel,
    PlanningConfig,
    SolveResult,
    SwitchingPlan,
    build_model,
    solve,
)

__all__ = [
    "HourDispatch",
    "MilpModel",
    "PlanningConfig",
    "SolveResult",
    "SolveStatus",
    "SolverOptions",
    "SwitchingPlan",
    "build_model",
    "dc_opf",
    "dc_opf_horizon",
    "solve",
    "solve_milp",
]
