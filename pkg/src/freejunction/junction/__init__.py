"""Discrete weighted-area minimisation for sheets meeting along a free polyline."""
from .balance import angle_report, angle_table, balance_residuals, conormal_balance, conormals
from .energy import energy_and_gradient, total_weighted_area
from .mesh import (SheetMeshState, build, flat_square, half_disks, load_state, read_off,
                   save_state, strip_junction, write_off)
from .solver import MinimizeResult, OptimizerConfig, minimize, stationarity

__all__ = [
    "SheetMeshState", "OptimizerConfig", "MinimizeResult",
    "build", "flat_square", "half_disks", "strip_junction",
    "total_weighted_area", "energy_and_gradient", "minimize", "stationarity",
    "conormals", "conormal_balance", "balance_residuals", "angle_table", "angle_report",
    "save_state", "load_state", "read_off", "write_off",
]
