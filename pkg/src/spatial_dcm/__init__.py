"""Spatial DCM: 3D linear plus 1D angular divergent component of motion.

Planning (:mod:`.reference`), control (:mod:`.controller`, :mod:`.cop`) and
simulation (:mod:`.simulator`) of a constrained single rigid body whose CoM
and torso pitch are both regulated through divergent components of motion.
"""

from .controller import closed_loop_matrices, control_tick, open_loop_matrices
from .core_model import ParameterError, PlannerParams, SpatialState, WrenchCommand
from .reference import FootstepPlan, Step, backward_recursion, generate_walking_plan, sample_reference
from .simulator import DivergenceError, SimConfig, TrajectoryLog, analytic_closed_loop, run_scenario

__version__ = "0.1.0"

__all__ = [
    "DivergenceError", "FootstepPlan", "ParameterError", "PlannerParams", "SimConfig", "SpatialState", "Step",
    "TrajectoryLog", "WrenchCommand", "analytic_closed_loop", "backward_recursion", "closed_loop_matrices",
    "control_tick", "generate_walking_plan", "open_loop_matrices", "run_scenario", "sample_reference",
]
