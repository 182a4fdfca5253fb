"""Torus flows, first-return circle maps with a flat piece, and their invariants."""

from .circle import (CIRCLE, FIT_WINDOW, CircleDiffeo, CircleMapError, CircleMapWithFlat, ExponentFit,
                     RotationNumberEstimate, conjugate_map, critical_exponents, diffeo_map, flat_profile, glue,
                     rotation_diffeo, rotation_map, rotation_number, stretch_diffeo, synthetic_map)
from .field import (CHERRY_DEFAULTS, TORUS, PeriodicityError, SingularityInfo, TorusDiffeo, TorusVectorField,
                    cherry_exprs, cherry_field, classify, find_singularities, flow, flow_batch, linear_field,
                    pushforward_torus_field, sink_and_saddle, torus_grid, validate_cherry)
from . import integrate
from .integrate import CapturedError, FlowError, FlowResult, StepUnderflowError
from .returnmap import (ReturnMapError, direct_values, grid_inversions, return_map, return_map_report,
                        separatrix_value, verify_equivariance)

__all__ = [
    "CIRCLE", "FIT_WINDOW", "CircleDiffeo", "CircleMapError", "CircleMapWithFlat", "ExponentFit",
    "RotationNumberEstimate", "conjugate_map", "critical_exponents", "diffeo_map", "flat_profile", "glue",
    "rotation_diffeo", "rotation_map", "rotation_number", "stretch_diffeo", "synthetic_map",
    "CHERRY_DEFAULTS", "TORUS", "PeriodicityError", "SingularityInfo", "TorusDiffeo", "TorusVectorField",
    "cherry_exprs", "cherry_field", "classify", "find_singularities", "flow", "flow_batch", "linear_field",
    "pushforward_torus_field", "sink_and_saddle", "torus_grid", "validate_cherry",
    "CapturedError", "FlowError", "FlowResult", "StepUnderflowError", "integrate",
    "ReturnMapError", "direct_values", "grid_inversions", "return_map", "return_map_report",
    "separatrix_value", "verify_equivariance",
]
