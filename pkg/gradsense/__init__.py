"""
gradsense - strategic sensor analysis for regional boundary gradient
observability of 2-D diffusion on a rectangle
"""
__version__ = "1.0.0"

from .errors import GradsenseError
from .quadrature import QuadratureSpec
from .spectral_core import (
    BoundaryRegion,
    BoundarySide,
    ModeSet,
    RectDomain,
    StateCoeffs,
    build_mode_set,
    is_simple_spectrum,
    simplify_spectrum,
)
from .sensing import Sensor, SensorKind, SensorSuite, SpatialDistribution, assemble_G, apply_output
from .strategic_analysis import (
    crossing_check,
    gramian,
    locus_check,
    positive_definite_test,
    rank_test,
    scan_locations,
    state_rank_test,
)
from .simulate_reconstruct import (
    add_noise,
    error_norms,
    project_initial_state,
    reconstruct_gradient,
    simulate_outputs,
)
