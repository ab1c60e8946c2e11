"""Reduced-order positive H-infinity filter design by direct search.

The compiled kernels in :mod:`posfilter._kernels` are used when built;
otherwise :mod:`posfilter._kernels_py` provides the same functions in numpy.
"""

from ._backend import available as available_backends
from ._backend import name as backend_name
from ._backend import use as use_backend
from .design import (
    Design,
    DesignConfig,
    FilterParams,
    HInfObjective,
    ObjectiveKind,
    SimulationObjective,
    ThetaLayout,
    design_filter,
    hinf_objective,
    pack,
    random_initial_filter,
    simulation_objective,
    unpack,
)
from .hinf import NormKind, NormResult, hinf_norm, sigma_max_at
from .lti import (
    DimensionError,
    PlantSpec,
    SimulationTrace,
    SingularResolventError,
    StateSpace,
    UnstableSystemError,
    assemble_error_system,
    frequency_response,
    is_nonnegative,
    default_disturbance,
    simulate,
    spectral_radius,
)
from .search import (
    INFEASIBLE,
    BenchmarkReport,
    InfeasibleStartError,
    Method,
    OptimizerOptions,
    OptimizerResult,
    SamplerExhaustedError,
    Termination,
    multi_start,
    multidirectional_search,
    nelder_mead,
    nm_with_restarts,
)

__version__ = "0.1.0"
