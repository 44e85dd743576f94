"""Strong H-infinity norms, robust spectral abscissa and fixed-order controller
design for delay differential algebraic equations (DDAEs)."""
from .errors import (
    AssumptionViolation,
    DdaeError,
    DimensionMismatch,
    EigSolverFailure,
    GuardViolatedAtStart,
    InvalidOrder,
    NoStabilizingControllerFound,
    NonConvergence,
    NotStronglyStable,
    SingularAtFrequency,
    SingularOnTorus,
)
from .norm import (
    StrongNormResult,
    TorusPeak,
    hinf_norm_T,
    hinf_norm_Ta_at_delays,
    level_crossings,
    strong_hinf_norm,
    strong_norm_Ta,
)
from .nsopt import Evaluation, Objective, OptimizerReport, grad_robust_abscissa, grad_strong_norm, minimize
from .spectral import Discretization, discretize
from .spectrum import (
    SpectrumResult,
    StrongStabilityReport,
    char_roots,
    correct_root,
    difference_abscissa,
    effective_delays,
    is_strongly_stable,
    robust_spectral_abscissa,
    spectral_abscissa,
)
from .synthesis import build_closed_loop, hinf_design, stabilize
from .system import (
    ControllerBlock,
    DdaeSystem,
    ParameterizedSystem,
    PartitionedSystem,
    PlantBlock,
    closed_loop_parameterization,
    eliminate_feedthrough,
    eliminate_io_delays,
    instantiate,
    interconnect,
    partition,
)
from .transfer import (
    FrequencyResponse,
    char_matrix,
    eval_dT,
    eval_dT_dp,
    eval_T,
    eval_T_blocks,
    eval_Ta_lambda,
    eval_Ta_torus,
    sigma_sweep,
)

__version__ = "0.1.0"
