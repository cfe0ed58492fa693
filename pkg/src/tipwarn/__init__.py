"""Drift-diffusion density evolution and early-warning indicators of tipping."""

from .errors import (
    AdmissibilityError,
    ConfigError,
    ConvergenceError,
    DegenerateDensityError,
    DomainError,
    ExtrapolationError,
    FitError,
    FoldCrossedError,
    NoEquilibriumError,
    NumericalFailureError,
    PhysicalRegimeError,
    PreconditionError,
    SolverQualityError,
    StructuralError,
    TipwarnError,
)
from .grids import DensityState, SpatialGrid, TimeGrid, moment, normalize, trapezoid_mass
from .drifts import (
    DriftModel,
    OULinearization,
    SaddleNodeLinearDrift,
    SaddleNodeNonlinearDrift,
    ScalingMap,
    StraightDrift,
    rate_tipping_deterministic,
    scale_parameters,
)
from .solver import (
    AdmissibilityReport,
    StationaryResult,
    TridiagonalOperator,
    assemble_cn_pair,
    assemble_stationary,
    check_admissibility,
    evolve,
    sanitize_density,
    solve_stationary,
    step,
)
from .indicators import (
    BaselineTable,
    IndicatorRecorder,
    IndicatorSeries,
    KramersInputs,
    build_baseline,
    decay_rate_dynamic,
    escape_stats,
    fit_kappa_c,
    kramers_rate,
    lag1_autocorrelation,
    quasi_static_linear,
    quasi_static_nonlinear,
    variance,
)
from .montecarlo import ComparisonReport, EnsembleConfig, EnsembleSummary, compare, simulate
from .config import (
    ARTIFACT_VERSION,
    builtin_monsoon_params,
    canonical_json,
    config_hash,
    load_config,
    resolve_config,
    validate_config,
)
from .export import (
    SERIES_HEADER,
    export_density,
    export_series,
    read_series,
)
from .monsoon import (
    BifurcationCurve,
    MonsoonDrift,
    MonsoonParams,
    MonsoonState,
    full_rhs,
    scan_bifurcation,
    soil_equilibrium,
    sweep_escape,
    temperature_equilibrium,
)

__version__ = "0.1.0"
