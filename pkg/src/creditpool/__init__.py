"""Default clustering in large credit pools.

Simulate a finite pool of self-exciting default intensities tied together
by contagion jumps and a shared systematic factor, compute the
deterministic limit of the pool default rate as the pool grows, and
verify empirically that the two agree.
"""

__version__ = "0.1.0"

from .convergence import (
    ConvergenceCell,
    ConvergenceReport,
    SweepSpec,
    contagion_sweep,
    figure_sweep,
    lln_experiment,
    q_identity_diagnostic,
    reversion_level_sweep,
    reversion_speed_sweep,
)
from .errors import (
    ConfigError,
    CreditPoolError,
    DegenerateMeasureError,
    MomentsNotRecordedError,
    NoConvergenceError,
    NonFiniteResultError,
    NonFiniteStateError,
    ValidationError,
)
from .limit import (
    LimitSolution,
    PicardResult,
    compute_f,
    effective_contagion_weight,
    f_derivative,
    riccati_for_measure,
    solve_homogeneous_f,
    solve_limit,
    solve_q,
)
from .model import (
    DEFAULT_CAP,
    DiscreteTypeMeasure,
    EpsSchedule,
    FirmType,
    SystematicFactorConfig,
    TimeGrid,
    Trajectory,
    TypeAtom,
    homogeneous_measure,
    product_measure,
    validate_measure,
)
from .riccati import RiccatiSolution, saturation_level, solve_riccati
from .simulate import (
    PortfolioState,
    ReplicationSet,
    SimConfig,
    SimResult,
    moment_diagnostic,
    proportional_counts,
    run_replications,
    simulate,
)

__all__ = [
    "__version__",
    # model
    "DEFAULT_CAP", "FirmType", "TypeAtom", "DiscreteTypeMeasure", "EpsSchedule",
    "SystematicFactorConfig", "TimeGrid", "Trajectory",
    "validate_measure", "product_measure", "homogeneous_measure",
    # riccati / limit
    "RiccatiSolution", "solve_riccati", "saturation_level", "riccati_for_measure",
    "PicardResult", "LimitSolution", "solve_q", "compute_f", "f_derivative",
    "effective_contagion_weight", "solve_homogeneous_f", "solve_limit",
    # simulation
    "SimConfig", "SimResult", "PortfolioState", "ReplicationSet",
    "simulate", "run_replications", "moment_diagnostic", "proportional_counts",
    # convergence lab
    "ConvergenceCell", "ConvergenceReport", "SweepSpec", "lln_experiment",
    "figure_sweep", "q_identity_diagnostic",
    "contagion_sweep", "reversion_speed_sweep", "reversion_level_sweep",
    # errors
    "CreditPoolError", "ValidationError", "ConfigError", "NoConvergenceError",
    "NonFiniteResultError", "NonFiniteStateError", "DegenerateMeasureError",
    "MomentsNotRecordedError",
]
