"""Boundary-FDR control for conformal novelty detection."""
from .lfdr import (
    LfdrCurve,
    PreconditionError,
    gcm_values,
    grenander_pmf,
    lfdr_curve,
    lfdr_grenander,
    lfdr_iso,
    lfdr_raw,
    pava,
    slc_kmax_shifted,
    slc_kmax_via_lfdr,
)
from .montecarlo import (
    Dist,
    GeneratorSpec,
    ProcedureSpec,
    SimulationSummary,
    UnknownMethod,
    boundary_null_curve,
    counterexample,
    evaluate_trial,
    generate_trial,
    run_monte_carlo,
    setting_a,
    setting_b,
    setting_c,
    theoretical_bounds,
)
from .procedures import (
    ConfigError,
    RejectionResult,
    asl,
    aslc,
    bh,
    default_s0,
    parse_level,
    sl,
    slc,
    slg,
    storey_pi0,
)
from .pvalues import (
    InvalidScore,
    Labels,
    PValueVector,
    ScoreSample,
    TiesError,
    conformal_p_values,
    shifted_p_values,
)
from .subsampling import (
    SubsampleSpec,
    aslc_plus,
    make_rng,
    multi_subsample,
    recommended_subsample_size,
    select_count,
    slc_plus,
    subsample_counts,
)

__version__ = "0.1.0"
