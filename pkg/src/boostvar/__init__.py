"""Least-squares boosting for vector autoregressions with per-step p-values.

Core pieces: lagged/grouped designs (:mod:`boostvar.design`), the greedy
boosting engine (:mod:`boostvar.boosting`), per-step inference
(:mod:`boostvar.inference`), stopping-step selection and p-value filtering
(:mod:`boostvar.selection`), a seeded simulation harness
(:mod:`boostvar.simulation`), convergence-bound checks
(:mod:`boostvar.bounds`), CSV/JSON ingestion and reports
(:mod:`boostvar.io`), and scikit-learn style estimators
(:mod:`boostvar.estimators`).
"""

from .boosting import (
    BoostConfig,
    BoostPath,
    BoostState,
    PathRecord,
    boost_ls_cross_section,
    boost_step,
    initial_state,
    run_path,
    run_path_on_design,
    select_group,
    select_single_lag,
)
from .bounds import BoundReport, check_bounds, gamma, normalize_groups
from .design import (
    GroupedDesign,
    LaggedDesign,
    LeastSquaresFit,
    TimeSeriesMatrix,
    build_lagged_design,
    companion,
    grouped_to_lag_matrices,
    lag_matrices_to_grouped,
    least_squares_fit,
    regroup_by_variable,
    spectral_radius,
    support_set,
)
from .estimators import BoostedLinearRegression, BoostedVAR
from .exceptions import BoostvarError, DataError, NumericalError
from .inference import (
    InferenceAccumulator,
    SigmaEstimate,
    StepInference,
    accumulate_map,
    estimate_sigma,
    p_value,
    standard_errors,
    step_inference,
    update_annihilator,
)
from .io import emit_reports, ingest, split
from .selection import (
    SelectionResult,
    aicc,
    aicc_values,
    filter_by_pvalue,
    select_by_validation,
    select_p_variant,
)
from .simulation import (
    DgpConfig,
    GroundTruth,
    Metrics,
    ReplicationSummary,
    benchmark,
    boost_method,
    calibrate_snr,
    enforce_stationarity,
    gen_coefficients,
    make_ground_truth,
    run_replications,
    score,
    simulate_var,
    toeplitz_cov,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
