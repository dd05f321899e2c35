"""nphkit: survival-analysis tests, effect estimation, and trial
simulation for studies where hazards are not proportional.

The library side revolves around a validated two-arm dataset: build one
with :func:`validate` or :func:`read_dataset_csv`, then apply weighted
log-rank tests, RMST / weighted-KM comparisons, combination tests, and
Cox-based estimation. The simulation side reproduces event-driven trial
designs with staged enrollment and dropout; :func:`run_study` aggregates
operating characteristics over deterministic seeded replicates.
"""
from .combo import (
    LEE,
    MAXCOMBO,
    ComboResult,
    ComboSpec,
    breslow_combo_test,
    lee_test,
    max_combo_test,
    wlr_correlation,
)
from .data import (
    Arm,
    SubjectRecord,
    SurvivalDataset,
    ValidatedDataset,
    dataset_sha256,
    read_dataset_csv,
    validate,
    write_dataset_csv,
)
from .errors import (
    ConfigError,
    DataError,
    DegenerateVarianceError,
    EmptyAfterFilterError,
    EmptyDatasetError,
    IngestError,
    MvnFailureError,
    NegativeTimeError,
    NoEventsError,
    NonConvergenceError,
    NphkitError,
    NumericError,
    SingleArmError,
    TauBeyondFollowUpError,
    ZeroVarianceError,
)
from .estimation import (
    CoxFit,
    PiecewiseCoxFit,
    SchoenfeldDiagnostics,
    cox_fit,
    piecewise_cox,
    schoenfeld_gt_test,
    weighted_cox,
)
from .km import KmCurve, censoring_km, km_estimate, pooled_km_left
from .kmtests import RmstDiffResult, RmstEstimate, rmst, rmst_diff_test, wkm_test
from .mvn import mvn_lower_orthant
from .report import AnalysisReport, MethodRow, PiecewiseRow, analyze_dataset
from .simulate import (
    ALL_METHODS,
    BUILTIN_SCENARIOS,
    DEFAULT_SEED,
    PiecewiseHazard,
    ScenarioSpec,
    StudyConfig,
    TrialDesign,
    TrialResult,
    replicate_rng,
    sample_entry,
    sample_piecewise_exp,
    simulate_trial,
    simulate_trial_detail,
)
from .study import StudySummary, run_study, study_config_from_dict
from .version import PACKAGE_VERSION as __version__
from .wlr import (
    LOGRANK,
    EventTable,
    FhWeight,
    TestResult,
    WlrComponents,
    event_table,
    fh_weight_at,
    wlr_components,
    wlr_test,
)

__all__ = [
    "ALL_METHODS",
    "AnalysisReport",
    "Arm",
    "BUILTIN_SCENARIOS",
    "ComboResult",
    "ComboSpec",
    "ConfigError",
    "CoxFit",
    "DEFAULT_SEED",
    "DataError",
    "DegenerateVarianceError",
    "EmptyAfterFilterError",
    "EmptyDatasetError",
    "EventTable",
    "FhWeight",
    "IngestError",
    "KmCurve",
    "LEE",
    "LOGRANK",
    "MAXCOMBO",
    "MethodRow",
    "MvnFailureError",
    "NegativeTimeError",
    "NoEventsError",
    "NonConvergenceError",
    "NphkitError",
    "NumericError",
    "PiecewiseCoxFit",
    "PiecewiseHazard",
    "PiecewiseRow",
    "RmstDiffResult",
    "RmstEstimate",
    "ScenarioSpec",
    "SchoenfeldDiagnostics",
    "SingleArmError",
    "StudyConfig",
    "StudySummary",
    "SubjectRecord",
    "SurvivalDataset",
    "TauBeyondFollowUpError",
    "TestResult",
    "TrialDesign",
    "TrialResult",
    "ValidatedDataset",
    "WlrComponents",
    "ZeroVarianceError",
    "analyze_dataset",
    "breslow_combo_test",
    "censoring_km",
    "cox_fit",
    "dataset_sha256",
    "event_table",
    "fh_weight_at",
    "km_estimate",
    "lee_test",
    "max_combo_test",
    "mvn_lower_orthant",
    "piecewise_cox",
    "pooled_km_left",
    "read_dataset_csv",
    "replicate_rng",
    "rmst",
    "rmst_diff_test",
    "run_study",
    "sample_entry",
    "sample_piecewise_exp",
    "schoenfeld_gt_test",
    "simulate_trial",
    "simulate_trial_detail",
    "study_config_from_dict",
    "validate",
    "weighted_cox",
    "wkm_test",
    "wlr_components",
    "wlr_correlation",
    "wlr_test",
    "write_dataset_csv",
]
