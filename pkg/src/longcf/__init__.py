"""Longitudinal plausibility for counterfactual explanations of tabular classifiers."""

from .audit import (
    AuditSummary,
    ThresholdCurve,
    audit,
    one_observation_threshold,
    score_set,
    threshold_curve,
)
from .errors import LongcfError
from .generation import (
    DEFAULT_FITNESS,
    LONGITUDINAL_FITNESS,
    CounterfactualSet,
    FitnessConfig,
    GeneticParams,
    Objective,
    ScoringContext,
    SearchConstraints,
    explain_subjects,
    run_genetic,
    run_random,
)
from .metrics import (
    LongitudinalConfig,
    NormalizationProfile,
    build_cross_profile,
    build_profile,
    longitudinal_distance,
    proximity,
    sparsity,
)
from .models import load_model, predict_class, save_model, train_forest, train_logistic
from .schema import (
    Dataset,
    DiffMatrix,
    FeatureSchema,
    FeatureSpec,
    LongitudinalPair,
    compute_diffs,
    load_dataset,
    load_longitudinal,
    load_schema,
)
from .simulate import SimulationConfig, make_adult_like, simulate_second_timepoint

__version__ = "0.1.0"
