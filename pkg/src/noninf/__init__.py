"""Non-inferiority tests and confidence intervals for two binomial proportions.

Includes the exact likelihood score (ELS) method, the exact score (ES) test,
six asymptotic comparators and their exact operating characteristics.
"""
from .foundation import (
    BinomialArm,
    ConstrainedMle,
    DifferenceConstraint,
    NoninfSpec,
    ScoreResult,
    TwoArmData,
    critical_value,
    joint_log_pmf,
    norm_cdf,
    norm_ppf,
    restricted_mle,
    score_statistic,
)
from .asymptotic import (
    ConfidenceInterval,
    MethodResult,
    WilsonLimits,
    agresti_caffo_ci,
    als_ci,
    als_pvalue,
    fm_ci,
    hauck_anderson_ci,
    newcombe_cc_ci,
    newcombe_ci,
    wald_ci,
    wilson_limits,
)
from .exact import els_confidence_interval, els_pvalue, es_pvalue, table_grid
from .operating import (
    METHODS,
    OC_METHODS,
    OcResult,
    OcScenario,
    RejectionRegion,
    SampleSizeSpec,
    exact_power,
    exact_type1,
    fm_sample_size,
    rejection_region,
    summarize_type1,
    table_sweep,
)
from .analysis import analyze

__version__ = "0.1.0"

__all__ = [
    "BinomialArm",
    "TwoArmData",
    "NoninfSpec",
    "DifferenceConstraint",
    "ConstrainedMle",
    "ScoreResult",
    "joint_log_pmf",
    "restricted_mle",
    "score_statistic",
    "norm_cdf",
    "norm_ppf",
    "critical_value",
    "ConfidenceInterval",
    "WilsonLimits",
    "MethodResult",
    "wald_ci",
    "agresti_caffo_ci",
    "hauck_anderson_ci",
    "newcombe_ci",
    "newcombe_cc_ci",
    "fm_ci",
    "wilson_limits",
    "als_ci",
    "als_pvalue",
    "els_pvalue",
    "es_pvalue",
    "els_confidence_interval",
    "table_grid",
    "METHODS",
    "OC_METHODS",
    "OcScenario",
    "OcResult",
    "RejectionRegion",
    "SampleSizeSpec",
    "rejection_region",
    "exact_type1",
    "exact_power",
    "fm_sample_size",
    "table_sweep",
    "summarize_type1",
    "analyze",
]
