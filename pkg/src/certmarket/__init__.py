"""Duopoly market engine for noisy quality certification with loss-averse
buyers: closed-form beliefs and profits, threshold-equilibrium verification,
analytical cross-checks, and a seeded Monte Carlo treatment simulator."""

from .analysis import (
    CurveRow,
    LossSlopeReport,
    NoiseGainCondition,
    benchmark_curves,
    estimate_loss_aversion,
    loss_slope_components,
    loss_slope_report,
    loss_term_slope_fd,
    noise_gain_condition,
    truncated_mean_bounds,
)
from .beliefs import (
    ND,
    Message,
    OffEqPolicy,
    PosteriorRecord,
    disclosed,
    expected_loss,
    message_probabilities,
    message_space,
    off_equilibrium_posterior,
    posterior,
    wtp,
    wtp_table,
)
from .equilibrium import (
    EquilibriumReport,
    NoisyVsAccurate,
    TwoTypeRegion,
    accurate_unique_equilibrium,
    enumerate_threshold_equilibria,
    two_type_existence,
    two_type_noisy_vs_accurate,
    verify_threshold_equilibrium,
)
from .errors import CertMarketError
from .market import (
    EMPTY_PROFILE,
    Env,
    MarketParams,
    QualitySupport,
    ThresholdProfile,
    canonical_two_type_market,
    cert_outcome_distribution,
    uniform_support,
    validate_market,
)
from .pricing import SubgameResult, Winner, bertrand_subgame
from .profits import (
    ProfitDecomposition,
    ProfitReport,
    ex_ante_profit,
    expected_profit_given_message,
    expected_profit_of_type,
    joint_profit_decomposition,
    profit_report,
)
from .simulate import (
    AlwaysCertifyDiscloseAll,
    CustomPolicy,
    EquilibriumThreshold,
    FixedMarkup,
    NeverCertify,
    Purchase,
    RoundRecord,
    SellerPolicy,
    TreatmentConfig,
    TreatmentMetrics,
    best_equilibrium_profile,
    run_treatment,
    simulate_round,
)

__version__ = "0.1.0"

__all__ = [
    "AlwaysCertifyDiscloseAll",
    "CertMarketError",
    "CurveRow",
    "CustomPolicy",
    "EMPTY_PROFILE",
    "Env",
    "EquilibriumReport",
    "EquilibriumThreshold",
    "FixedMarkup",
    "LossSlopeReport",
    "MarketParams",
    "Message",
    "ND",
    "NeverCertify",
    "NoiseGainCondition",
    "NoisyVsAccurate",
    "OffEqPolicy",
    "PosteriorRecord",
    "ProfitDecomposition",
    "ProfitReport",
    "Purchase",
    "QualitySupport",
    "RoundRecord",
    "SellerPolicy",
    "SubgameResult",
    "ThresholdProfile",
    "TreatmentConfig",
    "TreatmentMetrics",
    "TwoTypeRegion",
    "Winner",
    "accurate_unique_equilibrium",
    "benchmark_curves",
    "bertrand_subgame",
    "best_equilibrium_profile",
    "canonical_two_type_market",
    "cert_outcome_distribution",
    "disclosed",
    "enumerate_threshold_equilibria",
    "estimate_loss_aversion",
    "ex_ante_profit",
    "expected_loss",
    "expected_profit_given_message",
    "expected_profit_of_type",
    "joint_profit_decomposition",
    "loss_slope_components",
    "loss_slope_report",
    "loss_term_slope_fd",
    "message_probabilities",
    "message_space",
    "noise_gain_condition",
    "off_equilibrium_posterior",
    "posterior",
    "profit_report",
    "run_treatment",
    "simulate_round",
    "truncated_mean_bounds",
    "two_type_existence",
    "two_type_noisy_vs_accurate",
    "uniform_support",
    "validate_market",
    "verify_threshold_equilibrium",
    "wtp",
    "wtp_table",
]
