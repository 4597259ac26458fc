"""Analytical cross-checks: the slope of the loss-gap profit term at full
precision, the support conditions under which small noise raises it, the
canonical two-type benchmark curves, truncated-mean bounds, and the
switching-point estimator for the loss-aversion coefficient.

At full precision every disclosed message pins down quality exactly, so the
expected-loss terms of disclosed posteriors vanish. Pushing precision just
below one re-opens downside risk, and the loss-gap term of the profit
decomposition moves with slope S1 + S2, where S1 collects subgames in which
both sellers disclose and S2 those in which exactly one does. Both pieces
evaluate in closed form from the support alone; the finite-difference check
recomputes the slope numerically through the profit engine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .beliefs import ND, disclosed, message_probabilities, wtp_table
from .errors import (
    ConditionNotMet,
    InvalidProfile,
    PrecisionOutOfRange,
    StepTooLarge,
    ZeroSwitchPoint,
)
from .market import (
    MarketParams,
    QualitySupport,
    ThresholdProfile,
    canonical_two_type_market,
)
from .profits import ex_ante_profit, joint_profit_decomposition


@dataclass(frozen=True)
class NoiseGainCondition:
    """Support-shape test: nondecreasing quality gaps plus top-heavy priors
    (each prior exceeds twice the mass below it). Jointly sufficient for
    small certification noise to raise the loss-gap profit term."""

    holds: bool
    gaps_ok: bool
    priors_ok: bool
    first_bad_gap: Optional[int]
    first_bad_prior: Optional[int]


def noise_gain_condition(support: QualitySupport) -> NoiseGainCondition:
    """Check both clauses; diagnostics name the first violated index."""
    v, q = support.values, support.priors
    first_bad_gap: Optional[int] = None
    for i in range(1, support.n - 1):
        if v[i + 1] - v[i] < v[i] - v[i - 1]:
            first_bad_gap = i + 1  # 1-based middle index
            break
    first_bad_prior: Optional[int] = None
    below = 0.0
    for k in range(1, support.n):
        below += q[k - 1]
        if q[k] <= 2.0 * below:
            first_bad_prior = k + 1
            break
    gaps_ok = first_bad_gap is None
    priors_ok = first_bad_prior is None
    return NoiseGainCondition(
        holds=gaps_ok and priors_ok,
        gaps_ok=gaps_ok,
        priors_ok=priors_ok,
        first_bad_gap=first_bad_gap,
        first_bad_prior=first_bad_prior,
    )


@dataclass(frozen=True)
class LossSlopeReport:
    """Slope of the loss-gap profit term in precision, at full precision.

    outcome_slopes[j] is the derivative of the expected loss attached to
    disclosed outcome j; nd_slope the same for non-disclosure.
    both_disclose_term + one_disclose_term is the analytic slope, and
    fd_estimate (when present) its one-sided finite-difference counterpart
    computed through the profit engine with step size `step`.
    """

    threshold: int
    outcome_slopes: dict[int, float]
    nd_slope: float
    both_disclose_term: float
    one_disclose_term: float
    cert_mean: float
    noncert_mean: float
    loss_cutoff: Optional[int]
    fd_estimate: Optional[float] = None
    step: Optional[float] = None

    @property
    def analytic_slope(self) -> float:
        return self.both_disclose_term + self.one_disclose_term


def loss_slope_components(support: QualitySupport, threshold: int) -> LossSlopeReport:
    """Closed-form slope pieces for the profile certifying types >= threshold.

    With threshold 1 nobody ever sends ND, so the ND slope and the
    one-discloses term are identically zero.
    """
    support.check_index(threshold)
    v, q = support.values, support.priors
    n = support.n
    l = threshold
    q_cert = math.fsum(q[l - 1 :])
    q_nocert = math.fsum(q[: l - 1])
    cert_mean = math.fsum(qk * vk for qk, vk in zip(q[l - 1 :], v[l - 1 :])) / q_cert

    slopes: dict[int, float] = {}
    for j in range(l, n + 1):
        if v[j - 1] >= cert_mean:
            slopes[j] = math.fsum(
                q[k - 1] * (v[j - 1] - v[k - 1]) for k in range(l, j)
            )
        else:
            slopes[j] = math.fsum(
                q[k - 1] * (v[k - 1] - v[j - 1]) for k in range(j + 1, n + 1)
            )

    s1 = math.fsum(
        q[i - 1] * q[j - 1] * (slopes[j] - slopes[i])
        for j in range(l, n + 1)
        for i in range(l, j)
    )

    if l == 1:
        return LossSlopeReport(
            threshold=l,
            outcome_slopes=slopes,
            nd_slope=0.0,
            both_disclose_term=s1,
            one_disclose_term=0.0,
            cert_mean=cert_mean,
            noncert_mean=math.nan,
            loss_cutoff=None,
        )

    noncert_mean = (
        math.fsum(qk * vk for qk, vk in zip(q[: l - 1], v[: l - 1])) / q_nocert
    )
    # largest index whose level does not exceed the non-certifier mean; a tie
    # lands in the loss set, where it contributes zero either way (the default
    # covers the exact-tie case v_1 == mean landing an ulp below it)
    cutoff = max((k for k in range(1, l) if v[k - 1] <= noncert_mean), default=1)
    nd_slope = (q_cert / q_nocert) * math.fsum(
        q[k - 1] * (cert_mean + v[k - 1] - 2.0 * noncert_mean)
        for k in range(1, cutoff + 1)
    )
    nd_loss_at_one = math.fsum(
        (q[k - 1] / q_nocert) * (v[k - 1] - noncert_mean) for k in range(1, cutoff + 1)
    )
    s2 = (1.0 - 2.0 * q_cert) * q_cert * (-q_nocert * nd_loss_at_one) + math.fsum(
        q[k - 1] * q_nocert * (slopes[k] - nd_slope) for k in range(l, n + 1)
    )
    return LossSlopeReport(
        threshold=l,
        outcome_slopes=slopes,
        nd_slope=nd_slope,
        both_disclose_term=s1,
        one_disclose_term=s2,
        cert_mean=cert_mean,
        noncert_mean=noncert_mean,
        loss_cutoff=cutoff,
    )


def loss_term_slope_fd(
    market: MarketParams, profile: ThresholdProfile, h: float = 1e-3
) -> float:
    """One-sided (backward) finite difference of the loss-gap term at full
    precision. The term is b-free, so the market's b never enters."""
    if not 0.0 < h <= 0.05:
        raise StepTooLarge(f"need 0 < h <= 0.05, got {h}")
    hi = joint_profit_decomposition(market.with_alpha(1.0), profile).loss_gap_term
    lo = joint_profit_decomposition(market.with_alpha(1.0 - h), profile).loss_gap_term
    return (hi - lo) / h


def loss_slope_report(
    market: MarketParams, profile: ThresholdProfile, h: float = 1e-3
) -> LossSlopeReport:
    """Analytic slope components together with their finite-difference check.

    Requires a symmetric profile (equal certification and disclosure
    thresholds), which is the regime the closed forms describe.
    """
    if profile.cert_index is None or profile.cert_index != profile.disclose_index:
        raise InvalidProfile("slope components need cert_index == disclose_index")
    report = loss_slope_components(market.support, profile.cert_index)
    fd = loss_term_slope_fd(market, profile, h)
    return LossSlopeReport(
        threshold=report.threshold,
        outcome_slopes=report.outcome_slopes,
        nd_slope=report.nd_slope,
        both_disclose_term=report.both_disclose_term,
        one_disclose_term=report.one_disclose_term,
        cert_mean=report.cert_mean,
        noncert_mean=report.noncert_mean,
        loss_cutoff=report.loss_cutoff,
        fd_estimate=fd,
        step=h,
    )


@dataclass(frozen=True)
class CurveRow:
    """One grid point of the canonical two-type benchmark curves."""

    alpha: float
    pr_non_bertrand: float
    wtp_gap_b0: float
    wtp_gap_b: float
    profit_noisy: float
    profit_accurate: float


def benchmark_curves(
    alphas: Sequence[float], c: float = 0.5, b: float = 1.0
) -> list[CurveRow]:
    """Canonical two-type market curves over a precision grid in [0, 1).

    Each row is computed through the general engine: the probability of the
    single positive-profit subgame, the WTP gap with and without loss
    aversion, and the ex-ante net profit against its accurate-certification
    counterpart at the same fee.
    """
    profile = ThresholdProfile(2, 2)
    accurate = canonical_two_type_market(b=b, c=c, alpha=1.0)
    profit_accurate, _ = ex_ante_profit(accurate, profile)
    rows = []
    for alpha in alphas:
        if not 0.0 <= alpha < 1.0:
            raise PrecisionOutOfRange(f"curve grid lies in [0,1), got {alpha}")
        market = canonical_two_type_market(b=b, c=c, alpha=alpha)
        rho = message_probabilities(market, profile)
        table = wtp_table(market, profile)
        top = disclosed(2)
        net, _ = ex_ante_profit(market, profile)
        rows.append(
            CurveRow(
                alpha=alpha,
                pr_non_bertrand=rho[top] * rho[ND],
                wtp_gap_b0=table[top].mean - table[ND].mean,
                wtp_gap_b=table[top].wtp - table[ND].wtp,
                profit_noisy=net,
                profit_accurate=profit_accurate,
            )
        )
    return rows


def truncated_mean_bounds(support: QualitySupport) -> bool:
    """Verify E[v | v <= v_k] > v_{k-1} for k > 1 and E[v | v >= v_k] > v_{n-1}.

    Only applicable when the priors are top-heavy (the prior clause of
    noise_gain_condition); raises ConditionNotMet otherwise.
    """
    if not noise_gain_condition(support).priors_ok and support.n >= 2:
        raise ConditionNotMet("priors are not top-heavy; bound not applicable")
    v, q = support.values, support.priors
    n = support.n
    if n == 1:
        return True
    for k in range(2, n + 1):
        mass = math.fsum(q[:k])
        mean = math.fsum(qi * vi for qi, vi in zip(q[:k], v[:k])) / mass
        if not mean > v[k - 2]:
            return False
    for k in range(1, n + 1):
        mass = math.fsum(q[k - 1 :])
        mean = math.fsum(qi * vi for qi, vi in zip(q[k - 1 :], v[k - 1 :])) / mass
        if not mean > v[n - 2]:
            return False
    return True


def estimate_loss_aversion(
    theta_x: Optional[int] = None, theta_y: Optional[int] = None
) -> Optional[float]:
    """Loss-aversion coefficient from multiple-price-list switching points.

    Problem X has 10 rows and problem Y has 20; a subject switching at row
    theta implies b = rows / theta for that problem. With both switching
    points the estimate averages the two ratios; with one it uses that
    problem alone; with neither there is no estimate.
    """
    ratios = []
    for theta, rows in ((theta_x, 10), (theta_y, 20)):
        if theta is None:
            continue
        if theta == 0:
            raise ZeroSwitchPoint("switching point of zero cannot be inverted")
        if not 1 <= theta <= rows:
            raise ZeroSwitchPoint(f"switching point {theta} outside 1..{rows}")
        ratios.append(rows / theta)
    if not ratios:
        return None
    return math.fsum(ratios) / len(ratios)
