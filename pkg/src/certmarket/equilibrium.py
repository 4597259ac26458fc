"""Threshold-equilibrium verification and enumeration.

A profile is an equilibrium when every certifying type weakly prefers to
certify, every non-certifying type strictly prefers not to (a type indifferent
within tolerance is classified as certifying), every disclosed outcome earns
at least the ND payoff, and every suppressed-but-receivable outcome earns at
most the ND payoff. Deviating messages that never occur on path are valued
under an explicit off-path belief policy; a non-certifying deviant chooses
disclosure optimally outcome by outcome.

The accurate-certification case admits a closed form: the unique certifying
equilibrium sits at the lowest type whose full-information Bertrand prize
covers the fee. For two-type markets the existence region is available in
closed form as an interval test on the fee normalized by the quality gap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .beliefs import ND, OffEqPolicy, default_off_eq_policy, disclosed
from .errors import AccurateInput, NotTwoType, SupportTooLarge
from .market import (
    DEFAULT_TOL,
    EMPTY_PROFILE,
    Env,
    MarketParams,
    ThresholdProfile,
    cert_outcome_distribution,
)
from .profits import (
    MessageField,
    certify_probability,
    ex_ante_profit,
    joint_profit_decomposition,
)


@dataclass(frozen=True)
class EquilibriumReport:
    """Verification verdict plus the per-type and per-outcome margins."""

    profile: ThresholdProfile
    is_equilibrium: bool
    cert_gaps: tuple[float, ...]
    disclose_gaps: dict[int, float]
    off_eq_policy: OffEqPolicy
    wtp_order_ok: bool
    ex_ante_net: float
    ex_ante_gross: float


def _resolve_policy(market: MarketParams, policy: Optional[OffEqPolicy]) -> OffEqPolicy:
    if market.env is Env.ACCURATE:
        return OffEqPolicy.POINT_MASS_AT_OUTCOME
    return policy if policy is not None else default_off_eq_policy(market.env)


def verify_threshold_equilibrium(
    market: MarketParams,
    profile: ThresholdProfile,
    off_eq_policy: Optional[OffEqPolicy] = None,
    tol: float = DEFAULT_TOL,
) -> EquilibriumReport:
    """Check certification and disclosure optimality for one profile.

    cert_gaps[t-1] is the certify-minus-stay-out margin of type t: the
    equilibrium payoff gap for certifying types and the best-deviation gap
    for non-certifying ones. disclose_gaps maps every outcome a certifying
    seller can actually receive to the disclose-minus-suppress margin.
    """
    profile.check_against(market)
    policy = _resolve_policy(market, off_eq_policy)
    field = MessageField.build(market, profile, policy, tol)
    deco = joint_profit_decomposition(market, profile, tol)
    per_type = [_equilibrium_type_profit(field, t) for t in range(1, market.n + 1)]
    net = math.fsum(q * p for q, p in zip(market.support.priors, per_type))
    gross = net + market.c * certify_probability(market, profile)

    if market.env is Env.NO_CERT:
        return EquilibriumReport(
            profile=profile,
            is_equilibrium=True,
            cert_gaps=(0.0,) * market.n,
            disclose_gaps={},
            off_eq_policy=policy,
            wtp_order_ok=deco.wtp_order_ok,
            ex_ante_net=net,
            ex_ante_gross=gross,
        )

    nd_rec = field.records[ND]
    nd_value = field.profit_of_wtp(nd_rec.wtp) if not nd_rec.on_path else (
        field.profit_of_message(ND)
    )
    msg_value = {
        k: field.profit_of_wtp(field.records[disclosed(k)].wtp)
        for k in range(1, market.n + 1)
    }

    disclose_gaps: dict[int, float] = {}
    disclosure_ok = True
    for k in _receivable_outcomes(market, profile):
        gap = msg_value[k] - nd_value
        disclose_gaps[k] = gap
        if profile.discloses(k):
            disclosure_ok &= gap >= -tol
        else:
            disclosure_ok &= gap <= tol

    cert_gaps: list[float] = []
    cert_ok = True
    for t in range(1, market.n + 1):
        if profile.certifies(t):
            gap = per_type[t - 1] - nd_value
            cert_ok &= gap >= -tol
        else:
            gap = _certify_deviation_profit(field, t, msg_value, nd_value) - nd_value
            # indifference counts as certifying, so staying out must win by
            # more than the tolerance
            cert_ok &= gap < -tol
        cert_gaps.append(gap)

    return EquilibriumReport(
        profile=profile,
        is_equilibrium=bool(cert_ok and disclosure_ok),
        cert_gaps=tuple(cert_gaps),
        disclose_gaps=disclose_gaps,
        off_eq_policy=policy,
        wtp_order_ok=deco.wtp_order_ok,
        ex_ante_net=net,
        ex_ante_gross=gross,
    )


def _equilibrium_type_profit(field: MessageField, type_index: int) -> float:
    market, profile = field.market, field.profile
    per_message = {m: field.profit_of_message(m) for m in field.messages}
    nd_value = per_message.get(ND, 0.0)
    if not profile.certifies(type_index):
        return nd_value
    dist = cert_outcome_distribution(market.support, market.alpha, type_index)
    total = -market.c
    for k, p in enumerate(dist, start=1):
        if p == 0.0:
            continue
        if profile.discloses(k):
            total += p * per_message.get(disclosed(k), 0.0)
        else:
            total += p * nd_value
    return total


def _certify_deviation_profit(
    field: MessageField,
    type_index: int,
    msg_value: dict[int, float],
    nd_value: float,
) -> float:
    """Payoff of a non-certifying type that certifies and then discloses each
    outcome only when doing so beats sending ND."""
    market = field.market
    dist = cert_outcome_distribution(market.support, market.alpha, type_index)
    total = -market.c
    for k, p in enumerate(dist, start=1):
        if p == 0.0:
            continue
        total += p * max(msg_value[k], nd_value)
    return total


def _receivable_outcomes(market: MarketParams, profile: ThresholdProfile) -> list[int]:
    """Outcomes a certifying seller receives with positive probability."""
    if profile.cert_index is None:
        return []
    if market.alpha < 1.0:
        return list(range(1, market.n + 1))
    return list(range(profile.cert_index, market.n + 1))


def enumerate_threshold_equilibria(
    market: MarketParams,
    off_eq_policy: Optional[OffEqPolicy] = None,
    tol: float = DEFAULT_TOL,
    max_support: int = 64,
    include_split_thresholds: bool = False,
) -> list[EquilibriumReport]:
    """Verify the empty profile and every symmetric-threshold profile.

    By default only profiles with equal certification and disclosure
    thresholds are scanned (plus the empty profile); pass
    include_split_thresholds=True to also scan every unequal pair under the
    chosen off-path policy. Reports come back in deterministic order: empty
    profile first, then ascending thresholds.
    """
    if market.n > max_support:
        raise SupportTooLarge(f"n={market.n} exceeds bound {max_support}")
    profiles: list[ThresholdProfile] = [EMPTY_PROFILE]
    if market.env is not Env.NO_CERT:
        if include_split_thresholds:
            profiles += [
                ThresholdProfile(lc, ld)
                for lc in range(1, market.n + 1)
                for ld in range(1, market.n + 1)
            ]
        else:
            profiles += [ThresholdProfile(l, l) for l in range(1, market.n + 1)]
    return [
        verify_threshold_equilibrium(market, p, off_eq_policy, tol) for p in profiles
    ]


def accurate_unique_equilibrium(
    market: MarketParams, tol: float = DEFAULT_TOL
) -> Optional[int]:
    """Threshold of the unique accurate-certification equilibrium.

    Returns the smallest index m whose full-information Bertrand prize
    sum_{j<=m} q_j (v_m - v_j) covers the fee, or None when even the top type
    cannot cover it (no certifying equilibrium exists). A type indifferent
    within tol counts as covering the fee, matching the verification
    convention. Depends only on the support and the fee, so it also serves
    as the accurate benchmark for noisy markets.
    """
    values, priors = market.support.values, market.support.priors
    for m in range(1, market.n + 1):
        prize = math.fsum(q * (values[m - 1] - v) for q, v in zip(priors, values[:m]))
        if prize - market.c >= -tol:
            return m
    return None


@dataclass(frozen=True)
class TwoTypeRegion:
    """Closed-form two-type existence test for the top-type-only profile.

    normalized_cost is the fee divided by the quality gap times the low-type
    mass. The accurate region is (0, 1]; the noisy region is
    (noisy_lower, noisy_upper].
    """

    normalized_cost: float
    noisy_lower: float
    noisy_upper: float
    accurate_exists: bool
    noisy_exists: bool


def two_type_existence(market: MarketParams) -> TwoTypeRegion:
    """Evaluate the two-type existence region for (C, D) = top type only."""
    if market.n != 2:
        raise NotTwoType(f"need n=2, got n={market.n}")
    v_l, v_h = market.support.values
    q_h = market.support.priors[1]
    delta = v_h - v_l
    lam = market.c / (delta * (1.0 - q_h))
    x = (1.0 - market.alpha) * q_h
    scale = 1.0 + market.b * x / (1.0 + x)
    lower = x * scale
    upper = (market.alpha + x) * scale
    return TwoTypeRegion(
        normalized_cost=lam,
        noisy_lower=lower,
        noisy_upper=upper,
        accurate_exists=0.0 < lam <= 1.0,
        noisy_exists=lower < lam <= upper,
    )


@dataclass(frozen=True)
class NoisyVsAccurate:
    """Two-type profitability comparison of noisy versus accurate
    certification at the top-type-only profile."""

    noisy_more_profitable: bool
    profit_gap: float
    boundary: bool


def two_type_noisy_vs_accurate(
    market: MarketParams, tol: float = DEFAULT_TOL
) -> NoisyVsAccurate:
    """Closed-form profitability test against the direct profit gap.

    The condition q_H (b + 1) > 1 / (1 - (1 - q_H)(1 - alpha)) holds exactly
    when the noisy environment is more profitable; profit_gap is the direct
    ex-ante net difference (noisy minus accurate) at the same fee, and
    boundary marks gaps within tol of zero.
    """
    if market.n != 2:
        raise NotTwoType(f"need n=2, got n={market.n}")
    if market.alpha >= 1.0:
        raise AccurateInput("comparison needs alpha < 1")
    q_h = market.support.priors[1]
    lhs = q_h * (market.b + 1.0)
    rhs = 1.0 / (1.0 - (1.0 - q_h) * (1.0 - market.alpha))
    profile = ThresholdProfile(2, 2)
    net_noisy, _ = ex_ante_profit(market, profile, tol)
    net_accurate, _ = ex_ante_profit(market.with_alpha(1.0), profile, tol)
    gap = net_noisy - net_accurate
    return NoisyVsAccurate(
        noisy_more_profitable=lhs > rhs,
        profit_gap=gap,
        boundary=abs(gap) <= tol,
    )
