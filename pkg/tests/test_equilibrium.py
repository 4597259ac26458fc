"""Threshold-equilibrium verification, enumeration, and two-type closed forms."""

import math

import pytest
from hypothesis import given, settings

from certmarket import (
    EMPTY_PROFILE,
    Env,
    MarketParams,
    OffEqPolicy,
    QualitySupport,
    ThresholdProfile,
    accurate_unique_equilibrium,
    canonical_two_type_market,
    enumerate_threshold_equilibria,
    ex_ante_profit,
    two_type_existence,
    two_type_noisy_vs_accurate,
    uniform_support,
    verify_threshold_equilibrium,
)
from certmarket.errors import AccurateInput, InvalidProfile, NotTwoType, SupportTooLarge

from oracles import markets

TOP = ThresholdProfile(2, 2)


def two_type(q_h: float, b: float, c: float, alpha: float, dv: float = 2.0) -> MarketParams:
    env = Env.ACCURATE if alpha == 1.0 else Env.NOISY
    return MarketParams(
        QualitySupport((1.0, 1.0 + dv), (1.0 - q_h, q_h)), b=b, c=c, alpha=alpha, env=env
    )


class TestVerify:
    def test_canonical_profile_is_equilibrium(self):
        report = verify_threshold_equilibrium(canonical_two_type_market(), TOP)
        assert report.is_equilibrium
        assert report.wtp_order_ok
        # cross-check against the closed-form region
        region = two_type_existence(canonical_two_type_market())
        assert region.normalized_cost == pytest.approx(0.75)
        assert region.noisy_exists

    def test_high_fee_breaks_accurate_equilibrium(self):
        m = canonical_two_type_market(c=0.7, alpha=1.0)
        report = verify_threshold_equilibrium(m, TOP)
        assert not report.is_equilibrium
        assert report.cert_gaps[1] == pytest.approx(2 / 3 - 0.7, abs=1e-12)

    def test_no_certification_is_trivially_equilibrium(self):
        m = MarketParams(uniform_support(1, 3), 0.5, 0.3, 1.0, Env.NO_CERT)
        report = verify_threshold_equilibrium(m, EMPTY_PROFILE)
        assert report.is_equilibrium
        assert report.ex_ante_net == 0.0

    def test_nocert_rejects_certifying_profile(self):
        m = MarketParams(uniform_support(1, 3), 0.5, 0.3, 1.0, Env.NO_CERT)
        with pytest.raises(InvalidProfile):
            verify_threshold_equilibrium(m, ThresholdProfile(2, 2))

    def test_pure_noise_invites_low_type_in(self):
        # with alpha = 0 the outcome is type-independent, so the low type
        # profits from certifying exactly as much as the high type and the
        # top-only profile cannot survive: the closed-form noisy region is
        # empty and the deviation check agrees
        m = canonical_two_type_market(alpha=0.0)
        region = two_type_existence(m)
        assert region.noisy_lower == pytest.approx(region.noisy_upper)
        assert not region.noisy_exists
        report = verify_threshold_equilibrium(m, TOP)
        assert not report.is_equilibrium
        assert report.cert_gaps[0] > 0  # the deviation is strictly profitable


class TestEnumerate:
    def test_canonical_grid_matches_region_formula(self):
        for ci in range(45, 66, 5):
            for ai in range(30, 91, 15):
                m = canonical_two_type_market(c=ci / 100, alpha=ai / 100)
                region = two_type_existence(m)
                near_boundary = min(
                    abs(region.normalized_cost - region.noisy_lower),
                    abs(region.normalized_cost - region.noisy_upper),
                ) <= 1e-6
                if near_boundary:
                    continue
                reports = {
                    (r.profile.cert_index, r.profile.disclose_index): r
                    for r in enumerate_threshold_equilibria(m)
                }
                assert reports[(2, 2)].is_equilibrium == region.noisy_exists

    def test_prohibitive_fee_leaves_only_empty_profile(self):
        m = MarketParams(uniform_support(1, 4), 0.0, 5.0, 0.8, Env.NOISY)
        winners = [
            r.profile for r in enumerate_threshold_equilibria(m) if r.is_equilibrium
        ]
        assert winners == [EMPTY_PROFILE]

    def test_accurate_enumeration_matches_unique_threshold(self):
        m = MarketParams(uniform_support(1, 3), 0.0, 0.3, 1.0, Env.ACCURATE)
        assert accurate_unique_equilibrium(m) == 2
        winners = [
            (r.profile.cert_index, r.profile.disclose_index)
            for r in enumerate_threshold_equilibria(m)
            if r.is_equilibrium
        ]
        assert winners == [(2, 2)]

    def test_deterministic_order(self):
        m = MarketParams(uniform_support(1, 3), 0.0, 0.3, 0.5, Env.NOISY)
        profiles = [r.profile for r in enumerate_threshold_equilibria(m)]
        assert profiles == [EMPTY_PROFILE] + [ThresholdProfile(l, l) for l in (1, 2, 3)]

    def test_split_threshold_scan_is_opt_in(self):
        m = MarketParams(uniform_support(1, 3), 0.0, 0.3, 0.5, Env.NOISY)
        full = enumerate_threshold_equilibria(m, include_split_thresholds=True)
        assert len(full) == 1 + 9

    def test_support_bound(self):
        m = MarketParams(uniform_support(1, 65), 0.0, 0.3, 0.5, Env.NOISY)
        with pytest.raises(SupportTooLarge):
            enumerate_threshold_equilibria(m)
        assert len(enumerate_threshold_equilibria(m, max_support=65)) == 66

    @given(markets(min_n=2, max_n=5, env=Env.ACCURATE, b_max=0.0))
    @settings(max_examples=40, deadline=None)
    def test_accurate_uniqueness(self, market):
        m_star = accurate_unique_equilibrium(market)
        certifying = [
            r.profile.cert_index
            for r in enumerate_threshold_equilibria(market)
            if r.is_equilibrium and not r.profile.is_empty
        ]
        assert len(certifying) <= 1
        if certifying:
            assert certifying == [m_star]


class TestAccurateUniqueEquilibrium:
    def test_three_type_example(self):
        m = MarketParams(uniform_support(1, 3), 0.0, 0.3, 1.0, Env.ACCURATE)
        assert accurate_unique_equilibrium(m) == 2

    def test_canonical(self):
        assert accurate_unique_equilibrium(canonical_two_type_market(alpha=1.0)) == 2

    def test_none_when_top_type_cannot_cover(self):
        support = uniform_support(1, 3)
        top_prize = 3.0 - support.mean
        m = MarketParams(support, 0.0, top_prize + 0.01, 1.0, Env.ACCURATE)
        assert accurate_unique_equilibrium(m) is None

    def test_usable_on_noisy_markets(self):
        assert accurate_unique_equilibrium(canonical_two_type_market()) == 2


class TestTwoTypeRegion:
    def test_accurate_case(self):
        region = two_type_existence(canonical_two_type_market(c=0.5, alpha=1.0))
        assert region.normalized_cost == pytest.approx(0.75)
        assert region.accurate_exists

    def test_canonical_bounds(self):
        region = two_type_existence(canonical_two_type_market())
        assert region.noisy_lower == pytest.approx(5 / 12, abs=1e-12)
        assert region.noisy_upper == pytest.approx(25 / 24, abs=1e-12)

    def test_zero_precision_collapses_interval(self):
        region = two_type_existence(canonical_two_type_market(alpha=0.0))
        q_h = 2 / 3
        expected = q_h * (1 + 1.0 * q_h / (1 + q_h))
        assert region.noisy_lower == pytest.approx(expected, abs=1e-12)
        assert region.noisy_upper == pytest.approx(expected, abs=1e-12)

    def test_requires_two_types(self):
        m = MarketParams(uniform_support(1, 3), 0.0, 0.3, 0.5, Env.NOISY)
        with pytest.raises(NotTwoType):
            two_type_existence(m)


class TestNoisyVsAccurate:
    def test_canonical_point(self):
        cmp = two_type_noisy_vs_accurate(canonical_two_type_market())
        assert cmp.noisy_more_profitable
        assert cmp.profit_gap == pytest.approx(1 / 54, abs=1e-12)

    def test_risk_neutral_never_gains_from_noise(self):
        for q_h in (0.2, 0.5, 0.8):
            for alpha in (0.1, 0.5, 0.9):
                cmp = two_type_noisy_vs_accurate(two_type(q_h, 0.0, 0.3, alpha))
                assert not cmp.noisy_more_profitable
                assert cmp.profit_gap <= 1e-12

    def test_boundary_alpha(self):
        cmp = two_type_noisy_vs_accurate(canonical_two_type_market(alpha=0.25))
        assert cmp.boundary
        assert cmp.profit_gap == pytest.approx(0.0, abs=1e-12)

    def test_accurate_input_rejected(self):
        with pytest.raises(AccurateInput):
            two_type_noisy_vs_accurate(canonical_two_type_market(alpha=1.0))

    def test_requires_two_types(self):
        m = MarketParams(uniform_support(1, 3), 0.0, 0.3, 0.5, Env.NOISY)
        with pytest.raises(NotTwoType):
            two_type_noisy_vs_accurate(m)

    def test_sign_agreement_on_small_grid(self):
        for q_h in (0.3, 0.6, 0.85):
            for b in (0.0, 0.7, 1.0):
                for alpha in (0.15, 0.45, 0.8):
                    m = two_type(q_h, b, 0.3, alpha)
                    cmp = two_type_noisy_vs_accurate(m)
                    if cmp.boundary:
                        continue
                    lhs = q_h * (b + 1)
                    rhs = 1 / (1 - (1 - q_h) * (1 - alpha))
                    if abs(lhs - rhs) <= 1e-6:
                        continue
                    assert cmp.noisy_more_profitable == (cmp.profit_gap > 0)


class TestRegionAgainstBruteForce:
    def test_small_grid(self):
        # verification under point-mass off-path beliefs reproduces the
        # closed-form existence intervals away from their boundaries
        for q_h in (0.25, 0.5, 0.75):
            for alpha in (0.0, 0.4, 0.8, 1.0):
                for b in (0.0, 1.0):
                    for lam in (0.3, 0.7, 0.95, 1.2):
                        dv, c = 2.0, lam * 2.0 * (1 - q_h)
                        m = two_type(q_h, b, c, alpha, dv)
                        region = two_type_existence(m)
                        if (
                            min(
                                abs(lam - region.noisy_lower),
                                abs(lam - region.noisy_upper),
                                abs(lam - 1.0),
                            )
                            <= 1e-6
                        ):
                            continue
                        report = verify_threshold_equilibrium(
                            m, TOP, OffEqPolicy.POINT_MASS_AT_OUTCOME
                        )
                        expected = (
                            region.accurate_exists
                            if alpha == 1.0
                            else region.noisy_exists
                        )
                        assert report.is_equilibrium == expected, (q_h, alpha, b, lam)


class TestProfitRanking:
    def test_accurate_benchmark_dominates_sampled_noisy_equilibria(self):
        # risk-neutral: any verified noisy threshold equilibrium earns at most
        # the accurate unique equilibrium's net profit
        support = QualitySupport((1.0, 2.0, 3.5, 5.0), (0.4, 0.3, 0.2, 0.1))
        c = 0.2
        base = MarketParams(support, 0.0, c, 0.6, Env.NOISY)
        m_star = accurate_unique_equilibrium(base)
        assert m_star is not None
        bench_net, _ = ex_ante_profit(
            base.with_alpha(1.0), ThresholdProfile(m_star, m_star)
        )
        for alpha in (0.3, 0.6, 0.9):
            market = base.with_alpha(alpha)
            for report in enumerate_threshold_equilibria(market):
                if report.is_equilibrium and not report.profile.is_empty:
                    assert report.ex_ante_net <= bench_net + 1e-9
