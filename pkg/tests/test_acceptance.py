"""Acceptance suite: every criterion at its stated tolerance and budget.

Each test prints one `[criterion N] ... PASS/FAIL` line (visible with
`pytest -s tests/test_acceptance.py -v`). The generators below are shared and
deterministically seeded so the belief-conservation criterion can sweep the
exact populations used by the other criteria.
"""

from __future__ import annotations

import math
import time

import numpy as np
import pytest

import certmarket as cm
from certmarket import (
    EMPTY_PROFILE,
    Env,
    MarketParams,
    ND,
    OffEqPolicy,
    QualitySupport,
    ThresholdProfile,
    TreatmentConfig,
    canonical_two_type_market,
    disclosed,
)
from certmarket.analysis import (
    benchmark_curves,
    loss_slope_components,
    loss_term_slope_fd,
    noise_gain_condition,
)
from certmarket.beliefs import message_probabilities, wtp_table
from certmarket.equilibrium import (
    accurate_unique_equilibrium,
    enumerate_threshold_equilibria,
    two_type_existence,
    two_type_noisy_vs_accurate,
    verify_threshold_equilibrium,
)
from certmarket.profits import ex_ante_profit
from certmarket.simulate import run_treatment

TOP = ThresholdProfile(2, 2)
STEEP = QualitySupport((1.0, 2.0, 4.0), (0.08, 0.2, 0.72))


def criterion(num: int, label: str, budget: float):
    """Run the wrapped check, print one pass/fail line, enforce the budget."""

    def decorator(fn):
        def wrapper(*args, **kwargs):
            start = time.perf_counter()
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"[criterion {num}] {label}: FAIL")
                raise
            elapsed = time.perf_counter() - start
            print(
                f"[criterion {num}] {label}: PASS "
                f"({elapsed * 1000:.1f} ms, budget {budget * 1000:.0f} ms)"
            )
            assert elapsed <= budget, f"runtime {elapsed:.3f}s over budget {budget}s"

        return wrapper

    return decorator


# ---------------------------------------------------------------------------
# Shared deterministic populations


def two_type_grid() -> list[tuple[MarketParams, float, float]]:
    """(market, condition_lhs, condition_rhs) over a dense two-type grid."""
    points = []
    for q_h in (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9):
        for b in (0.0, 0.5, 1.0, 2.0):
            for ai in range(1, 10):
                alpha = ai / 10
                for dv in (1.0, 2.0):
                    support = QualitySupport((1.0, 1.0 + dv), (1.0 - q_h, q_h))
                    market = MarketParams(support, b, 0.25, alpha, Env.NOISY)
                    lhs = q_h * (b + 1.0)
                    rhs = 1.0 / (1.0 - (1.0 - q_h) * (1.0 - alpha))
                    points.append((market, lhs, rhs))
    return points


def region_grid() -> list[tuple[MarketParams, float]]:
    """(market, normalized_cost) pairs covering both existence regions."""
    points = []
    for q_h in (0.15, 0.25, 0.35, 0.45, 0.55, 0.65, 0.75, 0.85):
        for alpha in (0.0, 0.2, 0.4, 0.6, 0.8, 1.0):
            for b in (0.0, 0.5, 1.0):
                for lam in (0.2, 0.5, 0.8, 0.95, 1.1, 1.3):
                    dv = 2.0
                    c = lam * dv * (1.0 - q_h)
                    env = Env.ACCURATE if alpha == 1.0 else Env.NOISY
                    support = QualitySupport((1.0, 1.0 + dv), (1.0 - q_h, q_h))
                    points.append((MarketParams(support, b, c, alpha, env), lam))
    return points


def random_markets(count: int, seed: int = 20260810) -> list[MarketParams]:
    """Risk-neutral markets with n in 2..5 whose accurate benchmark exists."""
    rng = np.random.default_rng(seed)
    markets = []
    while len(markets) < count:
        n = int(rng.integers(2, 6))
        start = float(rng.uniform(0.5, 2.0))
        gaps = rng.uniform(0.3, 2.0, size=n - 1)
        values = tuple(start + float(g) for g in np.concatenate(([0.0], np.cumsum(gaps))))
        weights = rng.dirichlet(np.ones(n))
        support = QualitySupport(values, tuple(float(w) for w in weights))
        top_prize = values[-1] - support.mean
        c = float(rng.uniform(0.1, 0.9)) * top_prize
        if c <= 0.0:
            continue
        alpha = float(rng.uniform(0.3, 0.95))
        markets.append(MarketParams(support, 0.0, c, alpha, Env.NOISY))
    return markets


def monotonicity_pairs(count: int = 100, seed: int = 77) -> list[tuple[MarketParams, ThresholdProfile]]:
    rng = np.random.default_rng(seed)
    pairs = []
    for market in random_markets(count, seed=seed):
        l = int(rng.integers(1, market.n + 1))
        pairs.append((market, ThresholdProfile(l, l)))
    return pairs


def condition_supports(count: int = 100, seed: int = 4242) -> list[QualitySupport]:
    """Supports with nondecreasing gaps and top-heavy priors, n in {2,3,4}."""
    rng = np.random.default_rng(seed)
    supports = []
    while len(supports) < count:
        n = int(rng.integers(2, 5))
        gap = float(rng.uniform(0.3, 1.2))
        values = [float(rng.uniform(0.5, 2.0))]
        for _ in range(n - 1):
            values.append(values[-1] + gap)
            gap *= float(rng.uniform(1.0, 1.5))
        priors = [0.0] * n
        remaining = 1.0
        for k in range(n - 1, 0, -1):
            share = float(rng.uniform(0.70, 0.90))
            priors[k] = remaining * share
            remaining *= 1.0 - share
        priors[0] = remaining
        support = QualitySupport(tuple(values), tuple(priors))
        assert noise_gain_condition(support).holds
        supports.append(support)
    return supports


# ---------------------------------------------------------------------------
# Criteria


@criterion(1, "canonical two-type exactness", 1.0)
def test_criterion_1_canonical_exactness():
    def evaluate():
        market = canonical_two_type_market()
        rho = message_probabilities(market, TOP)
        table = wtp_table(market, TOP)
        net, _ = ex_ante_profit(market, TOP)
        net1, _ = ex_ante_profit(market.with_alpha(1.0), TOP)
        return (
            rho[ND],
            rho[ND] * rho[disclosed(2)],
            table[disclosed(2)].wtp - table[ND].wtp,
            table[disclosed(2)].mean - table[ND].mean,
            net,
            net1,
        )

    got = evaluate()
    expected = (4 / 9, 20 / 81, 1.875, 1.5, 7 / 54, 1 / 9)
    for g, e in zip(got, expected):
        assert abs(g - e) <= 1e-12, (g, e)
    best = min(
        (lambda t0: (evaluate(), time.perf_counter() - t0)[1])(time.perf_counter())
        for _ in range(20)
    )
    assert best < 1e-3, f"engine evaluation took {best * 1e3:.3f} ms"


@criterion(2, "canonical curves dominance", 1.0)
def test_criterion_2_canonical_curves():
    rows = benchmark_curves([k / 100 for k in range(26, 100)])
    assert len(rows) == 74
    for row in rows:
        assert row.profit_noisy > row.profit_accurate, row.alpha
    boundary = benchmark_curves([0.25])[0]
    assert abs(boundary.profit_noisy - boundary.profit_accurate) <= 1e-12
    for row in benchmark_curves([k / 100 for k in range(0, 100)]):
        assert row.pr_non_bertrand > 2 / 9, row.alpha


@criterion(3, "two-type profitability condition vs direct gap", 10.0)
def test_criterion_3_condition_oracle_equivalence():
    tested = 0
    for market, lhs, rhs in two_type_grid():
        if abs(lhs - rhs) <= 1e-6:
            continue
        cmp = two_type_noisy_vs_accurate(market)
        assert cmp.noisy_more_profitable == (lhs > rhs)
        assert cmp.noisy_more_profitable == (cmp.profit_gap > 0), (
            market.support.priors,
            market.b,
            market.alpha,
            cmp,
        )
        tested += 1
    assert tested >= 500, tested


@criterion(4, "accurate benchmark dominates noisy equilibria", 30.0)
def test_criterion_4_profit_ranking():
    markets_with_eq = 0
    comparisons = 0
    strict = 0
    for market in random_markets(900):
        m_star = accurate_unique_equilibrium(market)
        assert m_star is not None  # fee drawn below the top type's prize
        bench_net, _ = ex_ante_profit(
            market.with_alpha(1.0), ThresholdProfile(m_star, m_star)
        )
        found = False
        for report in enumerate_threshold_equilibria(market):
            if not report.is_equilibrium or report.profile.is_empty:
                continue
            found = True
            comparisons += 1
            assert report.ex_ante_net <= bench_net + 1e-9
            if report.ex_ante_net < bench_net - 1e-12:
                strict += 1
        if found:
            markets_with_eq += 1
        if markets_with_eq >= 200:
            break
    assert markets_with_eq >= 200, markets_with_eq
    assert strict >= 0.9 * comparisons, (strict, comparisons)


@criterion(5, "risk-neutral gross profit monotone in precision", 30.0)
def test_criterion_5_monotonicity():
    pairs = monotonicity_pairs(100)
    assert len(pairs) >= 100
    for market, profile in pairs:
        last = -math.inf
        for k in range(101):
            _, gross = ex_ante_profit(market.with_alpha(k / 100), profile)
            joint = 2.0 * gross
            assert joint >= last - 1e-10, (market.support.values, profile, k)
            last = joint


@criterion(6, "loss-term slope machinery", 60.0)
def test_criterion_6_loss_slope():
    # finite-difference agreement and negativity across the generated suite
    for support in condition_supports(100):
        market = MarketParams(support, 1.0, 0.05, 0.5, Env.NOISY)
        for l in range(1, support.n + 1):
            rep = loss_slope_components(support, l)
            assert rep.analytic_slope < 0.0, (support.values, support.priors, l)
            profile = ThresholdProfile(l, l)
            for h in (1e-3, 1e-4):
                fd = loss_term_slope_fd(market, profile, h)
                assert abs(fd - rep.analytic_slope) <= 10 * h, (
                    support.values,
                    l,
                    h,
                    fd,
                    rep.analytic_slope,
                )
    # near full precision, enough loss aversion makes noise strictly win
    base = MarketParams(STEEP, 1.0, 0.05, 0.99, Env.NOISY)
    profile = ThresholdProfile(2, 2)
    accurate_net, _ = ex_ante_profit(base.with_alpha(1.0), profile)
    found = None
    for alpha in (0.95, 0.97, 0.99):
        for b in (1.0, 2.0, 4.0, 8.0):
            net, _ = ex_ante_profit(base.with_alpha(alpha).with_b(b), profile)
            acc_net, _ = ex_ante_profit(
                base.with_alpha(1.0).with_b(b), profile
            )
            if net > acc_net + 1e-12:
                found = (alpha, b, net - acc_net)
                break
        if found:
            break
    assert found is not None
    assert accurate_net == pytest.approx(acc_net)  # loss term is dead at alpha=1


@criterion(7, "two-type existence region vs deviation check", 10.0)
def test_criterion_7_region_oracle_equivalence():
    tested = 0
    for market, lam in region_grid():
        region = two_type_existence(market)
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
            market, TOP, OffEqPolicy.POINT_MASS_AT_OUTCOME
        )
        expected = (
            region.accurate_exists if market.alpha == 1.0 else region.noisy_exists
        )
        assert report.is_equilibrium == expected, (market, lam, region)
        tested += 1
    assert tested >= 500, tested


@criterion(8, "law of iterated expectations across all suites", 60.0)
def test_criterion_8_belief_conservation():
    populations: list[tuple[MarketParams, ThresholdProfile]] = []
    populations.append((canonical_two_type_market(), TOP))
    populations += [(m, TOP) for m, _, _ in two_type_grid()]
    populations += [(m, TOP) for m, _ in region_grid()]
    for market in random_markets(900):
        for l in range(1, market.n + 1):
            populations.append((market, ThresholdProfile(l, l)))
        populations.append((market, EMPTY_PROFILE))
    populations += monotonicity_pairs(100)
    for support in condition_supports(100):
        market = MarketParams(support, 1.0, 0.05, 0.5, Env.NOISY)
        populations += [
            (market, ThresholdProfile(l, l)) for l in range(1, support.n + 1)
        ]
    assert len(populations) > 5000
    for market, profile in populations:
        rho = message_probabilities(market, profile)
        mixed = math.fsum(
            p * cm.posterior(market, profile, m).mean for m, p in rho.items()
        )
        assert abs(mixed - market.support.mean) <= 1e-10, (market, profile)


@criterion(9, "Monte Carlo unbiasedness", 60.0)
def test_criterion_9_monte_carlo():
    config = TreatmentConfig(
        support=canonical_two_type_market().support,
        env=Env.NOISY,
        b=1.0,
        c_values=(0.5,),
        alpha_values=(0.5,),
        rounds=1,
        replications=100_000,
        seed=20260810,
        policy="equilibrium",
        cert_index=2,
        disclose_index=2,
        label="canonical",
    )
    metrics = run_treatment(config)[0]
    assert abs(metrics.seller_net_mean - 7 / 54) <= 3 * metrics.seller_net_se, metrics
    rho = message_probabilities(canonical_two_type_market(), TOP)
    total = sum(metrics.message_counts.values())
    assert total == 2 * 100_000
    for msg in (ND, disclosed(2)):
        p = rho[msg]
        freq = metrics.message_counts[repr(msg)] / total
        sigma = math.sqrt(p * (1 - p) / total)
        assert abs(freq - p) <= 3 * sigma, (msg, freq, p)

    d1 = TreatmentConfig(
        support=cm.uniform_support(50, 100),
        env=Env.NO_CERT,
        b=0.0,
        c_values=(10.0,),
        alpha_values=(1.0,),
        rounds=1,
        replications=20_000,
        seed=4,
        policy="equilibrium",
        label="D1",
    )
    d1_metrics = run_treatment(d1)[0]
    assert d1_metrics.seller_net_mean == 0.0
    assert d1_metrics.seller_net_se == 0.0  # zero in every single round


def test_criterion_10_determinism(tmp_path, monkeypatch):
    @criterion(10, "simulate determinism across runs and thread counts", 120.0)
    def check():
        import json

        from certmarket.cli import main

        spec = {
            "treatment": "D3_80",
            "lo": 80,
            "hi": 100,
            "env": "Noisy",
            "b": 1.0,
            "c": [10, 15, 20, 25],
            "alpha": [0.5, 0.6, 0.7, 0.8, 0.9],
            "rounds": 20,
            "replications": 40,
            "seed": 99,
            "policy": "equilibrium",
        }
        cfg = tmp_path / "d3.json"
        cfg.write_text(json.dumps(spec))
        outputs = []
        for name, threads in (("a", "1"), ("b", "1"), ("c", "8")):
            monkeypatch.setenv("CERTMARKET_THREADS", threads)
            out = tmp_path / f"{name}.csv"
            assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
            outputs.append(out.read_bytes())
        assert outputs[0] == outputs[1]  # identical reruns
        assert outputs[0] == outputs[2]  # identical across thread counts

    check()
