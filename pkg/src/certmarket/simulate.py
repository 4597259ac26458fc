"""Seeded Monte Carlo simulation of the certification market game.

Each round draws two seller types from the prior, runs the certification
technology for sellers whose policy certifies, resolves messages through the
disclosure rule, prices the resulting subgame, and lets two buyers choose.
Buyers value options at the engine's posterior willingness to pay for the
belief profile (homogeneous beliefs) and abstain when the best surplus is
negative; ties break toward buying, then toward the higher-valued product
(Bertrand pricing leaves buyers indifferent and the subgame outcome sends
them to the winner), then toward seller I.

The two buyers make up a unit mass of demand (half a unit each), so the
winning seller's revenue equals its posted price and the simulated mean
profits are directly comparable to the analytic ex-ante values. Buyer profit
is quality minus price for the chosen product.

Randomness is counter-addressable: every round's stream is keyed by
(master seed, replication index, round index), so results are independent of
execution order and of the thread count.
"""

from __future__ import annotations

import enum
import math
import os
from bisect import bisect_right
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .beliefs import Message, ND, OffEqPolicy, disclosed, wtp_table
from .equilibrium import enumerate_threshold_equilibria
from .errors import ConfigError, EmptyGrid
from .market import (
    DEFAULT_TOL,
    EMPTY_PROFILE,
    Env,
    MarketParams,
    QualitySupport,
    ThresholdProfile,
)

_MASK64 = (1 << 64) - 1


class Purchase(enum.Enum):
    SELLER_I = "I"
    SELLER_J = "J"
    NONE = "None"


# ---------------------------------------------------------------------------
# Seller policies


class SellerPolicy:
    """Round behavior of one seller. Decisions may depend only on the seller's
    own type, its certification outcome, the observed opponent message, and
    the market parameters."""

    def certify(self, type_index: int, market: MarketParams) -> bool:
        raise NotImplementedError

    def disclose(self, outcome_index: int, market: MarketParams) -> bool:
        raise NotImplementedError

    def price(self, own_wtp: float, opp_wtp: float, market: MarketParams) -> float:
        """Default: Bertrand pricing at the WTP gap."""
        return own_wtp - opp_wtp if own_wtp - opp_wtp > DEFAULT_TOL else 0.0

    def cheap_talk(
        self, type_index: int, outcome_index: Optional[int], market: MarketParams
    ) -> Optional[int]:
        return None

    def implied_beliefs(self, market: MarketParams) -> Optional[ThresholdProfile]:
        """Belief profile consistent with this policy, if one is implied."""
        return None


@dataclass(frozen=True)
class EquilibriumThreshold(SellerPolicy):
    """Follow a threshold profile and price at the Bertrand gap."""

    profile: ThresholdProfile

    def certify(self, type_index: int, market: MarketParams) -> bool:
        return self.profile.certifies(type_index)

    def disclose(self, outcome_index: int, market: MarketParams) -> bool:
        return self.profile.discloses(outcome_index)

    def implied_beliefs(self, market: MarketParams) -> Optional[ThresholdProfile]:
        return self.profile


@dataclass(frozen=True)
class AlwaysCertifyDiscloseAll(SellerPolicy):
    def certify(self, type_index: int, market: MarketParams) -> bool:
        return True

    def disclose(self, outcome_index: int, market: MarketParams) -> bool:
        return True

    def implied_beliefs(self, market: MarketParams) -> Optional[ThresholdProfile]:
        return ThresholdProfile(1, 1)


@dataclass(frozen=True)
class NeverCertify(SellerPolicy):
    def certify(self, type_index: int, market: MarketParams) -> bool:
        return False

    def disclose(self, outcome_index: int, market: MarketParams) -> bool:
        return False

    def implied_beliefs(self, market: MarketParams) -> Optional[ThresholdProfile]:
        return EMPTY_PROFILE


@dataclass(frozen=True)
class FixedMarkup(SellerPolicy):
    """Threshold behavior with a constant markup over the Bertrand price."""

    profile: ThresholdProfile
    markup: float

    def certify(self, type_index: int, market: MarketParams) -> bool:
        return self.profile.certifies(type_index)

    def disclose(self, outcome_index: int, market: MarketParams) -> bool:
        return self.profile.discloses(outcome_index)

    def price(self, own_wtp: float, opp_wtp: float, market: MarketParams) -> float:
        base = own_wtp - opp_wtp if own_wtp - opp_wtp > DEFAULT_TOL else 0.0
        return base + self.markup

    def implied_beliefs(self, market: MarketParams) -> Optional[ThresholdProfile]:
        return self.profile


@dataclass(frozen=True)
class CustomPolicy(SellerPolicy):
    """Arbitrary decision functions; requires explicit buyer beliefs."""

    certify_fn: Callable[[int, MarketParams], bool]
    disclose_fn: Callable[[int, MarketParams], bool]
    price_fn: Optional[Callable[[float, float, MarketParams], float]] = None
    cheap_talk_fn: Optional[Callable[[int, Optional[int], MarketParams], int]] = None

    def certify(self, type_index: int, market: MarketParams) -> bool:
        return self.certify_fn(type_index, market)

    def disclose(self, outcome_index: int, market: MarketParams) -> bool:
        return self.disclose_fn(outcome_index, market)

    def price(self, own_wtp: float, opp_wtp: float, market: MarketParams) -> float:
        if self.price_fn is None:
            return super().price(own_wtp, opp_wtp, market)
        return self.price_fn(own_wtp, opp_wtp, market)

    def cheap_talk(
        self, type_index: int, outcome_index: Optional[int], market: MarketParams
    ) -> Optional[int]:
        if self.cheap_talk_fn is None:
            return None
        return self.cheap_talk_fn(type_index, outcome_index, market)


# ---------------------------------------------------------------------------
# Round simulation


@dataclass(frozen=True)
class RoundRecord:
    """Complete account of one simulated market round."""

    qualities: tuple[int, int]
    certified: tuple[bool, bool]
    outcomes: tuple[Optional[int], Optional[int]]
    messages: tuple[Message, Message]
    cheap_talk: tuple[Optional[int], Optional[int]]
    prices: tuple[float, float]
    purchases: tuple[Purchase, Purchase]
    units: tuple[float, float]
    seller_gross: tuple[float, float]
    seller_net: tuple[float, float]
    buyer_profit: tuple[float, float]

    @property
    def welfare(self) -> float:
        """Mean profit over the four participants in the round."""
        return (
            self.seller_net[0]
            + self.seller_net[1]
            + self.buyer_profit[0]
            + self.buyer_profit[1]
        ) / 4.0


@dataclass(frozen=True)
class CellRuntime:
    """Precompiled per-cell state shared by every round of that cell."""

    market: MarketParams
    policies: tuple[SellerPolicy, SellerPolicy]
    beliefs: ThresholdProfile
    prior_cdf: tuple[float, ...]
    wtp_nd: float
    wtp_disc: tuple[float, ...]
    integer_prices: bool = False

    @classmethod
    def build(
        cls,
        market: MarketParams,
        policies: tuple[SellerPolicy, SellerPolicy],
        beliefs: Optional[ThresholdProfile] = None,
        off_eq_policy: Optional[OffEqPolicy] = None,
        integer_prices: bool = False,
    ) -> "CellRuntime":
        if beliefs is None:
            implied = {p.implied_beliefs(market) for p in policies}
            implied.discard(None)
            if len(implied) != 1:
                raise ConfigError(
                    "buyer beliefs are ambiguous; pass an explicit profile"
                )
            beliefs = implied.pop()
        if market.env is Env.NO_CERT:
            beliefs = EMPTY_PROFILE
        beliefs.check_against(market)
        table = wtp_table(market, beliefs, off_eq_policy)
        cdf = []
        acc = 0.0
        for q in market.support.priors:
            acc += q
            cdf.append(acc)
        cdf[-1] = 1.0
        return cls(
            market=market,
            policies=policies,
            beliefs=beliefs,
            prior_cdf=tuple(cdf),
            wtp_nd=table[ND].wtp,
            wtp_disc=tuple(table[disclosed(k)].wtp for k in range(1, market.n + 1)),
            integer_prices=integer_prices,
        )


def _draw_index(cdf: tuple[float, ...], u: float) -> int:
    return min(bisect_right(cdf, u), len(cdf) - 1) + 1


def _play_round(rt: CellRuntime, uniforms: Sequence[float]) -> RoundRecord:
    market = rt.market
    c = market.c
    alpha = market.alpha
    values = market.support.values
    cert_available = market.env is not Env.NO_CERT

    types = (_draw_index(rt.prior_cdf, uniforms[0]), _draw_index(rt.prior_cdf, uniforms[1]))
    certified = []
    outcomes: list[Optional[int]] = []
    messages: list[Message] = []
    wtps: list[float] = []
    talk: list[Optional[int]] = []
    for s, policy in enumerate(rt.policies):
        t = types[s]
        does_cert = cert_available and policy.certify(t, market)
        outcome: Optional[int] = None
        message = ND
        if does_cert:
            success_u = uniforms[2 + 2 * s]
            outcome_u = uniforms[3 + 2 * s]
            outcome = t if success_u < alpha else _draw_index(rt.prior_cdf, outcome_u)
            if policy.disclose(outcome, market):
                message = disclosed(outcome)
        certified.append(does_cert)
        outcomes.append(outcome)
        messages.append(message)
        wtps.append(rt.wtp_nd if message.is_nd else rt.wtp_disc[message.outcome - 1])
        talk.append(policy.cheap_talk(t, outcome, market))

    price_i = rt.policies[0].price(wtps[0], wtps[1], market)
    price_j = rt.policies[1].price(wtps[1], wtps[0], market)
    if rt.integer_prices:
        price_i, price_j = float(round(price_i)), float(round(price_j))

    # ties break toward buying, then toward the higher-valued product (the
    # Bertrand winner leaves buyers exactly indifferent, and the equilibrium
    # outcome sends them to the winner), then toward seller I
    surplus_i = wtps[0] - price_i
    surplus_j = wtps[1] - price_j
    if max(surplus_i, surplus_j) < 0.0:
        choice = Purchase.NONE
    elif surplus_i > surplus_j + DEFAULT_TOL:
        choice = Purchase.SELLER_I
    elif surplus_j > surplus_i + DEFAULT_TOL:
        choice = Purchase.SELLER_J
    elif wtps[0] >= wtps[1]:
        choice = Purchase.SELLER_I
    else:
        choice = Purchase.SELLER_J

    units = [0.0, 0.0]
    buyer = (0.0, 0.0)
    if choice is Purchase.SELLER_I:
        units[0] = 1.0
        buyer = (values[types[0] - 1] - price_i,) * 2
    elif choice is Purchase.SELLER_J:
        units[1] = 1.0
        buyer = (values[types[1] - 1] - price_j,) * 2

    gross = (units[0] * price_i, units[1] * price_j)
    net = (
        gross[0] - (c if certified[0] else 0.0),
        gross[1] - (c if certified[1] else 0.0),
    )
    return RoundRecord(
        qualities=types,
        certified=(certified[0], certified[1]),
        outcomes=(outcomes[0], outcomes[1]),
        messages=(messages[0], messages[1]),
        cheap_talk=(talk[0], talk[1]),
        prices=(price_i, price_j),
        purchases=(choice, choice),
        units=(units[0], units[1]),
        seller_gross=gross,
        seller_net=net,
        buyer_profit=buyer,
    )


def round_key(master_seed: int, replication: int, round_index: int) -> int:
    """Counter key of one round's random stream."""
    if not 0 <= replication < (1 << 32) or not 0 <= round_index < (1 << 32):
        raise ConfigError("replication and round indices must fit in 32 bits")
    return ((master_seed & _MASK64) << 64) | (replication << 32) | round_index


def _round_uniforms(key: int) -> np.ndarray:
    return np.random.Generator(np.random.Philox(key=key)).random(6)


def simulate_round(
    market: MarketParams,
    policies: tuple[SellerPolicy, SellerPolicy],
    round_seed: int,
    beliefs: Optional[ThresholdProfile] = None,
    off_eq_policy: Optional[OffEqPolicy] = None,
    integer_prices: bool = False,
) -> RoundRecord:
    """Simulate one round; bit-identical replay for a fixed round_seed."""
    rt = CellRuntime.build(market, policies, beliefs, off_eq_policy, integer_prices)
    return _play_round(rt, _round_uniforms(round_seed & ((1 << 128) - 1)))


# ---------------------------------------------------------------------------
# Treatments


@dataclass(frozen=True)
class TreatmentConfig:
    """A balanced grid of (c, alpha) cells played for several replications.

    rounds is the number of rounds per replication and must be a multiple of
    the number of grid cells so every cell occurs equally often. The policy
    names one of the built-in seller behaviors; "equilibrium" resolves, per
    cell, to the most profitable verified threshold equilibrium unless an
    explicit profile is given.
    """

    support: QualitySupport
    env: Env
    b: float
    c_values: tuple[float, ...]
    alpha_values: tuple[float, ...]
    rounds: int
    replications: int
    seed: int
    policy: str = "equilibrium"
    markup: float = 0.0
    cert_index: Optional[int] = None
    disclose_index: Optional[int] = None
    label: str = ""
    integer_prices: bool = False


@dataclass
class _Welford:
    n: int = 0
    mean: float = 0.0
    m2: float = 0.0

    def add(self, x: float) -> None:
        self.n += 1
        delta = x - self.mean
        self.mean += delta / self.n
        self.m2 += delta * (x - self.mean)

    def merge(self, other: "_Welford") -> None:
        if other.n == 0:
            return
        if self.n == 0:
            self.n, self.mean, self.m2 = other.n, other.mean, other.m2
            return
        n = self.n + other.n
        delta = other.mean - self.mean
        self.m2 += other.m2 + delta * delta * self.n * other.n / n
        self.mean += delta * other.n / n
        self.n = n

    @property
    def se(self) -> float:
        if self.n < 2:
            return float("nan")
        return math.sqrt(self.m2 / (self.n - 1) / self.n)


@dataclass
class _CellAccumulator:
    """Order-insensitive per-cell aggregates: replication-level means feed the
    Welford accumulators (independent units for the standard errors), counts
    and totals feed the rates and the profit share."""

    net: _Welford = field(default_factory=_Welford)
    gross: _Welford = field(default_factory=_Welford)
    buyer: _Welford = field(default_factory=_Welford)
    welfare: _Welford = field(default_factory=_Welford)
    seller_net_total: float = 0.0
    buyer_total: float = 0.0
    purchase_count: int = 0
    cert_count: int = 0
    rounds: int = 0
    message_counts: dict[str, int] = field(default_factory=dict)

    def merge(self, other: "_CellAccumulator") -> None:
        self.net.merge(other.net)
        self.gross.merge(other.gross)
        self.buyer.merge(other.buyer)
        self.welfare.merge(other.welfare)
        self.seller_net_total += other.seller_net_total
        self.buyer_total += other.buyer_total
        self.purchase_count += other.purchase_count
        self.cert_count += other.cert_count
        self.rounds += other.rounds
        for key, count in other.message_counts.items():
            self.message_counts[key] = self.message_counts.get(key, 0) + count


@dataclass(frozen=True)
class TreatmentMetrics:
    """Aggregated outcomes of one (c, alpha) cell."""

    label: str
    lo: float
    hi: float
    env: Env
    c: float
    alpha: float
    replications: int
    rounds: int
    seed: int
    seller_net_mean: float
    seller_net_se: float
    seller_gross_mean: float
    seller_gross_se: float
    buyer_mean: float
    buyer_se: float
    welfare_mean: float
    welfare_se: float
    profit_share: float
    purchase_rate: float
    cert_rate: float
    message_counts: dict[str, int]


CSV_COLUMNS = (
    "treatment",
    "lo",
    "hi",
    "env",
    "c",
    "alpha",
    "replications",
    "seller_net_mean",
    "seller_net_se",
    "seller_gross_mean",
    "buyer_mean",
    "welfare_mean",
    "profit_share",
    "purchase_rate",
    "cert_rate",
    "seed",
)


def metrics_csv_row(m: TreatmentMetrics) -> list:
    return [
        m.label,
        m.lo,
        m.hi,
        m.env.value,
        m.c,
        m.alpha,
        m.replications,
        m.seller_net_mean,
        m.seller_net_se,
        m.seller_gross_mean,
        m.buyer_mean,
        m.welfare_mean,
        m.profit_share,
        m.purchase_rate,
        m.cert_rate,
        m.seed,
    ]


def best_equilibrium_profile(
    market: MarketParams, off_eq_policy: Optional[OffEqPolicy] = None
) -> ThresholdProfile:
    """Most profitable verified threshold profile (empty when none verifies)."""
    if market.env is Env.NO_CERT:
        return EMPTY_PROFILE
    reports = [
        r
        for r in enumerate_threshold_equilibria(market, off_eq_policy)
        if r.is_equilibrium
    ]
    if not reports:
        return EMPTY_PROFILE
    best = max(
        reports,
        key=lambda r: (r.ex_ante_net, -(r.profile.cert_index or market.n + 1)),
    )
    return best.profile


def _resolve_policies(
    config: TreatmentConfig, market: MarketParams, off_eq_policy: Optional[OffEqPolicy]
) -> tuple[SellerPolicy, SellerPolicy]:
    if config.cert_index is not None:
        profile = ThresholdProfile(config.cert_index, config.disclose_index)
    elif config.policy in ("equilibrium", "fixed_markup"):
        profile = best_equilibrium_profile(market, off_eq_policy)
    else:
        profile = EMPTY_PROFILE
    if config.policy == "equilibrium":
        policy: SellerPolicy = EquilibriumThreshold(profile)
    elif config.policy == "always_certify":
        policy = AlwaysCertifyDiscloseAll()
    elif config.policy == "never_certify":
        policy = NeverCertify()
    elif config.policy == "fixed_markup":
        policy = FixedMarkup(profile, config.markup)
    else:
        raise ConfigError(f"unknown policy {config.policy!r}")
    return (policy, policy)


def _threads() -> int:
    raw = os.environ.get("CERTMARKET_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"CERTMARKET_THREADS must be an integer, got {raw!r}")


def run_treatment(
    config: TreatmentConfig,
    policies: Optional[tuple[SellerPolicy, SellerPolicy]] = None,
    beliefs: Optional[ThresholdProfile] = None,
    off_eq_policy: Optional[OffEqPolicy] = None,
) -> list[TreatmentMetrics]:
    """Run every (c, alpha) cell and aggregate, one metrics row per cell.

    Cell visitation is balanced: round r of every replication plays cell
    r mod n_cells. Results are independent of the CERTMARKET_THREADS setting
    because each round's randomness is keyed by (seed, replication, round)
    and partial aggregates merge in a fixed chunk order.
    """
    if config.rounds <= 0 or config.replications <= 0:
        raise ConfigError("rounds and replications must be positive")
    c_values = tuple(sorted(set(config.c_values)))
    alpha_values = tuple(sorted(set(config.alpha_values)))
    if not c_values or not alpha_values:
        raise EmptyGrid("treatment grid needs at least one c and one alpha")
    cells = [(c, a) for c in c_values for a in alpha_values]
    if config.rounds % len(cells) != 0:
        raise ConfigError(
            f"rounds={config.rounds} is not a multiple of the {len(cells)}-cell grid"
        )

    runtimes: list[CellRuntime] = []
    for c, alpha in cells:
        env = config.env
        if env is Env.ACCURATE and alpha != 1.0:
            raise ConfigError("Accurate treatments must use alpha = 1")
        market = MarketParams(config.support, config.b, c, alpha, env)
        cell_policies = policies or _resolve_policies(config, market, off_eq_policy)
        runtimes.append(
            CellRuntime.build(
                market, cell_policies, beliefs, off_eq_policy, config.integer_prices
            )
        )

    n_cells = len(cells)
    per_cell_rounds = config.rounds // n_cells
    chunk_size = max(1, config.replications // 128)
    chunk_starts = list(range(0, config.replications, chunk_size))

    def run_chunk(start: int) -> list[_CellAccumulator]:
        stop = min(start + chunk_size, config.replications)
        accs = [_CellAccumulator() for _ in range(n_cells)]
        sums = [[0.0, 0.0, 0.0, 0.0] for _ in range(n_cells)]
        for rep in range(start, stop):
            for row in sums:
                row[0] = row[1] = row[2] = row[3] = 0.0
            for r in range(config.rounds):
                idx = r % n_cells
                rec = _play_round(
                    runtimes[idx], _round_uniforms(round_key(config.seed, rep, r))
                )
                acc = accs[idx]
                row = sums[idx]
                row[0] += rec.seller_net[0] + rec.seller_net[1]
                row[1] += rec.seller_gross[0] + rec.seller_gross[1]
                row[2] += rec.buyer_profit[0] + rec.buyer_profit[1]
                row[3] += rec.welfare
                acc.seller_net_total += rec.seller_net[0] + rec.seller_net[1]
                acc.buyer_total += rec.buyer_profit[0] + rec.buyer_profit[1]
                acc.purchase_count += sum(
                    1 for p in rec.purchases if p is not Purchase.NONE
                )
                acc.cert_count += sum(rec.certified)
                acc.rounds += 1
                for m in rec.messages:
                    key = repr(m)
                    acc.message_counts[key] = acc.message_counts.get(key, 0) + 1
            for idx in range(n_cells):
                acc, row = accs[idx], sums[idx]
                acc.net.add(row[0] / (2.0 * per_cell_rounds))
                acc.gross.add(row[1] / (2.0 * per_cell_rounds))
                acc.buyer.add(row[2] / (2.0 * per_cell_rounds))
                acc.welfare.add(row[3] / per_cell_rounds)
        return accs

    workers = _threads()
    if workers == 1:
        chunk_results = [run_chunk(s) for s in chunk_starts]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunk_results = list(pool.map(run_chunk, chunk_starts))

    totals = [_CellAccumulator() for _ in range(n_cells)]
    for chunk in chunk_results:
        for total, part in zip(totals, chunk):
            total.merge(part)

    support = config.support
    metrics = []
    for (c, alpha), acc in zip(cells, totals):
        seller_obs = 2 * acc.rounds
        denom = acc.seller_net_total + acc.buyer_total
        metrics.append(
            TreatmentMetrics(
                label=config.label or f"{config.env.value}",
                lo=support.values[0],
                hi=support.values[-1],
                env=config.env,
                c=c,
                alpha=alpha,
                replications=config.replications,
                rounds=acc.rounds,
                seed=config.seed,
                seller_net_mean=acc.net.mean,
                seller_net_se=acc.net.se,
                seller_gross_mean=acc.gross.mean,
                seller_gross_se=acc.gross.se,
                buyer_mean=acc.buyer.mean,
                buyer_se=acc.buyer.se,
                welfare_mean=acc.welfare.mean,
                welfare_se=acc.welfare.se,
                profit_share=(
                    acc.seller_net_total / denom if denom > 0 else float("nan")
                ),
                purchase_rate=acc.purchase_count / seller_obs,
                cert_rate=acc.cert_count / seller_obs,
                message_counts=dict(sorted(acc.message_counts.items())),
            )
        )
    return metrics
