"""Expected profits by message, by type, and ex ante, plus the linear
decomposition of gross profit into a mean-gap term and a loss-gap term.

For a symmetric threshold profile each seller's message is drawn from the
same distribution rho over on-path messages, so the expected profit of
sending message m is the rho-weighted sum of Bertrand prizes against every
opponent message. A certifying type's payoff weighs its outcome distribution
over those message profits and subtracts the fee; a non-certifying type earns
the ND message profit.

Because every subgame prize is a WTP difference, a seller's ex-ante gross
profit splits linearly in the loss-aversion coefficient b:

    ex_ante_gross = sum_{i<j} rho_i rho_j (E_j - E_i)
                  + b * sum_{i<j} rho_i rho_j (EL_j - EL_i)

with messages ordered ND first and disclosed outcomes ascending. The first
sum is the mean-gap term and the second the loss-gap term; the identity holds
whenever WTP is nondecreasing along that order (flagged otherwise, not
silently absorbed). The two sellers' joint gross profit is twice the ex-ante
gross profit of either one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .beliefs import (
    Message,
    ND,
    OffEqPolicy,
    PosteriorRecord,
    disclosed,
    wtp_table,
)
from .errors import OffPathMessage
from .market import DEFAULT_TOL, MarketParams, ThresholdProfile, cert_outcome_distribution


@dataclass(frozen=True)
class MessageField:
    """Shared per-(market, profile) context: on-path messages in canonical
    order, their probabilities, and posterior records for every message."""

    market: MarketParams
    profile: ThresholdProfile
    messages: tuple[Message, ...]
    rhos: tuple[float, ...]
    records: dict[Message, PosteriorRecord]
    tol: float

    @classmethod
    def build(
        cls,
        market: MarketParams,
        profile: ThresholdProfile,
        policy: Optional[OffEqPolicy] = None,
        tol: float = DEFAULT_TOL,
    ) -> "MessageField":
        records = wtp_table(market, profile, policy)
        on_path = sorted(m for m, r in records.items() if r.on_path)
        return cls(
            market=market,
            profile=profile,
            messages=tuple(on_path),
            rhos=tuple(records[m].path_prob for m in on_path),
            records=records,
            tol=tol,
        )

    def wtp_of(self, message: Message) -> float:
        return self.records[message].wtp

    def profit_of_wtp(self, own_wtp: float) -> float:
        """Expected Bertrand prize of a message valued at own_wtp against the
        equilibrium field (ties within tol earn zero)."""
        total = 0.0
        for rho, m in zip(self.rhos, self.messages):
            gap = own_wtp - self.records[m].wtp
            if gap > self.tol:
                total += rho * gap
        return total

    def profit_of_message(self, message: Message) -> float:
        rec = self.records[message]
        if not rec.on_path:
            raise OffPathMessage(f"message {message} is off-path")
        return self.profit_of_wtp(rec.wtp)


def expected_profit_given_message(
    market: MarketParams,
    profile: ThresholdProfile,
    message: Message,
    tol: float = DEFAULT_TOL,
) -> float:
    """Expected profit of sending an on-path message against the field."""
    return MessageField.build(market, profile, tol=tol).profit_of_message(message)


def _type_profit(field: MessageField, type_index: int) -> float:
    """Equilibrium expected profit of one type under the profile."""
    market, profile = field.market, field.profile
    market.support.check_index(type_index)
    per_message = {m: field.profit_of_message(m) for m in field.messages}
    nd_value = per_message.get(ND, 0.0)
    if not profile.certifies(type_index):
        return nd_value
    dist = cert_outcome_distribution(market.support, market.alpha, type_index)
    total = -market.c
    for k in range(1, market.n + 1):
        p = dist[k - 1]
        if p == 0.0:
            continue
        if profile.discloses(k):
            total += p * per_message.get(disclosed(k), 0.0)
        else:
            total += p * nd_value
    return total


def expected_profit_of_type(
    market: MarketParams,
    profile: ThresholdProfile,
    type_index: int,
    tol: float = DEFAULT_TOL,
) -> float:
    """Expected profit of quality type type_index, net of the fee if it
    certifies under the profile."""
    return _type_profit(MessageField.build(market, profile, tol=tol), type_index)


def certify_probability(market: MarketParams, profile: ThresholdProfile) -> float:
    """Prior mass of types that certify under the profile."""
    if profile.cert_index is None:
        return 0.0
    return math.fsum(market.support.priors[profile.cert_index - 1 :])


def ex_ante_profit(
    market: MarketParams,
    profile: ThresholdProfile,
    tol: float = DEFAULT_TOL,
) -> tuple[float, float]:
    """(net, gross) ex-ante expected profit of one seller.

    Net weighs per-type profits by the prior; gross adds back the fee times
    the probability of certifying.
    """
    field = MessageField.build(market, profile, tol=tol)
    net = math.fsum(
        q * _type_profit(field, t)
        for t, q in enumerate(market.support.priors, start=1)
    )
    gross = net + market.c * certify_probability(market, profile)
    return net, gross


@dataclass(frozen=True)
class ProfitDecomposition:
    """Gross-profit split: ex_ante_gross == mean_gap_term + b * loss_gap_term
    whenever wtp_order_ok holds."""

    mean_gap_term: float
    loss_gap_term: float
    wtp_order_ok: bool


def joint_profit_decomposition(
    market: MarketParams,
    profile: ThresholdProfile,
    tol: float = DEFAULT_TOL,
) -> ProfitDecomposition:
    """Mean-gap and loss-gap terms over unordered on-path message pairs.

    The pair convention orders ND before disclosed outcomes; a WTP ordering
    violation along that sequence (which would break the identity with the
    directly computed profit) is reported via wtp_order_ok.
    """
    field = MessageField.build(market, profile, tol=tol)
    records = [field.records[m] for m in field.messages]
    k0 = 0.0
    k1 = 0.0
    for i, lo in enumerate(records):
        for hi in records[i + 1 :]:
            w = lo.path_prob * hi.path_prob
            k0 += w * (hi.mean - lo.mean)
            k1 += w * (hi.exp_loss - lo.exp_loss)
    running_max = -math.inf
    order_ok = True
    for rec in records:
        if rec.wtp < running_max - tol:
            order_ok = False
            break
        running_max = max(running_max, rec.wtp)
    return ProfitDecomposition(k0, k1, order_ok)


@dataclass(frozen=True)
class ProfitReport:
    """Everything the profit layer knows about one (market, profile)."""

    per_message: dict[Message, float]
    per_type: tuple[float, ...]
    ex_ante_net: float
    ex_ante_gross: float
    joint_gross: float
    mean_gap_term: float
    loss_gap_term: float
    wtp_order_ok: bool


def profit_report(
    market: MarketParams,
    profile: ThresholdProfile,
    tol: float = DEFAULT_TOL,
) -> ProfitReport:
    field = MessageField.build(market, profile, tol=tol)
    per_message = {m: field.profit_of_message(m) for m in field.messages}
    per_type = tuple(
        _type_profit(field, t) for t in range(1, market.n + 1)
    )
    net = math.fsum(q * p for q, p in zip(market.support.priors, per_type))
    gross = net + market.c * certify_probability(market, profile)
    deco = joint_profit_decomposition(market, profile, tol=tol)
    return ProfitReport(
        per_message=per_message,
        per_type=per_type,
        ex_ante_net=net,
        ex_ante_gross=gross,
        joint_gross=2.0 * gross,
        mean_gap_term=deco.mean_gap_term,
        loss_gap_term=deco.loss_gap_term,
        wtp_order_ok=deco.wtp_order_ok,
    )
