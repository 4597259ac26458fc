"""Message spaces, Bayesian posteriors, expected loss, and willingness to pay.

Given a market and a threshold profile, each seller emits one message per
round: either a disclosed certification outcome or non-disclosure (ND).
Outcomes below the disclosure threshold are always mapped to ND before any
belief computation. Posteriors for on-path messages follow Bayes' rule on the
joint (type, message) distribution; off-path messages are resolved by an
explicit policy.

Buyers' willingness to pay for a product carrying message s is

    wtp = E(v | s) + b * EL(s),    EL(s) = E[min(v - E(v|s), 0) | s] <= 0,

so a point-mass posterior pays the level itself and any residual uncertainty
is discounted in proportion to the loss-aversion coefficient b.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import IndexOutOfRange, OffPathMessage, OnPathMessage
from .market import Env, MarketParams, ThresholdProfile, cert_outcome_distribution

#: Messages with probability below this are treated as off-path to avoid
#: dividing by numerically-zero branch weights.
ON_PATH_RHO = 1e-15


@dataclass(frozen=True, order=True)
class Message:
    """A disclosed outcome (1-based index) or non-disclosure (outcome=None).

    Ordering sorts ND first, then disclosed outcomes ascending, which is the
    canonical message order used by the profit decomposition.
    """

    sort_key: int
    outcome: Optional[int]

    def __init__(self, outcome: Optional[int] = None):
        object.__setattr__(self, "outcome", outcome)
        object.__setattr__(self, "sort_key", 0 if outcome is None else outcome)

    @property
    def is_nd(self) -> bool:
        return self.outcome is None

    def __repr__(self) -> str:
        return "ND" if self.outcome is None else f"s{self.outcome}"


ND = Message()


def disclosed(outcome: int) -> Message:
    return Message(outcome)


class OffEqPolicy(enum.Enum):
    """How buyers interpret a message that never occurs on path."""

    POINT_MASS_AT_OUTCOME = "pointmass"
    BAYES_GIVEN_CERT_SET = "bayes"
    WORST_TYPE = "worst"


def default_off_eq_policy(env: Env) -> OffEqPolicy:
    """Point mass at the disclosed level.

    Mandatory under Accurate; used as the default under Noisy as well because
    it is the only shipped policy under which the canonical two-type threshold
    equilibria survive their suppressed-outcome checks.
    """
    return OffEqPolicy.POINT_MASS_AT_OUTCOME


@dataclass(frozen=True)
class PosteriorRecord:
    """Posterior over types after one message, with its derived quantities."""

    message: Message
    probs: tuple[float, ...]
    mean: float
    exp_loss: float
    wtp: float
    on_path: bool
    path_prob: float


def expected_loss(values: Sequence[float], probs: Sequence[float], mean: float) -> float:
    """Expected downside of a posterior relative to its own mean (<= 0)."""
    return math.fsum(p * (v - mean) for p, v in zip(probs, values) if v < mean)


def wtp(mean: float, exp_loss: float, b: float) -> float:
    """Willingness to pay: posterior mean plus b times the expected loss."""
    return mean + b * exp_loss


def joint_type_message(
    market: MarketParams, profile: ThresholdProfile
) -> dict[Message, list[float]]:
    """Joint probabilities Pr(type = v_t, message = m) for one seller.

    Keys are every message with positive probability plus ND (ND is always
    present, possibly with weight zero). Each value is a length-n list.
    """
    profile.check_against(market)
    n = market.n
    priors = market.support.priors
    joint: dict[Message, list[float]] = {ND: [0.0] * n}
    for t in range(1, n + 1):
        q_t = priors[t - 1]
        if not profile.certifies(t):
            joint[ND][t - 1] += q_t
            continue
        dist = cert_outcome_distribution(market.support, market.alpha, t)
        for k in range(1, n + 1):
            p = q_t * dist[k - 1]
            if p == 0.0:
                continue
            if profile.discloses(k):
                row = joint.setdefault(disclosed(k), [0.0] * n)
                row[t - 1] += p
            else:
                joint[ND][t - 1] += p
    return joint


def message_probabilities(
    market: MarketParams, profile: ThresholdProfile
) -> dict[Message, float]:
    """Unconditional probability of each on-path message (sums to 1)."""
    joint = joint_type_message(market, profile)
    rho = {m: math.fsum(row) for m, row in joint.items()}
    return {m: p for m, p in sorted(rho.items()) if p > ON_PATH_RHO}


def message_space(market: MarketParams, profile: ThresholdProfile) -> list[Message]:
    """On-path messages: ND first when it can occur, then outcomes ascending."""
    rho = message_probabilities(market, profile)
    return [m for m in sorted(rho) if rho[m] > ON_PATH_RHO]


def posterior(
    market: MarketParams, profile: ThresholdProfile, message: Message
) -> PosteriorRecord:
    """Bayesian posterior for an on-path message.

    Raises OffPathMessage when the message has (numerically) zero probability;
    route those through off_equilibrium_posterior instead.
    """
    joint = joint_type_message(market, profile)
    row = joint.get(message)
    rho = math.fsum(row) if row is not None else 0.0
    if row is None or rho <= ON_PATH_RHO:
        raise OffPathMessage(f"message {message} has probability {rho}")
    probs = tuple(p / rho for p in row)
    return _record(market, message, probs, on_path=True, path_prob=rho)


def _record(
    market: MarketParams,
    message: Message,
    probs: tuple[float, ...],
    on_path: bool,
    path_prob: float,
) -> PosteriorRecord:
    values = market.support.values
    mean = math.fsum(p * v for p, v in zip(probs, values))
    el = expected_loss(values, probs, mean)
    return PosteriorRecord(
        message=message,
        probs=probs,
        mean=mean,
        exp_loss=el,
        wtp=wtp(mean, el, market.b),
        on_path=on_path,
        path_prob=path_prob,
    )


def off_equilibrium_posterior(
    market: MarketParams,
    profile: ThresholdProfile,
    message: Message,
    policy: OffEqPolicy,
) -> PosteriorRecord:
    """Posterior for a message that cannot occur under (market, profile).

    Off-path ND carries the prior under every policy. For an off-path
    disclosed outcome:

    - POINT_MASS_AT_OUTCOME: buyers take the disclosed level at face value.
    - BAYES_GIVEN_CERT_SET: Bayes over certifying types via the noise
      technology, ignoring the disclosure threshold (falls back to point mass
      when nobody certifies, since the conditioning set is empty).
    - WORST_TYPE: mass one on the lowest level.
    """
    joint = joint_type_message(market, profile)
    row = joint.get(message)
    if row is not None and math.fsum(row) > ON_PATH_RHO:
        raise OnPathMessage(f"message {message} is on-path")
    n = market.n
    if message.is_nd:
        probs = market.support.priors
        return _record(market, message, probs, on_path=False, path_prob=0.0)
    k = message.outcome
    if not 1 <= k <= n:
        raise IndexOutOfRange(f"outcome {k} outside 1..{n}")
    if policy is OffEqPolicy.WORST_TYPE:
        probs = tuple(1.0 if t == 1 else 0.0 for t in range(1, n + 1))
    elif policy is OffEqPolicy.BAYES_GIVEN_CERT_SET and profile.cert_index is not None:
        weights = [0.0] * n
        for t in range(profile.cert_index, n + 1):
            dist = cert_outcome_distribution(market.support, market.alpha, t)
            weights[t - 1] = market.support.priors[t - 1] * dist[k - 1]
        total = math.fsum(weights)
        if total <= 0.0:
            probs = tuple(1.0 if t == k else 0.0 for t in range(1, n + 1))
        else:
            probs = tuple(w / total for w in weights)
    else:
        probs = tuple(1.0 if t == k else 0.0 for t in range(1, n + 1))
    return _record(market, message, probs, on_path=False, path_prob=0.0)


def wtp_table(
    market: MarketParams,
    profile: ThresholdProfile,
    policy: Optional[OffEqPolicy] = None,
) -> dict[Message, PosteriorRecord]:
    """PosteriorRecord for ND and every disclosable outcome message.

    On-path messages get Bayesian records; everything else is filled in via
    the off-path policy (default per the market's environment). The table is
    the shared read-only memo used by the profit, equilibrium, and simulation
    layers.
    """
    if policy is None:
        policy = default_off_eq_policy(market.env)
    if market.env is Env.ACCURATE:
        policy = OffEqPolicy.POINT_MASS_AT_OUTCOME
    joint = joint_type_message(market, profile)
    table: dict[Message, PosteriorRecord] = {}
    for message in [ND] + [disclosed(k) for k in range(1, market.n + 1)]:
        row = joint.get(message)
        rho = math.fsum(row) if row is not None else 0.0
        if row is not None and rho > ON_PATH_RHO:
            probs = tuple(p / rho for p in row)
            table[message] = _record(market, message, probs, True, rho)
        else:
            table[message] = off_equilibrium_posterior(market, profile, message, policy)
    return table
