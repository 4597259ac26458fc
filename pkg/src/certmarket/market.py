"""Domain types and the certification-outcome distribution.

A market is a discrete quality support with a prior, a loss-aversion
coefficient b, a certification fee c, a precision alpha, and an environment
kind. The certification technology reports the true quality with probability
alpha and otherwise draws a fresh outcome from the prior, so the outcome
distribution conditional on type v_i is

    Pr(s = v_i | v_i) = alpha + (1 - alpha) * q_i
    Pr(s = v_j | v_i) = (1 - alpha) * q_j          (j != i)

All types are immutable after validation and all functions are pure.
Indices into the support are 1-based throughout the package.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .errors import (
    IndexOutOfRange,
    InvalidProfile,
    InvalidProbabilityVector,
    InvalidRange,
    NegativeLossAversion,
    NonAscendingSupport,
    NonPositiveCost,
    PrecisionOutOfRange,
)

#: Absolute tolerance for accepting a prior vector whose entries were rounded
#: in a text config; accepted vectors are renormalized to sum to 1 exactly.
PRIOR_SUM_TOL = 1e-9

#: Default absolute tolerance for equality checks on probabilities and values.
DEFAULT_TOL = 1e-9


class Env(enum.Enum):
    """Certification environment kind."""

    NO_CERT = "NoCert"
    ACCURATE = "Accurate"
    NOISY = "Noisy"


@dataclass(frozen=True)
class QualitySupport:
    """Ordered quality levels with their prior probabilities.

    values: strictly ascending positive quality levels v_1 < ... < v_n.
    priors: probability vector of the same length, entries in (0, 1],
        summing to 1 (renormalized exactly at construction).
    """

    values: tuple[float, ...]
    priors: tuple[float, ...]

    def __post_init__(self) -> None:
        values = tuple(float(v) for v in self.values)
        priors = tuple(float(q) for q in self.priors)
        if len(values) == 0:
            raise NonAscendingSupport("support must contain at least one level")
        if values[0] <= 0.0 or any(
            not math.isfinite(v) for v in values
        ) or any(b <= a for a, b in zip(values, values[1:])):
            raise NonAscendingSupport(
                f"quality levels must be finite, positive, strictly ascending: {values}"
            )
        if len(priors) != len(values):
            raise InvalidProbabilityVector(
                f"{len(priors)} priors for {len(values)} levels"
            )
        if any(not (0.0 < q <= 1.0) for q in priors):
            raise InvalidProbabilityVector(f"prior entries must lie in (0,1]: {priors}")
        total = math.fsum(priors)
        if abs(total - 1.0) > PRIOR_SUM_TOL:
            raise InvalidProbabilityVector(f"priors sum to {total!r}, not 1")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "priors", tuple(q / total for q in priors))

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def mean(self) -> float:
        """Prior mean quality."""
        return math.fsum(q * v for q, v in zip(self.priors, self.values))

    def check_index(self, index: int) -> int:
        """Validate a 1-based type/outcome index and return it."""
        if not 1 <= index <= self.n:
            raise IndexOutOfRange(f"index {index} outside 1..{self.n}")
        return index


def uniform_support(lo: int, hi: int) -> QualitySupport:
    """Discrete uniform support on the integers lo..hi (both positive)."""
    if lo <= 0 or lo > hi:
        raise InvalidRange(f"need 0 < lo <= hi, got lo={lo}, hi={hi}")
    count = hi - lo + 1
    return QualitySupport(
        values=tuple(float(v) for v in range(lo, hi + 1)),
        priors=(1.0 / count,) * count,
    )


@dataclass(frozen=True)
class MarketParams:
    """Validated market: support plus (b, c, alpha, env)."""

    support: QualitySupport
    b: float
    c: float
    alpha: float
    env: Env = Env.NOISY

    def __post_init__(self) -> None:
        if self.b < 0 or not math.isfinite(self.b):
            raise NegativeLossAversion(f"b must be >= 0, got {self.b}")
        if self.c <= 0 or not math.isfinite(self.c):
            raise NonPositiveCost(f"c must be > 0, got {self.c}")
        if not 0.0 <= self.alpha <= 1.0:
            raise PrecisionOutOfRange(f"alpha must lie in [0,1], got {self.alpha}")
        if self.env is Env.ACCURATE and self.alpha != 1.0:
            raise PrecisionOutOfRange(
                f"env=Accurate forces alpha=1, got alpha={self.alpha}"
            )

    @property
    def n(self) -> int:
        return self.support.n

    def with_alpha(self, alpha: float, env: Optional[Env] = None) -> "MarketParams":
        """Copy of this market at a different precision (env defaults to Noisy
        unless the new alpha keeps the current env legal)."""
        if env is None:
            env = self.env
            if env is Env.ACCURATE and alpha != 1.0:
                env = Env.NOISY
        return MarketParams(self.support, self.b, self.c, alpha, env)

    def with_b(self, b: float) -> "MarketParams":
        return MarketParams(self.support, b, self.c, self.alpha, self.env)

    def with_c(self, c: float) -> "MarketParams":
        return MarketParams(self.support, self.b, c, self.alpha, self.env)


def validate_market(
    values: Sequence[float],
    priors: Sequence[float],
    b: float,
    c: float,
    alpha: float,
    env: Env | str = Env.NOISY,
) -> MarketParams:
    """Build a validated MarketParams from raw components.

    Priors summing to 1 within 1e-9 are accepted and renormalized exactly.
    """
    if isinstance(env, str):
        try:
            env = Env(env)
        except ValueError:
            raise InvalidProfile(f"unknown env {env!r}") from None
    support = QualitySupport(tuple(values), tuple(priors))
    return MarketParams(support=support, b=b, c=c, alpha=alpha, env=env)


@dataclass(frozen=True)
class ThresholdProfile:
    """Certification/disclosure thresholds, both 1-based indices.

    Types with index >= cert_index certify; outcomes with index >= disclose_index
    are disclosed. An absent cert_index means nobody certifies (and then
    disclose_index must be absent too). An absent disclose_index with
    certification present means no outcome is ever disclosed.
    """

    cert_index: Optional[int] = None
    disclose_index: Optional[int] = field(default=None)

    def __post_init__(self) -> None:
        if self.cert_index is None and self.disclose_index is not None:
            raise InvalidProfile("disclose_index given without cert_index")
        for idx in (self.cert_index, self.disclose_index):
            if idx is not None and (not isinstance(idx, int) or idx < 1):
                raise InvalidProfile(f"threshold index must be a positive int: {idx}")

    @property
    def is_empty(self) -> bool:
        return self.cert_index is None

    def check_against(self, market: MarketParams) -> None:
        """Validate the profile against a market's size and environment."""
        n = market.n
        if self.cert_index is not None and not 1 <= self.cert_index <= n:
            raise InvalidProfile(f"cert_index {self.cert_index} outside 1..{n}")
        if self.disclose_index is not None and not 1 <= self.disclose_index <= n:
            raise InvalidProfile(f"disclose_index {self.disclose_index} outside 1..{n}")
        if market.env is Env.NO_CERT and not self.is_empty:
            raise InvalidProfile("certification profile in a NoCert environment")

    def certifies(self, type_index: int) -> bool:
        return self.cert_index is not None and type_index >= self.cert_index

    def discloses(self, outcome_index: int) -> bool:
        return self.disclose_index is not None and outcome_index >= self.disclose_index


EMPTY_PROFILE = ThresholdProfile()


def cert_outcome_distribution(
    support: QualitySupport, alpha: float, true_index: int
) -> tuple[float, ...]:
    """Distribution of the certification outcome for a given true type.

    With probability alpha the outcome equals the true level; otherwise it is
    a fresh draw from the prior. The returned vector is indexed like the
    support (entry i-1 is Pr(s = v_i)) and sums to 1.
    """
    if not 0.0 <= alpha <= 1.0:
        raise PrecisionOutOfRange(f"alpha must lie in [0,1], got {alpha}")
    support.check_index(true_index)
    miss = 1.0 - alpha
    probs = [miss * q for q in support.priors]
    probs[true_index - 1] += alpha
    return tuple(probs)


def canonical_two_type_market(
    b: float = 1.0, c: float = 0.5, alpha: float = 0.5
) -> MarketParams:
    """The two-type benchmark market used throughout the tests and the CLI
    curve command: levels (1, 3) with prior (1/3, 2/3)."""
    env = Env.ACCURATE if alpha == 1.0 else Env.NOISY
    return MarketParams(
        support=QualitySupport((1.0, 3.0), (1.0 / 3.0, 2.0 / 3.0)),
        b=b,
        c=c,
        alpha=alpha,
        env=env,
    )
