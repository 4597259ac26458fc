"""Bertrand pricing subgame for a pair of messages.

With unit-demand buyers and full market coverage, the seller whose message
commands the higher willingness to pay prices at the WTP gap and serves the
whole market; the rival prices at zero and sells nothing. Equal WTPs mean
marginal-cost pricing and zero profit for both.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .market import DEFAULT_TOL


class Winner(enum.Enum):
    I = "I"
    J = "J"
    TIE = "Tie"


@dataclass(frozen=True)
class SubgameResult:
    price_i: float
    price_j: float
    profit_i: float
    profit_j: float
    winner: Winner


_TIE = SubgameResult(0.0, 0.0, 0.0, 0.0, Winner.TIE)


def bertrand_subgame(wtp_i: float, wtp_j: float, tol: float = DEFAULT_TOL) -> SubgameResult:
    """Resolve the pricing subgame for WTPs (wtp_i, wtp_j).

    WTPs within tol of each other tie with all-zero prices and profits;
    otherwise the higher-WTP seller wins the whole market at a price equal
    to the gap.
    """
    if not (math.isfinite(wtp_i) and math.isfinite(wtp_j)):
        raise ValueError(f"WTPs must be finite, got ({wtp_i}, {wtp_j})")
    gap = wtp_i - wtp_j
    if abs(gap) <= tol:
        return _TIE
    if gap > 0:
        return SubgameResult(gap, 0.0, gap, 0.0, Winner.I)
    return SubgameResult(0.0, -gap, 0.0, -gap, Winner.J)
