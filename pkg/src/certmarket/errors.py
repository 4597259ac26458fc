"""Exception hierarchy for certmarket.

Every error raised by the library derives from CertMarketError so callers
(and the CLI) can separate input problems from internal invariant failures.
"""

from __future__ import annotations


class CertMarketError(Exception):
    """Base class for all certmarket errors."""


class SpecError(CertMarketError):
    """Invalid user-supplied specification (market, profile, config)."""


class NonAscendingSupport(SpecError):
    """Quality levels are not strictly increasing and positive."""


class InvalidProbabilityVector(SpecError):
    """Prior vector has the wrong length, entries outside (0,1), or bad sum."""


class NegativeLossAversion(SpecError):
    """Loss-aversion coefficient b must be nonnegative."""


class NonPositiveCost(SpecError):
    """Certification fee c must be strictly positive."""


class PrecisionOutOfRange(SpecError):
    """Precision alpha must lie in [0, 1] (and equal 1 under Accurate)."""


class InvalidRange(SpecError):
    """Bad lo/hi bounds for a uniform support."""


class IndexOutOfRange(SpecError):
    """Type or outcome index outside 1..n."""


class InvalidProfile(SpecError):
    """Threshold profile inconsistent with itself or with the market."""


class OffPathMessage(CertMarketError):
    """Message has zero probability under the profile; use the off-path path."""


class OnPathMessage(CertMarketError):
    """Message has positive probability; off-path beliefs do not apply."""


class SupportTooLarge(SpecError):
    """Support size exceeds the enumeration bound."""


class NotTwoType(SpecError):
    """Operation is defined only for two-type markets."""


class AccurateInput(SpecError):
    """Operation compares against accurate certification; needs alpha < 1."""


class StepTooLarge(SpecError):
    """Finite-difference step outside (0, 0.05]."""


class ConditionNotMet(CertMarketError):
    """Precondition on the quality distribution fails (checker not applicable)."""


class ZeroSwitchPoint(SpecError):
    """Switching point of zero (or out of list range) cannot be inverted."""


class EmptyGrid(SpecError):
    """Sweep or treatment grid contains no cells."""


class ConfigError(SpecError):
    """Malformed run configuration (unknown keys, missing fields, bad types)."""


class InvariantViolation(CertMarketError):
    """An internal consistency check failed; indicates a bug, not bad input."""
