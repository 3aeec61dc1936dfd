"""Predictive link-budget analysis: expected QBERs and rate as the gain shrinks.

Given source intensities, an intrinsic channel QBER and a dark yield, the
expected signal/decoy error rates at a hypothetical signal gain ``Q_mu`` are

    E* = 0.5 * w + E_ch * (1 - w),   w = min(1, Y0 / Q)

with the decoy gain tied to the signal gain by ``Q_nu = (nu/mu) Q_mu``.
Feeding these into the decoy key-rate bounds yields the rate-versus-gain
curve and the smallest gain that still produces a positive rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

from .errors import DomainError, ThresholdUndefinedError, ValidationError
from .keyrate import DecoyObservables, ECModel, KeyRateBreakdown, secret_key_rate

_SCAN_FLOOR = 1e-7
_SCAN_RATIO = 10.0
_BISECTIONS = 100


@dataclass(frozen=True)
class LinkBudgetParams:
    """Inputs of the gain sweep; ``y0`` defaults to ``dark_rate * gate``."""

    mu: float = 0.623
    nu: float = 0.165
    e_ch: float = 0.02
    f: float = 1.05
    dark_rate: float = 100.0
    gate: float = 50e-9
    y0: Optional[float] = None

    def __post_init__(self) -> None:
        if not (self.mu > self.nu > 0.0):
            raise ValidationError(f"need mu > nu > 0, got mu={self.mu}, nu={self.nu}")
        if not 0.0 <= self.e_ch <= 0.5:
            raise ValidationError(f"channel QBER must lie in [0, 0.5], got {self.e_ch}")
        if self.f < 1.0:
            raise ValidationError(f"error-correction efficiency must be >= 1, got {self.f}")
        if self.dark_rate < 0.0 or self.gate < 0.0:
            raise ValidationError("dark rate and gate duration must be non-negative")
        if self.y0 is None:
            object.__setattr__(self, "y0", dark_yield(self.dark_rate, self.gate))
        elif self.y0 < 0.0:
            raise ValidationError(f"y0 must be non-negative, got {self.y0}")

    @property
    def ec_model(self) -> ECModel:
        return ECModel(f=self.f)


def dark_yield(dark_rate: float, gate: float) -> float:
    """Dark/background detection probability per pulse: rate times gate length."""
    if dark_rate < 0.0 or gate < 0.0:
        raise DomainError("dark rate and gate duration must be non-negative")
    return dark_rate * gate


class PredictedQbers(NamedTuple):
    e_mu_star: float
    e_nu_star: float


def predicted_qbers(q_mu: float, p: LinkBudgetParams) -> PredictedQbers:
    """Expected signal/decoy QBERs at signal gain ``q_mu``.

    The dark fraction ``Y0/Q`` is clamped at 1, so each QBER interpolates
    between ``e_ch`` (gain far above the dark floor) and 0.5 (dark-dominated,
    ``q_mu <= y0``).
    """
    if q_mu <= 0.0:
        raise DomainError(f"signal gain must be positive, got {q_mu}")
    q_nu = (p.nu / p.mu) * q_mu

    def starred(q: float) -> float:
        w = min(1.0, p.y0 / q)
        return 0.5 * w + p.e_ch * (1.0 - w)

    return PredictedQbers(starred(q_mu), starred(q_nu))


class RatePoint(NamedTuple):
    """One point of the rate-versus-gain curve."""

    q_mu: float
    e_mu_star: float
    e_nu_star: float
    breakdown: KeyRateBreakdown


def _rate_point(q_mu: float, p: LinkBudgetParams) -> RatePoint:
    stars = predicted_qbers(q_mu, p)
    obs = DecoyObservables(
        mu=p.mu,
        nu=p.nu,
        q_mu=q_mu,
        e_mu=stars.e_mu_star,
        q_nu=(p.nu / p.mu) * q_mu,
        e_nu=stars.e_nu_star,
        y0=p.y0,
    )
    return RatePoint(q_mu, stars.e_mu_star, stars.e_nu_star, secret_key_rate(obs, p.ec_model))


def rate_vs_gain(q_mu_grid: Sequence[float], p: LinkBudgetParams) -> list[RatePoint]:
    """Evaluate the expected key rate at every gain in ``q_mu_grid``."""
    grid = [float(q) for q in q_mu_grid]
    if not grid:
        raise ValidationError("gain grid is empty")
    if any(q <= 0.0 for q in grid):
        raise ValidationError("gain grid values must be positive")
    return [_rate_point(q, p) for q in grid]


def gain_threshold(p: LinkBudgetParams) -> float:
    """Smallest signal gain with a positive expected key rate.

    Scans gains downward from 1 by factors of 10 until the rate turns
    non-positive, then bisects the bracketing decade.  The scan descends so
    that it brackets the physically meaningful (uppermost) zero crossing; at
    gains below the dark floor the vacuum term inflates the formula rate
    spuriously.
    """

    def rate_at(q: float) -> float:
        return _rate_point(q, p).breakdown.rate

    hi = 1.0
    if rate_at(hi) <= 0.0:
        raise ThresholdUndefinedError("rate is non-positive over the whole scanned range")
    lo = hi / _SCAN_RATIO
    while rate_at(lo) > 0.0:
        hi = lo
        lo /= _SCAN_RATIO
        if lo < _SCAN_FLOOR:
            raise ThresholdUndefinedError(
                f"rate stays positive down to gain {hi}; no threshold above {_SCAN_FLOOR}"
            )
    for _ in range(_BISECTIONS):
        mid = 0.5 * (lo + hi)
        if rate_at(mid) > 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def loss_margin_db(measured_gain: float, g_star: float) -> float:
    """Extra channel loss (dB) tolerable before the gain hits the threshold."""
    if measured_gain <= 0.0 or g_star <= 0.0:
        raise DomainError("gains must be positive to compute a loss margin")
    return 10.0 * math.log10(measured_gain / g_star)
