"""Closed-form vacuum+weak decoy-state analysis in the infinite-key limit.

Given the measured gains and error rates of the signal and decoy intensity
classes plus the vacuum yield, these routines bound the single-photon gain
from below and the single-photon error rate from above, model the
error-correction leakage as ``f * h2(E)``, and assemble the secret key rate
in secret bits per sifted bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .errors import BoundUndefinedError, DomainError, ValidationError


@dataclass(frozen=True)
class DecoyObservables:
    """Per-session decoy observables: intensities, gains, QBERs, vacuum yield.

    ``q_mu``/``q_nu`` are detections per sent pulse of each class, ``e_mu``/
    ``e_nu`` are errors per sifted bit of each class, ``y0`` is the detection
    probability of an empty pulse.
    """

    mu: float
    nu: float
    q_mu: float
    e_mu: float
    q_nu: float
    e_nu: float
    y0: float

    def __post_init__(self) -> None:
        if not (self.mu > self.nu > 0.0):
            raise ValidationError(f"need mu > nu > 0, got mu={self.mu}, nu={self.nu}")
        for name, gain in (("q_mu", self.q_mu), ("q_nu", self.q_nu)):
            if not 0.0 < gain <= 1.0:
                raise ValidationError(f"{name} must lie in (0, 1], got {gain}")
        for name, qber in (("e_mu", self.e_mu), ("e_nu", self.e_nu)):
            if not 0.0 <= qber <= 1.0:
                raise ValidationError(f"{name} must lie in [0, 1], got {qber}")
        if self.y0 < 0.0:
            raise ValidationError(f"y0 must be non-negative, got {self.y0}")


@dataclass(frozen=True)
class ECModel:
    """Error-correction model: leakage ``f * h2(E)`` and vacuum error rate ``e0``."""

    f: float = 1.05
    e0: float = 0.5

    def __post_init__(self) -> None:
        if self.f < 1.0:
            raise ValidationError(f"error-correction efficiency f must be >= 1, got {self.f}")
        if not 0.0 <= self.e0 <= 1.0:
            raise ValidationError(f"vacuum error rate e0 must lie in [0, 1], got {self.e0}")


class Bounded(NamedTuple):
    """A bound value plus whether it had to be clamped into its valid range."""

    value: float
    clamped: bool


@dataclass(frozen=True)
class KeyRateBreakdown:
    """All terms entering the decoy secret key rate, plus the rate itself.

    ``rate`` is reported as computed, negative values included; ``secure`` is
    simply ``rate > 0``.
    """

    q1_lower: float
    e1_upper: float
    q0: float
    leak_ec: float
    rate: float
    q1_clamped: bool
    e1_clamped: bool
    secure: bool


def binary_entropy(x: float) -> float:
    """Binary entropy h2(x) in bits, with h2(0) = h2(1) = 0 by continuity."""
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"binary entropy argument must lie in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def q1_lower(obs: DecoyObservables) -> Bounded:
    """Lower bound on the single-photon gain of the signal class.

    Evaluates
    ``mu^2 e^-mu / (mu nu - nu^2) * (Q_nu e^nu - Q_mu e^mu nu^2/mu^2
    - (mu^2 - nu^2)/mu^2 * Y0)``
    and clamps negative results (possible under statistical fluctuation of the
    inputs) to zero with ``clamped=True``.
    """
    mu, nu = obs.mu, obs.nu
    denom = mu * nu - nu * nu
    if denom <= 0.0:
        raise DomainError(f"decoy bound needs mu > nu, got mu={mu}, nu={nu}")
    bracket = (
        obs.q_nu * math.exp(nu)
        - obs.q_mu * math.exp(mu) * nu * nu / (mu * mu)
        - (mu * mu - nu * nu) / (mu * mu) * obs.y0
    )
    value = mu * mu * math.exp(-mu) / denom * bracket
    if value < 0.0:
        return Bounded(0.0, True)
    return Bounded(value, False)


def e1_upper(obs: DecoyObservables, q1l: float, ec: ECModel = ECModel()) -> Bounded:
    """Upper bound on the single-photon error rate, given a positive gain bound.

    Evaluates ``(E_nu Q_nu e^nu - e0 Y0) / (Q1_L (nu/mu) e^mu)`` and clamps
    the result into [0, 1] with ``clamped=True`` when it falls outside.
    """
    if q1l <= 0.0:
        raise BoundUndefinedError("single-photon error bound undefined for zero gain bound")
    numerator = obs.e_nu * obs.q_nu * math.exp(obs.nu) - ec.e0 * obs.y0
    value = numerator / (q1l * (obs.nu / obs.mu) * math.exp(obs.mu))
    if value < 0.0:
        return Bounded(0.0, True)
    if value > 1.0:
        return Bounded(1.0, True)
    return Bounded(value, False)


def q0_gain(obs: DecoyObservables) -> float:
    """Vacuum contribution to the signal-class gain, ``e^-mu * Y0``."""
    return math.exp(-obs.mu) * obs.y0


def secret_key_rate(obs: DecoyObservables, ec: ECModel = ECModel()) -> KeyRateBreakdown:
    """Assemble the decoy secret key rate in secret bits per sifted bit.

    ``rate = Q1_L/Q_mu * (1 - h2(e1_U)) - f*h2(E_mu) + Q0/Q_mu``.  When the
    gain bound clamps to zero the single-photon term vanishes and the error
    bound is pinned, flagged, at its pessimistic extreme.  An error bound at
    or beyond 1/2 certifies nothing, so the amplification factor is floored
    at zero there instead of letting ``1 - h2`` grow again.
    """
    q1 = q1_lower(obs)
    q0 = q0_gain(obs)
    leak = ec.f * binary_entropy(obs.e_mu)
    if q1.value > 0.0:
        e1 = e1_upper(obs, q1.value, ec)
        amplified = 1.0 - binary_entropy(min(e1.value, 0.5))
    else:
        e1 = Bounded(1.0, True)
        amplified = 0.0
    rate = q1.value / obs.q_mu * amplified - leak + q0 / obs.q_mu
    return KeyRateBreakdown(
        q1_lower=q1.value,
        e1_upper=e1.value,
        q0=q0,
        leak_ec=leak,
        rate=rate,
        q1_clamped=q1.clamped,
        e1_clamped=e1.clamped,
        secure=rate > 0.0,
    )


def single_photon_rate(e_mu: float, ec: ECModel = ECModel()) -> float:
    """Key rate achievable at QBER ``e_mu`` with an ideal single-photon source."""
    if not 0.0 <= e_mu <= 1.0:
        raise DomainError(f"QBER must lie in [0, 1], got {e_mu}")
    return 1.0 - binary_entropy(e_mu) - ec.f * binary_entropy(e_mu)


def qber_threshold(ec_f: float) -> float:
    """Largest QBER with a positive single-photon key rate, by bisection.

    Solves ``1 - h2(E) - ec_f * h2(E) = 0`` for ``E`` in (0, 0.5); the
    returned bracket midpoint is converged far below 1e-6.
    """
    if ec_f < 1.0:
        raise DomainError(f"error-correction efficiency must be >= 1, got {ec_f}")

    def excess(e: float) -> float:
        return 1.0 - (1.0 + ec_f) * binary_entropy(e)

    lo, hi = 1e-15, 0.5
    for _ in range(64):
        mid = 0.5 * (lo + hi)
        if excess(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
