"""Composite scalar potential, its electric field, and time envelopes.

The potential is V(x,t) = V1*S(x; w)*ramp(t) + V2*S(x+d; w_ctrl)*f(t) with
S the smoothed step S(x) = [1 + tanh(x/w)]/2.  V1 is the supercritical step
(> 2c^2 for pair creation), V2 the control amplitude placed a distance d to
the left with no spatial overlap; an opposite-direction static control is
expressed by a negative V2.  f(t) comes from a small envelope catalog:
constant, sinusoid sin(w t + phi0), a Gaussian-windowed sinusoid, and a pair
of signed Gaussians.  Envelope magnitudes never exceed 1.

The supercritical step default is a hard turn-on (ramp = 1), which leaves a
transient ring on the creation rate; an optional half-Gaussian ramp
suppresses it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .gridbasis import SpatialGrid

__all__ = [
    "Envelope",
    "ConstantEnvelope",
    "SinusoidEnvelope",
    "GaussSinEnvelope",
    "DoubleGaussEnvelope",
    "FieldSpec",
    "sauter",
    "envelope_value",
    "potential_at",
    "electric_field_at",
    "sample_potential",
    "sample_electric_field",
]


def sauter(x, w: float):
    """Smoothed step [1 + tanh(x/w)]/2 of width w; monotone, range (0, 1)."""
    if w <= 0.0:
        raise DomainError(f"step width must be positive, got {w!r}")
    return (0.5 * (1.0 + np.tanh(np.asarray(x, dtype=float) / w)))[()]


@dataclass(frozen=True)
class ConstantEnvelope:
    """Static control field; sign = +1 aligns with the supercritical step."""

    sign: float = 1.0

    def value(self, t):
        return self.sign * np.ones_like(np.asarray(t, dtype=float))[()]


@dataclass(frozen=True)
class SinusoidEnvelope:
    """sin(omega*t + phi0)."""

    omega: float
    phi0: float = 0.0

    def value(self, t):
        return np.sin(self.omega * np.asarray(t, dtype=float) + self.phi0)[()]


@dataclass(frozen=True)
class GaussSinEnvelope:
    """sign * exp(-(t-t0)^2/(2 sigma^2)) * sin(omega*t)."""

    t0: float
    sigma: float
    omega: float
    sign: float = -1.0

    def value(self, t):
        t = np.asarray(t, dtype=float)
        env = np.exp(-((t - self.t0) ** 2) / (2.0 * self.sigma**2))
        return (self.sign * env * np.sin(self.omega * t))[()]


@dataclass(frozen=True)
class DoubleGaussEnvelope:
    """sign1 * G(t - t1) + sign2 * G(t - t2), Gaussians of common width."""

    t1: float
    t2: float
    sigma: float
    sign1: float = -1.0
    sign2: float = -1.0

    def value(self, t):
        t = np.asarray(t, dtype=float)
        g1 = np.exp(-((t - self.t1) ** 2) / (2.0 * self.sigma**2))
        g2 = np.exp(-((t - self.t2) ** 2) / (2.0 * self.sigma**2))
        return (self.sign1 * g1 + self.sign2 * g2)[()]


Envelope = ConstantEnvelope | SinusoidEnvelope | GaussSinEnvelope | DoubleGaussEnvelope


def envelope_value(env: Envelope, t):
    """Evaluate an envelope at time(s) t."""
    return env.value(t)


@dataclass(frozen=True)
class FieldSpec:
    """Composite field: supercritical step V1 plus control step V2 at x=-d."""

    V1: float
    V2: float
    w: float
    d: float
    w_ctrl: float | None = None      # defaults to w; the width-study knob
    envelope: Envelope = field(default_factory=ConstantEnvelope)
    ramp_time: float | None = None   # None = hard turn-on

    def __post_init__(self) -> None:
        if self.w <= 0.0:
            raise DomainError(f"w must be positive, got {self.w!r}")
        if self.w_ctrl is not None and self.w_ctrl <= 0.0:
            raise DomainError(f"w_ctrl must be positive, got {self.w_ctrl!r}")
        if self.d <= 0.0:
            raise DomainError(f"separation d must be positive, got {self.d!r}")
        if self.ramp_time is not None and self.ramp_time <= 0.0:
            raise DomainError(f"ramp_time must be positive, got {self.ramp_time!r}")

    @property
    def control_width(self) -> float:
        return self.w if self.w_ctrl is None else self.w_ctrl

    def ramp(self, t):
        """Supercritical turn-on factor: 1, or a half-Gaussian rise."""
        if self.ramp_time is None:
            return np.ones_like(np.asarray(t, dtype=float))[()]
        t = np.asarray(t, dtype=float)
        sigma = self.ramp_time / 3.0
        rise = np.exp(-((t - self.ramp_time) ** 2) / (2.0 * sigma**2))
        return np.where(t >= self.ramp_time, 1.0, rise)[()]

    def resolution_report(self, grid: SpatialGrid) -> dict[str, float]:
        """Step widths in grid units; below 1 the profile is under-resolved."""
        return {
            "dx": grid.dx,
            "w_over_dx": self.w / grid.dx,
            "w_ctrl_over_dx": self.control_width / grid.dx,
            "d_over_dx": self.d / grid.dx,
        }


def potential_at(spec: FieldSpec, x, t):
    """V(x, t) = V1*S(x)*ramp(t) + V2*S(x+d)*f(t)."""
    x = np.asarray(x, dtype=float)
    main = spec.V1 * sauter(x, spec.w) * spec.ramp(t)
    ctrl = spec.V2 * sauter(x + spec.d, spec.control_width) * envelope_value(spec.envelope, t)
    return (main + ctrl)[()]


def electric_field_at(spec: FieldSpec, x, t):
    """Electric field -dV/dx: two sech^2 wells at the step centers."""
    x = np.asarray(x, dtype=float)
    sech1 = 1.0 / np.cosh(x / spec.w)
    sech2 = 1.0 / np.cosh((x + spec.d) / spec.control_width)
    main = -spec.V1 / (2.0 * spec.w) * sech1 * sech1 * spec.ramp(t)
    ctrl = (
        -spec.V2
        / (2.0 * spec.control_width)
        * sech2
        * sech2
        * envelope_value(spec.envelope, t)
    )
    return (main + ctrl)[()]


def sample_potential(spec: FieldSpec, grid: SpatialGrid, t: float) -> np.ndarray:
    """V(x_j, t) over the grid."""
    return potential_at(spec, grid.x, t)


def sample_electric_field(spec: FieldSpec, grid: SpatialGrid, t: float) -> np.ndarray:
    """E(x_j, t) over the grid."""
    return electric_field_at(spec, grid.x, t)
