"""Gaussian field pulses F(t) = B exp(-(t - tau)^2 / (4 rho^2))."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from pairwalk.errors import BadSpec

SQRT_PI = math.sqrt(math.pi)

# |t - tau| beyond this many widths is treated as exactly field-free.
# Discarded impulse fraction: erfc(5) ~ 1.5e-12.
CUTOFF_WIDTHS = 10.0


@dataclass(frozen=True)
class GaussianPulse:
    """A single Gaussian pulse.

    Parameters
    ----------
    amplitude : float
        Peak field B.
    width : float
        Duration parameter rho (> 0).
    center : float
        Peak time tau.
    """

    amplitude: float
    width: float
    center: float = 10.0

    def __post_init__(self):
        if not math.isfinite(self.width) or self.width <= 0:
            raise BadSpec(f"pulse width must be > 0, got {self.width}", "pulse.width")
        if not math.isfinite(self.amplitude):
            raise BadSpec("pulse amplitude must be finite", "pulse.amplitude")

    @classmethod
    def from_impulse(cls, impulse: float, width: float = 1.0, center: float = 10.0) -> "GaussianPulse":
        return cls(calibrate_amplitude(impulse, width), width, center)

    @property
    def impulse(self) -> float:
        """Integral of F over all time: 2 sqrt(pi) B rho."""
        return 2.0 * SQRT_PI * self.amplitude * self.width

    @property
    def support(self) -> tuple[float, float]:
        """Interval outside of which the field is treated as zero."""
        half = CUTOFF_WIDTHS * self.width
        return self.center - half, self.center + half

    @property
    def settled(self) -> float:
        """Earliest time at which drift velocities are measured (tau + 5 rho)."""
        return self.center + 5.0 * self.width

    def __call__(self, t):
        return field_at(self, t)


def field_at(pulse, t, truncate: bool = True):
    """Field value(s) at time(s) ``t``.

    ``pulse`` may be a :class:`GaussianPulse` or an iterable of them, in which
    case contributions add. With ``truncate`` the field is exactly zero for
    ``|t - tau| > 10 rho``.
    """
    if not isinstance(pulse, GaussianPulse):
        t_arr = np.asarray(t, dtype=np.float64)
        total = np.zeros_like(t_arr)
        for p in pulse:
            total = total + field_at(p, t_arr, truncate)
        return float(total) if total.ndim == 0 else total

    t_arr = np.asarray(t, dtype=np.float64)
    dt = t_arr - pulse.center
    values = pulse.amplitude * np.exp(-(dt * dt) / (4.0 * pulse.width**2))
    if truncate:
        values = np.where(np.abs(dt) > CUTOFF_WIDTHS * pulse.width, 0.0, values)
    return float(values) if values.ndim == 0 else values


def calibrate_amplitude(target_impulse: float, width: float) -> float:
    """Peak amplitude giving a pulse of the requested impulse: I / (2 sqrt(pi) rho)."""
    if not math.isfinite(width) or width <= 0:
        raise BadSpec(f"pulse width must be > 0, got {width}", "pulse.width")
    return target_impulse / (2.0 * SQRT_PI * width)


def truncation_error(pulse: GaussianPulse) -> float:
    """Impulse discarded by the 10-rho cutoff: I erfc(5)."""
    return abs(pulse.impulse) * math.erfc(CUTOFF_WIDTHS / 2.0)


def as_pulses(pulse) -> tuple[GaussianPulse, ...]:
    """Normalize ``None``, one pulse or an iterable of pulses to a tuple."""
    if pulse is None:
        return ()
    if isinstance(pulse, GaussianPulse):
        return (pulse,)
    return tuple(pulse)


def peak_amplitude(pulses: Sequence[GaussianPulse]) -> float:
    """Upper bound on |F(t)| for additive pulses."""
    return float(sum(abs(p.amplitude) for p in pulses))


def total_impulse(pulses: Iterable[GaussianPulse]) -> float:
    return float(sum(p.impulse for p in pulses))
