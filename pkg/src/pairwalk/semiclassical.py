"""Band-structure predictions for the driven pair and the (gamma, beta) fit.

Conventions: a = hbar = e = 1, so a pulse of impulse I shifts every
single-particle wavevector by I and the centre-of-mass wavevector k of
``f = exp(ik(n1 + n2)) chi(n1 - n2)`` by I as well. Starting from rest,
k = I.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from pairwalk.errors import BadSpec, DegenerateFit, UnfittedModel

TWO_PI = 2.0 * math.pi


def momentum_after_pulse(k0, impulse):
    """k0 + I reduced to the zone (-pi, pi]."""
    k = np.asarray(k0, dtype=np.float64) + np.asarray(impulse, dtype=np.float64)
    out = math.pi - np.mod(math.pi - k, TWO_PI)
    return float(out) if out.ndim == 0 else out


def free_energy(k, z=0.0, hopping: float = 1.0):
    """Unbound pair energy 4 J cos(k) cos(z)."""
    return 4.0 * hopping * np.cos(k) * np.cos(z)


def bound_energy(k, interaction: float, hopping: float = 1.0):
    """Bound-pair energy sqrt(U^2 + 16 J^2 cos^2 k)."""
    return np.sqrt(interaction**2 + 16.0 * hopping**2 * np.cos(k) ** 2)


def free_group_velocity(k, z=0.0, hopping: float = 1.0):
    """dE/dk of the unbound band."""
    return -4.0 * hopping * np.sin(k) * np.cos(z)


def bound_group_velocity(k, interaction: float, hopping: float = 1.0):
    """dE/dk of the bound band."""
    c = np.cos(k)
    return -16.0 * hopping**2 * np.sin(k) * c / np.sqrt(interaction**2 + 16.0 * hopping**2 * c**2)


@dataclass(frozen=True)
class DispersionModel:
    """Drift velocity v(k) = gamma sin k cos k / sqrt(U^2 + 16 J^2 cos^2 k) - beta sin k cos z.

    ``gamma`` and ``beta`` are fit constants; the diagnostic fields are filled
    by :func:`fit_gamma_beta`.
    """

    hopping: float = 1.0
    interaction: float = 0.0
    gamma: float | None = None
    beta: float | None = None
    relative_momentum: float = 0.0
    r_squared: float | None = None
    residual_rms: float | None = None
    n_points: int = 0

    @property
    def fitted(self) -> bool:
        return self.gamma is not None and self.beta is not None

    @property
    def bound_band_edges(self) -> tuple[float, float]:
        return self.interaction, math.sqrt(self.interaction**2 + 16.0 * self.hopping**2)

    @property
    def free_band_edges(self) -> tuple[float, float]:
        return -4.0 * abs(self.hopping), 4.0 * abs(self.hopping)

    def basis(self, k) -> np.ndarray:
        """Columns multiplying (gamma, beta)."""
        k = np.asarray(k, dtype=np.float64)
        s, c = np.sin(k), np.cos(k)
        bound = s * c / np.sqrt(self.interaction**2 + 16.0 * self.hopping**2 * c**2)
        free = -s * math.cos(self.relative_momentum)
        return np.stack([bound, free], axis=-1)

    def to_dict(self) -> dict:
        return {
            "hopping": self.hopping,
            "interaction": self.interaction,
            "gamma": self.gamma,
            "beta": self.beta,
            "relative_momentum": self.relative_momentum,
            "r_squared": self.r_squared,
            "residual_rms": self.residual_rms,
            "n_points": self.n_points,
        }


def predicted_velocity(model: DispersionModel, k):
    """Evaluate the drift velocity of ``model`` at centre-of-mass momentum ``k``."""
    if not model.fitted:
        raise UnfittedModel("gamma and beta are not set; fit or supply them first")
    b = model.basis(k)
    out = model.gamma * b[..., 0] + model.beta * b[..., 1]
    return float(out) if np.ndim(out) == 0 else out


def r_squared(observed, predicted) -> float:
    y = np.asarray(observed, dtype=np.float64)
    resid = y - np.asarray(predicted, dtype=np.float64)
    ss_tot = np.sum((y - y.mean()) ** 2)
    if ss_tot == 0:
        return 1.0 if np.allclose(resid, 0) else -math.inf
    return float(1.0 - np.sum(resid**2) / ss_tot)


def _unpack(data):
    impulses, velocities, residuals = [], [], []
    for item in data:
        if hasattr(item, "mean_velocity"):
            impulses.append(item.impulse)
            velocities.append(item.mean_velocity)
            residuals.append(item.fit_residual)
        else:
            i, v = item[0], item[1]
            impulses.append(i)
            velocities.append(v)
            residuals.append(math.nan)
    return np.array(impulses, float), np.array(velocities, float), np.array(residuals, float)


def fit_gamma_beta(data, model: DispersionModel, weighted: bool = False,
                   min_points: int = 6) -> DispersionModel:
    """Least-squares (gamma, beta) from measured drift velocities.

    ``data`` holds ``(impulse, velocity)`` pairs or
    :class:`~pairwalk.observables.VelocityEstimate` objects. Momenta are
    ``momentum_after_pulse(0, I)``. The model is linear in the two constants,
    so the 2x2 normal equations are solved directly. With ``weighted`` each
    point is weighted by 1 / fit_residual^2 (floored at 1e-6).

    Raises
    ------
    BadSpec
        Fewer than ``min_points`` points or impulses spanning less than pi.
    DegenerateFit
        The normal matrix is singular.
    """
    impulses, v, res = _unpack(data)
    if impulses.size < min_points:
        raise BadSpec(f"need at least {min_points} points, got {impulses.size}")
    if np.ptp(impulses) < math.pi - 1e-12:
        raise BadSpec("impulses must span at least half a period (pi)")
    k = momentum_after_pulse(0.0, impulses)
    a = model.basis(k)
    if weighted:
        if not np.all(np.isfinite(res)):
            raise BadSpec("weighted fit needs a fit_residual for every point")
        w = 1.0 / np.maximum(res, 1e-6) ** 2
    else:
        w = np.ones_like(v)
    normal = (a * w[:, None]).T @ a
    rhs = (a * w[:, None]).T @ v
    det = normal[0, 0] * normal[1, 1] - normal[0, 1] * normal[1, 0]
    scale = normal[0, 0] * normal[1, 1]
    if scale == 0 or abs(det) <= 1e-12 * scale:
        raise DegenerateFit("design matrix is rank deficient for these impulses")
    gamma = (normal[1, 1] * rhs[0] - normal[0, 1] * rhs[1]) / det
    beta = (normal[0, 0] * rhs[1] - normal[1, 0] * rhs[0]) / det
    predicted = a @ np.array([gamma, beta])
    return replace(
        model,
        gamma=float(gamma),
        beta=float(beta),
        r_squared=r_squared(v, predicted),
        residual_rms=float(np.sqrt(np.mean((v - predicted) ** 2))),
        n_points=int(v.size),
    )


@dataclass(frozen=True)
class SineFit:
    """v(I) = amplitude * sin(I + phase) + offset."""

    amplitude: float
    phase: float
    offset: float
    r_squared: float

    def __call__(self, impulse):
        return self.amplitude * np.sin(np.asarray(impulse) + self.phase) + self.offset


def fit_sinusoid(impulses, velocities, with_offset: bool = False) -> SineFit:
    """Linear least squares for a sin I + b cos I (+ c); amplitude >= 0."""
    i = np.asarray(impulses, dtype=np.float64)
    v = np.asarray(velocities, dtype=np.float64)
    cols = [np.sin(i), np.cos(i)]
    if with_offset:
        cols.append(np.ones_like(i))
    a = np.column_stack(cols)
    coef, *_ = np.linalg.lstsq(a, v, rcond=None)
    amp = math.hypot(coef[0], coef[1])
    phase = math.atan2(coef[1], coef[0])
    offset = float(coef[2]) if with_offset else 0.0
    return SineFit(amp, phase, offset, r_squared(v, a @ coef))
