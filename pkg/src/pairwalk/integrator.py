"""Explicit RK4 time evolution with conservation and edge monitoring."""

from __future__ import annotations

import math
import time as _time
from dataclasses import asdict, dataclass

import numpy as np

from pairwalk import kernels
from pairwalk.errors import BadSpec, ConfigError, EdgeContamination, NormDrift
from pairwalk.lattice import LatticeSpec, Wavefunction
from pairwalk.observables import edge_probability
from pairwalk.pulse import as_pulses, field_at, peak_amplitude

# |lambda dt| reach of RK4 along the imaginary axis is 2*sqrt(2); keep a margin.
RK4_IMAG_REACH = 2.8

EDGE_POLICIES = ("raise", "record")


@dataclass(frozen=True)
class IntegratorConfig:
    """Time-stepping and monitoring parameters.

    ``record_interval`` and ``marginal_interval`` are rounded to whole steps.
    With ``edge_policy="record"`` edge contamination is only reported in the
    run report instead of aborting the run.
    """

    dt: float = 1e-3
    t_final: float = 100.0
    record_interval: float = 0.1
    marginal_interval: float = 1.0
    norm_tolerance: float = 1e-6
    edge_tolerance: float = 1e-8
    edge_width: int = 3
    edge_policy: str = "raise"

    def __post_init__(self):
        if not math.isfinite(self.dt) or self.dt < 0:
            raise BadSpec(f"dt must be >= 0, got {self.dt}", "integrator.dt")
        if not math.isfinite(self.t_final) or self.t_final < 0:
            raise BadSpec(f"t_final must be >= 0, got {self.t_final}", "integrator.t_final")
        for name in ("record_interval", "marginal_interval", "norm_tolerance", "edge_tolerance"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise BadSpec(f"{name} must be > 0, got {value}", f"integrator.{name}")
        if self.edge_width < 1:
            raise BadSpec("edge_width must be >= 1", "integrator.edge_width")
        if self.edge_policy not in EDGE_POLICIES:
            raise BadSpec(f"edge_policy must be one of {EDGE_POLICIES}", "integrator.edge_policy")

    @property
    def n_steps(self) -> int:
        if self.dt == 0:
            return 0
        return int(round(self.t_final / self.dt))

    def steps_per(self, interval: float) -> int:
        if self.dt == 0:
            return 1
        return max(1, int(round(interval / self.dt)))


@dataclass
class RunReport:
    """Diagnostics accumulated by :func:`evolve`."""

    n_steps: int = 0
    t_final: float = 0.0
    dt: float = 0.0
    backend: str = kernels.BACKEND
    max_norm_drift: float = 0.0
    max_edge_probability: float = 0.0
    max_exchange_asymmetry: float = 0.0
    edge_contaminated: bool = False
    wall_time: float = 0.0
    n_records: int = 0

    @property
    def valid(self) -> bool:
        return not self.edge_contaminated

    def to_dict(self) -> dict:
        out = asdict(self)
        out["valid"] = self.valid
        return out


def stability_bound(lattice: LatticeSpec, pulse=None) -> float:
    """Largest admissible dt: 2.8 / (8J + U + 2 max|eps| + B * span).

    ``span`` is the largest |(n1 - origin) + (n2 - origin)|, i.e. N in the
    centred gauge, so for J=1 and eps=0 this is 2.8 / (8 + U + B N).
    """
    n = lattice.n_sites
    origin = lattice.origin
    span = max(abs(2.0 * origin), abs(2.0 * (n - 1) - 2.0 * origin))
    eps_max = float(np.max(np.abs(lattice.onsite))) if lattice.onsite_energy else 0.0
    bound = 8.0 * abs(lattice.hopping) + lattice.interaction + 2.0 * eps_max
    bound += peak_amplitude(as_pulses(pulse)) * span
    return RK4_IMAG_REACH / bound


def check_stability(config: IntegratorConfig, lattice: LatticeSpec, pulse=None) -> None:
    limit = stability_bound(lattice, pulse)
    if config.dt >= limit:
        raise BadSpec(
            f"dt={config.dt:g} exceeds the RK4 stability bound {limit:.4g} "
            f"for this lattice and pulse",
            "integrator.dt",
        )


def _stage_fields(pulses, t0, dt, n):
    """(n, 3) array of F at the start, midpoint and end of each step."""
    out = np.zeros((n, 3))
    if not pulses or n == 0:
        return out
    starts = t0 + dt * np.arange(n)
    out[:, 0] = field_at(pulses, starts)
    out[:, 1] = field_at(pulses, starts + 0.5 * dt)
    out[:, 2] = field_at(pulses, starts + dt)
    return out


def rk4_step(state: Wavefunction, lattice: LatticeSpec, pulse, dt: float) -> Wavefunction:
    """One classical RK4 step; the field is sampled at t, t + dt/2 and t + dt."""
    out = state.copy()
    if dt == 0:
        return out
    fields = _stage_fields(as_pulses(pulse), state.time, dt, 1)
    kernels.rk4_advance(out.amplitudes, lattice.onsite, lattice.hopping,
                        lattice.interaction, lattice.origin, dt, fields)
    out.time = state.time + dt
    return out


def evolve(state: Wavefunction, lattice: LatticeSpec, pulse, config: IntegratorConfig,
           sink=None) -> tuple[Wavefunction, RunReport]:
    """Integrate from ``state.time`` for ``config.t_final`` time units.

    ``sink`` (anything with a ``record(state)`` method, or a callable) receives
    a snapshot at the start and every ``record_interval``. Norm, edge
    probability and exchange asymmetry are checked at the same instants.

    Raises
    ------
    NormDrift
        ``|1 - norm|`` exceeded ``norm_tolerance``.
    EdgeContamination
        Edge probability exceeded ``edge_tolerance`` (``edge_policy="raise"``).
        The partial report is attached as ``exc.report``.
    """
    if state.n_sites != lattice.n_sites:
        raise ConfigError(
            f"state has {state.n_sites} sites, lattice {lattice.n_sites}", "lattice.n_sites"
        )
    if abs(state.norm() - 1.0) > 1e-9:
        raise BadSpec(f"initial state norm {state.norm():.12f} is not 1")
    pulses = as_pulses(pulse)
    check_stability(config, lattice, pulses)

    emit = None
    if sink is not None:
        emit = sink.record if hasattr(sink, "record") else sink

    report = RunReport(n_steps=config.n_steps, t_final=config.t_final, dt=config.dt,
                       backend=kernels.BACKEND)
    current = state.copy()
    t0 = current.time
    every = config.steps_per(config.record_interval)
    started = _time.perf_counter()

    def monitor():
        drift = abs(1.0 - current.norm())
        edge = edge_probability(current.amplitudes, config.edge_width)
        report.max_norm_drift = max(report.max_norm_drift, drift)
        report.max_edge_probability = max(report.max_edge_probability, edge)
        report.max_exchange_asymmetry = max(report.max_exchange_asymmetry,
                                            current.exchange_asymmetry())
        report.n_records += 1
        if emit is not None:
            emit(current.copy())
        if drift > config.norm_tolerance:
            report.wall_time = _time.perf_counter() - started
            err = NormDrift(f"|1 - norm| = {drift:.3e} at t = {current.time:g} "
                            f"(tolerance {config.norm_tolerance:g})")
            err.report = report
            raise err
        if edge > config.edge_tolerance:
            report.edge_contaminated = True
            if config.edge_policy == "raise":
                report.wall_time = _time.perf_counter() - started
                err = EdgeContamination(
                    f"edge probability {edge:.3e} at t = {current.time:g} exceeds "
                    f"{config.edge_tolerance:g}; the lattice is too small for this run")
                err.report = report
                raise err

    monitor()
    done = 0
    while done < config.n_steps:
        chunk = min(every, config.n_steps - done)
        fields = _stage_fields(pulses, t0 + done * config.dt, config.dt, chunk)
        kernels.rk4_advance(current.amplitudes, lattice.onsite, lattice.hopping,
                            lattice.interaction, lattice.origin, config.dt, fields)
        done += chunk
        current.time = t0 + done * config.dt
        monitor()

    report.wall_time = _time.perf_counter() - started
    return current, report
