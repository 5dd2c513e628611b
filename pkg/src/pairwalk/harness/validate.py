"""Small-lattice self-check: oracle cross-validation and invariants.

Every check runs in well under a second. ``validate_suite`` accepts
replacement ``rhs`` / ``advance`` callables so a deliberately broken engine
can be fed through the same checks (see :data:`MUTATIONS`).
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass

import numpy as np
from scipy.integrate import trapezoid

from pairwalk import kernels
from pairwalk.errors import BadSpec
from pairwalk.integrator import IntegratorConfig, _stage_fields, check_stability, evolve
from pairwalk.lattice import (
    InitialStateSpec,
    LatticeSpec,
    Wavefunction,
    apply_rhs,
    build_initial_state,
)
from pairwalk.observables import purity
from pairwalk.oracle import bound_band, build_dense, classify_spectrum, exact_propagate
from pairwalk.pulse import GaussianPulse, field_at


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    limit: float
    detail: str = ""
    seconds: float = 0.0


def _random_state(n, rng, symmetric=False):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    if symmetric:
        a = a + a.T
    return a / np.linalg.norm(a)


def _flip_sign_advance(f, *args, **kwargs):
    # conj . RK4[-iH] . conj == RK4[+iH] for real symmetric H
    np.conjugate(f, out=f)
    kernels.rk4_advance(f, *args, **kwargs)
    np.conjugate(f, out=f)


MUTATIONS = {
    "rhs-sign": {
        "rhs": lambda state, lattice, field_value: -apply_rhs(state, lattice, field_value),
        "advance": _flip_sign_advance,
    },
}


def _propagate(advance, amps, lattice, dt, t):
    f = amps.copy()
    n = int(round(t / dt))
    advance(f, lattice.onsite, lattice.hopping, lattice.interaction, lattice.origin, dt,
            np.zeros((n, 3)))
    return f


def validate_suite(rhs=None, advance=None, seed: int = 7) -> list[CheckResult]:
    """Run all checks and return one :class:`CheckResult` each."""
    rhs = rhs or apply_rhs
    advance = advance or kernels.rk4_advance
    rng = np.random.default_rng(seed)
    results: list[CheckResult] = []

    def check(name, fn):
        t0 = time.perf_counter()
        try:
            value, limit, ok, detail = fn()
        except Exception as exc:  # a crashing check is a failed check
            value, limit, ok, detail = math.nan, math.nan, False, f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(name, bool(ok), float(value), float(limit), detail,
                                   time.perf_counter() - t0))

    lat8 = LatticeSpec(8, interaction=4.0, gauge="absolute")

    def hermiticity():
        u, v = _random_state(8, rng), _random_state(8, rng)
        hv = 1j * rhs(v, lat8, 0.3)
        hu = 1j * rhs(u, lat8, 0.3)
        err = abs(np.vdot(u, hv) - np.conj(np.vdot(v, hu)))
        return err, 1e-12, err < 1e-12, ""

    def dense_matches_rhs():
        f = _random_state(8, rng)
        dense = build_dense(lat8).apply(f)
        err = float(np.max(np.abs(dense - 1j * rhs(f, lat8, 0.0))))
        return err, 1e-12, err < 1e-12, ""

    def rk4_matches_exact():
        f = _random_state(8, rng)
        exact = exact_propagate(f, build_dense(lat8), 1.0).amplitudes
        err = float(np.max(np.abs(_propagate(advance, f, lat8, 1e-3, 1.0) - exact)))
        return err, 1e-8, err < 1e-8, "N=8, U=4, t=1, dt=1e-3"

    def convergence_order():
        f = _random_state(8, rng)
        exact = exact_propagate(f, build_dense(lat8), 1.0).amplitudes
        e1 = np.max(np.abs(_propagate(advance, f, lat8, 0.02, 1.0) - exact))
        e2 = np.max(np.abs(_propagate(advance, f, lat8, 0.01, 1.0) - exact))
        ratio = e1 / e2
        return ratio, 16.0, 12.0 <= ratio <= 20.0, "error ratio for dt 0.02 -> 0.01"

    def backends_agree():
        if len(kernels.available_backends()) < 2:
            return 0.0, 1e-12, True, "only one backend available"
        lat = LatticeSpec(12, interaction=2.0)
        f = _random_state(12, rng)
        fields = _stage_fields((GaussianPulse(0.4, 1.0, 0.05),), 0.0, 0.01, 50)
        out = []
        for name in ("compiled", "python"):
            g = f.copy()
            kernels.rk4_advance(g, lat.onsite, lat.hopping, lat.interaction, lat.origin, 0.01,
                                fields, backend=name)
            out.append(g)
        err = float(np.max(np.abs(out[0] - out[1])))
        return err, 1e-12, err < 1e-12, ""

    def driven_invariants():
        lat = LatticeSpec(24, interaction=4.0)
        state = Wavefunction(_random_state(24, rng, symmetric=True))
        cfg = IntegratorConfig(dt=0.001, t_final=2.0, record_interval=0.5, edge_policy="record")
        pulse = GaussianPulse.from_impulse(math.pi / 2, 0.5, 1.0)
        _, rep = evolve(state, lat, pulse, cfg)
        worst = max(rep.max_norm_drift / 1e-6, rep.max_exchange_asymmetry / 1e-10)
        return worst, 1.0, worst < 1.0, (f"norm drift {rep.max_norm_drift:.2e}, "
                                         f"asymmetry {rep.max_exchange_asymmetry:.2e}")

    def product_purity():
        lat = LatticeSpec(32, interaction=0.0)
        state = build_initial_state(lat, InitialStateSpec(width=1.5))
        cfg = IntegratorConfig(dt=0.005, t_final=2.0, record_interval=1.0)
        pulse = GaussianPulse.from_impulse(math.pi / 3, 0.3, 1.0)
        out, _ = evolve(state, lat, pulse, cfg)
        dev = abs(1.0 - purity(out))
        return dev, 1e-8, dev < 1e-8, "U=0 keeps a product state"

    def band_edges():
        worst = 0.0
        for u in (4.0, 10.0):
            energies = [e for _, e in bound_band(LatticeSpec(24, interaction=u), periodic=True)]
            worst = max(worst, abs(min(energies) - u), abs(max(energies) - math.sqrt(u * u + 16)))
        _, unbound = classify_spectrum(LatticeSpec(24, interaction=4.0), periodic=True)
        ue = [s.energy for s in unbound]
        worst = max(worst, max(0.0, max(np.abs(ue)) - 4.0))
        return worst, 0.05, worst < 0.05, "periodic N=24, U in {4, 10}"

    def stability_guard():
        lat = LatticeSpec(64, interaction=4.0)
        try:
            check_stability(IntegratorConfig(dt=0.5), lat, GaussianPulse(1.0, 1.0))
        except BadSpec:
            return 0.0, 0.0, True, "dt=0.5 rejected"
        return 1.0, 0.0, False, "dt=0.5 accepted"

    def impulse_quadrature():
        pulse = GaussianPulse.from_impulse(1.3, 0.7, 10.0)
        t = np.linspace(*pulse.support, 20001)
        quad = trapezoid(field_at(pulse, t), t)
        err = abs(quad - 1.3)
        return err, 1e-9, err < 1e-9, ""

    for name, fn in [
        ("hermiticity", hermiticity),
        ("dense_matches_rhs", dense_matches_rhs),
        ("rk4_matches_exact", rk4_matches_exact),
        ("rk4_fourth_order", convergence_order),
        ("backends_agree", backends_agree),
        ("driven_invariants", driven_invariants),
        ("product_purity", product_purity),
        ("band_edges", band_edges),
        ("stability_guard", stability_guard),
        ("impulse_quadrature", impulse_quadrature),
    ]:
        check(name, fn)
    return results


def summary(results: list[CheckResult]) -> dict:
    return {
        "passed": all(r.passed for r in results),
        "n_checks": len(results),
        "n_failed": sum(not r.passed for r in results),
        "checks": [asdict(r) for r in results],
    }
