import math

import numpy as np
import pytest
from conftest import random_state

from pairwalk import kernels
from pairwalk.errors import BadSpec, ConfigError, EdgeContamination, NormDrift
from pairwalk.integrator import (
    IntegratorConfig,
    _stage_fields,
    check_stability,
    evolve,
    rk4_step,
    stability_bound,
)
from pairwalk.lattice import InitialStateSpec, LatticeSpec, Wavefunction, build_initial_state
from pairwalk.observables import ObservableRecorder, centroid, purity
from pairwalk.oracle import build_dense, exact_propagate
from pairwalk.pulse import GaussianPulse

LAT8 = LatticeSpec(8, interaction=4.0)


def _run(state, lattice, pulse, dt, t_final, **kw):
    cfg = IntegratorConfig(dt=dt, t_final=t_final, record_interval=t_final or 1.0,
                           edge_policy="record", **kw)
    return evolve(Wavefunction(state), lattice, pulse, cfg)


class TestAgainstExactPropagation:
    def test_matches_dense_oracle(self, rng):
        f = random_state(rng, 8)
        out, rep = _run(f, LAT8, None, 1e-3, 1.0)
        exact = exact_propagate(f, build_dense(LAT8), 1.0).amplitudes
        assert np.max(np.abs(out.amplitudes - exact)) < 1e-8
        assert out.time == pytest.approx(1.0)
        assert rep.n_steps == 1000

    def test_fourth_order(self, rng):
        f = random_state(rng, 8)
        exact = exact_propagate(f, build_dense(LAT8), 1.0).amplitudes
        errs = [np.max(np.abs(_run(f, LAT8, None, dt, 1.0, norm_tolerance=1e-3)[0].amplitudes - exact))
                for dt in (0.04, 0.02, 0.01)]
        for a, b in zip(errs, errs[1:]):
            assert 12 <= a / b <= 20

    def test_zero_length_run_is_identity(self, rng):
        f = random_state(rng, 8)
        out, rep = _run(f, LAT8, None, 1e-3, 0.0)
        np.testing.assert_array_equal(out.amplitudes, f)
        assert rep.n_steps == 0

    def test_dt_zero_is_identity(self, rng):
        f = random_state(rng, 8)
        out = rk4_step(Wavefunction(f), LAT8, None, 0.0)
        np.testing.assert_array_equal(out.amplitudes, f)


class TestDrivenDynamics:
    def test_field_convergence_order(self, rng):
        # no closed form under a field: Richardson-style ratio of successive differences
        lat = LatticeSpec(10, interaction=2.0)
        f = random_state(rng, 10)
        pulse = GaussianPulse.from_impulse(math.pi / 2, 0.25, 1.0)
        outs = [_run(f, lat, pulse, dt, 2.0, norm_tolerance=1e-3)[0].amplitudes
                for dt in (0.02, 0.01, 0.005)]
        ratio = np.max(np.abs(outs[0] - outs[1])) / np.max(np.abs(outs[1] - outs[2]))
        assert 12 <= ratio <= 20

    def test_field_sampled_at_rk4_nodes(self):
        p = GaussianPulse(1.0, 1.0, 0.0)
        f = _stage_fields((p,), 0.5, 0.2, 2)
        np.testing.assert_allclose(f[0], [p(0.5), p(0.6), p(0.7)])
        np.testing.assert_allclose(f[1], [p(0.7), p(0.8), p(0.9)])
        assert _stage_fields((), 0.0, 0.1, 3).shape == (3, 3)

    def test_gauge_changes_only_global_phase(self, rng):
        f = random_state(rng, 10, symmetric=True)
        pulse = GaussianPulse.from_impulse(1.1, 0.3, 1.0)
        a = _run(f, LatticeSpec(10, interaction=3.0), pulse, 1e-3, 2.0)[0]
        b = _run(f, LatticeSpec(10, interaction=3.0, gauge="absolute"), pulse, 1e-3, 2.0)[0]
        np.testing.assert_allclose(np.abs(a.amplitudes) ** 2, np.abs(b.amplitudes) ** 2, atol=1e-8)
        assert purity(a) == pytest.approx(purity(b), abs=1e-8)
        assert centroid(a) == pytest.approx(centroid(b), abs=1e-8)

    def test_uniform_kick_is_exact_phase_gradient(self):
        # a short pulse on a free pair multiplies f by exp(i I (n1 + n2)) up to a global phase
        lat = LatticeSpec(16)
        f = build_initial_state(lat, InitialStateSpec(width=1.0)).amplitudes
        pulse = GaussianPulse.from_impulse(0.7, 0.002, 0.02)
        out, _ = _run(f, lat, pulse, 1e-4, 0.04)
        n = np.arange(16)
        kicked = f * np.exp(1j * 0.7 * (n[:, None] + n[None, :]))
        overlap = abs(np.vdot(kicked, out.amplitudes))
        assert overlap == pytest.approx(1.0, abs=5e-3)

    def test_norm_and_symmetry_preserved(self, rng):
        lat = LatticeSpec(24, interaction=4.0)
        f = random_state(rng, 24, symmetric=True)
        _, rep = _run(f, lat, GaussianPulse.from_impulse(2.0, 0.5, 1.0), 1e-3, 3.0)
        assert rep.max_norm_drift < 1e-8
        assert rep.max_exchange_asymmetry < 1e-12


class TestMonitoring:
    def test_stability_bound_formula(self):
        lat = LatticeSpec(100, interaction=4.0)
        pulse = GaussianPulse(0.5, 1.0)
        assert stability_bound(lat, pulse) == pytest.approx(2.8 / (8 + 4 + 0.5 * 100))
        absolute = LatticeSpec(100, interaction=4.0, gauge="absolute")
        assert stability_bound(absolute, pulse) == pytest.approx(2.8 / (8 + 4 + 0.5 * 198))

    def test_unstable_dt_rejected_before_running(self):
        lat = LatticeSpec(64, interaction=4.0)
        state = build_initial_state(lat, InitialStateSpec(width=1.0))
        with pytest.raises(BadSpec) as exc:
            evolve(state, lat, GaussianPulse(1.0, 1.0), IntegratorConfig(dt=0.1, t_final=1.0))
        assert exc.value.field == "integrator.dt"
        check_stability(IntegratorConfig(dt=0.01), lat, GaussianPulse(1.0, 1.0))

    def test_edge_contamination_raises(self):
        lat = LatticeSpec(16)
        state = build_initial_state(lat, InitialStateSpec(width=1.0))
        cfg = IntegratorConfig(dt=0.01, t_final=10.0, record_interval=0.5)
        with pytest.raises(EdgeContamination) as exc:
            evolve(state, lat, None, cfg)
        assert exc.value.report.edge_contaminated
        assert not exc.value.report.valid

    def test_edge_contamination_recorded(self):
        lat = LatticeSpec(16)
        state = build_initial_state(lat, InitialStateSpec(width=1.0))
        cfg = IntegratorConfig(dt=0.01, t_final=10.0, record_interval=0.5, edge_policy="record")
        out, rep = evolve(state, lat, None, cfg)
        assert rep.edge_contaminated and rep.max_edge_probability > 1e-8
        assert out.time == pytest.approx(10.0)

    def test_norm_drift_raises(self, rng):
        # dt just under the stability bound damps high-momentum components
        lat = LatticeSpec(16, interaction=10.0)
        f = random_state(rng, 16)
        cfg = IntegratorConfig(dt=0.15, t_final=30.0, record_interval=1.5, edge_policy="record")
        with pytest.raises(NormDrift) as exc:
            evolve(Wavefunction(f), lat, None, cfg)
        assert exc.value.report.max_norm_drift > 1e-6

    def test_unnormalized_state_rejected(self):
        with pytest.raises(BadSpec):
            evolve(Wavefunction(np.ones((8, 8))), LatticeSpec(8), None, IntegratorConfig())

    def test_size_mismatch(self, rng):
        with pytest.raises(ConfigError):
            evolve(Wavefunction(random_state(rng, 8)), LatticeSpec(10), None, IntegratorConfig())

    def test_sink_sees_every_record(self, rng):
        lat = LatticeSpec(32)
        state = build_initial_state(lat, InitialStateSpec(width=1.0))
        rec = ObservableRecorder(marginal_interval=0.5)
        cfg = IntegratorConfig(dt=0.01, t_final=2.0, record_interval=0.1)
        _, rep = evolve(state, lat, None, cfg, sink=rec)
        assert len(rec.records) == rep.n_records == 21
        np.testing.assert_allclose(rec.times, np.linspace(0, 2, 21), atol=1e-12)
        assert [t for t, _ in rec.snapshots] == pytest.approx([0.0, 0.5, 1.0, 1.5, 2.0])

    def test_callable_sink(self):
        lat = LatticeSpec(32)
        state = build_initial_state(lat, InitialStateSpec(width=1.0))
        seen = []
        evolve(state, lat, None, IntegratorConfig(dt=0.01, t_final=0.5, record_interval=0.25),
               sink=lambda s: seen.append(s.time))
        assert seen == pytest.approx([0.0, 0.25, 0.5])

    @pytest.mark.parametrize("kw", [{"dt": -1.0}, {"t_final": -1.0}, {"record_interval": 0.0},
                                    {"edge_policy": "ignore"}, {"edge_width": 0}])
    def test_config_validation(self, kw):
        with pytest.raises(BadSpec):
            IntegratorConfig(**kw)


@pytest.mark.skipif(len(kernels.available_backends()) < 2, reason="compiled extension not built")
class TestBackends:
    def test_compiled_matches_fallback(self, rng):
        lat = LatticeSpec(20, interaction=3.0, onsite_energy=tuple(rng.normal(size=20)))
        f = random_state(rng, 20)
        fields = _stage_fields((GaussianPulse(0.8, 0.5, 0.2),), 0.0, 0.005, 200)
        results = {}
        for name in ("compiled", "python"):
            g = f.copy()
            kernels.rk4_advance(g, lat.onsite, lat.hopping, lat.interaction, lat.origin, 0.005,
                                fields, backend=name)
            results[name] = g
        np.testing.assert_allclose(results["compiled"], results["python"], rtol=0, atol=1e-13)

    def test_compiled_rejects_bad_shapes(self):
        from pairwalk import _rk4

        f = np.zeros((8, 8), complex)
        with pytest.raises(ValueError):
            _rk4.rk4_advance(f, np.zeros(7), 1.0, 0.0, 4.0, 0.01, np.zeros((1, 3)))
        with pytest.raises(ValueError):
            _rk4.rk4_advance(f, np.zeros(8), 1.0, 0.0, 4.0, 0.01, np.zeros((1, 2)))

    def test_unknown_backend(self):
        with pytest.raises(ImportError):
            kernels.rk4_advance(np.zeros((8, 8), complex), np.zeros(8), 1, 0, 4, 0.01,
                                np.zeros((1, 3)), backend="fortran")
