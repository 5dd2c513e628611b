"""Run orchestration and result files.

Per run, in the output directory:

``<name>.csv``
    Two ``#`` comment lines (resolved config as JSON, engine version), then
    the columns of :data:`CSV_COLUMNS`, one row per record interval.
``<name>.marginals.ndjson``
    First line ``{"config": ..., "engine": ...}``, then one
    ``{"t": ..., "density": [...]}`` object per particle-1 marginal snapshot.
``<name>.report.json``
    Config echo, engine version and backend, integrator diagnostics, summary
    observables and velocity fits, status and (on failure) the error.

A sweep writes each grid point into ``points/<label>/`` and an aggregate
``<name>.sweep.csv`` with one row per point.
"""

from __future__ import annotations

import csv
import datetime as _dt
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from pairwalk import __version__, kernels
from pairwalk.errors import ConfigError, InsufficientSamples, PairwalkError
from pairwalk.integrator import RunReport, evolve
from pairwalk.lattice import build_initial_state
from pairwalk.observables import (
    SCALAR_FIELDS,
    ObservableRecorder,
    density_peaks,
    mean_velocity,
)

from .config import ExperimentSpec

CSV_COLUMNS = SCALAR_FIELDS

SWEEP_COLUMNS = (
    "point",
    "impulse",
    "interaction",
    "width",
    "status",
    "mean_velocity",
    "fit_residual",
    "purity_final",
    "bound_fraction_final",
    "left_frac",
    "right_frac",
    "double_occ_final",
    "v_bound",
    "v_unbound",
    "n_peaks_final",
    "max_norm_drift",
    "max_edge_probability",
    "max_exchange_asymmetry",
    "error",
)

# Report keys that differ between otherwise identical runs.
VOLATILE_KEYS = ("timestamp", "wall_time")


def engine_info() -> dict:
    return {"package": "pairwalk", "version": __version__, "backend": kernels.BACKEND}


def json_safe(value):
    """JSON-safe copy: NaN/inf become null, numpy scalars become Python."""
    if isinstance(value, dict):
        return {k: json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_safe(v) for v in value]
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if math.isfinite(v) else None
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def _dumps(obj) -> str:
    return json.dumps(json_safe(obj), sort_keys=True, separators=(",", ":"))


@dataclass
class RunOutcome:
    """In-memory result of one simulation."""

    spec: ExperimentSpec
    recorder: ObservableRecorder
    report: RunReport
    summary: dict
    velocities: dict
    error: dict | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def _velocity(recorder, series, spec, pulse):
    try:
        est = mean_velocity(recorder.times, recorder.series(series), window=spec.velocity_window,
                            impulse=pulse.impulse, pulse=pulse)
    except InsufficientSamples:
        return None
    return {
        "mean_velocity": est.mean_velocity,
        "fit_residual": est.fit_residual,
        "fit_window": list(est.fit_window),
        "intercept": est.intercept,
        "n_samples": est.n_samples,
    }


def summarize(spec: ExperimentSpec, recorder: ObservableRecorder, report: RunReport) -> tuple[dict, dict]:
    pulse = spec.build_pulse()
    velocities = {}
    for key, series in (("centroid_1", "centroid_1"), ("bound", "bound_centroid"),
                        ("unbound", "unbound_centroid")):
        velocities[key] = _velocity(recorder, series, spec, pulse)

    def vel(key, item="mean_velocity"):
        v = velocities[key]
        return v[item] if v else math.nan

    last = recorder.last
    peaks = math.nan
    if recorder.snapshots:
        peaks = int(density_peaks(recorder.snapshots[-1][1]).size)
    summary = {
        "impulse": pulse.impulse,
        "interaction": spec.lattice.interaction,
        "width": spec.init.width,
        "t_end": last.t,
        "mean_velocity": vel("centroid_1"),
        "fit_residual": vel("centroid_1", "fit_residual"),
        "purity_final": last.purity,
        "bound_fraction_final": last.bound_fraction,
        "left_frac": last.left_frac,
        "right_frac": last.right_frac,
        "double_occ_final": last.double_occ,
        "norm_final": last.norm,
        "v_bound": vel("bound"),
        "v_unbound": vel("unbound"),
        "n_peaks_final": peaks,
        "max_norm_drift": report.max_norm_drift,
        "max_edge_probability": report.max_edge_probability,
        "max_exchange_asymmetry": report.max_exchange_asymmetry,
    }
    return summary, velocities


def simulate(spec: ExperimentSpec) -> RunOutcome:
    """Run one (non-sweep) spec in memory.

    Engine failures (norm drift, edge contamination) are captured in
    ``outcome.error`` together with the partial record; configuration errors
    propagate.
    """
    if spec.is_sweep:
        raise ConfigError("simulate() takes a single point; use run_sweep", "sweep")
    spec.check()
    state = build_initial_state(spec.lattice, spec.init)
    pulse = spec.build_pulse()
    recorder = ObservableRecorder(w_bound=spec.bound_width,
                                  marginal_interval=spec.integrator.marginal_interval)
    error = None
    try:
        _, report = evolve(state, spec.lattice, pulse, spec.integrator, sink=recorder)
    except ConfigError:
        raise
    except PairwalkError as exc:
        report = getattr(exc, "report", None) or RunReport()
        error = {"type": type(exc).__name__, "message": str(exc)}
    summary, velocities = summarize(spec, recorder, report)
    return RunOutcome(spec, recorder, report, summary, velocities, error)


def _csv_text(outcome: RunOutcome, config_line: str) -> str:
    buf = io.StringIO()
    buf.write(f"# config: {config_line}\n")
    buf.write(f"# engine: {_dumps(engine_info())}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for rec in outcome.recorder.records:
        row = rec.scalars()
        w.writerow([repr(float(row[c])) for c in CSV_COLUMNS])
    return buf.getvalue()


def _ndjson_text(outcome: RunOutcome, config: dict) -> str:
    lines = [_dumps({"config": config, "engine": engine_info()})]
    for t, density in outcome.recorder.snapshots:
        lines.append(_dumps({"t": t, "density": density.tolist()}))
    return "\n".join(lines) + "\n"


def report_document(outcome: RunOutcome) -> dict:
    config = outcome.spec.to_dict()
    return {
        "config": config,
        "engine": engine_info(),
        "status": "ok" if outcome.ok else "error",
        "error": outcome.error,
        "report": outcome.report.to_dict(),
        "summary": outcome.summary,
        "velocities": outcome.velocities,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }


@dataclass
class RunArtifacts:
    outcome: RunOutcome
    paths: dict[str, Path] = field(default_factory=dict)


def write_outcome(outcome: RunOutcome, out_dir) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    name = outcome.spec.name
    config = outcome.spec.to_dict()
    config_line = _dumps(config)
    paths = {"timeseries": out / f"{name}.csv", "report": out / f"{name}.report.json"}
    paths["timeseries"].write_text(_csv_text(outcome, config_line))
    if outcome.spec.write_marginals:
        paths["marginals"] = out / f"{name}.marginals.ndjson"
        paths["marginals"].write_text(_ndjson_text(outcome, config))
    text = json.dumps(json_safe(report_document(outcome)), sort_keys=True, indent=2)
    paths["report"].write_text(text + "\n")
    return paths


def run_single(spec: ExperimentSpec, out_dir) -> RunArtifacts:
    """Simulate one point and write its three artifact files.

    The files are written even when the engine fails mid-run; the caller
    decides what to do with ``artifacts.outcome.error``.
    """
    outcome = simulate(spec)
    return RunArtifacts(outcome, write_outcome(outcome, out_dir))


# ---------------------------------------------------------------- sweeps


@dataclass
class SweepResult:
    spec: ExperimentSpec
    rows: list[dict]
    table: Path
    out_dir: Path

    @property
    def n_failed(self) -> int:
        return sum(1 for r in self.rows if r["status"] != "ok")

    def column(self, name: str) -> np.ndarray:
        return np.array([np.nan if r[name] is None else r[name] for r in self.rows], dtype=float)


def _row(label: str, spec: ExperimentSpec, summary: dict | None, status: str, error: str = "") -> dict:
    row = {c: None for c in SWEEP_COLUMNS}
    row.update(point=label, impulse=spec.pulse.resolved_impulse,
               interaction=spec.lattice.interaction, width=spec.init.width)
    if summary:
        for c in SWEEP_COLUMNS:
            if c in summary:
                row[c] = summary[c]
    row["status"] = status
    row["error"] = error
    return json_safe(row)


def _reusable(report_path: Path, spec: ExperimentSpec) -> dict | None:
    """Summary from an existing successful report for the same config and engine."""
    try:
        doc = json.loads(report_path.read_text())
    except (OSError, json.JSONDecodeError):
        return None
    if doc.get("status") != "ok":
        return None
    if doc.get("config") != json_safe(spec.to_dict()):
        return None
    engine = doc.get("engine", {})
    if engine.get("version") != __version__:
        return None
    return doc.get("summary")


def _run_point(job) -> dict:
    label, spec, point_dir, resume = job
    if resume:
        summary = _reusable(Path(point_dir) / f"{spec.name}.report.json", spec)
        if summary is not None:
            return _row(label, spec, summary, "ok")
    try:
        art = run_single(spec, point_dir)
    except PairwalkError as exc:
        return _row(label, spec, None, "error", f"{type(exc).__name__}: {exc}")
    outcome = art.outcome
    if outcome.ok:
        return _row(label, spec, outcome.summary, "ok")
    return _row(label, spec, outcome.summary, "error",
                f"{outcome.error['type']}: {outcome.error['message']}")


def default_threads() -> int:
    try:
        return max(1, len(os.sched_getaffinity(0)))
    except AttributeError:
        return max(1, os.cpu_count() or 1)


def run_sweep(spec: ExperimentSpec, out_dir, threads: int | None = None,
              resume: bool = False) -> SweepResult:
    """Run every grid point, collecting one table row per point.

    Points run in a process pool of ``threads`` workers (default: available
    cores). A failing point is recorded with ``status="error"`` and the sweep
    continues. With ``resume`` a point whose report already holds a successful
    run of the identical resolved config is not recomputed.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    points = spec.points()
    jobs = [(label, p, str(out / "points" / label), resume) for label, p in points]
    n_workers = min(len(jobs), threads or default_threads())
    if n_workers <= 1:
        rows = [_run_point(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            rows = list(pool.map(_run_point, jobs))

    buf = io.StringIO()
    buf.write(f"# config: {_dumps(spec.to_dict())}\n")
    buf.write(f"# engine: {_dumps(engine_info())}\n")
    w = csv.DictWriter(buf, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: ("" if v is None else (repr(v) if isinstance(v, float) else v))
                    for k, v in row.items()})
    table = out / f"{spec.name}.sweep.csv"
    table.write_text(buf.getvalue())
    return SweepResult(spec, rows, table, out)


def read_timeseries(path) -> dict[str, np.ndarray]:
    """Load a run CSV back into column arrays."""
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    cols: dict[str, list[float]] = {}
    for row in reader:
        for k, v in row.items():
            cols.setdefault(k, []).append(float(v))
    return {k: np.array(v) for k, v in cols.items()}


def read_header_config(path) -> dict:
    """Resolved config embedded in a CSV or NDJSON artifact."""
    with open(path) as fh:
        first = fh.readline()
    if first.startswith("# config: "):
        return json.loads(first[len("# config: "):])
    return json.loads(first)["config"]
