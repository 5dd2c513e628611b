"""Experiment specification: JSON schema, validation, defaults and sweeps.

A spec document looks like::

    {
      "name": "fig1",
      "lattice": {"n_sites": 512, "interaction": 4.0},
      "init": {"width": 1.0, "offset": 0},
      "pulse": {"impulse": "3pi/2", "width": 1.0, "center": 10.0},
      "integrator": {"dt": 0.001, "t_final": 100.0},
      "sweep": {"interaction": [0, 4], "impulse": ["3pi/2", "pi/2"]}
    }

Impulses (and any other angle-like number) may be written as strings such as
``"3pi/2"`` or ``"-pi/4"``. A sweep axis is either a list or
``{"start": ..., "stop": ..., "num": ...}`` (inclusive linspace).
"""

from __future__ import annotations

import copy
import itertools
import json
import math
import re
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import jsonschema

from pairwalk.errors import ConfigError, PairwalkError
from pairwalk.integrator import IntegratorConfig, check_stability
from pairwalk.lattice import InitialStateSpec, LatticeSpec, build_initial_state
from pairwalk.observables import DEFAULT_BOUND_WIDTH
from pairwalk.pulse import GaussianPulse

PRESETS = ("fig1", "fig2", "fig3", "fig4a", "fig4b")
SWEEP_AXES = ("impulse", "interaction", "width")

_PI_EXPR = re.compile(
    r"^\s*(?P<sign>[+-]?)\s*(?P<coef>\d+(?:\.\d*)?|\.\d+)?\s*\*?\s*(?P<pi>pi)?"
    r"\s*(?:/\s*(?P<den>\d+(?:\.\d*)?))?\s*$"
)


def parse_number(value, where: str = "") -> float:
    """Accept plain numbers or strings like ``"3pi/2"``, ``"0.25"``, ``"-pi"``."""
    if isinstance(value, bool):
        raise ConfigError(f"expected a number, got {value!r}", where or None)
    if isinstance(value, (int, float)):
        out = float(value)
    elif isinstance(value, str):
        m = _PI_EXPR.match(value)
        if not m or (m["coef"] is None and m["pi"] is None):
            raise ConfigError(f"cannot parse {value!r} as a number", where or None)
        out = float(m["coef"]) if m["coef"] is not None else 1.0
        if m["pi"]:
            out *= math.pi
        if m["den"]:
            out /= float(m["den"])
        if m["sign"] == "-":
            out = -out
    else:
        raise ConfigError(f"expected a number, got {value!r}", where or None)
    if not math.isfinite(out):
        raise ConfigError(f"{value!r} is not finite", where or None)
    return out


def load_schema() -> dict:
    text = resources.files("pairwalk.harness").joinpath("spec.schema.json").read_text()
    return json.loads(text)


def _json_path(error: jsonschema.ValidationError) -> str:
    parts = [str(p) for p in error.absolute_path]
    if error.validator == "required":
        missing = re.findall(r"'([^']+)' is a required property", error.message)
        parts += missing[:1]
    elif error.validator == "additionalProperties":
        extra = re.findall(r"'([^']+)'", error.message)
        parts += extra[:1]
    return ".".join(parts) or "<root>"


def _axis_values(axis, where):
    if isinstance(axis, dict):
        start = parse_number(axis["start"], f"{where}.start")
        stop = parse_number(axis["stop"], f"{where}.stop")
        num = int(axis["num"])
        if num == 1:
            return [start]
        step = (stop - start) / (num - 1)
        return [start + i * step for i in range(num)]
    return [parse_number(v, f"{where}[{i}]") for i, v in enumerate(axis)]


@dataclass(frozen=True)
class PulseSpec:
    """Pulse given either by impulse or by peak amplitude."""

    width: float = 1.0
    center: float = 10.0
    impulse: float | None = None
    amplitude: float | None = None

    def build(self) -> GaussianPulse:
        if self.impulse is not None:
            return GaussianPulse.from_impulse(self.impulse, self.width, self.center)
        return GaussianPulse(self.amplitude, self.width, self.center)

    @property
    def resolved_impulse(self) -> float:
        return self.build().impulse


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    lattice: LatticeSpec
    init: InitialStateSpec
    pulse: PulseSpec
    integrator: IntegratorConfig
    sweep: dict[str, tuple[float, ...]] = field(default_factory=dict)
    bound_width: int = DEFAULT_BOUND_WIDTH
    velocity_window: tuple[float, float] | None = None
    write_marginals: bool = True
    description: str = ""

    # ---- derived views -------------------------------------------------
    def build_pulse(self) -> GaussianPulse:
        return self.pulse.build()

    @property
    def is_sweep(self) -> bool:
        return bool(self.sweep)

    def check(self) -> None:
        """Cross-field checks that need the assembled spec."""
        pulse = self.build_pulse()
        check_stability(self.integrator, self.lattice, pulse)
        build_initial_state(self.lattice, self.init)
        if self.velocity_window is not None:
            a, b = self.velocity_window
            if b <= a:
                raise ConfigError("velocity_window must be increasing", "analysis.velocity_window")

    def to_dict(self) -> dict:
        """Fully resolved configuration (all defaults explicit)."""
        lat = self.lattice
        d = {
            "name": self.name,
            "description": self.description,
            "lattice": {
                "n_sites": lat.n_sites,
                "hopping": lat.hopping,
                "interaction": lat.interaction,
                "onsite_energy": list(lat.onsite_energy) if lat.onsite_energy else None,
                "gauge": lat.gauge,
            },
            "init": {
                "width": self.init.width,
                "offset": self.init.offset,
                "center_1": self.init.centers(lat)[0],
                "center_2": self.init.centers(lat)[1],
            },
            "pulse": {
                "width": self.pulse.width,
                "center": self.pulse.center,
                "impulse": self.pulse.impulse,
                "amplitude": self.pulse.amplitude,
                "resolved_amplitude": self.build_pulse().amplitude,
                "resolved_impulse": self.build_pulse().impulse,
            },
            "integrator": {
                "dt": self.integrator.dt,
                "t_final": self.integrator.t_final,
                "record_interval": self.integrator.record_interval,
                "marginal_interval": self.integrator.marginal_interval,
                "norm_tolerance": self.integrator.norm_tolerance,
                "edge_tolerance": self.integrator.edge_tolerance,
                "edge_width": self.integrator.edge_width,
                "edge_policy": self.integrator.edge_policy,
            },
            "analysis": {
                "bound_width": self.bound_width,
                "velocity_window": list(self.velocity_window) if self.velocity_window else None,
            },
            "outputs": {"marginals": self.write_marginals},
        }
        if self.sweep:
            d["sweep"] = {k: list(v) for k, v in self.sweep.items()}
        return d

    # ---- transformations ----------------------------------------------
    def with_overrides(self, fast: bool = False, dt: float | None = None,
                       n_sites: int | None = None, **integrator) -> "ExperimentSpec":
        """Apply CLI-style overrides. ``fast`` halves n_sites and t_final;
        an explicit ``n_sites`` wins over the halving."""
        lat = self.lattice
        integ = self.integrator
        new_n = lat.n_sites
        if fast:
            new_n = lat.n_sites // 2
            integ = replace(integ, t_final=integ.t_final / 2.0)
        if n_sites is not None:
            new_n = int(n_sites)
        if dt is not None:
            integ = replace(integ, dt=float(dt))
        if integrator:
            integ = replace(integ, **integrator)
        try:
            if new_n != lat.n_sites:
                onsite = lat.onsite_energy
                if onsite is not None:
                    raise ConfigError("cannot resize a lattice with explicit onsite_energy",
                                      "lattice.n_sites")
                lat = lat.replace(n_sites=new_n)
        except PairwalkError as exc:
            raise ConfigError(str(exc), getattr(exc, "field", None) or "lattice.n_sites") from exc
        out = replace(self, lattice=lat, integrator=integ)
        out.check()
        return out

    def points(self) -> list[tuple[str, "ExperimentSpec"]]:
        """Expand sweep axes into single-run specs (width, interaction, impulse order)."""
        if not self.sweep:
            return [(self.name, self)]
        widths = self.sweep.get("width", (self.init.width,))
        inter = self.sweep.get("interaction", (self.lattice.interaction,))
        impulses = self.sweep.get("impulse", (None,))
        out = []
        for idx, (w, u, imp) in enumerate(itertools.product(widths, inter, impulses)):
            pulse = self.pulse
            if imp is not None:
                pulse = replace(pulse, impulse=imp, amplitude=None)
            spec = replace(
                self,
                lattice=self.lattice.replace(interaction=u),
                init=replace(self.init, width=w),
                pulse=pulse,
                sweep={},
            )
            spec.check()
            out.append((point_label(idx, spec), spec))
        return out


def point_label(index: int, spec: ExperimentSpec) -> str:
    imp = spec.pulse.resolved_impulse / math.pi
    return (f"{index:03d}_U{spec.lattice.interaction:g}_I{imp:.4g}pi"
            f"_s{spec.init.width:g}").replace("-", "m")


def parse_spec(doc: dict, name: str | None = None) -> ExperimentSpec:
    """Validate a spec document and build the domain objects.

    Raises
    ------
    ConfigError
        With ``field`` set to the dotted path of the offending entry.
    """
    try:
        jsonschema.validate(doc, load_schema())
    except jsonschema.ValidationError as exc:
        best = jsonschema.exceptions.best_match([exc]) or exc
        message = best.message
        if best.validator in ("pattern", "oneOf") and isinstance(best.instance, (str, bool)):
            message = f"{best.instance!r} is not a number or an expression like '3pi/2'"
        raise ConfigError(message, _json_path(best)) from None
    doc = copy.deepcopy(doc)
    try:
        lat_d = doc["lattice"]
        onsite = lat_d.get("onsite_energy")
        lattice = LatticeSpec(
            n_sites=lat_d["n_sites"],
            hopping=parse_number(lat_d.get("hopping", 1.0), "lattice.hopping"),
            interaction=parse_number(lat_d.get("interaction", 0.0), "lattice.interaction"),
            onsite_energy=tuple(parse_number(e, "lattice.onsite_energy") for e in onsite)
            if onsite is not None else None,
            gauge=lat_d.get("gauge", "centered"),
        )
        init_d = doc["init"]
        init = InitialStateSpec(
            width=parse_number(init_d["width"], "init.width"),
            offset=int(init_d.get("offset", 0)),
            center_1=init_d.get("center_1"),
            center_2=init_d.get("center_2"),
        )
        pulse_d = doc.get("pulse", {"impulse": 0.0})
        has_i = pulse_d.get("impulse") is not None
        has_b = pulse_d.get("amplitude") is not None
        sweep_d = doc.get("sweep") or {}
        if has_i == has_b and not (not has_i and "impulse" in sweep_d):
            raise ConfigError("give exactly one of pulse.impulse and pulse.amplitude",
                              "pulse.impulse")
        pulse = PulseSpec(
            width=parse_number(pulse_d.get("width", 1.0), "pulse.width"),
            center=parse_number(pulse_d.get("center", 10.0), "pulse.center"),
            impulse=parse_number(pulse_d["impulse"], "pulse.impulse") if has_i else None,
            amplitude=parse_number(pulse_d["amplitude"], "pulse.amplitude") if has_b else None,
        )
        if pulse.impulse is None and pulse.amplitude is None:
            pulse = replace(pulse, impulse=0.0)
        integrator = IntegratorConfig(**{
            k: (parse_number(v, f"integrator.{k}") if k not in ("edge_policy", "edge_width") else v)
            for k, v in doc.get("integrator", {}).items()
        })
        sweep = {}
        for axis in SWEEP_AXES:
            if axis in sweep_d:
                values = _axis_values(sweep_d[axis], f"sweep.{axis}")
                if not values:
                    raise ConfigError(f"sweep axis {axis} is empty", f"sweep.{axis}")
                sweep[axis] = tuple(values)
        analysis = doc.get("analysis", {})
        window = analysis.get("velocity_window")
        spec = ExperimentSpec(
            name=doc.get("name") or name or "run",
            description=doc.get("description", ""),
            lattice=lattice,
            init=init,
            pulse=pulse,
            integrator=integrator,
            sweep=sweep,
            bound_width=int(analysis.get("bound_width", DEFAULT_BOUND_WIDTH)),
            velocity_window=tuple(parse_number(w, "analysis.velocity_window") for w in window)
            if window else None,
            write_marginals=bool(doc.get("outputs", {}).get("marginals", True)),
        )
        if spec.is_sweep:
            spec.points()
        else:
            spec.check()
    except ConfigError:
        raise
    except PairwalkError as exc:
        raise ConfigError(str(exc), getattr(exc, "field", None)) from exc
    return spec


def preset_path(name: str) -> Path:
    return Path(str(resources.files("pairwalk.harness").joinpath("presets", f"{name}.json")))


def load_document(source) -> tuple[dict, str]:
    """Read a spec from a path or a preset name."""
    path = Path(source)
    if not path.exists() and str(source) in PRESETS:
        path = preset_path(str(source))
    if not path.exists():
        raise ConfigError(f"no spec file or preset named {source!r}", "<file>")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}", "<file>") from None
    if not isinstance(doc, dict):
        raise ConfigError("spec document must be a JSON object", "<root>")
    return doc, path.stem


def load_spec(source) -> ExperimentSpec:
    doc, stem = load_document(source)
    return parse_spec(doc, name=stem)
