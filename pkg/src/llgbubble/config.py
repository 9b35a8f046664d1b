"""Flat ``group.key = value`` experiment configuration."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from . import initialdata
from .core import LLGParams
from .integrator import IntegratorConfig, SimState, StopSpec
from .mesh import MeshConfig, RadialMesh


class ConfigError(ValueError):
    pass


def _opt_float(text):
    return None if text.lower() in ("none", "") else float(text)


def _opt_int(text):
    return None if text.lower() in ("none", "") else int(text)


def _bool(text):
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# key -> (parser, default)
SCHEMA = {
    "params.alpha": (float, 0.0),
    "params.beta": (float, 1.0),
    "params.n": (int, 1),
    "init.kind": (str, "theta_linear"),
    "init.gamma": (float, 0.5),
    "init.s": (float, 0.0),
    "init.theta_b": (float, 0.5 * math.pi),
    "init.slope": (float, 4.0 * math.pi / 3.0),
    "mesh.n_nodes": (int, 201),
    "mesh.tau_mm": (float, 1e-2),
    "mesh.smooth_passes": (int, 4),
    "mesh.monitor_floor": (float, 0.0),
    "mesh.monitor_floor_abs": (float, 1e-8),
    "monitor.integral_weight": (str, "dr"),
    "integ.ds": (float, 1e-3),
    "integ.ds_max": (float, 50.0),
    "integ.tol": (float, 1e-4),
    "integ.cfl": (float, 0.5),
    "integ.rk_order": (int, 2),
    "integ.energy_check": (_bool, True),
    "stop.grad_inf": (_opt_float, 1e8),
    "stop.t_max": (_opt_float, None),
    "stop.max_steps": (_opt_int, 200000),
    "stop.eq_tol": (_opt_float, 1e-6),
    "sample.every_steps": (int, 10),
    "diag.fit_window": (float, 10.0),
    "diag.undetermined": (float, 0.25 * math.pi),
    "output.dir": (str, "runs"),
}


def _format(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass
class ExperimentConfig:
    values: dict = field(default_factory=lambda: {k: d for k, (_, d) in SCHEMA.items()})

    def __getitem__(self, key):
        return self.values[key]

    def with_values(self, **updates) -> "ExperimentConfig":
        """Copy with ``group__key=value`` overrides (double underscore for the dot)."""
        vals = dict(self.values)
        for k, v in updates.items():
            key = k.replace("__", ".")
            if key not in SCHEMA:
                raise ConfigError(f"unknown key {key!r}")
            vals[key] = v
        return ExperimentConfig(vals)

    # -- text format --------------------------------------------------------

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        vals = {k: d for k, (_, d) in SCHEMA.items()}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected key = value")
            key, val = (s.strip() for s in line.split("=", 1))
            if key not in SCHEMA:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            try:
                vals[key] = SCHEMA[key][0](val)
            except ValueError as exc:
                raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
        cfg = cls(vals)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        return cls.from_text(text)

    def to_text(self) -> str:
        lines, group = [], None
        for key in SCHEMA:
            g = key.split(".", 1)[0]
            if g != group:
                if group is not None:
                    lines.append("")
                lines.append(f"# {g}")
                group = g
            lines.append(f"{key} = {_format(self.values[key])}")
        return "\n".join(lines) + "\n"

    # -- typed views --------------------------------------------------------

    def validate(self):
        try:
            self.params()
            self.mesh_config()
            self.integrator_config()
            self.stop_spec()
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        if self["init.kind"] not in initialdata.KINDS:
            raise ConfigError(f"init.kind must be one of {initialdata.KINDS}")
        if self["mesh.n_nodes"] < 5:
            raise ConfigError("mesh.n_nodes must be >= 5")
        if self["sample.every_steps"] < 1:
            raise ConfigError("sample.every_steps must be >= 1")

    def params(self) -> LLGParams:
        return LLGParams(self["params.alpha"], self["params.beta"], self["params.n"])

    def mesh_config(self) -> MeshConfig:
        return MeshConfig(n_nodes=self["mesh.n_nodes"], tau_mm=self["mesh.tau_mm"],
                          smooth_passes=self["mesh.smooth_passes"],
                          monitor_floor=self["mesh.monitor_floor"],
                          monitor_floor_abs=self["mesh.monitor_floor_abs"],
                          integral_weight=self["monitor.integral_weight"])

    def integrator_config(self) -> IntegratorConfig:
        return IntegratorConfig(ds=self["integ.ds"], ds_max=self["integ.ds_max"], tol=self["integ.tol"],
                                rk_order=self["integ.rk_order"], cfl=self["integ.cfl"],
                                energy_check=self["integ.energy_check"])

    def stop_spec(self) -> StopSpec:
        return StopSpec(grad_inf=self["stop.grad_inf"], t_max=self["stop.t_max"],
                        max_steps=self["stop.max_steps"], eq_tol=self["stop.eq_tol"])

    def initial_field(self, mesh: RadialMesh):
        kind = self["init.kind"]
        if kind == "theta_linear":
            return initialdata.theta_linear(mesh, self["init.slope"])
        if kind == "theta_linear_3comp":
            return initialdata.theta_linear_3comp(mesh, self["init.slope"])
        if kind == "gamma_family":
            return initialdata.gamma_family(mesh, self["init.gamma"])
        if kind == "degree1_north":
            return initialdata.degree1_family(mesh, self["init.s"], "north")
        if kind == "degree1_generic":
            return initialdata.degree1_family(mesh, self["init.s"], "generic", self["init.theta_b"])
        return initialdata.constant_north(mesh)

    def initial_state(self) -> SimState:
        mesh = RadialMesh.uniform(self["mesh.n_nodes"])
        return SimState(self.initial_field(mesh), mesh, ds=self["integ.ds"])
