"""
Run configuration and its flat ``key = value`` file format.

One setting per line, ``#`` starts a comment. Top-level keys configure the
run; dotted keys address a parameter group::

    controller = g          # g | pid
    trajectory = sine
    amplitude  = 2.0        # m
    g.k_r      = 0.02       # rad
    inertia.m  = 3.0        # kg

Tuple-valued settings are comma separated. Unknown keys are rejected.
"""

import dataclasses
import os
import typing
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Optional

from ..controllers import AttitudeGains, GControllerConfig, PidGains
from ..errors import ConfigError
from ..plant import PlantConfig, hover_trim
from ..rigid_body import InertiaParams
from ..rotor_aero import RotorParams
from ..structure_learning import EvolutionConfig
from .trajectories import Trajectory

CONFIG_ENV = "HEXAFUZZ_CONFIG"
CONTROLLERS = ("g", "pid")


@dataclass(frozen=True)
class RunConfig:
    plant: PlantConfig = field(default_factory=PlantConfig)
    controller: str = "g"
    pid: PidGains = field(default_factory=PidGains)
    g: GControllerConfig = field(default_factory=GControllerConfig)
    attitude: AttitudeGains = field(default_factory=AttitudeGains)
    trajectory: Trajectory = field(default_factory=Trajectory)
    duration: float = 60.0
    dt: float = 1e-3
    feedforward: str = "trim"   # "trim" | number [rad]
    psi_ref: float = 0.0
    seed: int = 0
    output_dir: Optional[str] = None

    def __post_init__(self):
        if self.controller not in CONTROLLERS:
            raise ConfigError(f"controller must be one of {CONTROLLERS}, got {self.controller!r}")
        if self.duration < 0:
            raise ConfigError("duration must be >= 0")
        if not self.dt > 0:
            raise ConfigError("dt must be > 0")
        traj = self.trajectory
        if traj.periodic and self.duration < 1.0 / traj.frequency + 10.0:
            raise ConfigError("periodic references need duration >= one period + 10 s of settling")
        if self.plant.dt != self.dt:
            object.__setattr__(self, "plant", replace(self.plant, dt=self.dt))
        self.feedforward_value()

    def feedforward_value(self):
        """Collective feedforward [rad]; ``trim`` resolves to the hover trim pitch."""
        ff = str(self.feedforward).strip()
        if ff == "trim":
            return hover_trim(self.plant)
        try:
            return float(ff)
        except ValueError:
            raise ConfigError(f"feedforward must be 'trim' or a number, got {ff!r}") from None

    @property
    def n_steps(self):
        return int(round(self.duration / self.dt))


# dotted prefix -> (attribute path inside RunConfig, dataclass type)
GROUPS = {
    "plant": (("plant",), PlantConfig),
    "inertia": (("plant", "inertia"), InertiaParams),
    "rotor": (("plant", "rotor"), RotorParams),
    "pid": (("pid",), PidGains),
    "g": (("g",), GControllerConfig),
    "evolution": (("g", "evolution"), EvolutionConfig),
    "attitude": (("attitude",), AttitudeGains),
}
TRAJECTORY_KEYS = {"trajectory": "kind", "amplitude": "amplitude",
                   "frequency": "frequency", "step_times": "step_times"}
NESTED = {"inertia", "rotor", "evolution", "spin_direction"}
# fields driven by a top-level key instead (``feedforward``, ``dt``)
SHADOWED = {"pid": {"feedforward"}, "g": {"feedforward"}, "plant": {"dt"}}


def _convert(raw, typ, key):
    origin = typing.get_origin(typ)
    try:
        if origin is typing.Union:
            typ = next(a for a in typing.get_args(typ) if a is not type(None))
            origin = typing.get_origin(typ)
        if origin is tuple:
            return tuple(float(v) for v in raw.split(",") if v.strip())
        if typ is bool:
            return raw.lower() in ("1", "true", "yes", "on")
        if typ is int:
            return int(raw)
        if typ is float:
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"bad value {raw!r} for {key}") from None


def _field_types(cls):
    hints = typing.get_type_hints(cls)
    return {f.name: hints[f.name] for f in dataclasses.fields(cls) if f.name not in NESTED}


def parse_config_text(text):
    """Parse the flat format into ``{key: raw string}``."""
    settings = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        settings[key] = value
    return settings


def build_config(settings, base=None):
    """Apply ``{key: raw value}`` settings on top of ``base`` (defaults if None)."""
    cfg = base or RunConfig()
    top_types = _field_types(RunConfig)
    group_values = {name: {} for name in GROUPS}
    top, traj = {}, {}
    for key, raw in settings.items():
        if key in TRAJECTORY_KEYS:
            name = TRAJECTORY_KEYS[key]
            traj[name] = _convert(raw, typing.get_type_hints(Trajectory)[name], key)
        elif "." in key:
            prefix, name = key.split(".", 1)
            if prefix not in GROUPS:
                raise ConfigError(f"unknown setting {key!r}")
            types = _field_types(GROUPS[prefix][1])
            if name not in types or name in SHADOWED.get(prefix, ()):
                raise ConfigError(f"unknown setting {key!r}")
            group_values[prefix][name] = _convert(raw, types[name], key)
        elif key in top_types and key not in GROUPS and key != "trajectory":
            top[key] = _convert(raw, top_types[key], key)
        else:
            raise ConfigError(f"unknown setting {key!r}")

    def get(path):
        obj = cfg
        for attr in path:
            obj = getattr(obj, attr)
        return obj

    try:
        # innermost groups first so outer replacements pick them up
        rotor = replace(get(("plant", "rotor")), **group_values["rotor"])
        inertia = replace(get(("plant", "inertia")), **group_values["inertia"])
        plant = replace(cfg.plant, rotor=rotor, inertia=inertia, **group_values["plant"])
        evolution = replace(cfg.g.evolution, **group_values["evolution"])
        g = replace(cfg.g, evolution=evolution, **group_values["g"])
        pid = replace(cfg.pid, **group_values["pid"])
        attitude = replace(cfg.attitude, **group_values["attitude"])
        trajectory = replace(cfg.trajectory, **traj)
        if "dt" in top:
            plant = replace(plant, dt=top["dt"])
        return replace(cfg, plant=plant, g=g, pid=pid, attitude=attitude,
                       trajectory=trajectory, **top)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def default_config_text():
    return resources.files("hexafuzz.harness").joinpath("default.cfg").read_text()


def load_config(path=None):
    """Load a run configuration.

    The shipped defaults are applied first, then the file at ``path``. When
    ``path`` is None the ``HEXAFUZZ_CONFIG`` environment variable is used, if
    set.
    """
    cfg = build_config(parse_config_text(default_config_text()))
    if path is None:
        path = os.environ.get(CONFIG_ENV)
    if path is None:
        return cfg
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return build_config(parse_config_text(text), cfg)


def format_config(cfg):
    """Render ``cfg`` back into the flat format (every setting, defaults included)."""
    lines = []

    def fmt(v):
        if isinstance(v, tuple):
            return ",".join(repr(float(x)) for x in v)
        if isinstance(v, float):
            return repr(v)
        return str(v)

    for key, name in TRAJECTORY_KEYS.items():
        lines.append(f"{key} = {fmt(getattr(cfg.trajectory, name))}")
    for name in _field_types(RunConfig):
        if name in GROUPS or name == "trajectory":
            continue
        value = getattr(cfg, name)
        if value is not None:
            lines.append(f"{name} = {fmt(value)}")
    for prefix, (path, cls) in GROUPS.items():
        obj = cfg
        for attr in path:
            obj = getattr(obj, attr)
        for name in _field_types(cls):
            if name not in SHADOWED.get(prefix, ()):
                lines.append(f"{prefix}.{name} = {fmt(getattr(obj, name))}")
    return "\n".join(lines) + "\n"
