"""Altitude reference trajectories."""

import math
from dataclasses import dataclass
from typing import Tuple

from ..errors import ConfigError

KINDS = ("constant", "step", "sine", "triangle", "sawtooth")
PERIODIC = ("sine", "triangle", "sawtooth")


@dataclass(frozen=True)
class Trajectory:
    kind: str = "constant"
    amplitude: float = 1.0
    frequency: float = 0.1
    step_times: Tuple[float, ...] = (0.0, 5.0)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown trajectory kind {self.kind!r}; expected one of {KINDS}")
        if not self.amplitude > 0:
            raise ConfigError("amplitude must be > 0")
        if self.periodic and not self.frequency > 0:
            raise ConfigError("frequency must be > 0 for periodic references")
        if self.kind == "step" and not self.step_times:
            raise ConfigError("step reference needs at least one step time")
        object.__setattr__(self, "step_times", tuple(float(s) for s in self.step_times))

    @property
    def periodic(self):
        return self.kind in PERIODIC

    @property
    def final_level(self):
        """Level the reference settles at (step-like) or its first extremum (periodic)."""
        return self.amplitude

    @property
    def first_extremum_time(self):
        if self.kind == "sawtooth":
            return 1.0 / self.frequency
        if self.periodic:
            return 0.25 / self.frequency
        return None


def reference(traj, t):
    """Desired altitude at time ``t`` [m].

    ``step`` splits the amplitude evenly over the step times: the default
    ``(0, 5)`` with 2 m gives ``u(t) + u(t - 5)``. ``triangle`` and ``sine``
    start at zero heading up and peak a quarter period in; ``sawtooth`` ramps
    from 0 to the amplitude over each period.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    kind = traj.kind
    A = traj.amplitude
    if kind == "constant":
        return A
    if kind == "step":
        per = A / len(traj.step_times)
        return per * sum(1 for ts in traj.step_times if t >= ts)
    phase = (traj.frequency * t) % 1.0
    if kind == "sine":
        return A * math.sin(2.0 * math.pi * phase)
    if kind == "triangle":
        if phase < 0.25:
            return A * 4.0 * phase
        if phase < 0.75:
            return A * (2.0 - 4.0 * phase)
        return A * (4.0 * phase - 4.0)
    if kind == "sawtooth":
        return A * phase
    raise ConfigError(f"unknown trajectory kind {kind!r}")
