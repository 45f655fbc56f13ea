"""
Hexacopter plant: six pitch-controlled rotors on a regular hexagon, a
control-mixing box, and the rigid-body integrator.

Rotor 1 sits on the body +x arm; the others follow every 60 degrees towards
+y. Spins alternate CW/CCW so equal pitches cancel in yaw.
"""

import math
from functools import cached_property
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional

import numpy as np
from scipy.optimize import brentq

from . import rigid_body
from .errors import ConfigError
from .rigid_body import InertiaParams, RigidBodyState, WrenchInput
from .rotor_aero import RotorInflow, RotorParams, SpinDirection, rotor_thrust, rotor_torque_power


@dataclass(frozen=True)
class PlantConfig:
    inertia: InertiaParams = field(default_factory=InertiaParams)
    rotor: RotorParams = field(default_factory=RotorParams)
    arm_length: float = 0.35
    n_rotors: int = 6
    rotor_speed: float = 600.0
    dt: float = 1e-3
    pitch_min: float = 0.0
    pitch_max: float = 0.35
    z_noise_std: float = 0.0

    def __post_init__(self):
        if self.n_rotors != 6:
            raise ConfigError("the plant is a hexacopter: n_rotors must be 6")
        if not self.arm_length > 0:
            raise ConfigError("arm_length must be > 0")
        if not self.rotor_speed > 0:
            raise ConfigError("rotor_speed must be > 0")
        if not self.dt > 0:
            raise ConfigError("dt must be > 0")
        if not self.pitch_min < self.pitch_max:
            raise ConfigError("pitch_min must be < pitch_max")
        if self.z_noise_std < 0:
            raise ConfigError("z_noise_std must be >= 0")

    @cached_property
    def arm_angles(self):
        return [i * 2.0 * math.pi / self.n_rotors for i in range(self.n_rotors)]

    @cached_property
    def arm_positions(self):
        """Body-frame (x, y) rotor hub positions, shape (6, 2)."""
        return np.array([[self.arm_length * math.cos(a), self.arm_length * math.sin(a)]
                         for a in self.arm_angles])

    @cached_property
    def spins(self):
        return [SpinDirection.CW if i % 2 == 0 else SpinDirection.CCW
                for i in range(self.n_rotors)]

    @cached_property
    def rotors(self):
        return tuple(replace(self.rotor, spin_direction=s) for s in self.spins)

    @cached_property
    def hubs(self):
        return tuple((float(x), float(y)) for x, y in self.arm_positions)

    @cached_property
    def mix_levers(self):
        """Per-rotor (roll, pitch, yaw) lever arms used by ``mix``, shape (6, 3)."""
        xy = self.arm_positions / self.arm_length
        spin = np.array([int(d) for d in self.spins], dtype=float)
        return np.column_stack([-xy[:, 1], xy[:, 0], spin])

    def rotor_params(self, i):
        return self.rotors[i]


class MixedCommand(NamedTuple):
    pitch: np.ndarray
    saturated: bool = False
    rotor_speed: Optional[np.ndarray] = None  # None -> nominal speed on every rotor

    @classmethod
    def motors_off(cls, n=6):
        return cls(np.zeros(n), False, np.zeros(n))


class PlantOutputs(NamedTuple):
    altitude: float
    phi: float
    theta: float
    psi: float
    climb_rate: float
    p: float
    q: float
    r: float


def mix(thrust_cmd, roll_cmd, pitch_cmd, yaw_cmd, cfg):
    """Control-mixing box: collective + roll/pitch/yaw differentials to per-rotor pitch.

    The roll and pitch levers are the normalised arm coordinates signed so
    that a positive command produces a positive body moment: ``-y/l`` for
    roll, ``+x/l`` for pitch. Yaw uses the spin sign.
    """
    raw = thrust_cmd + cfg.mix_levers @ (roll_cmd, pitch_cmd, yaw_cmd)
    pitch = np.minimum(np.maximum(raw, cfg.pitch_min), cfg.pitch_max)
    return MixedCommand(pitch, bool((pitch != raw).any()))


def rotor_inflows(state_vec, cfg, pitches, speeds):
    """Per-rotor inflow from body velocity plus rate-induced velocity at each hub."""
    u, v, w, p, q, r = np.asarray(state_vec[3:9], dtype=float).tolist()
    pitches = np.asarray(pitches, dtype=float).tolist()
    speeds = np.asarray(speeds, dtype=float).tolist()
    inflows = []
    for i, (x, y) in enumerate(cfg.hubs):
        # hub velocity = body velocity + omega x arm, arm in the body xy plane
        vx = u - r * y
        vy = v + r * x
        vz = w + p * y - q * x
        V_n = -vz
        inflows.append(RotorInflow(V_n, math.hypot(vx, vy), V_n, speeds[i], pitches[i]))
    return inflows


def compute_wrench(state_vec, cmd, cfg, vi_guess=None):
    """Total body wrench (rotors + gravity).

    Returns
    -------
    wrench : WrenchInput
    induced : list of float
        Per-rotor induced velocity, reusable as the next warm start.
    thrusts : list of float
    """
    speeds = cmd.rotor_speed if cmd.rotor_speed is not None else [cfg.rotor_speed] * cfg.n_rotors
    inflows = rotor_inflows(state_vec, cfg, cmd.pitch, speeds)
    pos = cfg.hubs
    J = cfg.inertia
    Fz = L = M = N = 0.0
    induced, thrusts = [], []
    for i, inflow in enumerate(inflows):
        if inflow.omega <= 0:
            induced.append(0.0)
            thrusts.append(0.0)
            continue
        params = cfg.rotors[i]
        guess = vi_guess[i] if vi_guess is not None else 0.0
        T, vi = rotor_thrust(inflow, params, guess)
        torque, _ = rotor_torque_power(T, vi, inflow, params)
        x, y = pos[i]
        Fz -= T
        L -= y * T
        M += x * T
        N += torque
        induced.append(vi)
        thrusts.append(T)
    gx, gy, gz = rigid_body.gravity_body(state_vec[9:13], J.m, J.g)
    return WrenchInput(gx, gy, Fz + gz, L, M, N), induced, thrusts


def outputs_from_vector(x):
    _, _, Z, u, v, w, p, q, r, q0, q1, q2, q3 = np.asarray(x, dtype=float).tolist()
    phi, theta, psi = rigid_body.quaternion_to_euler((q0, q1, q2, q3))
    # inertial Zdot: third row of the body-to-inertial DCM applied to (u, v, w)
    z_dot = (2 * (q1 * q3 - q0 * q2) * u + 2 * (q2 * q3 + q0 * q1) * v
             + (q0 * q0 - q1 * q1 - q2 * q2 + q3 * q3) * w)
    return PlantOutputs(-Z, phi, theta, psi, -z_dot, p, q, r)


def plant_step(state, cmd, cfg, vi_guess=None):
    """Advance the hexacopter by ``cfg.dt``.

    Returns
    -------
    (RigidBodyState, PlantOutputs)
        Altitude and climb rate are positive up (the negated inertial Z).
    """
    x = state.to_vector()
    wrench, _, _ = compute_wrench(x, cmd, cfg, vi_guess)
    x_new = rigid_body.rk4_vector(x, wrench, cfg.inertia, cfg.dt)
    return RigidBodyState.from_vector(x_new), outputs_from_vector(x_new)


def hover_trim(cfg):
    """Collective pitch that holds the vehicle in level, motionless hover."""
    target = cfg.inertia.m * cfg.inertia.g / cfg.n_rotors
    params = cfg.rotor_params(0)

    def excess(theta0):
        return rotor_thrust(RotorInflow(0.0, 0.0, 0.0, cfg.rotor_speed, theta0), params).thrust - target

    if excess(cfg.pitch_max) < 0:
        raise ConfigError("rotors cannot lift the vehicle within the pitch limits")
    return brentq(excess, 0.0, cfg.pitch_max, xtol=1e-14, rtol=1e-14)


class Hexacopter:
    """Stateful plant wrapper: keeps the rotor warm-start cache and the sensor RNG."""

    def __init__(self, cfg, state=None, seed=0):
        self.cfg = cfg
        self._out = None
        self.x = (state or RigidBodyState()).to_vector()
        self._vi = None
        self._rng = np.random.default_rng(seed)
        self.last_thrusts = [0.0] * cfg.n_rotors

    @property
    def x(self):
        """Raw 13-element state vector."""
        return self._x

    @x.setter
    def x(self, value):
        self._x = np.asarray(value, dtype=float)
        self._out = None

    @property
    def state(self):
        return RigidBodyState.from_vector(self.x)

    def outputs(self):
        if self._out is None:
            self._out = outputs_from_vector(self.x)
        return self._out

    def measure(self):
        """Sensor view of the outputs (optional additive noise on altitude)."""
        out = self.outputs()
        if self.cfg.z_noise_std > 0:
            out = out._replace(altitude=out.altitude + self._rng.normal(0.0, self.cfg.z_noise_std))
        return out

    def step(self, cmd):
        wrench, self._vi, self.last_thrusts = compute_wrench(self.x, cmd, self.cfg, self._vi)
        self.x = rigid_body.rk4_vector(self.x, wrench, self.cfg.inertia, self.cfg.dt)
        return self.outputs()
