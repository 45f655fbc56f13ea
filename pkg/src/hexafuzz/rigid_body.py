"""
6-DOF rigid-body dynamics with quaternion attitude.

Axes follow the aircraft convention: inertial x north, y east, z down; body
x forward, y right, z down. The xz body plane is a plane of symmetry, so
only the I_xz product of inertia is kept.

State vector layout (13,)
-------------------------
    0-2   X, Y, Z      inertial position          [m]
    3-5   u, v, w      body-axis velocity         [m/s]
    6-8   p, q, r      body-axis rates            [rad/s]
    9-12  q0..q3       attitude quaternion, scalar first
"""

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ConfigError, NumericalError

STATE_FIELDS = ("X", "Y", "Z", "u", "v", "w", "p", "q", "r", "q0", "q1", "q2", "q3")


@dataclass
class RigidBodyState:
    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    rates: np.ndarray = field(default_factory=lambda: np.zeros(3))
    quaternion: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))

    def to_vector(self):
        return np.concatenate([self.position, self.velocity, self.rates, self.quaternion])

    @classmethod
    def from_vector(cls, x):
        x = np.asarray(x, dtype=float)
        return cls(x[0:3].copy(), x[3:6].copy(), x[6:9].copy(), x[9:13].copy())


@dataclass(frozen=True)
class InertiaParams:
    """Mass properties. Defaults are the hexacopter's published values."""

    m: float = 3.0
    I_x: float = 0.04
    I_y: float = 0.04
    I_z: float = 0.06
    I_xz: float = 0.0
    g: float = 9.81

    def __post_init__(self):
        if not self.m > 0:
            raise ConfigError("mass must be > 0")
        if not (self.I_x > 0 and self.I_y > 0 and self.I_z > 0):
            raise ConfigError("principal inertias must be > 0")
        if not self.I_x * self.I_z - self.I_xz ** 2 > 0:
            raise ConfigError("singular roll/yaw inertia coupling: I_x*I_z - I_xz**2 <= 0")


class WrenchInput(NamedTuple):
    """Body-axis forces [N] and moments [N m]. Gravity is the caller's job."""

    F_x: float = 0.0
    F_y: float = 0.0
    F_z: float = 0.0
    L: float = 0.0
    M: float = 0.0
    N: float = 0.0


def euler_to_quaternion(phi, theta, psi):
    """Roll-pitch-yaw (ZYX) angles to a unit quaternion."""
    cf, sf = math.cos(phi / 2), math.sin(phi / 2)
    ct, st = math.cos(theta / 2), math.sin(theta / 2)
    cp, sp = math.cos(psi / 2), math.sin(psi / 2)
    return np.array([
        cf * ct * cp + sf * st * sp,
        sf * ct * cp - cf * st * sp,
        cf * st * cp + sf * ct * sp,
        cf * ct * sp - sf * st * cp,
    ])


def quaternion_to_euler(q):
    q0, q1, q2, q3 = (float(c) for c in q)
    phi = math.atan2(2.0 * (q0 * q1 + q2 * q3), 1.0 - 2.0 * (q1 * q1 + q2 * q2))
    s = max(-1.0, min(1.0, 2.0 * (q0 * q2 - q1 * q3)))
    theta = math.asin(s)
    psi = math.atan2(2.0 * (q0 * q3 + q1 * q2), 1.0 - 2.0 * (q2 * q2 + q3 * q3))
    return phi, theta, psi


def omega_matrix(p, q, r):
    return np.array([
        [0.0, p, q, r],
        [-p, 0.0, -r, q],
        [-q, r, 0.0, -p],
        [-r, -q, p, 0.0],
    ])


def quaternion_derivative(quat, p, q, r):
    """``qdot = -1/2 * Omega(p, q, r) @ quat``."""
    return -0.5 * omega_matrix(p, q, r) @ np.asarray(quat, dtype=float)


def rotation_matrix(quat):
    """Body-to-inertial direction cosine matrix ``B`` (``Xdot = B @ [u, v, w]``)."""
    q0, q1, q2, q3 = (float(c) for c in quat)
    return np.array([
        [q0*q0 + q1*q1 - q2*q2 - q3*q3, 2*(q1*q2 - q0*q3), 2*(q1*q3 + q0*q2)],
        [2*(q1*q2 + q0*q3), q0*q0 - q1*q1 + q2*q2 - q3*q3, 2*(q2*q3 - q0*q1)],
        [2*(q1*q3 - q0*q2), 2*(q2*q3 + q0*q1), q0*q0 - q1*q1 - q2*q2 + q3*q3],
    ])


def gravity_body(quat, m, g):
    """Weight ``m g`` expressed in body axes (inertial z is down)."""
    q0, q1, q2, q3 = (float(c) for c in quat)
    w = m * g
    return (w * 2*(q1*q3 - q0*q2), w * 2*(q2*q3 + q0*q1), w * (q0*q0 - q1*q1 - q2*q2 + q3*q3))


def _derivatives(x, wrench, J):
    return np.array(_derivative_list(x.tolist(), wrench, J))


def _derivative_list(x, wrench, J):
    X, Y, Z, u, v, w, p, q, r, q0, q1, q2, q3 = x
    Fx, Fy, Fz, L, M, N = wrench
    m, I_x, I_y, I_z, I_xz = J.m, J.I_x, J.I_y, J.I_z, J.I_xz

    du = Fx / m - q * w + r * v
    dv = Fy / m - r * u + p * w
    dw = Fz / m - p * v + q * u

    a = L - q * r * (I_z - I_y) + I_xz * p * q
    b = N - p * q * (I_y - I_x) - I_xz * q * r
    det = I_x * I_z - I_xz * I_xz
    dp = (I_z * a + I_xz * b) / det
    dr = (I_xz * a + I_x * b) / det
    dq = (M - r * p * (I_x - I_z) - I_xz * (p * p - r * r)) / I_y

    dX = (q0*q0 + q1*q1 - q2*q2 - q3*q3) * u + 2*(q1*q2 - q0*q3) * v + 2*(q1*q3 + q0*q2) * w
    dY = 2*(q1*q2 + q0*q3) * u + (q0*q0 - q1*q1 + q2*q2 - q3*q3) * v + 2*(q2*q3 - q0*q1) * w
    dZ = 2*(q1*q3 - q0*q2) * u + 2*(q2*q3 + q0*q1) * v + (q0*q0 - q1*q1 - q2*q2 + q3*q3) * w

    dq0 = -0.5 * (p * q1 + q * q2 + r * q3)
    dq1 = 0.5 * (p * q0 + r * q2 - q * q3)
    dq2 = 0.5 * (q * q0 - r * q1 + p * q3)
    dq3 = 0.5 * (r * q0 + q * q1 - p * q2)

    return [dX, dY, dZ, du, dv, dw, dp, dq, dr, dq0, dq1, dq2, dq3]


def body_derivatives(s, wrench, J):
    """Time derivative of the 13-element state vector (see module docstring)."""
    if not J.I_x * J.I_z - J.I_xz ** 2 > 0:
        raise ConfigError("singular roll/yaw inertia coupling")
    return _derivatives(s.to_vector(), tuple(wrench), J)


def rk4_vector(x, wrench, J, dt):
    """One RK4 step on the raw state vector, wrench held constant.

    The quaternion is renormalised afterwards.
    """
    # plain-float stages: a 13-vector is too small for numpy to pay off
    wrench = tuple(float(w) for w in wrench)
    x0 = np.asarray(x, dtype=float).tolist()
    h = 0.5 * dt
    k1 = _derivative_list(x0, wrench, J)
    k2 = _derivative_list([a + h * b for a, b in zip(x0, k1)], wrench, J)
    k3 = _derivative_list([a + h * b for a, b in zip(x0, k2)], wrench, J)
    k4 = _derivative_list([a + dt * b for a, b in zip(x0, k3)], wrench, J)
    w6 = dt / 6.0
    x_new = np.array([a + w6 * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
                      for a, b1, b2, b3, b4 in zip(x0, k1, k2, k3, k4)])
    bad = ~np.isfinite(x_new)
    if bad.any():
        name = STATE_FIELDS[int(np.flatnonzero(bad)[0])]
        raise NumericalError(f"non-finite state component {name!r} after step", name)
    x_new[9:13] /= math.sqrt(float(x_new[9:13] @ x_new[9:13]))
    return x_new


def step(s, wrench, J, dt):
    if not dt > 0:
        raise ValueError("dt must be > 0")
    return RigidBodyState.from_vector(rk4_vector(s.to_vector(), wrench, J, dt))
