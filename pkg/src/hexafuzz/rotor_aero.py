"""
Per-rotor aerodynamics for a pitch-controlled rotor at constant speed.

Blade-element thrust with a uniform induced velocity, coupled to an
edgewise-flight momentum relation for the induced velocity, plus induced
and profile power and the resulting yaw reaction torque.

Symbols
-------
T        thrust                                  [N]
V_i      mean induced velocity through the disc  [m/s]
V_n      freestream component normal to disc     [m/s] (positive along the
         induced flow, i.e. a climbing rotor has V_n > 0)
V_t      freestream component in the disc plane  [m/s]
V_c      climb speed of the rotor                [m/s]
Omega    rotor angular speed                     [rad/s]
theta0   collective blade pitch                  [rad]
lam      inflow ratio  (V_i + V_n) / (Omega R)
mu       advance ratio  V_t / (Omega R)
"""

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigError, ContractError, DivergenceError

RELAXATION = 0.5
MAX_ITER = 500
TOL = 1e-9


class SpinDirection(enum.IntEnum):
    """Rotor spin sense, seen from below the vehicle.

    The value is the sign of the drag reaction torque the rotor exerts on the
    airframe about body z (z points down).
    """

    CW = 1
    CCW = -1


@dataclass(frozen=True)
class RotorParams:
    blade_radius: float = 0.15
    lift_slope: float = 5.7
    solidity: float = 0.05
    profile_drag: float = 0.011
    induced_correction: float = 1.15
    forward_correction: float = 4.6
    air_density: float = 1.225
    spin_direction: SpinDirection = SpinDirection.CW
    blade_area: float = field(default=None)

    def __post_init__(self):
        if not self.blade_radius > 0:
            raise ConfigError("blade_radius must be > 0")
        if not 0 < self.solidity < 1:
            raise ConfigError("solidity must lie in (0, 1)")
        if not self.air_density > 0:
            raise ConfigError("air_density must be > 0")
        if not self.lift_slope > 0:
            raise ConfigError("lift_slope must be > 0")
        if self.blade_area is None:
            object.__setattr__(self, "blade_area", self.solidity * self.disc_area)
        elif not self.blade_area > 0:
            raise ConfigError("blade_area must be > 0")
        object.__setattr__(self, "spin_direction", SpinDirection(self.spin_direction))

    @cached_property
    def disc_area(self):
        return math.pi * self.blade_radius ** 2


class RotorInflow(NamedTuple):
    V_n: float
    V_t: float
    V_c: float
    omega: float
    theta0: float


class ThrustSolution(NamedTuple):
    thrust: float
    induced_velocity: float

    @property
    def reverse_thrust(self):
        """True when the blade-element solution is negative (stall-region input)."""
        return self.thrust < 0.0


class RotorOutput(NamedTuple):
    thrust: float
    induced_velocity: float
    torque: float
    power: float


def induced_velocity(T, inflow, params):
    """Mean induced velocity for thrust ``T``.

    Solves ``V_i**2 = sqrt((Vh**2/2)**2 + (T/(2 rho A))**2) - Vh**2/2`` where
    ``Vh**2 = V_t**2 + V_n**2`` is the freestream speed seen by the disc. In
    hover this is exactly momentum theory, ``V_i = sqrt(T / (2 rho A))``.
    The algebraically equivalent form ``c / sqrt(hypot(Vh**2/2, c) + Vh**2/2)``
    with ``c = T/(2 rho A)`` avoids cancellation at large freestream speeds and
    underflow at tiny thrusts.
    """
    if T < 0:
        raise ContractError("induced_velocity requires T >= 0")
    if T == 0.0:
        return 0.0
    c = T / (2.0 * params.air_density * params.disc_area)
    half_v2 = 0.5 * (inflow.V_t * inflow.V_t + inflow.V_n * inflow.V_n)
    return c / math.sqrt(math.hypot(half_v2, c) + half_v2)


def blade_element_thrust(theta0, V_i, inflow, params):
    """Closed-form blade-element thrust for a given induced velocity."""
    tip_speed = inflow.omega * params.blade_radius
    lam = (V_i + inflow.V_n) / tip_speed
    mu = inflow.V_t / tip_speed
    k = 0.5 * params.air_density * params.lift_slope * tip_speed ** 2 * params.blade_area
    return k * (theta0 / 3.0 * (1.0 + 1.5 * mu * mu) - 0.5 * lam)


def rotor_thrust(inflow, params, v_i_guess=0.0):
    """Solve thrust and induced velocity jointly.

    Damped fixed-point iteration between the blade-element thrust and the
    induced-velocity relation, with a bracketed root solve as fallback when
    the iteration fails to settle within ``MAX_ITER`` steps. Negative thrust is returned as computed (see
    ``ThrustSolution.reverse_thrust``); the induced velocity is then driven
    by ``|T|``.

    Raises
    ------
    ContractError
        If ``omega <= 0``.
    DivergenceError
        If neither the relaxed iteration nor the bracketed fallback settles.
    """
    if not inflow.omega > 0:
        raise ContractError("rotor_thrust requires omega > 0")
    rho_2a = 2.0 * params.air_density * params.disc_area
    tip_speed = inflow.omega * params.blade_radius
    mu = inflow.V_t / tip_speed
    k = 0.5 * params.air_density * params.lift_slope * tip_speed ** 2 * params.blade_area
    t_pitch = k * inflow.theta0 / 3.0 * (1.0 + 1.5 * mu * mu)
    k_lam = 0.5 * k / tip_speed
    half_v2 = 0.5 * (inflow.V_t * inflow.V_t + inflow.V_n * inflow.V_n)

    def induced(vi):
        c = (t_pitch - k_lam * (vi + inflow.V_n)) / rho_2a
        if c == 0.0:
            return 0.0
        return abs(c) / math.sqrt(math.hypot(half_v2, c) + half_v2)

    # hot loop: ``induced`` inlined
    sqrt, hypot = math.sqrt, math.hypot
    t0 = t_pitch - k_lam * inflow.V_n
    vi = max(float(v_i_guess), 0.0)
    # One Newton step on the starting guess; the relaxed loop below still
    # decides convergence, it just starts closer to the fixed point.
    c = (t0 - k_lam * vi) / rho_2a
    if c != 0.0:
        q = hypot(half_v2, c)
        vi_new = abs(c) / sqrt(q + half_v2)
        denom = 2.0 * q * vi_new * rho_2a
        if denom > 0.0:
            slope = -c * k_lam / denom - 1.0
            if slope < 0.0:
                vi = max(vi - (vi_new - vi) / slope, 0.0)
    for _ in range(MAX_ITER):
        T = t0 - k_lam * vi
        c = T / rho_2a
        vi_new = abs(c) / sqrt(hypot(half_v2, c) + half_v2) if c != 0.0 else 0.0
        if abs(vi_new - vi) < TOL:
            return ThrustSolution(T, vi)
        vi += RELAXATION * (vi_new - vi)

    # The relaxed iteration can oscillate in steep descent. The residual is
    # >= 0 at V_i = 0 and falls without bound, so a bracket always exists.
    def residual(v):
        return induced(v) - v

    hi = max(1.0, 2.0 * vi)
    for _ in range(60):
        if residual(hi) < 0:
            break
        hi *= 2.0
    else:
        raise DivergenceError("thrust/induced-velocity iteration did not converge", vi)
    root = brentq(residual, 0.0, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps, maxiter=MAX_ITER)
    if abs(residual(root)) >= TOL:
        raise DivergenceError("thrust/induced-velocity iteration did not converge", root)
    return ThrustSolution(t_pitch - k_lam * (root + inflow.V_n), root)


def rotor_torque_power(T, V_i, inflow, params):
    """Yaw reaction torque and total shaft power.

    ``P_ind = k_ind T V_i + T V_c`` and
    ``P_0 = (sigma C_D0 / 8) rho A (Omega R)**3 (1 + kappa mu**2)``.

    Returns
    -------
    (torque, power) : tuple of float
        Torque is signed by ``params.spin_direction``.
    """
    if inflow.omega == 0:
        raise ZeroDivisionError("rotor torque is undefined at omega = 0")
    tip_speed = inflow.omega * params.blade_radius
    mu = inflow.V_t / tip_speed
    p_ind = params.induced_correction * T * V_i + T * inflow.V_c
    p_0 = (params.solidity * params.profile_drag / 8.0 * params.air_density
           * params.disc_area * tip_speed ** 3 * (1.0 + params.forward_correction * mu * mu))
    p_tot = p_ind + p_0
    return int(params.spin_direction) * p_tot / inflow.omega, p_tot


def evaluate_rotor(inflow, params, v_i_guess=0.0):
    """Thrust, induced velocity, torque and power in one call."""
    T, vi = rotor_thrust(inflow, params, v_i_guess)
    torque, power = rotor_torque_power(T, vi, inflow, params)
    return RotorOutput(T, vi, torque, power)
