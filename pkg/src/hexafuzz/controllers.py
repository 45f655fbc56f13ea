"""
Altitude controllers and the shared inner attitude loop.

Both altitude controllers are driven by the tracking error alone
(``e = z_ref - z``, positive means climb) and return a collective pitch
command. Neither reads plant parameters.
"""

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Tuple

import numpy as np

from . import smc_adaptation as smc
from . import structure_learning as sl
from .errors import ConfigError, HexaFuzzError
from .fuzzy_inference import RuleBase, infer
from .smc_adaptation import SlidingState
from .structure_learning import ErrorStats, EvolutionConfig, EvolutionEvent, FiringWindow


class ControllerTick(NamedTuple):
    t: float
    e: float
    e_dot: float
    u: float
    rule_count: int = 0
    s_h: float = 0.0
    alpha: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    integrator: float = 0.0
    saturated: bool = False


class DerivativeFilter:
    """First-order low-pass on the backward difference of a signal."""

    def __init__(self, tau):
        self.tau = tau
        self.prev = None
        self.value = 0.0

    def update(self, x, dt):
        if self.prev is not None:
            raw = (x - self.prev) / dt
            self.value += dt / (self.tau + dt) * (raw - self.value)
        self.prev = x
        return self.value


# --------------------------------------------------------------------------
# PID baseline
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PidGains:
    kp: float = 0.1566
    ki: float = 0.01
    kd: float = 0.0528
    integrator_limit: float = 10.0
    u_min: float = 0.0
    u_max: float = 0.35
    deriv_tau: float = 0.02
    feedforward: float = 0.0

    def __post_init__(self):
        if not self.integrator_limit > 0:
            raise ConfigError("integrator_limit must be > 0")
        if not self.u_min < self.u_max:
            raise ConfigError("u_min must be < u_max")
        if self.deriv_tau < 0:
            raise ConfigError("deriv_tau must be >= 0")


class PidController:
    """PID on the altitude error with conditional-integration anti-windup.

    The integrator is frozen whenever the output is saturated and the error
    would drive it further into saturation.
    """

    def __init__(self, gains):
        self.gains = gains
        self.integral = 0.0
        self.deriv = DerivativeFilter(gains.deriv_tau)
        self.t = 0.0

    def step(self, e, dt):
        if not dt > 0:
            raise ValueError("dt must be > 0")
        g = self.gains
        e_dot = self.deriv.update(e, dt)
        candidate = max(-g.integrator_limit, min(g.integrator_limit, self.integral + e * dt))
        raw = g.feedforward + g.kp * e + g.ki * candidate + g.kd * e_dot
        u = min(max(raw, g.u_min), g.u_max)
        saturated = u != raw
        if not saturated or (raw > g.u_max and e < 0) or (raw < g.u_min and e > 0):
            self.integral = candidate
        else:
            raw = g.feedforward + g.kp * e + g.ki * self.integral + g.kd * e_dot
            u = min(max(raw, g.u_min), g.u_max)
        tick = ControllerTick(self.t, e, e_dot, u, integrator=self.integral, saturated=saturated)
        self.t += dt
        return tick


def pid_step(pid, e, dt):
    return pid.step(e, dt).u


# --------------------------------------------------------------------------
# Inner attitude loop
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class AttitudeGains:
    kp_roll: float = 0.15
    kd_roll: float = 0.024
    kp_pitch: float = 0.15
    kd_pitch: float = 0.024
    kp_yaw: float = 0.23
    kd_yaw: float = 0.12


GIMBAL_WARN = math.radians(80.0)


def attitude_hold(outputs, gains, psi_ref=0.0):
    """PD attitude hold to level with a yaw setpoint.

    Returns ``(roll_cmd, pitch_cmd, yaw_cmd, gimbal_warning)``.
    """
    d_psi = (outputs.psi - psi_ref + math.pi) % (2.0 * math.pi) - math.pi
    roll = -gains.kp_roll * outputs.phi - gains.kd_roll * outputs.p
    pitch = -gains.kp_pitch * outputs.theta - gains.kd_pitch * outputs.q
    yaw = -gains.kp_yaw * d_psi - gains.kd_yaw * outputs.r
    return roll, pitch, yaw, abs(outputs.theta) > GIMBAL_WARN


# --------------------------------------------------------------------------
# Self-evolving neuro-fuzzy controller
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GControllerConfig:
    input_gains: Tuple[float, float] = (1.0, 0.1)
    deriv_tau: float = 0.02
    evolution: EvolutionConfig = field(default_factory=EvolutionConfig)
    alpha0: Tuple[float, float, float] = (1e-6, 1e-6, 0.0)
    gamma: Tuple[float, float, float] = (10.0, 3.0, 1e-7)
    alpha_max: Tuple[float, float, float] = (10.0, 3.0, 1e-3)
    g0: float = 0.1
    k_r: float = 0.15
    phi_b: float = 0.3
    output_gain: float = 1.0
    feedforward: float = 0.0
    u_min: float = 0.0
    u_max: float = 0.35

    def __post_init__(self):
        if len(self.input_gains) != 2:
            raise ConfigError("input_gains needs two entries (error, error rate)")
        if not self.g0 > 0:
            raise ConfigError("g0 must be > 0")
        if not self.phi_b > 0:
            raise ConfigError("phi_b must be > 0")
        if self.k_r < 0:
            raise ConfigError("k_r must be >= 0")
        if not self.u_min < self.u_max:
            raise ConfigError("u_min must be < u_max")


class GControllerError(HexaFuzzError):
    def __init__(self, tick, cause):
        super().__init__(f"G-controller failed at tick {tick}: {cause}")
        self.tick = tick
        self.cause = cause


class GController:
    """Self-evolving fuzzy altitude controller.

    Starts with no rules. Every tick: filter the error rate, update the
    error statistics, grow a rule or adapt the winner, prune, infer, then
    run the sliding-mode consequent and surface-weight laws. The laws are
    written for the measured-minus-desired error, so the controller works
    internally on ``-e``. The surface integral and the consequents are held
    while the output is saturated against the error (the same anti-windup
    as the PID).
    """

    def __init__(self, cfg=None):
        self.cfg = cfg = cfg or GControllerConfig()
        self.rules = RuleBase(2)
        self.block = self.rules.n_inputs + 1
        self.sliding = SlidingState(alpha=cfg.alpha0, gamma=cfg.gamma, alpha_max=cfg.alpha_max,
                                    k_r=cfg.k_r, phi_b=cfg.phi_b, g0=cfg.g0)
        self.stats = ErrorStats()
        self.window = FiringWindow(cfg.evolution.eta_window)
        self.deriv = DerivativeFilter(cfg.deriv_tau)
        self.events = []
        self.t = 0.0
        self.n_ticks = 0
        self._winner = None
        self._sat = 0

    @property
    def rule_count(self):
        return len(self.rules)

    def step(self, e, dt):
        try:
            return self._step(e, dt)
        except HexaFuzzError as exc:
            raise GControllerError(self.n_ticks, exc) from exc

    def _step(self, e, dt):
        if not dt > 0:
            raise ValueError("dt must be > 0")
        cfg, evo, ss = self.cfg, self.cfg.evolution, self.sliding
        t = self.t
        err = -e
        err_dot = self.deriv.update(err, dt)
        z = np.array([cfg.input_gains[0] * err, cfg.input_gains[1] * err_dot])

        self.stats = sl.update_error_stats(self.stats, e)

        decision = sl.growth_check(self.rules, z, self.stats, evo)
        if decision.grow:
            donor = sl.add_rule(self.rules, z, evo, decision.width)
            smc.add_rule_block(ss, self.block, donor)
            self.window.add_rule()
            self.events.append(EvolutionEvent(t, "grow", len(self.rules) - 1, decision.d_sig))
        else:
            upd = sl.gart_update_winner(self.rules, z, evo)
            if upd.updated and upd.index != self._winner:
                self.events.append(EvolutionEvent(t, "adapt-winner", upd.index, upd.delta_logdet))
                self._winner = upd.index
            pruned = sl.prune_check(self.rules, evo, self.window.eta())
            if pruned:
                idx = [i for i, _ in pruned]
                for i, e_inf in pruned:
                    self.events.append(EvolutionEvent(t, "prune", i, e_inf))
                self.rules.remove(idx)
                smc.remove_rule_blocks(ss, idx, self.block)
                self.window.remove(idx)
                self._winner = None

        res = infer(self.rules, z, ss.omega)
        self.window.push(res.psi)

        # conditional integration: hold the surface integral while the last
        # command sat on a bound the error is still pushing against
        # (err < 0 demands more collective)
        if not ((self._sat > 0 and err < 0) or (self._sat < 0 and err > 0)):
            ss.e_int += err * dt
        s = smc.sliding_value(err, err_dot, ss.e_int, ss)
        # same rule for the consequents (s < 0 demands more collective); the
        # gain matrix still adapts so G keeps tracking the excitation
        if (self._sat > 0 and s < 0) or (self._sat < 0 and s > 0):
            smc.adapt_consequents(ss, res.regressor, 0.0, dt)
        else:
            smc.adapt_consequents(ss, res.regressor, s, dt)
        for rule, row in zip(self.rules, ss.omega.reshape(-1, self.block).copy()):
            rule.consequent = row
        smc.adapt_sliding_params(ss, s, err, err_dot, dt)

        raw = float(cfg.feedforward + cfg.output_gain * res.y + smc.robustifying_term(s, ss))
        u = min(max(raw, cfg.u_min), cfg.u_max)
        self._sat = (raw > cfg.u_max) - (raw < cfg.u_min)
        self.n_ticks += 1
        self.t = t + dt
        return ControllerTick(t, e, -err_dot, u, len(self.rules), s,
                              tuple(ss.alpha.tolist()), ss.e_int, u != raw)


def g_control_step(gctrl, e, dt):
    return gctrl.step(e, dt).u
