"""Closed-loop simulation: reference -> controller -> mixer -> plant, logged per step."""

import csv
import io
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import List, Optional

import numpy as np

from ..controllers import GController, PidController, attitude_hold
from ..errors import HexaFuzzError, NumericalError
from ..fuzzy_inference import dump_rules
from ..plant import Hexacopter, mix
from ..smc_adaptation import min_gain_eigenvalue
from ..structure_learning import write_events
from .trajectories import reference

log = logging.getLogger(__name__)

LOG_HEADER = ("t", "z_ref", "z", "e", "u", "rule_count", "s_h", "alpha1", "phi", "theta")
TELEMETRY_HEADER = ("t", "s_h", "alpha1", "alpha2", "alpha3", "rule_count", "g_min_eig")
TELEMETRY_EVERY = 100


@dataclass
class SimLog:
    rows: List[tuple] = field(default_factory=list)
    telemetry: List[tuple] = field(default_factory=list)
    events: list = field(default_factory=list)
    error: Optional[str] = None
    error_kind: Optional[str] = None
    mixer_saturations: int = 0
    gimbal_warnings: int = 0
    controller: object = None

    def column(self, name):
        i = LOG_HEADER.index(name)
        return np.array([row[i] for row in self.rows], dtype=float)

    @property
    def ok(self):
        return self.error is None


def make_controller(cfg):
    ff = cfg.feedforward_value()
    if cfg.controller == "pid":
        return PidController(replace(cfg.pid, feedforward=ff))
    return GController(replace(cfg.g, feedforward=ff))


def run_sim(cfg):
    """Run one closed-loop simulation.

    Numerical failures stop the loop; the partial log is returned with
    ``error`` set.
    """
    plant = Hexacopter(cfg.plant, seed=cfg.seed)
    ctrl = make_controller(cfg)
    sim = SimLog(controller=ctrl)
    dt = cfg.dt
    is_g = isinstance(ctrl, GController)
    out = plant.measure()
    for k in range(cfg.n_steps):
        t = k * dt
        z_ref = reference(cfg.trajectory, t)
        e = z_ref - out.altitude
        try:
            tick = ctrl.step(e, dt)
            roll, pitch, yaw, warn = attitude_hold(out, cfg.attitude, cfg.psi_ref)
            cmd = mix(tick.u, roll, pitch, yaw, cfg.plant)
            sim.rows.append((t, z_ref, out.altitude, e, tick.u, tick.rule_count, tick.s_h,
                             tick.alpha[0], out.phi, out.theta))
            if is_g and k % TELEMETRY_EVERY == 0:
                sim.telemetry.append((t, tick.s_h, *tick.alpha, tick.rule_count,
                                      min_gain_eigenvalue(ctrl.sliding)))
            sim.mixer_saturations += cmd.saturated
            sim.gimbal_warnings += warn
            plant.step(cmd)
            out = plant.measure()
        except (HexaFuzzError, ArithmeticError) as exc:
            sim.error = f"step {k} (t={t:.6g}): {exc}"
            sim.error_kind = "numerical"
            log.error("simulation aborted: %s", sim.error)
            break
    if is_g:
        sim.events = list(ctrl.events)
    return sim


def _fmt(v):
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return f"{float(v):.17g}"


def write_log(sim, fh):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(LOG_HEADER)
    for row in sim.rows:
        writer.writerow([_fmt(v) for v in row])


def read_log(fh):
    reader = csv.reader(fh)
    header = tuple(next(reader))
    if header != LOG_HEADER:
        raise ValueError(f"unexpected log header {header}")
    sim = SimLog()
    for row in reader:
        vals = [float(v) for v in row]
        vals[5] = int(vals[5])
        sim.rows.append(tuple(vals))
    return sim


def log_text(sim):
    buf = io.StringIO()
    write_log(sim, buf)
    return buf.getvalue()


def save_run(sim, out_dir, name="run"):
    """Write the run CSV, plus adaptation telemetry, evolution events and the
    final rule snapshot for G-controller runs. Returns the run CSV path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{name}.csv"
    with open(path, "w", newline="") as fh:
        write_log(sim, fh)
    if isinstance(sim.controller, GController):
        with open(out / f"{name}_adaptation.csv", "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(TELEMETRY_HEADER)
            for row in sim.telemetry:
                writer.writerow([_fmt(v) for v in row])
        with open(out / f"{name}_events.csv", "w", newline="") as fh:
            write_events(sim.events, fh)
        with open(out / f"{name}_rules.csv", "w", newline="") as fh:
            dump_rules(sim.controller.rules, fh)
    if sim.error:
        (out / f"{name}_error.txt").write_text(sim.error + "\n")
    return path
