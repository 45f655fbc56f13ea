"""
Tracking metrics computed from a run log.

Step-like references (constant, step) are measured against their final
level A:

rise time      10 % -> 90 % traversal from the initial altitude towards A
settling time  first time after which |z - z_ref| stays within 2 % of A to
               the end of the run; the run duration (and ``settled=False``)
               if the band is never held
rmse           over the whole run

Periodic references (sine, triangle, sawtooth) are measured on the initial
approach, the window up to the first extremum of the reference: rise time
towards the extremum level, settling time within that window. Their rmse
covers the rest of the run, after the approach, so matched runs are scored
over the same samples.

``rmse_steady`` is always the rmse after the settling time (NaN if never
settled).
"""

import math
from dataclasses import dataclass

import numpy as np

from .trajectories import reference

RISE_LO, RISE_HI = 0.1, 0.9
SETTLE_BAND = 0.02


@dataclass(frozen=True)
class Metrics:
    rmse: float
    rise_time: float
    settling_time: float
    peak_overshoot: float
    settled: bool = True
    rmse_steady: float = math.nan


METRIC_FIELDS = ("rmse", "rise_time", "settling_time", "peak_overshoot", "settled", "rmse_steady")


def _first_crossing(z, threshold, rising, start=0):
    hit = (z[start:] >= threshold) if rising else (z[start:] <= threshold)
    idx = np.flatnonzero(hit)
    return None if idx.size == 0 else start + int(idx[0])


def _step(t):
    return float(t[1] - t[0]) if t.size > 1 else 0.0


def rise_time(t, z, level):
    """10 % -> 90 % traversal time from ``z[0]`` towards ``level``.

    If the 90 % mark is never reached the time from the 10 % crossing to the
    last sample is returned (the whole span plus one step if neither is).
    """
    y0 = z[0]
    span = level - y0
    if span == 0:
        return 0.0
    rising = span > 0
    i_lo = _first_crossing(z, y0 + RISE_LO * span, rising)
    if i_lo is None:
        return float(t[-1] - t[0]) + _step(t)
    i_hi = _first_crossing(z, y0 + RISE_HI * span, rising, i_lo)
    if i_hi is None:
        return float(t[-1] - t[i_lo])
    return float(t[i_hi] - t[i_lo])


def settling_time(t, err, level):
    """Returns ``(settling_time, settled)`` for the 2 % band around ``level``."""
    band = SETTLE_BAND * abs(level)
    outside = np.flatnonzero(np.abs(err) > band)
    if outside.size == 0:
        return 0.0, True
    last = int(outside[-1])
    if last == t.size - 1:
        return float(t[-1] - t[0]) + _step(t), False
    return float(t[last + 1] - t[0]), True


def _rms(x):
    return float(np.sqrt(np.mean(x ** 2))) if x.size else math.nan


def compute_metrics(log, traj):
    """Metrics of a ``SimLog`` (or anything with ``column(name)``) against ``traj``."""
    t = log.column("t")
    if t.size == 0:
        raise ValueError("cannot compute metrics of an empty log")
    z_ref = log.column("z_ref")
    z = log.column("z")
    err = z_ref - z
    level = traj.final_level
    rel = t - t[0]
    duration = float(t[-1] - t[0]) + _step(t)

    if traj.periodic:
        approach = rel <= traj.first_extremum_time
        t_rise = rise_time(t[approach], z[approach], level)
        t_settle, settled = settling_time(t[approach], err[approach], level)
        if not settled:
            t_settle = duration
        rmse = _rms(err[~approach])
    else:
        t_rise = rise_time(t, z, level)
        t_settle, settled = settling_time(t, err, level)
        rmse = _rms(err)

    rmse_steady = _rms(err[rel >= t_settle]) if settled else math.nan
    overshoot = max(0.0, float(np.max(z)) - level) / abs(level)
    return Metrics(rmse, t_rise, t_settle, overshoot, settled, rmse_steady)


def check_log_matches(log, traj, tol=1e-9):
    """True if the logged reference is the one ``traj`` generates."""
    t = log.column("t")
    z_ref = log.column("z_ref")
    return all(abs(reference(traj, float(ti)) - zr) <= tol for ti, zr in zip(t, z_ref))
