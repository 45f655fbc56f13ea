"""Side-by-side controller comparison on matched runs."""

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from typing import List, NamedTuple

from ..errors import ConfigError
from .metrics import METRIC_FIELDS, Metrics, compute_metrics
from .runner import run_sim
from .trajectories import Trajectory

TABLE_HEADER = ("trajectory", "controller") + METRIC_FIELDS + ("error",)

# the four reference shapes of the comparison suite; sawtooth can stand in
# for triangle
SUITE = (
    Trajectory("constant", 1.0),
    Trajectory("step", 2.0, step_times=(0.0, 5.0)),
    Trajectory("sine", 2.0, 0.1),
    Trajectory("triangle", 2.0, 0.1),
)


class ComparisonRow(NamedTuple):
    trajectory: str
    controller: str
    metrics: Metrics
    error: str = ""


def _run_one(cfg):
    sim = run_sim(cfg)
    if not sim.rows:
        return ComparisonRow(cfg.trajectory.kind, cfg.controller,
                             Metrics(*(float("nan"),) * 4, settled=False), sim.error or "")
    return ComparisonRow(cfg.trajectory.kind, cfg.controller,
                         compute_metrics(sim, cfg.trajectory), sim.error or "")


def _check_matched(cfgs):
    first = cfgs[0]
    for cfg in cfgs[1:]:
        if cfg.trajectory != first.trajectory:
            raise ConfigError("compared runs must share the reference trajectory")
        if cfg.plant != first.plant:
            raise ConfigError("compared runs must share the plant")
        if cfg.duration != first.duration or cfg.dt != first.dt:
            raise ConfigError("compared runs must share duration and dt")


def compare(cfgs, workers=1):
    """One metrics row per config. Configs must be matched (same
    trajectory, plant, duration and dt).

    ``workers > 1`` runs the simulations in a process pool; results keep the
    input order either way.
    """
    cfgs = list(cfgs)
    if not cfgs:
        raise ConfigError("compare needs at least one config")
    _check_matched(cfgs)
    return _execute(cfgs, workers)


def _execute(cfgs, workers):
    if workers > 1 and len(cfgs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_one, cfgs))
    return [_run_one(cfg) for cfg in cfgs]


def suite_configs(base, controllers=("pid", "g"), sawtooth=False):
    """Matched configs for every suite trajectory and controller (8 rows by default)."""
    cfgs = []
    for traj in SUITE:
        if sawtooth and traj.kind == "triangle":
            traj = replace(traj, kind="sawtooth")
        for name in controllers:
            cfgs.append(replace(base, controller=name, trajectory=traj))
    return cfgs


def compare_suite(base, controllers=("pid", "g"), sawtooth=False, workers=1):
    """Run the full comparison table: each trajectory against each controller."""
    cfgs = suite_configs(base, controllers, sawtooth)
    if not cfgs:
        raise ConfigError("compare needs at least one controller")
    return _execute(cfgs, workers)


def _cells(row):
    m = row.metrics
    return [row.trajectory, row.controller] + [
        str(getattr(m, f)) if f == "settled" else f"{getattr(m, f):.6g}" for f in METRIC_FIELDS
    ] + [row.error]


def table_csv(rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TABLE_HEADER)
    for row in rows:
        writer.writerow(_cells(row))
    return buf.getvalue()


def table_text(rows: List[ComparisonRow]):
    """Aligned plain-text rendering of the comparison table."""
    header = list(TABLE_HEADER[:-1])
    body = [_cells(r)[:-1] for r in rows]
    widths = [max(len(x) for x in col) for col in zip(header, *body)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(header, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    for cells, row in zip(body, rows):
        line = "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()
        if row.error:
            line += f"  [failed: {row.error}]"
        lines.append(line)
    return "\n".join(lines) + "\n"
