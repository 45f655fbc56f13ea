"""
Online evolution of a rule base.

* rule growing: a datum-significance test, gated on the running error
  statistics increasing;
* rule pruning: an extended-rule-significance test on each rule's
  weighted volume share;
* premise adaptation: a bounded winner update (GART+-style), which moves
  the best-matching rule towards the sample but limits how much its volume
  may change per update.

Determinants enter as ``det(S)**k``. They are handled through ``log det``
so narrow rules never underflow.
"""

import csv
import math
from collections import deque
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConfigError, ContractError, EmptyRuleBaseError
from .fuzzy_inference import FuzzyRule, log_firings, spd_inverse_logdet

EVENT_HEADER = ("t", "kind", "rule_idx", "metric")


@dataclass(frozen=True)
class ErrorStats:
    n: int = 0
    mean: float = 0.0
    var: float = 0.0
    prev_mean: float = 0.0
    prev_var: float = 0.0

    @property
    def increasing(self):
        return (self.mean + self.var) - (self.prev_mean + self.prev_var) > 0


@dataclass(frozen=True)
class EvolutionConfig:
    growth_threshold: float = 0.1
    delta: float = 0.1
    learning_rate: float = 0.05
    vigilance: float = 0.0
    logdet_clip: float = 0.05
    overlap_factor: float = 0.5
    initial_width: float = 0.5
    min_width: float = 0.05
    min_rules: int = 1
    eta_window: int = 200
    exponent: str = "literal"   # "literal": det**k, "root": det**(1/k)
    eta_mode: str = "firing"    # "firing": windowed mean weight, "volume": eta = 1

    def __post_init__(self):
        if not 0 < self.growth_threshold < 1:
            raise ConfigError("growth_threshold must lie in (0, 1)")
        if not 1e-4 <= self.delta <= 1:
            raise ConfigError("delta must lie in [0.0001, 1]")
        if not 0 < self.learning_rate <= 1:
            raise ConfigError("learning_rate must lie in (0, 1]")
        if not 0 <= self.vigilance < 1:
            raise ConfigError("vigilance must lie in [0, 1)")
        if not self.logdet_clip > 0:
            raise ConfigError("logdet_clip must be > 0")
        if not (self.overlap_factor > 0 and self.initial_width > 0 and self.min_width > 0):
            raise ConfigError("rule widths must be > 0")
        if self.min_rules < 1:
            raise ConfigError("min_rules must be >= 1")
        if self.exponent not in ("literal", "root"):
            raise ConfigError("exponent must be 'literal' or 'root'")
        if self.eta_mode not in ("firing", "volume"):
            raise ConfigError("eta_mode must be 'firing' or 'volume'")

    @property
    def k_e(self):
        return 0.1 * self.delta

    def power(self, n_inputs):
        return float(n_inputs) if self.exponent == "literal" else 1.0 / n_inputs


class EvolutionEvent(NamedTuple):
    t: float
    kind: str   # "grow" | "prune" | "adapt-winner"
    rule_idx: int
    metric: float


class GrowthDecision(NamedTuple):
    grow: bool
    d_sig: float
    width: float


class WinnerUpdate(NamedTuple):
    index: int
    delta_logdet: float
    updated: bool


def update_error_stats(st, e_rn):
    """Recursive mean and variance of the error magnitude."""
    e = abs(float(e_rn))
    n = st.n + 1
    a = (n - 1) / n
    mean = a * st.mean + e / n
    var = a * st.var + (e - st.mean) ** 2 / n
    return ErrorStats(n, mean, var, st.mean, st.var)


def candidate_width(rb, z, cfg):
    """Isotropic standard deviation a new rule at ``z`` would get."""
    if not len(rb):
        return cfg.initial_width
    zl = [float(v) for v in z]
    dist = min(math.dist(zl, r.center.tolist()) for r in rb)
    return max(cfg.overlap_factor * dist, cfg.min_width)


def _volume_shares(log_dets, power):
    # plain floats: rule bases are small and numpy call overhead dominates
    weighted = [power * float(v) for v in log_dets]
    top = max(weighted)
    w = [math.exp(v - top) for v in weighted]
    total = math.fsum(w)
    return np.array([v / total for v in w])


def growth_check(rb, z, st, cfg):
    """Decide whether ``z`` deserves a new rule.

    An empty rule base always grows. Otherwise the error-statistics gate
    must hold first; then the candidate's share of ``sum det(S)**k``
    (candidate included) must reach ``growth_threshold``.
    """
    z = np.asarray(z, dtype=float)
    if not len(rb):
        return GrowthDecision(True, 1.0, cfg.initial_width)
    if not st.increasing:
        return GrowthDecision(False, 0.0, math.nan)
    width = candidate_width(rb, z, cfg)
    cand_logdet = rb.n_inputs * math.log(width * width)
    shares = _volume_shares([r.log_det_cov for r in rb] + [cand_logdet], cfg.power(rb.n_inputs))
    d_sig = float(shares[-1])
    return GrowthDecision(d_sig >= cfg.growth_threshold, d_sig, width)


def add_rule(rb, z, cfg, width=None):
    """Append a rule centred at ``z``; returns the donor rule index (None if first).

    The consequent is copied from the Euclidean-nearest rule (the donor) so
    the output stays continuous across the insertion.
    """
    z = np.asarray(z, dtype=float)
    if width is None:
        width = candidate_width(rb, z, cfg)
    n = rb.n_inputs
    donor = None
    consequent = np.zeros(n + 1)
    if len(rb):
        zl = z.tolist()
        donor = int(np.argmin([math.dist(zl, r.center.tolist()) for r in rb]))
        consequent = rb[donor].consequent.copy()
    rb.append(FuzzyRule.from_covariance(z.copy(), width * width * np.eye(n), consequent))
    return donor


def prune_check(rb, cfg, eta=None):
    """Rules whose influence ``eta_i * det(S_i)**k / sum_j det(S_j)**k`` is at most ``k_e``.

    Returns a list of ``(index, E_inf)``. The rule base is never pruned below
    ``cfg.min_rules``; when too many rules qualify, the most influential of
    them are kept.
    """
    if not len(rb):
        raise EmptyRuleBaseError("prune_check needs at least one rule")
    if len(rb) <= cfg.min_rules:
        return []
    if eta is None or cfg.eta_mode == "volume":
        eta = np.ones(len(rb))
    shares = _volume_shares([r.log_det_cov for r in rb], cfg.power(rb.n_inputs))
    e_inf = np.asarray(eta, dtype=float) * shares
    weak = [i for i in range(len(rb)) if e_inf[i] <= cfg.k_e]
    budget = len(rb) - cfg.min_rules
    if len(weak) > budget:
        weak = sorted(weak, key=lambda i: (e_inf[i], i))[:budget]
    return [(i, float(e_inf[i])) for i in sorted(weak)]


def gart_update_winner(rb, z, cfg):
    """Bounded winner update of premise parameters.

    The winner (highest firing) moves ``learning_rate`` of the way to ``z``;
    its covariance blends towards ``d d^T + min_width**2 I`` at the same
    rate. If the log-determinant would change by more than ``logdet_clip``,
    the covariance is rescaled so the change equals the clip exactly.
    """
    if not len(rb):
        raise EmptyRuleBaseError("gart_update_winner needs at least one rule")
    z = np.asarray(z, dtype=float)
    logs = log_firings(rb, z)
    win = max(range(len(logs)), key=logs.__getitem__)
    if math.exp(logs[win]) < cfg.vigilance:
        return WinnerUpdate(win, 0.0, False)

    rule = rb[win]
    beta = cfg.learning_rate
    n = rb.n_inputs
    if n == 2:
        return _gart_update_2d(rule, win, z, beta, cfg)
    d = z - rule.center
    old_cov = rule.covariance
    new_cov = (1.0 - beta) * old_cov + beta * d[:, None] * d
    new_cov.flat[::n + 1] += beta * cfg.min_width ** 2
    new_cov = 0.5 * (new_cov + new_cov.T)
    new_inv, new_logdet = spd_inverse_logdet(new_cov)
    old_logdet = rule.log_det_cov
    change = new_logdet - old_logdet
    if abs(change) > cfg.logdet_clip:
        target = math.copysign(cfg.logdet_clip, change)
        scale = math.exp((target - change) / n)
        new_cov = new_cov * scale
        new_inv = new_inv / scale
        new_logdet = old_logdet + target
    rule.center = rule.center + beta * d
    rule.inv_cov, rule.log_det_cov, rule._cov = new_inv, new_logdet, new_cov
    return WinnerUpdate(win, new_logdet - old_logdet, True)


def _gart_update_2d(rule, win, z, beta, cfg):
    """``gart_update_winner`` for two inputs in plain floats (same arithmetic)."""
    c0, c1 = rule.center.tolist()
    d0 = float(z[0]) - c0
    d1 = float(z[1]) - c1
    cov = rule._cov if rule._cov is not None else rule.covariance
    (a, b), (_, d) = cov.tolist()
    w2 = beta * cfg.min_width ** 2
    keep = 1.0 - beta
    a = keep * a + beta * d0 * d0 + w2
    b = keep * b + beta * d0 * d1
    d = keep * d + beta * d1 * d1 + w2
    det = a * d - b * b
    if not (a > 0 and det > 0):
        raise ContractError("covariance is not positive definite")
    new_logdet = math.log(det)
    old_logdet = rule.log_det_cov
    change = new_logdet - old_logdet
    if abs(change) > cfg.logdet_clip:
        target = math.copysign(cfg.logdet_clip, change)
        scale = math.exp((target - change) / 2)
        a, b, d = a * scale, b * scale, d * scale
        det = det * scale * scale
        new_logdet = old_logdet + target
    rule.center = np.array([c0 + beta * d0, c1 + beta * d1])
    rule.inv_cov = np.array([[d / det, -b / det], [-b / det, a / det]])
    rule.log_det_cov = new_logdet
    rule._cov = np.array([[a, b], [b, d]])
    return WinnerUpdate(win, new_logdet - old_logdet, True)


class FiringWindow:
    """Per-rule sliding window of normalised firing, for pruning's ``eta``."""

    def __init__(self, size=200):
        self.size = size
        self._hist = []
        self._sums = []

    def __len__(self):
        return len(self._hist)

    def add_rule(self):
        self._hist.append(deque(maxlen=self.size))
        self._sums.append(0.0)

    def remove(self, indices):
        drop = set(indices)
        self._hist = [h for i, h in enumerate(self._hist) if i not in drop]
        self._sums = [s for i, s in enumerate(self._sums) if i not in drop]

    def push(self, psi):
        sums = self._sums
        for i, w in enumerate(np.asarray(psi, dtype=float).tolist()):
            h = self._hist[i]
            if len(h) == h.maxlen:
                sums[i] -= h[0]
            h.append(w)
            sums[i] += w

    def eta(self):
        return np.array([s / len(h) if len(h) else 1.0 for s, h in zip(self._sums, self._hist)])


def write_events(events, fh):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(EVENT_HEADER)
    for ev in events:
        writer.writerow([f"{ev.t:.17g}", ev.kind, ev.rule_idx, f"{ev.metric:.17g}"])


def read_events(fh):
    reader = csv.reader(fh)
    header = tuple(next(reader))
    if header != EVENT_HEADER:
        raise ValueError(f"unexpected event log header {header}")
    return [EvolutionEvent(float(t), k, int(i), float(m)) for t, k, i, m in reader]
