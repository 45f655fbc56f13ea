"""
First-order Takagi-Sugeno inference with multivariate Gaussian premises.

Each rule ``i`` has a center ``c_i``, a premise covariance ``S_i`` (stored as
its inverse, alongside ``log det S_i``) and an affine consequent
``y_i(z) = b0_i + b_i . z``. The output is the firing-weighted average

    y_hat = sum_i R_i y_i / sum_i R_i,   R_i = exp(-(z - c_i) S_i^-1 (z - c_i)^T)

The regressor ``psi_ext`` stacks ``psi_i * [1, z]`` per rule, so that
``omega . psi_ext == y_hat`` when ``omega`` concatenates the consequents.
"""

import csv
import math
from dataclasses import dataclass, field
from typing import List, NamedTuple

import numpy as np

from .errors import ContractError, EmptyRuleBaseError

FIRING_FLOOR = 1e-300
LOG_FLOOR = math.log(FIRING_FLOOR)


def spd_inverse_logdet(cov):
    """Inverse and log-determinant of a symmetric positive definite matrix.

    Raises ``ContractError`` if ``cov`` is not positive definite.
    """
    if cov.shape == (2, 2):
        # closed form; numpy's LAPACK path dominates the tick cost at this size
        a, b, d = cov[0, 0], cov[0, 1], cov[1, 1]
        det = a * d - b * b
        if not (a > 0 and det > 0):
            raise ContractError("covariance is not positive definite")
        return np.array([[d, -b], [-b, a]]) / det, math.log(det)
    sign, logdet = np.linalg.slogdet(cov)
    if sign <= 0:
        raise ContractError("covariance is not positive definite")
    inv = np.linalg.inv(cov)
    return 0.5 * (inv + inv.T), float(logdet)


@dataclass
class FuzzyRule:
    center: np.ndarray
    inv_cov: np.ndarray
    consequent: np.ndarray
    log_det_cov: float = None
    _cov: np.ndarray = field(default=None, repr=False, compare=False)

    def __setattr__(self, name, value):
        if name in ("center", "inv_cov"):
            object.__setattr__(self, "_quad", None)
        object.__setattr__(self, name, value)

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        self.inv_cov = np.asarray(self.inv_cov, dtype=float)
        self.consequent = np.asarray(self.consequent, dtype=float)
        n = self.center.shape[0]
        if self.inv_cov.shape != (n, n) or self.consequent.shape != (n + 1,):
            raise ContractError("rule fields have inconsistent dimensions")
        if self.log_det_cov is None:
            if not np.allclose(self.inv_cov, self.inv_cov.T, rtol=0, atol=1e-12):
                raise ContractError("inverse covariance is not symmetric")
            try:
                chol = np.linalg.cholesky(self.inv_cov)
            except np.linalg.LinAlgError:
                raise ContractError("inverse covariance is not positive definite") from None
            self.log_det_cov = -2.0 * float(np.sum(np.log(np.diag(chol))))

    @classmethod
    def from_covariance(cls, center, cov, consequent=None):
        cov = np.asarray(cov, dtype=float)
        n = cov.shape[0]
        if consequent is None:
            consequent = np.zeros(n + 1)
        inv, logdet = spd_inverse_logdet(cov)
        return cls(center, inv, consequent, logdet, cov.copy())

    @property
    def n_inputs(self):
        return self.center.shape[0]

    @property
    def covariance(self):
        if self._cov is None:
            self._cov = np.linalg.inv(self.inv_cov)
        return self._cov.copy()

    def set_covariance(self, cov):
        """Replace the premise covariance, keeping inverse and log-det consistent."""
        cov = 0.5 * (cov + cov.T)
        self.inv_cov, self.log_det_cov = spd_inverse_logdet(cov)
        self._cov = cov

    def output(self, z):
        return float(self.consequent[0] + self.consequent[1:] @ z)


@dataclass
class RuleBase:
    n_inputs: int
    rules: List[FuzzyRule] = field(default_factory=list)

    def __len__(self):
        return len(self.rules)

    def __iter__(self):
        return iter(self.rules)

    def __getitem__(self, i):
        return self.rules[i]

    def append(self, rule):
        if rule.n_inputs != self.n_inputs:
            raise ContractError(f"rule has {rule.n_inputs} inputs, rule base expects {self.n_inputs}")
        self.rules.append(rule)

    def remove(self, indices):
        drop = set(indices)
        self.rules = [r for i, r in enumerate(self.rules) if i not in drop]

    @property
    def consequents(self):
        """Concatenated consequent vector, length ``(n + 1) * R``."""
        if not self.rules:
            return np.zeros(0)
        return np.concatenate([r.consequent for r in self.rules])


class InferenceResult(NamedTuple):
    y: float
    firing: np.ndarray
    psi: np.ndarray
    regressor: np.ndarray


def _quad2(rule, z0, z1):
    quad = rule._quad
    if quad is None:
        (a, b), (b2, d) = rule.inv_cov.tolist()
        c0, c1 = rule.center.tolist()
        quad = rule._quad = (a, b + b2, d, c0, c1)
    a, b, d, c0, c1 = quad
    d0 = z0 - c0
    d1 = z1 - c1
    return -(a * d0 * d0 + b * d0 * d1 + d * d1 * d1)


def log_firing(rule, z):
    if rule.center.shape == (2,):
        # scalar quadratic form; per-call numpy overhead dominates at this size
        return _quad2(rule, float(z[0]), float(z[1]))
    d = z - rule.center
    return -float(d @ rule.inv_cov @ d)


def log_firings(rb, z):
    """``log R_i`` of every rule at ``z``, as a list."""
    if rb.n_inputs == 2:
        z0, z1 = (float(v) for v in z)
        return [_quad2(rule, z0, z1) for rule in rb.rules]
    return [log_firing(rule, z) for rule in rb.rules]


def firing_strength(rule, z):
    """Membership degree ``exp(-d^2)`` of ``z``, floored at ``1e-300``."""
    z = np.asarray(z, dtype=float)
    if z.shape != rule.center.shape:
        raise ContractError(f"input has shape {z.shape}, rule expects {rule.center.shape}")
    v = log_firing(rule, z)
    return math.exp(v) if v > LOG_FLOOR else FIRING_FLOOR


def infer(rb, z, consequents=None):
    """Evaluate the rule base at ``z``.

    If every rule's firing underflows the floor, the normalised weights fall
    back to a one-hot on the Mahalanobis-nearest rule. ``consequents`` may
    supply the concatenated consequent vector when the caller already holds
    it.
    """
    if not rb.rules:
        raise EmptyRuleBaseError("rule base is empty; grow a rule before inference")
    z = np.asarray(z, dtype=float)
    if z.shape != (rb.n_inputs,):
        raise ContractError(f"input has shape {z.shape}, rule base expects ({rb.n_inputs},)")

    log_r = log_firings(rb, z)
    firing = [math.exp(v) if v > LOG_FLOOR else FIRING_FLOOR for v in log_r]
    if max(log_r) < LOG_FLOOR:
        psi = np.zeros(len(rb.rules))
        psi[max(range(len(log_r)), key=log_r.__getitem__)] = 1.0
    else:
        total = math.fsum(firing)
        psi = np.array([f / total for f in firing])

    z1 = np.concatenate(([1.0], z))
    regressor = (psi[:, None] * z1).ravel()
    if consequents is None:
        consequents = rb.consequents
    y = float(regressor @ consequents)
    return InferenceResult(y, np.array(firing), psi, regressor)


def _columns(n):
    cols = ["rule"] + [f"center_{j}" for j in range(n)]
    cols += [f"cov_{j}{j}" for j in range(n)]
    cols += [f"cov_{i}{j}" for i in range(n) for j in range(i + 1, n)]
    cols += [f"b_{j}" for j in range(n + 1)]
    return cols


def dump_rules(rb, fh):
    """Write a CSV snapshot: rule index, center, covariance diagonal then
    upper off-diagonals, consequents."""
    n = rb.n_inputs
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(_columns(n))
    iu = np.triu_indices(n, 1)
    for i, rule in enumerate(rb.rules):
        cov = rule.covariance
        row = [i, *rule.center, *np.diag(cov), *cov[iu], *rule.consequent]
        writer.writerow([row[0]] + [f"{v:.17g}" for v in row[1:]])


def load_rules(fh):
    reader = csv.reader(fh)
    header = next(reader)
    n = sum(1 for c in header if c.startswith("center_"))
    rb = RuleBase(n)
    iu = np.triu_indices(n, 1)
    n_off = len(iu[0])
    for row in reader:
        vals = [float(v) for v in row[1:]]
        center = vals[:n]
        cov = np.diag(vals[n:2 * n])
        cov[iu] = vals[2 * n:2 * n + n_off]
        cov = cov + np.triu(cov, 1).T
        consequent = vals[2 * n + n_off:]
        rb.append(FuzzyRule.from_covariance(center, cov, consequent))
    return rb
