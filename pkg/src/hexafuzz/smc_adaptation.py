"""
Sliding-mode adaptation of the consequent vector.

Sliding surface
    s = e + (a2/a1) edot + (a3/a1) int(e)

Consequent and gain laws, integrated over one tick of length dt
    omega <- omega - dt * a1 * G psi s                    (explicit Euler)
    G     <- G - dt * (G psi)(G psi)^T / (1 + dt psi^T G psi)

The G update is the exact solution of Gdot = -G psi psi^T G with psi held
over the tick (1/G grows linearly along psi), so G stays symmetric positive
definite for any dt. The robustifying term is a boundary-layer saturation
on s.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, NumericalError

ALPHA_FLOOR = 1e-6


@dataclass
class SlidingState:
    alpha: np.ndarray = field(default_factory=lambda: np.array([1e-6, 1e-6, 0.0]))
    gamma: np.ndarray = field(default_factory=lambda: np.array([1e-4, 1e-5, 1e-7]))
    alpha_max: np.ndarray = field(default_factory=lambda: np.array([1.0, 1.0, 0.1]))
    omega: np.ndarray = field(default_factory=lambda: np.zeros(0))
    G: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    e_int: float = 0.0
    k_r: float = 0.02
    phi_b: float = 0.05
    g0: float = 100.0

    def __post_init__(self):
        self.alpha = np.array(self.alpha, dtype=float)
        self.gamma = np.array(self.gamma, dtype=float)
        self.alpha_max = np.array(self.alpha_max, dtype=float)
        self.omega = np.array(self.omega, dtype=float)
        self.G = np.array(self.G, dtype=float).reshape(self.omega.size, self.omega.size)
        self.alpha[0] = max(self.alpha[0], ALPHA_FLOOR)

    @property
    def lambdas(self):
        return self.alpha[1] / self.alpha[0], self.alpha[2] / self.alpha[0]

    def copy(self):
        return SlidingState(self.alpha.copy(), self.gamma.copy(), self.alpha_max.copy(),
                            self.omega.copy(), self.G.copy(), self.e_int,
                            self.k_r, self.phi_b, self.g0)


def sliding_value(e, e_dot, e_int, ss):
    a1, a2, a3 = ss.alpha.tolist()
    if a1 < ALPHA_FLOOR:
        raise ContractError(f"alpha1 = {a1} is below the floor {ALPHA_FLOOR}")
    return e + (a2 / a1) * e_dot + (a3 / a1) * e_int


def adapt_consequents(ss, psi, s, dt):
    """One tick of the consequent and gain-matrix laws (in place; returns ``ss``)."""
    psi = np.asarray(psi, dtype=float)
    if psi.shape != ss.omega.shape or ss.G.shape != (psi.size, psi.size):
        raise ContractError(
            f"regressor {psi.shape}, omega {ss.omega.shape} and G {ss.G.shape} disagree")
    g_psi = ss.G @ psi
    omega = ss.omega - dt * ss.alpha[0] * s * g_psi
    denom = 1.0 + dt * float(psi @ g_psi)
    # a_i*a_j == a_j*a_i exactly, so forming the outer product before scaling
    # keeps a symmetric G bit-for-bit symmetric without re-symmetrising
    G = ss.G - (dt / denom) * np.outer(g_psi, g_psi)
    # a sum is non-finite iff some entry is (or the sum overflows, which is
    # just as fatal); cheaper than an elementwise check every tick
    if not math.isfinite(float(omega.sum())):
        raise NumericalError("non-finite consequent update", "omega")
    if not math.isfinite(float(G.sum())):
        raise NumericalError("non-finite gain-matrix update", "G")
    ss.omega, ss.G = omega, G
    return ss


def add_rule_block(ss, block, donor=None):
    """Extend omega and G for one new rule of ``block = n_inputs + 1`` parameters.

    The new omega block copies the donor's block (zeros without donor); G
    gains a decoupled ``g0 * I`` diagonal block.
    """
    n_rules = ss.omega.size // block
    if donor is None:
        new = np.zeros(block)
    else:
        if not 0 <= donor < n_rules:
            raise ContractError(f"donor index {donor} out of range for {n_rules} rules")
        new = ss.omega[donor * block:(donor + 1) * block].copy()
    size = ss.omega.size
    G = np.zeros((size + block, size + block))
    G[:size, :size] = ss.G
    G[size:, size:] = ss.g0 * np.eye(block)
    ss.omega = np.concatenate([ss.omega, new])
    ss.G = G
    return ss


def remove_rule_blocks(ss, indices, block):
    """Delete the omega entries and G rows/columns of the given rules."""
    n_rules = ss.omega.size // block
    for i in indices:
        if not 0 <= i < n_rules:
            raise ContractError(f"rule index {i} out of range for {n_rules} rules")
    drop = set(indices)
    keep = np.concatenate([np.arange(i * block, (i + 1) * block)
                           for i in range(n_rules) if i not in drop] or [np.zeros(0, int)])
    ss.omega = ss.omega[keep]
    ss.G = ss.G[np.ix_(keep, keep)]
    return ss


def resize_for_rules(ss, block, removed=(), donors=()):
    """Drop the blocks of ``removed`` rules, then append one block per entry of
    ``donors`` (a donor rule index, or None for a zero block)."""
    if removed:
        remove_rule_blocks(ss, removed, block)
    for donor in donors:
        add_rule_block(ss, block, donor)
    return ss


def adapt_sliding_params(ss, s, e, e_dot, dt):
    """Self-organising surface weights: each alpha grows with its own drive.

    ``a1 += dt g1 |s|``, ``a2 += dt g2 |s edot|``, ``a3 += dt g3 |s e|``,
    clamped to ``[floor, alpha_max]``.
    """
    s, e, e_dot = float(s), float(e), float(e_dot)
    drive = (abs(s), abs(s * e_dot), abs(s * e))
    alpha = [min(a + dt * g * d, hi) for a, g, d, hi
             in zip(ss.alpha.tolist(), ss.gamma.tolist(), drive, ss.alpha_max.tolist())]
    alpha[0] = max(alpha[0], ALPHA_FLOOR)
    ss.alpha = np.array(alpha)
    return ss


def robustifying_term(s, ss):
    """``-k_r * sat(s / phi_b)``."""
    if not ss.phi_b > 0:
        raise ContractError("boundary-layer width must be > 0")
    return -ss.k_r * max(-1.0, min(1.0, s / ss.phi_b))


def min_gain_eigenvalue(ss):
    if ss.G.size == 0:
        return math.nan
    return float(np.linalg.eigvalsh(ss.G)[0])
