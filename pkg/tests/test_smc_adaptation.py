import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hexafuzz.errors import ContractError, NumericalError
from hexafuzz.smc_adaptation import (
    ALPHA_FLOOR,
    SlidingState,
    adapt_consequents,
    adapt_sliding_params,
    add_rule_block,
    min_gain_eigenvalue,
    remove_rule_blocks,
    resize_for_rules,
    robustifying_term,
    sliding_value,
)


def state(omega, G, **kw):
    return SlidingState(omega=np.array(omega, float), G=np.array(G, float), **kw)


def test_default_sliding_weights_start_small():
    ss = SlidingState()
    assert ss.alpha.tolist() == [1e-6, 1e-6, 0.0]


def test_sliding_value_examples():
    ss = SlidingState(alpha=[1e-6, 2e-6, 0.0])
    assert sliding_value(0.0, 0.0, 0.0, ss) == 0.0
    assert sliding_value(0.1, -0.05, 3.0, ss) == pytest.approx(0.0, abs=1e-16)
    flat = SlidingState(alpha=[0.5, 0.0, 0.0])
    assert sliding_value(0.3, 7.0, -2.0, flat) == 0.3


def test_sliding_value_with_integral_term():
    ss = SlidingState(alpha=[2.0, 1.0, 0.5])
    assert sliding_value(1.0, 2.0, 4.0, ss) == 1.0 + 1.0 + 1.0


def test_sliding_value_enforces_floor():
    ss = SlidingState()
    ss.alpha[0] = 1e-9
    with pytest.raises(ContractError):
        sliding_value(0.1, 0.0, 0.0, ss)


def test_floor_applied_on_construction():
    assert SlidingState(alpha=[0.0, 0.0, 0.0]).alpha[0] == ALPHA_FLOOR


def test_zero_regressor_changes_nothing():
    ss = state([0.1, -0.2, 0.3], np.eye(3))
    adapt_consequents(ss, np.zeros(3), 5.0, 0.01)
    assert ss.omega.tolist() == [0.1, -0.2, 0.3]
    assert np.array_equal(ss.G, np.eye(3))


def test_zero_surface_still_contracts_gain():
    ss = state([0.1, -0.2, 0.3], np.eye(3))
    adapt_consequents(ss, np.array([1.0, 0.5, 0.0]), 0.0, 0.01)
    assert ss.omega.tolist() == [0.1, -0.2, 0.3]
    assert ss.G[0, 0] < 1.0


def test_scalar_gain_one_step():
    ss = state([0.0], [[1.0]])
    adapt_consequents(ss, np.array([1.0]), 0.0, 1.0)
    assert ss.G[0, 0] == 0.5


@pytest.mark.parametrize("g0, psi, dt", [(100.0, 1.0, 1e-3), (1.0, 0.3, 0.01), (0.1, 2.0, 1e-3)])
def test_scalar_gain_follows_closed_form(g0, psi, dt):
    ss = state([0.0], [[g0]])
    for k in range(1, 1001):
        adapt_consequents(ss, np.array([psi]), 0.0, dt)
        assert abs(ss.G[0, 0] - g0 / (1 + g0 * psi * psi * k * dt)) < 1e-6


def test_omega_update_arithmetic():
    ss = state([1.0, 2.0], np.diag([2.0, 3.0]), alpha=[0.5, 0.0, 0.0])
    adapt_consequents(ss, np.array([1.0, -1.0]), 0.4, 0.1)
    # omega - dt*a1*G psi s = (1, 2) - 0.1*0.5*0.4*(2, -3)
    assert np.allclose(ss.omega, [0.96, 2.06], rtol=1e-15)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(-3, 3).filter(lambda s: abs(s) > 1e-6))
def test_omega_moves_against_gain_times_surface(seed, s):
    rng = np.random.default_rng(seed)
    n = 6
    A = rng.normal(size=(n, n))
    ss = state(rng.normal(size=n), A @ A.T + np.eye(n), alpha=[0.7, 0.1, 0.0])
    psi = rng.normal(size=n)
    before = ss.omega.copy()
    g_psi = ss.G @ psi
    adapt_consequents(ss, psi, s, 1e-3)
    moved = ss.omega - before
    nz = np.abs(g_psi) > 1e-9
    assert np.array_equal(np.sign(moved[nz]), -np.sign(0.7 * g_psi[nz] * s))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_excitation_energy_non_increasing(seed):
    rng = np.random.default_rng(seed)
    n = 6
    A = rng.normal(size=(n, n))
    ss = state(np.zeros(n), A @ A.T + 0.1 * np.eye(n))
    psi = rng.normal(size=n)
    prev = psi @ ss.G @ psi
    for _ in range(50):
        adapt_consequents(ss, psi, 0.1, 0.01)
        cur = psi @ ss.G @ psi
        assert cur <= prev * (1 + 1e-12)
        prev = cur


def test_dimension_mismatch_is_contract_error():
    with pytest.raises(ContractError):
        adapt_consequents(state([0.0, 0.0], np.eye(2)), np.ones(3), 0.1, 1e-3)


def test_non_finite_update_names_term():
    ss = state([0.0], [[1.0]])
    with pytest.raises(NumericalError) as exc:
        adapt_consequents(ss, np.array([1.0]), math.inf, 1e-3)
    assert exc.value.field == "omega"


def test_grow_one_to_two_rules():
    ss = state([1.0, 2.0, 3.0], 5 * np.eye(3), g0=0.7)
    resize_for_rules(ss, 3, donors=[0])
    assert ss.omega.tolist() == [1.0, 2.0, 3.0, 1.0, 2.0, 3.0]
    assert np.array_equal(ss.G[3:, 3:], 0.7 * np.eye(3))
    assert not ss.G[:3, 3:].any() and not ss.G[3:, :3].any()
    resize_for_rules(ss, 3, donors=[None])
    assert ss.omega[6:].tolist() == [0.0, 0.0, 0.0]


def test_prune_first_of_two_rules():
    G = np.arange(36, dtype=float).reshape(6, 6)
    G = G + G.T
    ss = state([1, 2, 3, 4, 5, 6], G)
    resize_for_rules(ss, 3, removed=[0])
    assert ss.omega.tolist() == [4.0, 5.0, 6.0]
    assert np.array_equal(ss.G, G[3:, 3:])


def test_resize_index_errors():
    ss = state([1, 2, 3], np.eye(3))
    with pytest.raises(ContractError):
        add_rule_block(ss, 3, donor=1)
    with pytest.raises(ContractError):
        remove_rule_blocks(ss, [2], 3)


def test_remove_everything_leaves_empty_state():
    ss = state([1, 2, 3], np.eye(3))
    remove_rule_blocks(ss, [0], 3)
    assert ss.omega.shape == (0,) and ss.G.shape == (0, 0)
    assert math.isnan(min_gain_eigenvalue(ss))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_gain_stays_spd_through_interleavings(seed):
    rng = np.random.default_rng(seed)
    block = 3
    ss = SlidingState(g0=float(rng.choice([0.1, 1.0, 100.0])), alpha=[0.5, 0.0, 0.0])
    add_rule_block(ss, block)
    for _ in range(200):
        n_rules = ss.omega.size // block
        roll = rng.random()
        if roll < 0.1 and n_rules < 10:
            add_rule_block(ss, block, int(rng.integers(n_rules)))
        elif roll < 0.2 and n_rules > 1:
            remove_rule_blocks(ss, [int(rng.integers(n_rules))], block)
        else:
            psi = rng.normal(scale=rng.choice([0.1, 1.0, 10.0]), size=ss.omega.size)
            adapt_consequents(ss, psi, rng.normal(), float(rng.choice([1e-3, 0.1, 1.0])))
        assert np.array_equal(ss.G, ss.G.T)
        assert min_gain_eigenvalue(ss) > 0


def test_zero_surface_freezes_weights():
    ss = SlidingState(alpha=[0.1, 0.2, 0.3], gamma=[1, 1, 1], alpha_max=[1, 1, 1])
    adapt_sliding_params(ss, 0.0, 1.0, 1.0, 0.01)
    assert ss.alpha.tolist() == [0.1, 0.2, 0.3]


def test_persistent_surface_grows_alpha1_to_ceiling():
    ss = SlidingState(gamma=[1.0, 0.0, 0.0], alpha_max=[0.01, 1.0, 1.0])
    prev = ss.alpha[0]
    for _ in range(100):
        adapt_sliding_params(ss, 0.5, 0.0, 0.0, 0.01)
        assert ss.alpha[0] > prev or ss.alpha[0] == 0.01
        prev = ss.alpha[0]
    assert ss.alpha[0] == 0.01


def test_sliding_params_drives():
    ss = SlidingState(alpha=[1.0, 1.0, 1.0], gamma=[2.0, 3.0, 4.0], alpha_max=[10, 10, 10])
    adapt_sliding_params(ss, -0.5, 0.2, -0.4, 0.1)
    assert np.allclose(ss.alpha, [1 + 0.1 * 2 * 0.5, 1 + 0.1 * 3 * 0.2, 1 + 0.1 * 4 * 0.1], rtol=1e-15)


@pytest.mark.parametrize("s, expected", [(0.0, 0.0), (0.05, -0.02), (1.0, -0.02),
                                         (-0.3, 0.02), (0.025, -0.01)])
def test_robustifying_term(s, expected):
    ss = SlidingState(k_r=0.02, phi_b=0.05)
    assert robustifying_term(s, ss) == pytest.approx(expected, rel=1e-15)


def test_robustifying_term_needs_boundary_layer():
    with pytest.raises(ContractError):
        robustifying_term(0.1, SlidingState(phi_b=0.0))
