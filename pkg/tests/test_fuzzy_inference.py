import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hexafuzz.errors import ContractError, EmptyRuleBaseError
from hexafuzz.fuzzy_inference import (
    FuzzyRule,
    RuleBase,
    dump_rules,
    firing_strength,
    infer,
    load_rules,
    log_firing,
    spd_inverse_logdet,
)


def random_rule_base(rng, n_rules, n_inputs, spread=1.0):
    rb = RuleBase(n_inputs)
    for _ in range(n_rules):
        A = rng.normal(size=(n_inputs, n_inputs))
        inv_cov = A @ A.T + 0.1 * np.eye(n_inputs)
        rb.append(FuzzyRule(rng.uniform(-spread, spread, n_inputs), inv_cov,
                            rng.uniform(-1, 1, n_inputs + 1)))
    return rb


def naive_output(rb, z):
    """Direct weighted average, loop by loop."""
    num = den = 0.0
    for rule in rb.rules:
        d = [z[j] - rule.center[j] for j in range(len(z))]
        quad = sum(d[i] * rule.inv_cov[i][j] * d[j] for i in range(len(z)) for j in range(len(z)))
        R = math.exp(-quad)
        y = rule.consequent[0] + sum(rule.consequent[j + 1] * z[j] for j in range(len(z)))
        num += R * y
        den += R
    return num / den


def rule_bases():
    return st.tuples(st.integers(0, 2 ** 32 - 1), st.integers(1, 10), st.integers(1, 4))


def test_firing_examples():
    rule = FuzzyRule([0.2, -0.1], np.diag([4.0, 1.0]), np.zeros(3))
    assert firing_strength(rule, [0.2, -0.1]) == 1.0
    assert firing_strength(rule, [0.7, 0.9]) == pytest.approx(math.exp(-2), rel=1e-15)
    unit = FuzzyRule([0.0], np.eye(1), np.zeros(2))
    assert firing_strength(unit, [1.0]) == pytest.approx(math.exp(-1), rel=1e-15)


def test_firing_floor():
    rule = FuzzyRule([0.0, 0.0], np.eye(2), np.zeros(3))
    assert firing_strength(rule, [100.0, 0.0]) == 1e-300


def test_firing_dimension_mismatch():
    rule = FuzzyRule([0.0, 0.0], np.eye(2), np.zeros(3))
    with pytest.raises(ContractError):
        firing_strength(rule, [0.0])


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_two_input_fast_path_matches_matrix_form(seed):
    rng = np.random.default_rng(seed)
    rule = random_rule_base(rng, 1, 2)[0]
    z = rng.uniform(-2, 2, 2)
    d = z - rule.center
    assert log_firing(rule, z) == pytest.approx(-(d @ rule.inv_cov @ d), rel=1e-13, abs=1e-15)


def test_fast_path_cache_follows_field_updates():
    rule = FuzzyRule([0.0, 0.0], np.eye(2), np.zeros(3))
    assert log_firing(rule, np.array([1.0, 0.0])) == -1.0
    rule.center = np.array([1.0, 0.0])
    assert log_firing(rule, np.array([1.0, 0.0])) == 0.0
    rule.inv_cov = 2 * np.eye(2)
    assert log_firing(rule, np.array([2.0, 0.0])) == -2.0


def test_rule_rejects_inconsistent_fields():
    with pytest.raises(ContractError):
        FuzzyRule([0.0, 0.0], np.eye(3), np.zeros(3))
    with pytest.raises(ContractError):
        FuzzyRule([0.0, 0.0], -np.eye(2), np.zeros(3))


def test_spd_inverse_logdet_matches_numpy():
    cov = np.array([[2.0, 0.3], [0.3, 0.5]])
    inv, logdet = spd_inverse_logdet(cov)
    assert np.allclose(inv, np.linalg.inv(cov), rtol=1e-14)
    assert logdet == pytest.approx(math.log(np.linalg.det(cov)), rel=1e-13)
    cov3 = np.diag([1.0, 2.0, 3.0])
    inv, logdet = spd_inverse_logdet(cov3)
    assert logdet == pytest.approx(math.log(6.0), rel=1e-14)
    with pytest.raises(ContractError):
        spd_inverse_logdet(np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_empty_rule_base_refuses_inference():
    with pytest.raises(EmptyRuleBaseError):
        infer(RuleBase(2), [0.0, 0.0])


def test_single_rule():
    rb = RuleBase(2, [FuzzyRule([1.0, 1.0], np.eye(2), [0.5, 2.0, -1.0])])
    res = infer(rb, [3.0, 0.25])
    assert res.psi.tolist() == [1.0]
    assert res.y == pytest.approx(0.5 + 6.0 - 0.25, rel=1e-15)


def test_identical_consequents_ignore_firing_split():
    b = [0.3, 0.1, -0.2]
    rb = RuleBase(2, [FuzzyRule([0, 0], np.eye(2), b), FuzzyRule([1, 0], 3 * np.eye(2), b)])
    z = np.array([0.4, 0.7])
    assert infer(rb, z).y == pytest.approx(0.3 + 0.04 - 0.14, abs=1e-15)


def test_three_random_rules_match_naive_sum():
    rng = np.random.default_rng(7)
    rb = random_rule_base(rng, 3, 2)
    z = rng.uniform(-1, 1, 2)
    assert abs(infer(rb, z).y - naive_output(rb, z)) < 1e-12


@settings(max_examples=200, deadline=None)
@given(rule_bases())
def test_weights_normalised_and_output_convex(args):
    seed, R, n = args
    rng = np.random.default_rng(seed)
    rb = random_rule_base(rng, R, n)
    z = rng.uniform(-1, 1, n)
    res = infer(rb, z)
    assert abs(math.fsum(res.psi) - 1) < 1e-12
    outs = [r.output(z) for r in rb]
    assert min(outs) - 1e-12 <= res.y <= max(outs) + 1e-12


@settings(max_examples=200, deadline=None)
@given(rule_bases())
def test_regressor_contracts_to_output(args):
    seed, R, n = args
    rng = np.random.default_rng(seed)
    rb = random_rule_base(rng, R, n)
    z = rng.uniform(-1, 1, n)
    res = infer(rb, z)
    assert res.regressor.shape == ((n + 1) * R,)
    assert rb.consequents @ res.regressor == res.y
    assert np.array_equal(res.regressor.reshape(R, n + 1)[:, 0], res.psi)


@settings(max_examples=200, deadline=None)
@given(rule_bases(), st.floats(0.01, 100.0))
def test_scaling_premises_keeps_winner(args, scale):
    seed, R, n = args
    rng = np.random.default_rng(seed)
    rb = random_rule_base(rng, R, n)
    z = rng.uniform(-1, 1, n)
    logs = [log_firing(r, z) for r in rb]
    scaled = [log_firing(FuzzyRule(r.center, scale * r.inv_cov, r.consequent), z) for r in rb]
    assert int(np.argmax(logs)) == int(np.argmax(scaled))


def test_underflow_falls_back_to_nearest_rule():
    rb = RuleBase(2, [FuzzyRule([0, 0], np.eye(2), [1, 0, 0]),
                      FuzzyRule([10, 0], np.eye(2), [2, 0, 0])])
    res = infer(rb, [1000.0, 0.0])
    assert res.psi.tolist() == [0.0, 1.0]
    assert res.y == 2.0
    assert res.firing.tolist() == [1e-300, 1e-300]


def test_rule_snapshot_round_trip():
    rng = np.random.default_rng(3)
    rb = random_rule_base(rng, 4, 2)
    buf = io.StringIO()
    dump_rules(rb, buf)
    assert buf.getvalue().splitlines()[0] == "rule,center_0,center_1,cov_00,cov_11,cov_01,b_0,b_1,b_2"
    back = load_rules(io.StringIO(buf.getvalue()))
    for a, b in zip(rb, back):
        assert np.array_equal(a.center, b.center)
        assert np.array_equal(a.consequent, b.consequent)
        assert np.allclose(a.inv_cov, b.inv_cov, rtol=1e-12)
