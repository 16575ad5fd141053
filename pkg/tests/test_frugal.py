import sys
from fractions import Fraction

import pytest
from hypothesis import given, settings
from pyolcpm import (
    EnumerationInfeasibleError,
    FrugalTrace,
    acceptance_prob_exact,
    blocking_set,
    critical_values,
    exact_utilities,
    expected_max_surrogate,
    perturbed_costs,
    run_frugal,
)
from pyolcpm.frugal import accepted_by_span, is_blocking, precedence_key
from pyolcpm.grades import policy_grades, surrogate_from_grade
from pyolcpm.model import INF
from pyolcpm.sampler import acceptance_by_enumeration

from tests.strategies import olcpm_instances

HALF = Fraction(1, 2)

# random instances with up to four elements and three outcomes
pool = olcpm_instances(max_n=4, max_m=3)


def _contracts(inst):
    points = critical_values(inst)
    return points + [(a + b) / 2 for a, b in zip(points, points[1:])]


def test_precedence_key():
    assert precedence_key(Fraction(3), 0, False) > precedence_key(Fraction(2), 0, True)
    assert precedence_key(Fraction(2), 1, True) > precedence_key(Fraction(2), 0, False)
    assert precedence_key(Fraction(2), 0, False) > precedence_key(Fraction(2), 1, False)
    assert precedence_key(INF, 1, False) > precedence_key(Fraction(9), 0, True)
    # equal surrogates go to the larger outcome value before the smaller index
    larger = precedence_key(Fraction(0), 1, True, Fraction(10))
    assert larger > precedence_key(Fraction(0), 0, True, Fraction(8))
    # outcome values never order grades
    assert precedence_key(Fraction(2), 0, False, Fraction(1)) == precedence_key(
        Fraction(2), 0, False, Fraction(7)
    )


def test_run_frugal_instance_w(instance_w):
    expected = FrugalTrace([1, 0], frozenset({0}), Fraction(10), Fraction(5), Fraction(1))
    assert expected == run_frugal(instance_w, HALF, (0, 0))

    trace = run_frugal(instance_w, HALF, (1, 0))
    assert [1, 0] == trace.probe_order
    assert frozenset({1}) == trace.returned
    assert Fraction(4) == trace.principal_reward
    assert Fraction(1) == trace.agent_utility

    trace = run_frugal(instance_w, HALF, (1, 1))
    assert frozenset({0}) == trace.returned
    assert Fraction(0) == trace.principal_reward
    assert Fraction(-1) == trace.agent_utility


def test_run_frugal_free_elements_at_zero(zero_cost_pair):
    trace = run_frugal(zero_cost_pair, Fraction(0), (0, 0))
    assert [0, 1] == trace.probe_order
    assert frozenset({1}) == trace.returned
    assert Fraction(10) == trace.principal_reward
    assert Fraction(0) == trace.agent_payment
    report = exact_utilities(zero_cost_pair, Fraction(0))
    assert Fraction(10) == report.u_principal
    assert [[Fraction(0)], [Fraction(1)]] == report.acceptance


def test_run_frugal_cost_vector(instance_w):
    inst = instance_w
    trace = run_frugal(inst, HALF, (0, 0), perturbed_costs(inst, HALF))
    assert frozenset({0}) == trace.returned
    # reported costs stay the instance costs
    assert Fraction(1) == trace.probing_cost


def test_run_frugal_skips_negative_grades(single_element):
    trace = run_frugal(single_element, Fraction(0), (0,))
    assert [] == trace.probe_order
    assert frozenset() == trace.returned
    assert Fraction(0) == trace.probing_cost


def test_run_frugal_invalid_realization(instance_w):
    with pytest.raises(ValueError):
        run_frugal(instance_w, HALF, (0,))
    with pytest.raises(ValueError):
        run_frugal(instance_w, HALF, (0, 2))


def test_exact_utilities_instance_w(instance_w):
    report = exact_utilities(instance_w, HALF)
    assert HALF == report.epsilon
    assert Fraction(6) == report.expected_reward
    assert Fraction(3) == report.u_principal
    assert Fraction(1) == report.expected_cost
    assert HALF == report.expected_perturbed_cost
    assert Fraction(2) == report.u_agent
    assert Fraction(5, 2) == report.u_agent_perturbed
    assert [[Fraction(1), HALF], [HALF, Fraction(0)]] == report.acceptance


def test_exact_utilities_fixtures(instance_w, single_element, deterministic_element):
    assert Fraction(18, 5) == exact_utilities(instance_w, Fraction(1, 5)).u_principal
    assert Fraction(4) == exact_utilities(instance_w, Fraction(1, 3)).u_principal
    assert Fraction(2) == exact_utilities(instance_w, Fraction(0)).u_principal
    assert Fraction(0) == exact_utilities(instance_w, Fraction(1)).u_principal
    assert Fraction(4) == exact_utilities(single_element, Fraction(1, 5)).u_principal
    assert Fraction(9) == exact_utilities(deterministic_element, Fraction(1, 10)).u_principal
    assert Fraction(0) == exact_utilities(single_element, Fraction(0)).u_principal


def test_exact_utilities_cap(instance_w):
    with pytest.raises(EnumerationInfeasibleError):
        exact_utilities(instance_w, HALF, cap=3)


def test_expected_max_surrogate_instance_w(instance_w):
    inst = instance_w
    assert Fraction(2) == expected_max_surrogate(inst, HALF)
    assert Fraction(5, 2) == expected_max_surrogate(inst, HALF, perturbed_costs(inst, HALF))


@given(inst=pool)
@settings(max_examples=50)
def test_agent_utility_is_expected_max_surrogate(inst):
    for alpha in _contracts(inst):
        report = exact_utilities(inst, alpha)
        costs = perturbed_costs(inst, report.epsilon)
        assert expected_max_surrogate(inst, alpha, costs) == report.u_agent_perturbed
        assert expected_max_surrogate(inst, alpha) == report.u_agent


@given(inst=pool)
@settings(max_examples=50)
def test_principal_utility_from_agent_utility(inst):
    for alpha in critical_values(inst):
        if not 0 < alpha < 1:
            continue
        report = exact_utilities(inst, alpha)
        ratio = (1 - alpha) / alpha
        assert report.u_principal == ratio * (
            report.u_agent_perturbed + report.expected_perturbed_cost
        )
        assert report.u_principal == ratio * (report.u_agent + report.expected_cost)


@given(inst=pool)
@settings(max_examples=50)
def test_principal_utility_from_acceptance(inst):
    for alpha in _contracts(inst):
        report = exact_utilities(inst, alpha)
        reward = sum(
            inst.value(i, k) * inst.prob(i, k) * report.acceptance[i][k]
            for i in range(inst.n)
            for k in range(inst.m)
        )
        assert reward == report.expected_reward
        assert (1 - alpha) * reward == report.u_principal


def test_is_blocking():
    # j comes first and is kept waiting, still ahead of the surrogate of i
    assert is_blocking([Fraction(3), Fraction(5)], 0, Fraction(1), 1, Fraction(2))
    # accepted at once with a grade between the surrogate and the grade of i
    assert is_blocking([Fraction(3), Fraction(2)], 0, Fraction(1), 1, Fraction(2))
    # element i is accepted at once before j is reached
    assert not is_blocking([Fraction(3), Fraction(2)], 0, Fraction(3), 1, Fraction(2))
    # equal surrogates go to the smaller index
    assert is_blocking([Fraction(3), Fraction(3)], 1, Fraction(1), 0, Fraction(1))
    assert not is_blocking([Fraction(3), Fraction(3)], 0, Fraction(1), 1, Fraction(1))


def test_is_blocking_equal_surrogates_by_outcome_value():
    taus = [INF, INF]
    zero = Fraction(0)
    assert is_blocking(taus, 0, zero, 1, zero, Fraction(8), Fraction(10))
    assert not is_blocking(taus, 1, zero, 0, zero, Fraction(10), Fraction(8))
    # the index decides once the outcome values agree
    assert is_blocking(taus, 1, zero, 0, zero, Fraction(8), Fraction(8))


def test_blocking_set_instance_w(instance_w):
    inst = instance_w
    taus = policy_grades(inst, HALF)
    assert [Fraction(4), INF] == taus
    ys = [surrogate_from_grade(t, HALF * inst.value(i, 1)) for i, t in enumerate(taus)]
    assert frozenset({1}) == blocking_set(taus, [Fraction(0), Fraction(2)], 0, Fraction(0))
    assert frozenset() == blocking_set(taus, ys, 0, Fraction(4))
    assert accepted_by_span(inst.matroid, taus, ys, 0, Fraction(4))
    assert not accepted_by_span(inst.matroid, taus, [Fraction(4), Fraction(0)], 1, Fraction(0))


def test_blocking_set_free_elements_at_zero(zero_cost_pair):
    taus = policy_grades(zero_cost_pair, Fraction(0))
    zeros = [Fraction(0), Fraction(0)]
    values = [Fraction(8), Fraction(10)]
    assert frozenset({1}) == blocking_set(taus, zeros, 0, Fraction(0), values, Fraction(8))
    assert frozenset() == blocking_set(taus, zeros, 1, Fraction(0), values, Fraction(10))


def test_acceptance_prob_exact(instance_w):
    inst = instance_w
    assert Fraction(1) == acceptance_prob_exact(inst, HALF, 0, 0)
    assert HALF == acceptance_prob_exact(inst, HALF, 0, 1)
    assert HALF == acceptance_prob_exact(inst, HALF, 1, 0)
    assert Fraction(0) == acceptance_prob_exact(inst, HALF, 1, 1)
    with pytest.raises(ValueError):
        acceptance_prob_exact(inst, HALF, 2, 0)


@given(inst=pool)
@settings(max_examples=50)
def test_acceptance_by_span_matches_simulation(inst):
    for alpha in _contracts(inst):
        report = exact_utilities(inst, alpha)
        spanned = acceptance_by_enumeration(inst, alpha)
        for i in range(inst.n):
            for k in range(inst.m):
                simulated = acceptance_prob_exact(inst, alpha, i, k)
                assert simulated == spanned[i][k]
                if inst.prob(i, k):
                    assert simulated == report.acceptance[i][k]


if __name__ == "__main__":
    pytest.main(sys.argv)
