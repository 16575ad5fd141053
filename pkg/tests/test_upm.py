import sys
from fractions import Fraction

import pytest
from hypothesis import assume, given, settings
from pyolcpm import (
    EnumerationInfeasibleError,
    GraphicMatroid,
    InfeasibleParametersError,
    InstanceValidationError,
    ParallelExtension,
    ReductionParams,
    SampleConfig,
    UniformMatroid,
    UpmInstance,
    acceptance_prob_exact,
    choose_reduction_params,
    critical_values,
    exact_utilities,
    grade_curve,
    olcpm_to_upm,
    solve_exact,
    upm_cleanup,
    upm_exact,
    upm_monte_carlo,
    upm_to_olcpm,
    upm_to_olcpm_bounded_support,
    upm_uniform_poly,
    upm_via_olcpm,
    upm_via_olcpm_approx,
)

from tests.strategies import olcpm_instances, upm_instances

HALF = Fraction(1, 2)
QUARTER = Fraction(1, 4)
PROBS = [Fraction(x) for x in ["0", "1/4", "1/3", "1/2", "2/3", "1"]]


def _uniform_upm(n=4, rank=2):
    return UpmInstance(UniformMatroid(n, rank), 0, {j: HALF for j in range(1, n)})


def _tiny_upm():
    # every probability is within the delta bound of beta = 1/2, eps = 1/4
    return UpmInstance(UniformMatroid(3, 1), 2, {0: "1/1024", 1: "1/1024"})


def _never_called(inst):
    raise AssertionError(f"Unexpected oracle call: {inst!r}")


def test_upm_exact(rank_one_upm, series_upm):
    assert Fraction(3, 4) == upm_exact(series_upm)
    assert Fraction(3, 4) == upm_exact(rank_one_upm("1/4"))
    assert Fraction(0) == upm_exact(rank_one_upm("1"))
    assert HALF == upm_exact(_uniform_upm())


def test_upm_exact_invalid(series_upm):
    with pytest.raises(InstanceValidationError):
        upm_exact(UpmInstance(UniformMatroid(2, 1), 1, {}))
    with pytest.raises(EnumerationInfeasibleError):
        upm_exact(series_upm, cap=3)


def test_upm_uniform_poly(rank_one_upm, series_upm):
    assert HALF == upm_uniform_poly(_uniform_upm())
    assert Fraction(3, 4) == upm_uniform_poly(rank_one_upm("1/4"))
    inst = UpmInstance(UniformMatroid(5, 3), 4, {0: "1/3", 1: "1/2", 2: "2/3", 3: 1})
    assert upm_exact(inst) == upm_uniform_poly(inst)
    with pytest.raises(InfeasibleParametersError):
        upm_uniform_poly(series_upm)


@given(inst=upm_instances(PROBS, kinds=["uniform"], max_size=12))
@settings(max_examples=30)
def test_upm_uniform_poly_matches_exact(inst):
    assert upm_exact(inst) == upm_uniform_poly(inst)


def test_upm_monte_carlo(series_upm):
    cfg = SampleConfig(2, replications=10**5)
    estimate = upm_monte_carlo(series_upm, cfg)
    assert abs(estimate - 0.75) <= 0.01
    threaded = SampleConfig(2, replications=10**5, workers=8)
    assert estimate == upm_monte_carlo(series_upm, threaded)


def test_upm_monte_carlo_over_seeds(series_upm):
    close = sum(
        abs(upm_monte_carlo(series_upm, SampleConfig(seed, replications=10**5)) - 0.75)
        <= 0.02
        for seed in range(20)
    )
    assert close >= 18


def test_olcpm_to_upm_instance_w(instance_w):
    inst = instance_w
    upm, r = olcpm_to_upm(inst, HALF, 0, 0)
    assert UpmInstance(inst.matroid, 0, {1: 0}) == upm
    assert Fraction(1) == r
    upm, r = olcpm_to_upm(inst, HALF, 1, 0)
    assert UpmInstance(inst.matroid, 1, {0: HALF}) == upm
    assert HALF == r
    upm, r = olcpm_to_upm(inst, HALF, 1, 1)
    assert UpmInstance(inst.matroid, 1, {0: 1}) == upm
    assert Fraction(0) == r
    assert HALF == olcpm_to_upm(inst, HALF, 1, 0, upm_uniform_poly)[1]


def test_olcpm_to_upm_negative_grade(instance_w, single_element):
    assert (None, Fraction(0)) == olcpm_to_upm(single_element, Fraction(0), 0, 0)
    with pytest.raises(ValueError):
        olcpm_to_upm(instance_w, HALF, 0, 2)


def test_olcpm_to_upm_free_elements_at_zero(zero_cost_pair):
    upm, r = olcpm_to_upm(zero_cost_pair, Fraction(0), 0, 0)
    assert UpmInstance(zero_cost_pair.matroid, 0, {1: 1}) == upm
    assert Fraction(0) == r
    upm, r = olcpm_to_upm(zero_cost_pair, Fraction(0), 1, 0)
    assert UpmInstance(zero_cost_pair.matroid, 1, {0: 0}) == upm
    assert Fraction(1) == r


@given(inst=olcpm_instances(max_n=4, max_m=3))
@settings(max_examples=50)
def test_olcpm_to_upm_matches_acceptance(inst):
    for alpha in critical_values(inst):
        for i in range(inst.n):
            for k in range(inst.m):
                _, r = olcpm_to_upm(inst, alpha, i, k)
                assert acceptance_prob_exact(inst, alpha, i, k) == r


def test_upm_cleanup(rank_one_upm):
    cleaned = upm_cleanup(rank_one_upm("3/4"), HALF, QUARTER)
    matroid = ParallelExtension(UniformMatroid(2, 1), [0, 0, 1])
    expected = UpmInstance(matroid, 2, {0: HALF, 1: HALF})
    assert expected == cleaned
    assert Fraction(1, 4) == upm_exact(cleaned)


def test_upm_cleanup_chain(rank_one_upm):
    cleaned = upm_cleanup(rank_one_upm("15/16"), HALF, QUARTER)
    assert 5 == cleaned.n
    assert [HALF] * 4 == [cleaned.probs[j] for j in cleaned.others]
    assert Fraction(1, 16) == upm_exact(cleaned)


def test_upm_cleanup_certain_element(rank_one_upm):
    cleaned = upm_cleanup(rank_one_upm("1"), HALF, HALF)
    assert [HALF, HALF] == [cleaned.probs[j] for j in cleaned.others]
    assert Fraction(1, 4) == upm_exact(cleaned)


def test_upm_cleanup_unchanged(rank_one_upm):
    inst = rank_one_upm("1/4")
    assert inst is upm_cleanup(inst, HALF, QUARTER)


def test_upm_cleanup_error_bound(rank_one_upm, series_upm):
    for inst in [series_upm, _uniform_upm(), rank_one_upm("2/3")]:
        cleaned = upm_cleanup(inst, Fraction(1, 3), QUARTER)
        assert all(p <= Fraction(1, 3) for p in cleaned.probs.values())
        assert upm_exact(inst) == upm_exact(cleaned)


@given(inst=upm_instances([Fraction(x) for x in ["0", "1/4", "1/2", "3/4", "1"]]))
@settings(max_examples=20)
def test_upm_cleanup_answer_within_eps(inst):
    cleaned = upm_cleanup(inst, HALF, QUARTER)
    assert all(p <= HALF for p in cleaned.probs.values())
    assert cleaned.n <= 4 * inst.n
    rho = upm_exact(inst)
    assert rho <= upm_exact(cleaned) <= rho + QUARTER


def test_upm_cleanup_invalid(rank_one_upm):
    with pytest.raises(InfeasibleParametersError):
        upm_cleanup(rank_one_upm("3/4"), Fraction(1), QUARTER)
    with pytest.raises(InfeasibleParametersError):
        upm_cleanup(rank_one_upm("3/4"), HALF, Fraction(0))
    with pytest.raises(InfeasibleParametersError):
        upm_cleanup(rank_one_upm("255/256"), HALF, QUARTER, copy_cap=2)
    with pytest.raises(InfeasibleParametersError):
        upm_cleanup(rank_one_upm("255/256"), HALF, QUARTER, copy_cap=4)


def test_reduction_params():
    params = ReductionParams("1/2", "1/4", "1/256", "1/128")
    assert params == eval(repr(params))
    assert [] == params.violations(2)
    params.check(2)
    loose = ReductionParams("1/2", "1/4", "1/128", "1/128")
    assert 1 == len(loose.violations(2))
    assert [] == loose.violations(2, relaxed=True)
    with pytest.raises(InfeasibleParametersError):
        loose.check(2)
    with pytest.raises(InfeasibleParametersError):
        ReductionParams("1/2", "1/4", "1/256", "1/2").check(2)


def test_reduction_params_invalid():
    with pytest.raises(InfeasibleParametersError):
        ReductionParams(2, QUARTER, QUARTER, QUARTER)
    with pytest.raises(InfeasibleParametersError):
        ReductionParams(HALF, HALF, QUARTER, QUARTER)
    with pytest.raises(InfeasibleParametersError):
        ReductionParams(HALF, QUARTER, 1, QUARTER)
    with pytest.raises(InfeasibleParametersError):
        ReductionParams(HALF, QUARTER, QUARTER, 0)


def test_choose_reduction_params(rank_one_upm, series_upm):
    expected = ReductionParams(HALF, QUARTER, Fraction(1, 256), Fraction(1, 128))
    assert expected == choose_reduction_params(rank_one_upm("1/256"), HALF)
    expected = ReductionParams(HALF, QUARTER, Fraction(1, 1024), Fraction(1, 512))
    assert expected == choose_reduction_params(series_upm, HALF)
    assert Fraction(1, 128) == choose_reduction_params(rank_one_upm("1/256"), 1).delta
    with pytest.raises(InfeasibleParametersError):
        choose_reduction_params(series_upm, 0)
    with pytest.raises(InfeasibleParametersError):
        choose_reduction_params(series_upm, HALF, HALF)


def test_upm_to_olcpm(rank_one_upm):
    inst = rank_one_upm("1/256")
    olcpm = upm_to_olcpm(inst, choose_reduction_params(inst, HALF))
    assert (Fraction(0), Fraction(127)) == olcpm.costs
    assert [Fraction(0), Fraction(127, 128), Fraction(1)] == critical_values(olcpm)
    assert HALF == exact_utilities(olcpm, Fraction(0)).u_principal
    assert Fraction(1) == exact_utilities(olcpm, Fraction(127, 128)).u_principal
    solution = solve_exact(olcpm)
    assert Fraction(127, 128) == solution.alpha_star


def test_upm_to_olcpm_preconditions(rank_one_upm):
    params = ReductionParams(HALF, QUARTER, Fraction(1, 256), Fraction(1, 128))
    with pytest.raises(InfeasibleParametersError):
        upm_to_olcpm(rank_one_upm("1/4"), params)
    assert 2 == upm_to_olcpm(rank_one_upm("1/4"), params, relaxed=True).n
    with pytest.raises(InfeasibleParametersError):
        upm_to_olcpm(rank_one_upm("0"), params, relaxed=True)
    looped = UpmInstance(GraphicMatroid(2, [(0, 0), (0, 1), (0, 1)]), 2, {0: HALF, 1: HALF})
    with pytest.raises(InfeasibleParametersError):
        upm_to_olcpm(looped, choose_reduction_params(looped, HALF), relaxed=True)


def test_reduction_utilities_at_both_ends(rank_one_upm, series_upm):
    for inst in [rank_one_upm("1/4"), series_upm, _uniform_upm(), _tiny_upm()]:
        rho = upm_exact(inst)
        params = choose_reduction_params(inst, HALF)
        olcpm = upm_to_olcpm(inst, params, relaxed=True)
        assert HALF == exact_utilities(olcpm, Fraction(0)).u_principal
        last = exact_utilities(olcpm, 1 - params.xi).u_principal
        assert rho <= last <= rho + params.eps


def test_reduction_utilities_in_the_middle():
    inst = _tiny_upm()
    params = choose_reduction_params(inst, HALF)
    olcpm = upm_to_olcpm(inst, params)
    points = critical_values(olcpm)
    assert 1 - QUARTER in points
    assert 1 - params.xi in points
    assert exact_utilities(olcpm, 1 - QUARTER).u_principal <= 2 * params.eps * params.beta


@given(shape=upm_instances([Fraction(1), HALF], max_size=3))
@settings(max_examples=10)
def test_reduction_utilities_on_small_instances(shape):
    # the drawn probabilities scale delta, so every element exists with at most delta
    assume(shape.matroid.rank([shape.others[0]]) == 1)
    delta = choose_reduction_params(shape, HALF).delta
    inst = UpmInstance(
        shape.matroid, shape.special, {j: delta * w for j, w in shape.probs.items()}
    )
    params = choose_reduction_params(inst, HALF)
    olcpm = upm_to_olcpm(inst, params)
    eps, xi, beta = params.eps, params.xi, params.beta
    allowed = {Fraction(0), 1 - xi, Fraction(1)}
    allowed |= {1 - eps**t for t in range(1, inst.n - 1)}
    points = critical_values(olcpm)
    assert set(points) <= allowed
    assert beta == exact_utilities(olcpm, Fraction(0)).u_principal
    rho = upm_exact(inst)
    assert rho <= exact_utilities(olcpm, 1 - xi).u_principal <= rho + eps
    for alpha in points:
        if 0 < alpha < 1 - xi:
            assert exact_utilities(olcpm, alpha).u_principal <= 2 * eps * beta


def test_upm_to_olcpm_bounded_support(series_upm):
    inst = _uniform_upm(5)
    params = choose_reduction_params(inst, HALF)
    plain = upm_to_olcpm(inst, params, relaxed=True)
    bounded = upm_to_olcpm_bounded_support(inst, params, relaxed=True)
    assert plain.costs == bounded.costs
    for c, d, d2 in zip(plain.costs, plain.dists, bounded.dists):
        assert grade_curve(c, d) == grade_curve(c, d2)
    others = {v for d in bounded.dists[2:5] for v in d.values}
    assert {Fraction(0), Fraction(4), Fraction(64)} == others
    with pytest.raises(InfeasibleParametersError):
        upm_to_olcpm_bounded_support(series_upm, params, relaxed=True)


def test_upm_via_olcpm(rank_one_upm, series_upm):
    assert Fraction(3, 4) == upm_via_olcpm(rank_one_upm("1/4"), solve_exact, relaxed=True)
    rare = rank_one_upm("255/256")
    assert Fraction(1, 256) == upm_via_olcpm(rare, solve_exact, relaxed=True)
    assert Fraction(3, 4) == upm_via_olcpm(series_upm, solve_exact, relaxed=True)
    assert HALF == upm_via_olcpm(_uniform_upm(), solve_exact, relaxed=True)
    assert HALF == upm_via_olcpm(rank_one_upm("1/2"), solve_exact, relaxed=True)


def test_upm_via_olcpm_certainly_spanned(rank_one_upm):
    assert Fraction(0) == upm_via_olcpm(rank_one_upm("1"), _never_called)
    assert Fraction(0) == upm_via_olcpm_approx(rank_one_upm("1"), HALF, _never_called)


def test_upm_via_olcpm_certified_copy_cap(rank_one_upm):
    with pytest.raises(InfeasibleParametersError):
        upm_via_olcpm(rank_one_upm("1/4"), solve_exact)


def test_upm_via_olcpm_invalid(rank_one_upm):
    with pytest.raises(InstanceValidationError):
        upm_via_olcpm(UpmInstance(UniformMatroid(2, 1), 1, {0: 2}), _never_called)
    with pytest.raises(InfeasibleParametersError):
        upm_via_olcpm_approx(rank_one_upm("1/4"), 0, _never_called)


def test_upm_via_olcpm_approx(rank_one_upm):
    psi = HALF
    rho = Fraction(3, 4)
    approx = upm_via_olcpm_approx(rank_one_upm("1/4"), psi, solve_exact, relaxed=True)
    assert Fraction(9, 16) == approx
    assert rho / (1 + psi) ** 2 <= approx <= rho


if __name__ == "__main__":
    pytest.main(sys.argv)
