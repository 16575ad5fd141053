import sys
from fractions import Fraction

import pytest
from pyolcpm import (
    EnumerationInfeasibleError,
    LinearContract,
    OlcpmInstance,
    OutcomeDistribution,
    UniformMatroid,
    UpmInstance,
    realization_iter,
    validate,
)
from pyolcpm.model import INF, Infinity, to_rational


def test_to_rational():
    assert Fraction(3, 4) == to_rational("3/4")
    assert Fraction(2) == to_rational(2)
    assert Fraction(1, 3) == to_rational(Fraction(1, 3))
    with pytest.raises(ValueError):
        to_rational(0.5)


def test_infinity():
    assert INF is Infinity()
    assert "INF" == repr(INF)
    assert INF == INF
    assert INF != Fraction(10**9)
    assert Fraction(10**9) < INF
    assert INF > Fraction(-1)
    assert INF >= INF and INF <= INF
    assert not INF < INF
    assert INF == max([Fraction(3), INF, Fraction(7)])
    assert (INF, 0) > (Fraction(5), 1)
    with pytest.raises(TypeError):
        INF - Fraction(1)
    with pytest.raises(TypeError):
        Fraction(1, 2) * INF


def test_outcome_distribution():
    dist = OutcomeDistribution([(10, "1/2"), (0, "1/2")])
    assert (Fraction(10), Fraction(0)) == dist.values
    assert Fraction(5) == dist.mean
    assert Fraction(1, 2) == dist.min_nonzero_prob
    assert 2 == len(dist)
    assert [(Fraction(10), Fraction(1, 2)), (Fraction(0), Fraction(1, 2))] == list(dist)


def test_outcome_distribution_padded():
    dist = OutcomeDistribution([(10, 1)]).padded(3)
    assert OutcomeDistribution([(10, 1), (0, 0), (0, 0)]) == dist
    assert Fraction(1) == dist.min_nonzero_prob


def test_olcpm_instance_padding():
    inst = OlcpmInstance(
        UniformMatroid(2, 1),
        [(1, [(10, 1)]), (0, [(4, "1/2"), (0, "1/4"), (2, "1/4")])],
    )
    assert 3 == inst.m
    assert 2 == inst.n
    assert Fraction(0) == inst.prob(0, 2)
    assert Fraction(2) == inst.value(1, 2)
    assert [Fraction(0), Fraction(2), Fraction(4), Fraction(10)] == inst.distinct_values()
    assert [] == validate(inst)


def test_olcpm_instance_equality(instance_w):
    same = OlcpmInstance(
        UniformMatroid(2, 1),
        [(1, [(10, "1/2"), (0, "1/2")]), (0, [(4, "1/2"), (0, "1/2")])],
    )
    assert instance_w == same
    other = OlcpmInstance(
        UniformMatroid(2, 1),
        [(2, [(10, "1/2"), (0, "1/2")]), (0, [(4, "1/2"), (0, "1/2")])],
    )
    assert instance_w != other


def test_validate_olcpm():
    inst = OlcpmInstance(
        UniformMatroid(3, 1),
        [(-1, [(10, "1/2"), (0, "1/4")]), (0, [(-4, 1)])],
    )
    expected = [
        "elements: count 2 ≠ matroid ground set size 3",
        "element 0: cost -1 < 0",
        "element 0: probabilities sum 3/4 ≠ 1",
        "element 1: outcome 0 value -4 < 0",
    ]
    assert expected == validate(inst)


def test_validate_upm(series_upm):
    assert [] == validate(series_upm)
    inst = UpmInstance(UniformMatroid(3, 1), 0, {1: "3/2", 0: "1/2"})
    expected = [
        "element 2: probability missing",
        "element 0: probability given for special or unknown element",
        "element 1: probability out of [0,1]",
    ]
    assert expected == validate(inst)
    inst = UpmInstance(UniformMatroid(2, 1), 5, {0: 1, 1: 1})
    assert validate(inst)[0].startswith("special: element 5 out of the ground set")


def test_upm_instance(rank_one_upm):
    inst = rank_one_upm("1/4")
    assert [0] == inst.others
    assert 2 == inst.n
    assert inst == eval(repr(inst))


def test_linear_contract():
    contract = LinearContract("1/3")
    assert Fraction(2) == contract.payment(Fraction(6))
    assert contract == eval(repr(contract))
    with pytest.raises(ValueError):
        LinearContract("3/2")
    with pytest.raises(ValueError):
        LinearContract(-1)


def test_realization_iter(instance_w):
    realizations = list(realization_iter(instance_w))
    assert [(0, 0), (0, 1), (1, 0), (1, 1)] == [r for r, _ in realizations]
    assert all(Fraction(1, 4) == p for _, p in realizations)


def test_realization_iter_pinned(instance_w):
    realizations = list(realization_iter(instance_w, pinned={0: 1}))
    assert [((1, 0), Fraction(1, 2)), ((1, 1), Fraction(1, 2))] == realizations


def test_realization_iter_cap(instance_w):
    with pytest.raises(EnumerationInfeasibleError) as e:
        realization_iter(instance_w, cap=3)
    assert 4 == e.value.count
    assert 3 == e.value.cap
    assert 2 == len(list(realization_iter(instance_w, cap=2, pinned={1: 0})))


if __name__ == "__main__":
    pytest.main(sys.argv)
