"""Provide problem data classes: OLCPM/UPM instances, contracts and realizations."""

import itertools
from fractions import Fraction
from typing import (
    Iterable,
    Iterator,
    List,
    Mapping,
    Optional,
    Sequence,
    Tuple,
    Union,
)

from pyolcpm.errors import EnumerationInfeasibleError
from pyolcpm.matroid import MatroidOracle

# maximum number of realizations or subsets an exact enumeration may visit;
# every enumerating function takes a cap argument and falls back to this value
enumeration_cap_default: int = 2_000_000

RationalLike = Union[int, str, Fraction]


class Infinity:
    """The grade of a zero-cost element, larger than every rational.

    It supports comparisons only; INF is the single instance.
    """

    _instance: Optional["Infinity"] = None

    def __new__(cls) -> "Infinity":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INF"

    def __hash__(self):
        return hash(Infinity)

    def __eq__(self, other: object) -> bool:
        return other is self

    def __lt__(self, other: object) -> bool:
        return False

    def __le__(self, other: object) -> bool:
        return other is self

    def __gt__(self, other: object) -> bool:
        return other is not self

    def __ge__(self, other: object) -> bool:
        return True


INF = Infinity()
ExtRational = Union[Fraction, Infinity]

# outcome index per element
Realization = Tuple[int, ...]
OutcomePairs = Iterable[Tuple[RationalLike, RationalLike]]


def to_rational(value: RationalLike) -> Fraction:
    """Convert a value to an exact rational.

    Args:
        value (RationalLike): int, Fraction or text like "3/4"

    Raises:
        ValueError: The value cannot be converted exactly.

    Returns:
        Fraction: Exact rational
    """
    if isinstance(value, float):
        raise ValueError(f"Unexpected float value: {value} / use an exact rational")
    return Fraction(value)


def ensure_enumerable(what: str, count: int, cap: Optional[int] = None) -> None:
    """Check an enumeration of count items fits into the cap.

    Args:
        what (str): Description of the enumeration, e.g. "m^n"
        count (int): Number of items
        cap (Optional[int]): Cap; enumeration_cap_default is used if None

    Raises:
        EnumerationInfeasibleError: count exceeds the cap.
    """
    limit = enumeration_cap_default if cap is None else cap
    if count > limit:
        raise EnumerationInfeasibleError(what, count, limit)


class OutcomeDistribution:
    """A discrete distribution of an element's outcome: pairs of (value, prob)."""

    def __init__(self, outcomes: Iterable[Tuple[RationalLike, RationalLike]]) -> None:
        pairs = [(to_rational(v), to_rational(p)) for v, p in outcomes]
        self.values: Tuple[Fraction, ...] = tuple(v for v, _ in pairs)
        self.probs: Tuple[Fraction, ...] = tuple(p for _, p in pairs)

    def __repr__(self):
        pairs = ", ".join(f"({v}, {p})" for v, p in self)
        return f"OutcomeDistribution([{pairs}])"

    def __eq__(self, other):
        if isinstance(other, self.__class__):
            return self.values == other.values and self.probs == other.probs
        return False

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self) -> Iterator[Tuple[Fraction, Fraction]]:
        return iter(zip(self.values, self.probs))

    def padded(self, m: int) -> "OutcomeDistribution":
        """Get the distribution padded with zero-probability outcomes to length m."""
        extra = [(Fraction(0), Fraction(0))] * max(0, m - len(self))
        return OutcomeDistribution(list(self) + extra)

    @property
    def min_nonzero_prob(self) -> Optional[Fraction]:
        """Get the smallest nonzero probability, or None if there is none."""
        nonzero = [p for p in self.probs if p > 0]
        return min(nonzero) if nonzero else None

    @property
    def mean(self) -> Fraction:
        return sum((v * p for v, p in self), Fraction(0))


class OlcpmInstance:
    """An instance of the linear contract problem on a matroid.

    Every element has a probing cost and an outcome distribution;
    distributions are padded with zero-probability outcomes to the common m.
    """

    def __init__(
        self,
        matroid: MatroidOracle,
        elements: Sequence[
            Tuple[RationalLike, Union[OutcomeDistribution, OutcomePairs]]
        ],
    ) -> None:
        """Create OlcpmInstance object.

        Args:
            matroid (MatroidOracle): Feasibility constraint over the elements
            elements: Pairs of (cost, distribution) in ground-set order
        """
        self.matroid = matroid
        self.costs: Tuple[Fraction, ...] = tuple(to_rational(c) for c, _ in elements)
        dists = [
            d if isinstance(d, OutcomeDistribution) else OutcomeDistribution(d)
            for _, d in elements
        ]
        self.m = max([1] + [len(d) for d in dists])
        self.dists: Tuple[OutcomeDistribution, ...] = tuple(
            d.padded(self.m) for d in dists
        )

    def __repr__(self):
        return f"OlcpmInstance({self.matroid!r}, {list(zip(self.costs, self.dists))!r})"

    def __eq__(self, other):
        if isinstance(other, self.__class__):
            return (
                self.matroid == other.matroid
                and self.costs == other.costs
                and self.dists == other.dists
            )
        return False

    @property
    def n(self) -> int:
        return len(self.costs)

    def value(self, i: int, k: int) -> Fraction:
        return self.dists[i].values[k]

    def prob(self, i: int, k: int) -> Fraction:
        return self.dists[i].probs[k]

    def distinct_values(self) -> List[Fraction]:
        """Get the sorted distinct outcome values over the positive-probability outcomes."""
        return sorted({v for d in self.dists for v, p in d if p > 0})


class UpmInstance:
    """An instance of the unreliability problem on a matroid.

    Every element other than the special one exists independently with its
    probability; the question is how likely the special element stays unspanned.
    """

    def __init__(
        self,
        matroid: MatroidOracle,
        special: int,
        probs: Mapping[int, RationalLike],
    ) -> None:
        """Create UpmInstance object.

        Args:
            matroid (MatroidOracle): Matroid over all elements including special
            special (int): Index of the special element
            probs (Mapping[int, RationalLike]): Existence probability per other element
        """
        self.matroid = matroid
        self.special = special
        self.probs = {int(i): to_rational(p) for i, p in probs.items()}

    def __repr__(self):
        return f"UpmInstance({self.matroid!r}, {self.special}, {self.probs!r})"

    def __eq__(self, other):
        if isinstance(other, self.__class__):
            return (
                self.matroid == other.matroid
                and self.special == other.special
                and self.probs == other.probs
            )
        return False

    @property
    def n(self) -> int:
        return self.matroid.size

    @property
    def others(self) -> List[int]:
        """Get the indices of the non-special elements in ascending order."""
        return [i for i in range(self.matroid.size) if i != self.special]


class LinearContract:
    """A linear contract paying the agent the fraction alpha of the reward."""

    def __init__(self, alpha: RationalLike) -> None:
        self.alpha = to_rational(alpha)
        if not 0 <= self.alpha <= 1:
            raise ValueError(
                f"Unexpected alpha of linear contract: {self.alpha} / "
                "it must be in the range [0, 1]"
            )

    def __repr__(self):
        return f'LinearContract("{self.alpha}")'

    def __eq__(self, other):
        if isinstance(other, self.__class__):
            return self.alpha == other.alpha
        return False

    def payment(self, reward: Fraction) -> Fraction:
        return self.alpha * reward


def validate(inst: Union[OlcpmInstance, UpmInstance]) -> List[str]:
    """Check the invariants of an instance.

    Args:
        inst (Union[OlcpmInstance, UpmInstance]): Instance to check

    Returns:
        List[str]: Violations naming the field and the rule; empty if valid
    """
    if isinstance(inst, OlcpmInstance):
        return _validate_olcpm(inst)
    return _validate_upm(inst)


def _validate_olcpm(inst: OlcpmInstance) -> List[str]:
    violations = []
    if inst.n != inst.matroid.size:
        violations.append(
            f"elements: count {inst.n} ≠ matroid ground set size {inst.matroid.size}"
        )
    for i, (cost, dist) in enumerate(zip(inst.costs, inst.dists)):
        if cost < 0:
            violations.append(f"element {i}: cost {cost} < 0")
        for k, (v, p) in enumerate(dist):
            if v < 0:
                violations.append(f"element {i}: outcome {k} value {v} < 0")
            if p < 0:
                violations.append(f"element {i}: outcome {k} probability {p} < 0")
        total = sum(dist.probs, Fraction(0))
        if total != 1:
            violations.append(f"element {i}: probabilities sum {total} ≠ 1")
    return violations


def _validate_upm(inst: UpmInstance) -> List[str]:
    violations = []
    if not 0 <= inst.special < inst.matroid.size:
        violations.append(
            f"special: element {inst.special} out of the ground set "
            f"[0, {inst.matroid.size})"
        )
    others = set(inst.others)
    for i in sorted(others - set(inst.probs)):
        violations.append(f"element {i}: probability missing")
    for i in sorted(set(inst.probs) - others):
        violations.append(f"element {i}: probability given for special or unknown element")
    for i, p in sorted(inst.probs.items()):
        if not 0 <= p <= 1:
            violations.append(f"element {i}: probability out of [0,1]")
    return violations


def realization_iter(
    inst: OlcpmInstance,
    cap: Optional[int] = None,
    pinned: Optional[Mapping[int, int]] = None,
) -> Iterator[Tuple[Realization, Fraction]]:
    """Enumerate every realization with its exact probability.

    Args:
        inst (OlcpmInstance): Instance to enumerate
        cap (Optional[int]): Enumeration cap; enumeration_cap_default if None
        pinned (Optional[Mapping[int, int]]): Outcome index fixed per element;
            pinned elements contribute probability 1 (conditioning)

    Raises:
        EnumerationInfeasibleError: The number of realizations exceeds the cap.

    Yields:
        Tuple[Realization, Fraction]: Outcome index per element and probability
    """
    fixed = dict(pinned or {})
    free = [i for i in range(inst.n) if i not in fixed]
    ensure_enumerable(
        "m^n" if not fixed else f"m^{len(free)}", inst.m ** len(free), cap
    )
    return _realizations(inst, fixed, free)


def _realizations(
    inst: OlcpmInstance, fixed: Mapping[int, int], free: Sequence[int]
) -> Iterator[Tuple[Realization, Fraction]]:
    outcome = [0] * inst.n
    for i, k in fixed.items():
        outcome[i] = k
    for ks in itertools.product(range(inst.m), repeat=len(free)):
        prob = Fraction(1)
        for i, k in zip(free, ks):
            outcome[i] = k
            prob *= inst.prob(i, k)
        yield tuple(outcome), prob
