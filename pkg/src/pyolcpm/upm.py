"""Provide unreliability (UPM) solvers and the reductions to and from OLCPM.

The unreliability of an instance is the probability that the special element
is not spanned by the random set of existing other elements.
"""

import itertools
import logging
import math
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np

from pyolcpm.errors import InfeasibleParametersError, InstanceValidationError
from pyolcpm.frugal import is_blocking
from pyolcpm.grades import policy_grades, surrogate_from_grade
from pyolcpm.matroid import UniformMatroid
from pyolcpm.model import (
    OlcpmInstance,
    RationalLike,
    UpmInstance,
    ensure_enumerable,
    to_rational,
    validate,
)
from pyolcpm.sampler import SampleConfig, draw_counts
from pyolcpm.solver import ContractSolution

logger = logging.getLogger(__name__)

# maximum ground set size produced by upm_cleanup
copy_cap_default: int = 4096

UpmOracle = Callable[[UpmInstance], Union[Fraction, float]]
OlcpmOracle = Callable[[OlcpmInstance], ContractSolution]


def _check_upm(inst: UpmInstance) -> None:
    violations = validate(inst)
    if violations:
        raise InstanceValidationError(violations)


###############################################################################
# UPM solvers
###############################################################################


def upm_exact(inst: UpmInstance, cap: Optional[int] = None) -> Fraction:
    """Get the unreliability by enumerating every subset of the other elements.

    Args:
        inst (UpmInstance): Instance
        cap (Optional[int]): Enumeration cap

    Raises:
        InstanceValidationError: The instance is invalid.
        EnumerationInfeasibleError: 2^(n-1) exceeds the cap.

    Returns:
        Fraction: Probability that the special element is not spanned
    """
    _check_upm(inst)
    others = inst.others
    ensure_enumerable("2^(n-1)", 2 ** len(others), cap)
    total = Fraction(0)
    for present in itertools.product((False, True), repeat=len(others)):
        weight = Fraction(1)
        for j, exists in zip(others, present):
            weight *= inst.probs[j] if exists else 1 - inst.probs[j]
            if weight == 0:
                break
        if weight == 0:
            continue
        existing = [j for j, exists in zip(others, present) if exists]
        if not inst.matroid.in_span(existing, inst.special):
            total += weight
    return total


def upm_uniform_poly(inst: UpmInstance) -> Fraction:
    """Get the unreliability of a uniform matroid by the generating polynomial.

    The coefficient of x^d in prod((1 - p) + p * x) is the probability that
    exactly d other elements exist; the special element stays unspanned iff
    fewer than rank of them exist.

    Raises:
        InstanceValidationError: The instance is invalid.
        InfeasibleParametersError: The matroid is not uniform.
    """
    _check_upm(inst)
    if not isinstance(inst.matroid, UniformMatroid):
        raise InfeasibleParametersError(
            f"Unexpected matroid: {inst.matroid!r} / it must be uniform"
        )
    coefficients = [Fraction(1)]
    for j in inst.others:
        p = inst.probs[j]
        shifted = [Fraction(0)] + [c * p for c in coefficients]
        coefficients = [c * (1 - p) for c in coefficients] + [Fraction(0)]
        coefficients = [a + b for a, b in zip(coefficients, shifted)]
    return sum(coefficients[: inst.matroid.rank_bound], Fraction(0))


def upm_monte_carlo(inst: UpmInstance, cfg: SampleConfig) -> float:
    """Estimate the unreliability from seeded draws of the existing elements.

    Raises:
        InstanceValidationError: The instance is invalid.
        BudgetExceededError: The defaulted replication count exceeds the cap.
    """
    _check_upm(inst)
    others = inst.others
    t = cfg.resolve_replications(inst.n, 2)
    probs = np.array([float(inst.probs[j]) for j in others])

    def draw(rng: np.random.Generator, size: int) -> np.ndarray:
        return (rng.random((size, len(others))) < probs).astype(np.int64)

    unspanned = 0
    for row, count in sorted(draw_counts(cfg, t, draw).items()):
        existing = [j for j, exists in zip(others, row) if exists]
        if not inst.matroid.in_span(existing, inst.special):
            unspanned += count
    return unspanned / t


###############################################################################
# OLCPM to UPM
###############################################################################


def olcpm_to_upm(
    inst: OlcpmInstance,
    alpha: Fraction,
    i: int,
    k: int,
    oracle: Optional[UpmOracle] = None,
) -> Tuple[Optional[UpmInstance], Union[Fraction, float]]:
    """Express the acceptance probability r[i][k] as an unreliability.

    Every other element j exists with the probability that its outcome
    makes it block element i, so i is accepted iff it is not spanned.

    Args:
        inst (OlcpmInstance): Instance
        alpha (Fraction): Contract parameter
        i (int): Element index
        k (int): Outcome index of element i
        oracle (Optional[UpmOracle]): UPM solver; upm_exact if None

    Raises:
        ValueError: i or k is out of range.

    Returns:
        Tuple[Optional[UpmInstance], Union[Fraction, float]]:
            The UPM instance (None when the grade of i is negative) and r[i][k]
    """
    if not (0 <= i < inst.n and 0 <= k < inst.m):
        raise ValueError(
            f"Unexpected element/outcome: ({i}, {k}) / "
            f"they must be in [0, {inst.n}) x [0, {inst.m})"
        )
    taus = policy_grades(inst, alpha)
    if taus[i] < 0:
        return None, Fraction(0)
    pinned = surrogate_from_grade(taus[i], alpha * inst.value(i, k))
    probs: Dict[int, Fraction] = {}
    for j in range(inst.n):
        if j == i:
            continue
        probs[j] = sum(
            (
                p
                for v, p in inst.dists[j]
                if is_blocking(
                    taus,
                    i,
                    pinned,
                    j,
                    surrogate_from_grade(taus[j], alpha * v),
                    inst.value(i, k),
                    v,
                )
            ),
            Fraction(0),
        )
    upm = UpmInstance(inst.matroid, i, probs)
    solve = upm_exact if oracle is None else oracle
    return upm, solve(upm)


###############################################################################
# UPM to OLCPM
###############################################################################


def upm_cleanup(
    inst: UpmInstance,
    delta: Fraction,
    eps: Fraction,
    copy_cap: Optional[int] = None,
) -> UpmInstance:
    """Replace elements by parallel copies so that every probability is at most delta.

    A probability of 1 is first lowered to 1 - eps / n. An element with
    delta < p < 1 becomes the smallest number k of parallel copies with
    (1 - delta)^k <= 1 - p: k - 1 copies with delta and one with the rest,
    so that at least one copy exists with probability p. The answer grows
    by at most eps.

    Args:
        inst (UpmInstance): Instance
        delta (Fraction): Probability bound in (0, 1)
        eps (Fraction): Allowed error in (0, 1)
        copy_cap (Optional[int]): Largest ground set; copy_cap_default if None

    Raises:
        InfeasibleParametersError: delta or eps is out of range,
                                   or the copies exceed the cap.

    Returns:
        UpmInstance: Instance on the parallel extension (inst itself if unchanged)
    """
    if not (0 < delta < 1 and 0 < eps < 1):
        raise InfeasibleParametersError(
            f"Unexpected delta/eps: {delta}/{eps} / they must be in (0, 1)"
        )
    _check_upm(inst)
    if all(p <= delta for p in inst.probs.values()):
        return inst
    cap = copy_cap_default if copy_cap is None else copy_cap
    chains: Dict[int, List[Fraction]] = {inst.special: [Fraction(0)]}
    size = 1
    for j in inst.others:
        p = inst.probs[j]
        if p == 1:
            p = 1 - eps / inst.n
        if p > delta * (cap - size):
            # at least p / delta copies are needed
            raise InfeasibleParametersError(
                f"Unexpected number of copies of element {j}: more than {cap - size} / "
                "raise the copy cap or delta"
            )
        chain = []
        while p > delta:
            chain.append(delta)
            p = (p - delta) / (1 - delta)
            if size + len(chain) >= cap:
                raise InfeasibleParametersError(
                    f"Unexpected number of copies: more than {cap} / "
                    "raise the copy cap or delta"
                )
        chain.append(p)
        chains[j] = chain
        size += len(chain)
    extended = inst.matroid.parallel_extend({j: len(c) for j, c in chains.items()})
    probs: Dict[int, Fraction] = {}
    special = -1
    position = 0
    for j in range(inst.n):
        for p in chains[j]:
            if j == inst.special:
                special = position
            else:
                probs[position] = p
            position += 1
    logger.debug("cleanup: %d elements become %d", inst.n, extended.size)
    return UpmInstance(extended, special, probs)


def _growth(eps: Fraction, n: int) -> Fraction:
    # (1/eps^n - 1) / (1/eps - 1) = 1 + 1/eps + ... + 1/eps^(n-1)
    return (1 / eps**n - 1) / (1 / eps - 1)


class ReductionParams:
    """Parameters of the UPM to OLCPM reduction."""

    def __init__(
        self,
        beta: RationalLike,
        eps: RationalLike,
        delta: RationalLike,
        xi: RationalLike,
    ) -> None:
        """Create ReductionParams object.

        Args:
            beta (RationalLike): Principal's utility at contract 0, in [0, 1]
            eps (RationalLike): Error, in (0, 1/2)
            delta (RationalLike): Probability bound, in (0, 1)
            xi (RationalLike): Gap of the last critical value below 1, positive

        Raises:
            InfeasibleParametersError: A parameter is out of its range.
        """
        self.beta = to_rational(beta)
        self.eps = to_rational(eps)
        self.delta = to_rational(delta)
        self.xi = to_rational(xi)
        if not 0 <= self.beta <= 1:
            raise InfeasibleParametersError(
                f"Unexpected beta: {self.beta} / it must be in [0, 1]"
            )
        if not 0 < self.eps < Fraction(1, 2):
            raise InfeasibleParametersError(
                f"Unexpected eps: {self.eps} / it must be in (0, 1/2)"
            )
        if not 0 < self.delta < 1:
            raise InfeasibleParametersError(
                f"Unexpected delta: {self.delta} / it must be in (0, 1)"
            )
        if self.xi <= 0:
            raise InfeasibleParametersError(f"Unexpected xi: {self.xi} / it must be positive")

    def __repr__(self):
        return (
            f'ReductionParams("{self.beta}", "{self.eps}", "{self.delta}", "{self.xi}")'
        )

    def __eq__(self, other):
        if isinstance(other, self.__class__):
            return (self.beta, self.eps, self.delta, self.xi) == (
                other.beta,
                other.eps,
                other.delta,
                other.xi,
            )
        return False

    def violations(self, n: int, relaxed: bool = False) -> List[str]:
        """Get the violated conditions for n elements; delta is skipped if relaxed."""
        found = []
        growth = _growth(self.eps, n)
        if not relaxed and self.delta * growth / self.eps**2 >= self.beta:
            found.append(
                f"delta * (1/eps^n - 1) / (eps^2 (1/eps - 1)) = "
                f"{self.delta * growth / self.eps**2} must be less than beta = {self.beta}"
            )
        if self.xi >= self.eps ** (n - 2):
            found.append(f"xi = {self.xi} must be less than eps^(n-2) = {self.eps ** (n - 2)}")
        if self.xi * (1 + growth / self.eps) > self.eps:
            found.append(
                f"xi * (1 + (1/eps^n - 1) / (eps (1/eps - 1))) = "
                f"{self.xi * (1 + growth / self.eps)} must be eps = {self.eps} or less"
            )
        return found

    def check(self, n: int, relaxed: bool = False) -> None:
        """Check the conditions for n elements.

        Raises:
            InfeasibleParametersError: A condition is violated.
        """
        found = self.violations(n, relaxed)
        if found:
            raise InfeasibleParametersError(
                "Unexpected reduction parameters / " + "; ".join(found)
            )


def _largest_power(limit: Fraction, strict: bool) -> Fraction:
    # largest 2^-a (a >= 1) below limit, or at most limit if not strict
    a = max(1, (limit.denominator // limit.numerator).bit_length() - 1)
    while (Fraction(1, 2**a) >= limit) if strict else (Fraction(1, 2**a) > limit):
        a += 1
    return Fraction(1, 2**a)


def choose_reduction_params(
    inst: UpmInstance, beta: RationalLike, eps: RationalLike = Fraction(1, 4)
) -> ReductionParams:
    """Choose the largest powers of 1/2 for delta and xi meeting the conditions.

    Raises:
        InfeasibleParametersError: beta is out of (0, 1] or eps out of (0, 1/2).
    """
    beta, eps = to_rational(beta), to_rational(eps)
    if not 0 < beta <= 1:
        raise InfeasibleParametersError(f"Unexpected beta: {beta} / it must be in (0, 1]")
    if not 0 < eps < Fraction(1, 2):
        raise InfeasibleParametersError(f"Unexpected eps: {eps} / it must be in (0, 1/2)")
    n = inst.n
    growth = _growth(eps, n)
    delta = _largest_power(beta * eps**2 / growth, strict=True)
    xi = min(
        _largest_power(eps ** (n - 2), strict=True),
        _largest_power(eps / (1 + growth / eps), strict=False),
    )
    return ReductionParams(beta, eps, delta, xi)


def _reduction_elements(
    inst: UpmInstance, params: ReductionParams, relaxed: bool, least: int
) -> List[Tuple[int, int, Fraction]]:
    _check_upm(inst)
    n = inst.n
    if n < least:
        raise InfeasibleParametersError(
            f"Unexpected number of elements: {n} / it must be {least} or more"
        )
    params.check(n, relaxed)
    others = inst.others
    if inst.matroid.rank([others[0]]) == 0:
        raise InfeasibleParametersError(
            f"Unexpected loop: element {others[0]} / "
            "the first non-special element must not be a loop"
        )
    for j in others:
        p = inst.probs[j]
        if p == 0:
            raise InfeasibleParametersError(
                f"Unexpected probability of element {j}: 0 / it must be positive"
            )
        if not relaxed and p > params.delta:
            raise InfeasibleParametersError(
                f"Unexpected probability of element {j}: {p} / "
                f"it must be delta = {params.delta} or less"
            )
    # (ground index, position from 1, probability)
    return [(j, pos, inst.probs[j]) for pos, j in enumerate(others, start=1)]


def _assemble(
    inst: UpmInstance,
    params: ReductionParams,
    elements: Dict[int, Tuple[Fraction, List[Tuple[Fraction, Fraction]]]],
) -> OlcpmInstance:
    xi = params.xi
    elements[inst.special] = (
        (1 - xi) / xi,
        [(1 / xi, Fraction(1)), (Fraction(0), Fraction(0))],
    )
    return OlcpmInstance(inst.matroid, [elements[g] for g in range(inst.n)])


def upm_to_olcpm(
    inst: UpmInstance, params: ReductionParams, relaxed: bool = False
) -> OlcpmInstance:
    """Build an OLCPM instance whose optimum reveals the unreliability.

    The other elements in ascending order take positions 1..n-1. Position 1
    has cost 0 and value beta / p; position t >= 2 has cost
    (1/eps^(t-1) - 1) * p and value 1/eps^(t-1); each is worth its value
    with its probability p and 0 otherwise. The special element is worth
    1/xi for sure at cost (1 - xi) / xi. Then U_P(0) = beta and
    U_P(1 - xi) lies in [rho, rho + eps].

    Args:
        inst (UpmInstance): Instance with n >= 2
        params (ReductionParams): Reduction parameters
        relaxed (bool): Skip the delta conditions

    Raises:
        InfeasibleParametersError: A precondition is violated.

    Returns:
        OlcpmInstance: Instance on the same matroid
    """
    eps = params.eps
    elements = {}
    for j, pos, p in _reduction_elements(inst, params, relaxed, 2):
        if pos == 1:
            elements[j] = (Fraction(0), [(params.beta / p, p), (Fraction(0), 1 - p)])
        else:
            value = 1 / eps ** (pos - 1)
            elements[j] = ((value - 1) * p, [(value, p), (Fraction(0), 1 - p)])
    return _assemble(inst, params, elements)


def upm_to_olcpm_bounded_support(
    inst: UpmInstance, params: ReductionParams, relaxed: bool = False
) -> OlcpmInstance:
    """Build the reduction instance with outcome values in {0, 1/eps, 1/eps^(n-2)}.

    Positions 2..n-1 split their probability p into q1 on 1/eps and q2 on
    1/eps^(n-2) with q1 + q2 = p and the same mean p/eps^(t-1), which keeps
    every grade curve unchanged.

    Raises:
        InfeasibleParametersError: n < 4, a precondition is violated
                                   or a split is negative.
    """
    eps = params.eps
    n = inst.n
    low, high = 1 / eps, 1 / eps ** (n - 2)
    elements = {}
    for j, pos, p in _reduction_elements(inst, params, relaxed, 4):
        if pos == 1:
            elements[j] = (Fraction(0), [(params.beta / p, p), (Fraction(0), 1 - p)])
            continue
        value = 1 / eps ** (pos - 1)
        q2 = p * (value - low) / (high - low)
        q1 = p - q2
        if q1 < 0 or q2 < 0:
            raise InfeasibleParametersError(
                f"Unexpected split of element {j}: ({q1}, {q2}) / "
                "both parts must be 0 or more"
            )
        elements[j] = ((value - 1) * p, [(low, q1), (high, q2), (Fraction(0), 1 - p)])
    return _assemble(inst, params, elements)


###############################################################################
# UPM through an OLCPM oracle
###############################################################################


def _certainly_spanned(inst: UpmInstance) -> bool:
    certain = [j for j in inst.others if inst.probs[j] == 1]
    return inst.matroid.in_span(certain, inst.special)


def _denominator_product(inst: UpmInstance) -> int:
    return math.prod(inst.probs[j].denominator for j in inst.others)


def _prepare(
    inst: UpmInstance, beta: Fraction, eps: Fraction, relaxed: bool
) -> Tuple[UpmInstance, ReductionParams]:
    params = choose_reduction_params(inst, beta, eps)
    if relaxed:
        return inst, params
    # the delta bound shrinks as cleanup grows the ground set
    while True:
        target = upm_cleanup(inst, params.delta, eps)
        refined = choose_reduction_params(target, beta, eps)
        if refined.delta >= params.delta:
            return target, ReductionParams(beta, eps, params.delta, refined.xi)
        params = refined


def _is_zero_type(
    solution: ContractSolution, params: ReductionParams, n: int
) -> bool:
    at_zero = solution.utility_at(Fraction(0))
    at_last = solution.utility_at(1 - params.xi)
    if at_zero is not None and at_last is not None:
        return at_zero > at_last
    first = 1 - params.eps if n >= 3 else 1 - params.xi
    return solution.alpha_star < first


def _beta_exceeds_rho(
    inst: UpmInstance,
    beta: Fraction,
    eps: Fraction,
    oracle: OlcpmOracle,
    relaxed: bool,
) -> bool:
    target, params = _prepare(inst, beta, eps, relaxed)
    solution = oracle(upm_to_olcpm(target, params, relaxed))
    zero_type = _is_zero_type(solution, params, target.n)
    logger.debug(
        "search beta=%s: alpha*=%s %s-type",
        beta,
        solution.alpha_star,
        "0" if zero_type else "(1-xi)",
    )
    return zero_type


def upm_via_olcpm(
    inst: UpmInstance, oracle: OlcpmOracle, relaxed: bool = False
) -> Fraction:
    """Get the exact unreliability with an optimal-contract oracle.

    With Lambda the product of the probability denominators, the answer is a
    multiple of 1/Lambda. Each probe beta = z/Lambda builds the reduction
    instance with eps = 1/(4 Lambda) and asks the oracle; the probe is 0-type
    iff U_P(0) > U_P(1 - xi). The answer is the largest z/Lambda that is not
    0-type, found by binary search.

    Args:
        inst (UpmInstance): Instance
        oracle (OlcpmOracle): Optimal linear contract solver
        relaxed (bool): Skip cleanup and the delta conditions

    Raises:
        InstanceValidationError: The instance is invalid.
        InfeasibleParametersError: An intermediate instance is infeasible.

    Returns:
        Fraction: Unreliability
    """
    _check_upm(inst)
    if _certainly_spanned(inst):
        return Fraction(0)
    scale = _denominator_product(inst)
    eps = Fraction(1, 4 * scale)
    lo, hi = 1, scale
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if _beta_exceeds_rho(inst, Fraction(mid, scale), eps, oracle, relaxed):
            hi = mid - 1
        else:
            lo = mid
    logger.info("unreliability %s after binary search over %d", Fraction(lo, scale), scale)
    return Fraction(lo, scale)


def upm_via_olcpm_approx(
    inst: UpmInstance,
    psi: RationalLike,
    oracle: OlcpmOracle,
    relaxed: bool = False,
) -> Fraction:
    """Approximate the unreliability within a factor (1 + psi)^2.

    The probes run over the grid (1 + psi)^z / Lambda, capped at 1, with
    eps = min(psi / Lambda, 1/4); the smaller neighbour of the flip is returned.

    Raises:
        InstanceValidationError: The instance is invalid.
        InfeasibleParametersError: psi is not positive
                                   or an intermediate instance is infeasible.
    """
    psi = to_rational(psi)
    if psi <= 0:
        raise InfeasibleParametersError(f"Unexpected psi: {psi} / it must be positive")
    _check_upm(inst)
    if _certainly_spanned(inst):
        return Fraction(0)
    scale = _denominator_product(inst)
    eps = min(psi / scale, Fraction(1, 4))
    grid = [Fraction(1, scale)]
    while grid[-1] < 1:
        grid.append(min(Fraction(1), grid[-1] * (1 + psi)))
    lo, hi = 0, len(grid) - 1
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if _beta_exceeds_rho(inst, grid[mid], eps, oracle, relaxed):
            hi = mid - 1
        else:
            lo = mid
    return grid[lo]
