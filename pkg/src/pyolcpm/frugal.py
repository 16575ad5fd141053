"""Provide the frugal probing policy and its exact evaluation.

The policy keeps a value per element (the grade until probed, the surrogate
after) and repeatedly takes the feasible element of largest value under the
order described below. An unprobed element is probed and accepted at once
when alpha * X >= grade; a probed element is accepted.

Comparisons use a total order: larger value wins; a surrogate beats a grade of
equal value; surrogate ties go to the larger outcome value, then the smaller
index; grade ties go to the smaller index. At alpha = 0 every probed zero-cost
element has surrogate 0 and the outcome values decide, which is the choice
the principal prefers among the agent's best responses.
"""

import logging
from fractions import Fraction
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

from pyolcpm.grades import (
    grades,
    perturbation_epsilon,
    perturbed_costs,
    policy_grades,
    surrogate_from_grade,
)
from pyolcpm.matroid import MatroidOracle, max_weight_independent_set
from pyolcpm.model import (
    ExtRational,
    OlcpmInstance,
    Realization,
    realization_iter,
)

logger = logging.getLogger(__name__)

PrecedenceKey = Tuple[ExtRational, int, Fraction, int]


def precedence_key(
    value: ExtRational,
    index: int,
    is_surrogate: bool,
    outcome_value: Fraction = Fraction(0),
) -> PrecedenceKey:
    """Get the sort key of a grade or a surrogate; a larger key takes precedence.

    Args:
        value (ExtRational): Grade or surrogate
        index (int): Element index
        is_surrogate (bool): True if value is a surrogate
        outcome_value (Fraction): Revealed outcome value of a surrogate; it breaks
            ties between equal surrogates and is ignored for grades

    Returns:
        PrecedenceKey: Sort key
    """
    if not is_surrogate:
        outcome_value = Fraction(0)
    return (value, 1 if is_surrogate else 0, outcome_value, -index)


class FrugalTrace:
    """A record of one run of the frugal policy."""

    def __init__(
        self,
        probe_order: Sequence[int],
        returned: FrozenSet[int],
        principal_reward: Fraction,
        agent_payment: Fraction,
        probing_cost: Fraction,
    ) -> None:
        """Create FrugalTrace object.

        Args:
            probe_order (Sequence[int]): Probed elements in probing order
            returned (FrozenSet[int]): Accepted independent set
            principal_reward (Fraction): Sum of the accepted outcome values
            agent_payment (Fraction): alpha * principal_reward
            probing_cost (Fraction): Sum of the true costs of the probed elements
        """
        self.probe_order = list(probe_order)
        self.returned = frozenset(returned)
        self.principal_reward = principal_reward
        self.agent_payment = agent_payment
        self.probing_cost = probing_cost

    def __repr__(self):
        return (
            f"FrugalTrace(probe_order={self.probe_order}, "
            f"returned={sorted(self.returned)}, "
            f"principal_reward={self.principal_reward!r}, "
            f"agent_payment={self.agent_payment!r}, "
            f"probing_cost={self.probing_cost!r})"
        )

    def __eq__(self, other):
        if isinstance(other, self.__class__):
            return (
                self.probe_order == other.probe_order
                and self.returned == other.returned
                and self.principal_reward == other.principal_reward
                and self.agent_payment == other.agent_payment
                and self.probing_cost == other.probing_cost
            )
        return False

    @property
    def probed(self) -> FrozenSet[int]:
        return frozenset(self.probe_order)

    @property
    def agent_utility(self) -> Fraction:
        return self.agent_payment - self.probing_cost


class UtilityReport:
    """Exact expected utilities and acceptance probabilities at one contract."""

    def __init__(
        self,
        alpha: Fraction,
        epsilon: Fraction,
        expected_reward: Fraction,
        expected_cost: Fraction,
        expected_perturbed_cost: Fraction,
        acceptance: List[List[Fraction]],
    ) -> None:
        """Create UtilityReport object.

        Args:
            alpha (Fraction): Contract parameter
            epsilon (Fraction): Cost perturbation used for the policy
            expected_reward (Fraction): E[sum of accepted values]
            expected_cost (Fraction): E[probing cost] under the true costs
            expected_perturbed_cost (Fraction): E[probing cost] under the perturbed costs
            acceptance (List[List[Fraction]]): r[i][k], probability that element i
                is accepted conditioned on its outcome k (0 for zero-probability k)
        """
        self.alpha = alpha
        self.epsilon = epsilon
        self.expected_reward = expected_reward
        self.expected_cost = expected_cost
        self.expected_perturbed_cost = expected_perturbed_cost
        self.acceptance = acceptance

    def __repr__(self):
        return (
            f"UtilityReport(alpha={self.alpha!r}, u_principal={self.u_principal!r}, "
            f"u_agent={self.u_agent!r}, expected_cost={self.expected_cost!r})"
        )

    @property
    def u_principal(self) -> Fraction:
        return (1 - self.alpha) * self.expected_reward

    @property
    def u_agent(self) -> Fraction:
        """Get the agent's expected utility under the true costs."""
        return self.alpha * self.expected_reward - self.expected_cost

    @property
    def u_agent_perturbed(self) -> Fraction:
        """Get the agent's expected utility under the perturbed costs."""
        return self.alpha * self.expected_reward - self.expected_perturbed_cost


def _frugal(
    matroid: MatroidOracle,
    alpha: Fraction,
    values: Sequence[Fraction],
    taus: Sequence[ExtRational],
) -> Tuple[List[int], FrozenSet[int]]:
    # values[i] is X_i of the realization
    scaled = [alpha * v for v in values]
    chosen: FrozenSet[int] = frozenset()
    pending: Dict[int, Fraction] = {}
    order: List[int] = []
    while True:
        best: Optional[int] = None
        best_key: Optional[PrecedenceKey] = None
        for i in range(len(taus)):
            if i in chosen:
                continue
            current = pending[i] if i in pending else taus[i]
            if current < 0 or not matroid.is_independent(chosen | {i}):
                continue
            key = precedence_key(current, i, i in pending, values[i])
            if best_key is None or key > best_key:
                best, best_key = i, key
        if best is None:
            return order, chosen
        if best in pending:
            chosen = chosen | {best}
        else:
            order.append(best)
            if scaled[best] >= taus[best]:
                chosen = chosen | {best}
            else:
                pending[best] = surrogate_from_grade(taus[best], scaled[best])


def _check_realization(inst: OlcpmInstance, realization: Realization) -> None:
    if len(realization) != inst.n or any(not 0 <= k < inst.m for k in realization):
        raise ValueError(
            f"Unexpected realization: {realization} / it must have {inst.n} "
            f"outcome indices in the range [0, {inst.m})"
        )


def run_frugal(
    inst: OlcpmInstance,
    alpha: Fraction,
    realization: Realization,
    cost_vector: Optional[Sequence[Fraction]] = None,
) -> FrugalTrace:
    """Run the frugal policy on one realization.

    Args:
        inst (OlcpmInstance): Instance
        alpha (Fraction): Contract parameter
        realization (Realization): Outcome index per element
        cost_vector (Optional[Sequence[Fraction]]): Costs the policy is computed
            with; the instance costs if None. The reported probing cost always
            uses the instance costs.

    Raises:
        ValueError: The realization does not match the instance.

    Returns:
        FrugalTrace: Record of the run
    """
    _check_realization(inst, realization)
    taus = grades(inst, alpha, cost_vector)
    return _trace(inst, alpha, realization, taus)


def _trace(
    inst: OlcpmInstance,
    alpha: Fraction,
    realization: Realization,
    taus: Sequence[ExtRational],
) -> FrugalTrace:
    values = [inst.value(i, k) for i, k in enumerate(realization)]
    order, chosen = _frugal(inst.matroid, alpha, values, taus)
    reward = sum((values[i] for i in chosen), Fraction(0))
    cost = sum((inst.costs[i] for i in order), Fraction(0))
    return FrugalTrace(order, chosen, reward, alpha * reward, cost)


def exact_utilities(
    inst: OlcpmInstance, alpha: Fraction, cap: Optional[int] = None
) -> UtilityReport:
    """Evaluate the agent's best response at contract alpha exactly.

    The policy runs with the perturbed costs c * (1 - eps) over every
    realization; probing costs are accumulated under both cost vectors.

    Args:
        inst (OlcpmInstance): Instance
        alpha (Fraction): Contract parameter
        cap (Optional[int]): Enumeration cap

    Raises:
        EnumerationInfeasibleError: m^n exceeds the cap.

    Returns:
        UtilityReport: Exact utilities and acceptance probabilities
    """
    realizations = realization_iter(inst, cap)
    eps = perturbation_epsilon(inst, alpha)
    costs = perturbed_costs(inst, eps)
    taus = grades(inst, alpha, costs)
    reward = cost = perturbed_cost = Fraction(0)
    joint = [[Fraction(0)] * inst.m for _ in range(inst.n)]
    for realization, prob in realizations:
        if prob == 0:
            continue
        trace = _trace(inst, alpha, realization, taus)
        reward += prob * trace.principal_reward
        cost += prob * trace.probing_cost
        perturbed_cost += prob * sum(
            (costs[i] for i in trace.probe_order), Fraction(0)
        )
        for i in trace.returned:
            joint[i][realization[i]] += prob
    acceptance = [
        [
            joint[i][k] / inst.prob(i, k) if inst.prob(i, k) else Fraction(0)
            for k in range(inst.m)
        ]
        for i in range(inst.n)
    ]
    report = UtilityReport(alpha, eps, reward, cost, perturbed_cost, acceptance)
    logger.debug("exact utilities: %r", report)
    return report


def acceptance_prob_exact(
    inst: OlcpmInstance, alpha: Fraction, i: int, k: int, cap: Optional[int] = None
) -> Fraction:
    """Get the probability that element i is accepted given its outcome k.

    Args:
        inst (OlcpmInstance): Instance
        alpha (Fraction): Contract parameter
        i (int): Element index
        k (int): Outcome index of element i
        cap (Optional[int]): Enumeration cap

    Raises:
        ValueError: i or k is out of range.
        EnumerationInfeasibleError: m^(n-1) exceeds the cap.

    Returns:
        Fraction: Exact conditional acceptance probability
    """
    if not (0 <= i < inst.n and 0 <= k < inst.m):
        raise ValueError(
            f"Unexpected element/outcome: ({i}, {k}) / "
            f"they must be in [0, {inst.n}) x [0, {inst.m})"
        )
    realizations = realization_iter(inst, cap, pinned={i: k})
    taus = policy_grades(inst, alpha)
    accepted = Fraction(0)
    for realization, prob in realizations:
        if prob and i in _trace(inst, alpha, realization, taus).returned:
            accepted += prob
    return accepted


def is_blocking(
    taus: Sequence[ExtRational],
    i: int,
    pinned_surrogate: Fraction,
    j: int,
    surrogate: Fraction,
    pinned_value: Fraction = Fraction(0),
    value: Fraction = Fraction(0),
) -> bool:
    """Check element j with the given surrogate blocks element i.

    Element j blocks i when it is probed before i and its surrogate beats
    the grade of i, or when it is probed before i is considered and its
    surrogate beats the surrogate of i.

    Args:
        taus (Sequence[ExtRational]): Grade per element
        i (int): Element index
        pinned_surrogate (Fraction): Surrogate of i, min(alpha * v_{i,k}, tau_i)
        j (int): Index of the other element
        surrogate (Fraction): Surrogate of j
        pinned_value (Fraction): Outcome value v_{i,k} of i
        value (Fraction): Outcome value of j

    Returns:
        bool: True if j is accepted before i is considered
    """
    tau_i = precedence_key(taus[i], i, False)
    tau_j = precedence_key(taus[j], j, False)
    y_j = precedence_key(surrogate, j, True, value)
    if tau_j > tau_i and y_j > tau_i:
        return True
    y_i = precedence_key(pinned_surrogate, i, True, pinned_value)
    return tau_j > y_i and y_j > y_i


def blocking_set(
    taus: Sequence[ExtRational],
    surrogates: Sequence[Fraction],
    i: int,
    pinned_surrogate: Fraction,
    values: Optional[Sequence[Fraction]] = None,
    pinned_value: Fraction = Fraction(0),
) -> FrozenSet[int]:
    """Get the elements accepted before element i is considered for acceptance.

    Args:
        taus (Sequence[ExtRational]): Grade per element
        surrogates (Sequence[Fraction]): Surrogate per element (entry i unused)
        i (int): Element index
        pinned_surrogate (Fraction): Surrogate of i
        values (Optional[Sequence[Fraction]]): Outcome value per element (entry i
            unused); all 0 if None, leaving surrogate ties to the index
        pinned_value (Fraction): Outcome value of i

    Returns:
        FrozenSet[int]: Blocking elements
    """
    outcome_values = [Fraction(0)] * len(surrogates) if values is None else values
    return frozenset(
        j
        for j, (y, v) in enumerate(zip(surrogates, outcome_values))
        if j != i and is_blocking(taus, i, pinned_surrogate, j, y, pinned_value, v)
    )


def accepted_by_span(
    matroid: MatroidOracle,
    taus: Sequence[ExtRational],
    surrogates: Sequence[Fraction],
    i: int,
    pinned_surrogate: Fraction,
    values: Optional[Sequence[Fraction]] = None,
    pinned_value: Fraction = Fraction(0),
) -> bool:
    """Check element i is accepted: its grade is nonnegative and it is not
    spanned by its blocking set."""
    if taus[i] < 0:
        return False
    blockers = blocking_set(taus, surrogates, i, pinned_surrogate, values, pinned_value)
    return not matroid.in_span(blockers, i)


def expected_max_surrogate(
    inst: OlcpmInstance,
    alpha: Fraction,
    costs: Optional[Sequence[Fraction]] = None,
    cap: Optional[int] = None,
) -> Fraction:
    """Get E[max over independent J of sum of surrogates] by brute force.

    It equals the agent's maximum expected utility under the given costs.
    """
    realizations = realization_iter(inst, cap)
    taus = grades(inst, alpha, costs)
    total = Fraction(0)
    for realization, prob in realizations:
        if prob == 0:
            continue
        ys = [
            surrogate_from_grade(taus[i], alpha * inst.value(i, k))
            for i, k in enumerate(realization)
        ]
        best = max_weight_independent_set(inst.matroid, ys)
        total += prob * sum((ys[j] for j in best), Fraction(0))
    return total
