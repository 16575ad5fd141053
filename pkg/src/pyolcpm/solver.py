"""Provide optimal linear contract search over critical values."""

import logging
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

from pyolcpm.errors import (
    BalanceViolationError,
    InfeasibleParametersError,
    SupportShapeError,
)
from pyolcpm.frugal import exact_utilities
from pyolcpm.grades import critical_values
from pyolcpm.model import OlcpmInstance, UpmInstance, ensure_enumerable
from pyolcpm.sampler import (
    SampleConfig,
    certified_replications,
    sample_acceptance,
    sample_agent_utility,
    utility_from_acceptance,
)

logger = logging.getLogger(__name__)

# largest number of distinct outcome values accepted by the bounded-support solver
max_distinct_values: int = 8

Utility = Union[Fraction, float]


class ContractSolution:
    """The best linear contract found among the evaluated candidates."""

    def __init__(
        self,
        alpha_star: Fraction,
        utility: Utility,
        method: str,
        candidates: Sequence[Tuple[Fraction, Utility]],
        metadata: Optional[Dict[str, Any]] = None,
    ) -> None:
        """Create ContractSolution object.

        Args:
            alpha_star (Fraction): Best contract parameter
            utility (Utility): Principal's utility at alpha_star (exact or estimated)
            method (str): Name of the method
            candidates (Sequence[Tuple[Fraction, Utility]]): Evaluated (alpha, utility)
            metadata (Optional[Dict[str, Any]]): Method parameters such as mu
        """
        self.alpha_star = alpha_star
        self.utility = utility
        self.method = method
        self.candidates = list(candidates)
        self.metadata = dict(metadata or {})

    def __repr__(self):
        return (
            f"ContractSolution(alpha_star={self.alpha_star!r}, "
            f"utility={self.utility!r}, method={self.method!r})"
        )

    def utility_at(self, alpha: Fraction) -> Optional[Utility]:
        """Get the recorded utility of a candidate, or None if not evaluated."""
        for candidate, utility in self.candidates:
            if candidate == alpha:
                return utility
        return None


def _best(
    candidates: Sequence[Tuple[Fraction, Utility]],
    method: str,
    metadata: Optional[Dict[str, Any]] = None,
) -> ContractSolution:
    # candidates are sorted by alpha; ties keep the smallest alpha
    alpha_star, best = candidates[0]
    for alpha, utility in candidates[1:]:
        if utility > best:
            alpha_star, best = alpha, utility
    logger.info("%s: alpha*=%s utility=%s", method, alpha_star, best)
    return ContractSolution(alpha_star, best, method, candidates, metadata)


def solve_exact(inst: OlcpmInstance, cap: Optional[int] = None) -> ContractSolution:
    """Find the optimal linear contract exactly.

    Args:
        inst (OlcpmInstance): Instance
        cap (Optional[int]): Enumeration cap

    Raises:
        EnumerationInfeasibleError: m^n exceeds the cap.

    Returns:
        ContractSolution: Argmax over the critical values, ties to the smallest alpha
    """
    ensure_enumerable("m^n", inst.m**inst.n, cap)
    candidates = []
    for alpha in critical_values(inst):
        utility = exact_utilities(inst, alpha, cap).u_principal
        logger.debug("exact: U_P(%s) = %s", alpha, utility)
        candidates.append((alpha, utility))
    return _best(candidates, "exact")


def _sampling_config(cfg: SampleConfig, mu: Fraction) -> SampleConfig:
    if cfg.replications is not None or cfg.mu is not None:
        return cfg
    return SampleConfig(cfg.seed, None, mu, cfg.workers, cfg.allow_large, cfg.cap)


def _solve_sampled(
    inst: OlcpmInstance,
    cfg: SampleConfig,
    method: str,
    metadata: Dict[str, Any],
) -> ContractSolution:
    candidates: List[Tuple[Fraction, Utility]] = []
    replications = cfg.resolve_replications(inst.n, inst.m)
    for alpha in critical_values(inst):
        estimate = sample_acceptance(inst, alpha, cfg)
        utility = utility_from_acceptance(inst, alpha, estimate.rho)
        logger.debug("%s: U_P(%s) ~ %r", method, alpha, utility)
        candidates.append((alpha, utility))
    metadata["replications"] = replications
    metadata["seed"] = cfg.seed
    return _best(candidates, method, metadata)


def max_value_mass(inst: OlcpmInstance) -> List[Fraction]:
    """Get max_k v[i][k] * p[i][k] per element."""
    return [max(v * p for v, p in d) for d in inst.dists]


def balance_ratio(inst: OlcpmInstance) -> Fraction:
    """Get the smallest omega for which the instance is balanced (1 if trivial)."""
    masses = max_value_mass(inst)
    positive = [w for w in masses if w > 0]
    if not positive:
        return Fraction(1)
    return max(Fraction(1), max(masses) / min(positive))


def check_balance(inst: OlcpmInstance, omega: Fraction) -> None:
    """Check max_k v_ik p_ik / max_k v_jk p_jk <= omega for distinct i, j.

    Pairs where the denominator is 0 are skipped.

    Raises:
        BalanceViolationError: Some pair exceeds omega.
    """
    masses = max_value_mass(inst)
    for i, wi in enumerate(masses):
        for j, wj in enumerate(masses):
            if i != j and wj > 0 and wi / wj > omega:
                raise BalanceViolationError(
                    f"Unexpected balance of elements {i} and {j}: "
                    f"{wi} / {wj} = {wi / wj} / it must be {omega} or less"
                )


def solve_fpras_balanced(
    inst: OlcpmInstance,
    eps: Fraction,
    omega: Fraction,
    cfg: SampleConfig,
) -> ContractSolution:
    """Find a near-optimal linear contract by sampling on a balanced instance.

    mu = (eps / (2 * omega)) / (160 m^4 n^4) gives the certified budget
    ceil(80 m^3 n^3 / mu^4), which is reported; cfg.replications, when set,
    is used instead.

    Args:
        inst (OlcpmInstance): Instance
        eps (Fraction): Accuracy in (0, 1)
        omega (Fraction): Balance bound
        cfg (SampleConfig): Sampling configuration

    Raises:
        InfeasibleParametersError: eps is out of (0, 1).
        BalanceViolationError: The instance is not balanced for omega.
        BudgetExceededError: The certified budget exceeds the cap.

    Returns:
        ContractSolution: Argmax of the estimated utilities
    """
    if not 0 < eps < 1:
        raise InfeasibleParametersError(f"Unexpected eps: {eps} / it must be in (0, 1)")
    check_balance(inst, omega)
    mu = (eps / (2 * omega)) / (160 * inst.m**4 * inst.n**4)
    metadata: Dict[str, Any] = {
        "epsilon": eps,
        "omega": omega,
        "mu": mu,
        "certified_replications": certified_replications(inst.n, inst.m, mu),
    }
    return _solve_sampled(inst, _sampling_config(cfg, mu), "balanced", metadata)


def check_support_shape(inst: OlcpmInstance, limit: Optional[int] = None) -> int:
    """Check every element has support {0, v} and count the distinct values.

    Args:
        inst (OlcpmInstance): Instance
        limit (Optional[int]): Largest allowed count; max_distinct_values if None

    Raises:
        SupportShapeError: The support is not of the zero/value shape
                           or there are too many distinct values.

    Returns:
        int: Number T of distinct outcome values
    """
    if inst.m > 2:
        raise SupportShapeError(
            f"Unexpected support size: {inst.m} / it must be 2 or less"
        )
    for i, dist in enumerate(inst.dists):
        if 0 not in dist.values:
            raise SupportShapeError(
                f"Unexpected support of element {i}: {list(dist.values)} / "
                "it must contain the value 0"
            )
    distinct = len({v for d in inst.dists for v in d.values})
    bound = max_distinct_values if limit is None else limit
    if distinct > bound:
        raise SupportShapeError(
            f"Unexpected number of distinct values: {distinct} / "
            f"it must be {bound} or less"
        )
    return distinct


def solve_fpras_bounded_support(
    inst: OlcpmInstance,
    eps: Fraction,
    cfg: SampleConfig,
    limit: Optional[int] = None,
) -> ContractSolution:
    """Find a near-optimal linear contract by sampling on zero/value supports.

    mu = eps / (2n)^T / (160 m^4 n^4) / (2 * 80 n^3 m^3) with T distinct values.
    Critical values whose acceptance probabilities are tiny are underestimated
    and do not win the argmax.

    Raises:
        InfeasibleParametersError: eps is out of (0, 1).
        SupportShapeError: The support is not of the zero/value shape.
        BudgetExceededError: The certified budget exceeds the cap.
    """
    if not 0 < eps < 1:
        raise InfeasibleParametersError(f"Unexpected eps: {eps} / it must be in (0, 1)")
    distinct = check_support_shape(inst, limit)
    n, m = inst.n, inst.m
    mu = (
        eps
        / Fraction(2 * n) ** distinct
        / (160 * m**4 * n**4)
        / (2 * 80 * n**3 * m**3)
    )
    metadata: Dict[str, Any] = {
        "epsilon": eps,
        "distinct_values": distinct,
        "mu": mu,
        "certified_replications": certified_replications(n, m, mu),
    }
    return _solve_sampled(inst, _sampling_config(cfg, mu), "bounded-support", metadata)


def solve_via_upm(
    inst: OlcpmInstance,
    upm_oracle: Callable[[UpmInstance], Utility],
    method: str = "upm",
) -> ContractSolution:
    """Find the optimal linear contract with acceptance probabilities from a UPM oracle.

    At every critical value, r[i][k] is the oracle's answer on the
    unreliability instance blocking element i with outcome k.

    Args:
        inst (OlcpmInstance): Instance
        upm_oracle: Function answering unreliability instances
        method (str): Name recorded in the solution

    Returns:
        ContractSolution: Argmax over the critical values
    """
    from pyolcpm.upm import olcpm_to_upm

    candidates: List[Tuple[Fraction, Utility]] = []
    for alpha in critical_values(inst):
        total: Utility = Fraction(0)
        for i in range(inst.n):
            for k in range(inst.m):
                mass = inst.value(i, k) * inst.prob(i, k)
                if mass == 0:
                    continue
                r = olcpm_to_upm(inst, alpha, i, k, upm_oracle)[1]
                total += mass * r
        candidates.append((alpha, (1 - alpha) * total))
    return _best(candidates, method)


def fpras_oracle(
    cfg: SampleConfig, eps: Fraction, omega: Optional[Fraction] = None
) -> Callable[[OlcpmInstance], ContractSolution]:
    """Get a sampled optimal-contract oracle built on solve_fpras_balanced.

    When omega is None, the balance ratio of each queried instance is used.
    """

    def oracle(inst: OlcpmInstance) -> ContractSolution:
        bound = balance_ratio(inst) if omega is None else omega
        return solve_fpras_balanced(inst, eps, bound, cfg)

    return oracle


class SweepRow:
    """One row of a utility sweep."""

    def __init__(
        self, alpha: Fraction, u_principal: Utility, u_agent: Utility, expected_cost: Utility
    ) -> None:
        self.alpha = alpha
        self.u_principal = u_principal
        self.u_agent = u_agent
        self.expected_cost = expected_cost

    def __repr__(self):
        return (
            f"SweepRow({self.alpha!r}, {self.u_principal!r}, "
            f"{self.u_agent!r}, {self.expected_cost!r})"
        )

    def __eq__(self, other):
        if isinstance(other, self.__class__):
            return self.astuple() == other.astuple()
        return False

    def astuple(self) -> Tuple[Fraction, Utility, Utility, Utility]:
        return (self.alpha, self.u_principal, self.u_agent, self.expected_cost)


def sweep(
    inst: OlcpmInstance,
    alphas: Sequence[Fraction],
    cfg: Optional[SampleConfig] = None,
    cap: Optional[int] = None,
) -> List[SweepRow]:
    """Evaluate utilities at the given contracts.

    Args:
        inst (OlcpmInstance): Instance
        alphas (Sequence[Fraction]): Contract parameters in output order
        cfg (Optional[SampleConfig]): Sampling configuration; exact evaluation if None
        cap (Optional[int]): Enumeration cap of exact evaluation

    Returns:
        List[SweepRow]: One row per alpha
    """
    rows = []
    for alpha in alphas:
        if cfg is None:
            report = exact_utilities(inst, alpha, cap)
            rows.append(
                SweepRow(alpha, report.u_principal, report.u_agent, report.expected_cost)
            )
            continue
        estimate = sample_acceptance(inst, alpha, cfg)
        reward = utility_from_acceptance(inst, Fraction(0), estimate.rho)
        u_agent = sample_agent_utility(inst, alpha, cfg)
        rows.append(
            SweepRow(
                alpha,
                (1.0 - float(alpha)) * reward,
                u_agent,
                float(alpha) * reward - u_agent,
            )
        )
    return rows


def sweep_alphas(inst: OlcpmInstance, grid: int) -> List[Fraction]:
    """Get grid + 1 evenly spaced contracts in [0, 1] merged with the critical values."""
    if grid < 1:
        raise ValueError(f"Unexpected grid size: {grid} / it must be 1 or more")
    points = {Fraction(z, grid) for z in range(grid + 1)}
    return sorted(points.union(critical_values(inst)))
