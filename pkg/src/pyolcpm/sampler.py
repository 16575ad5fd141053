"""Provide seeded Monte Carlo estimation of acceptance probabilities.

Replications are drawn in fixed-size blocks. Block b owns the counter-based
stream Philox(SeedSequence(seed, spawn_key=(b,))), so the drawn realizations
depend only on (seed, replications) and never on the number of workers.
"""

import logging
import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from typing import (
    Callable,
    Dict,
    FrozenSet,
    Iterable,
    List,
    Optional,
    Sequence,
    Tuple,
    TypeVar,
    Union,
)

import numpy as np

from pyolcpm.errors import BudgetExceededError
from pyolcpm.frugal import blocking_set
from pyolcpm.grades import grades, policy_grades, surrogate_from_grade
from pyolcpm.matroid import max_weight_independent_set
from pyolcpm.model import (
    ExtRational,
    OlcpmInstance,
    Realization,
    realization_iter,
)

logger = logging.getLogger(__name__)

# hard cap on replication counts derived from mu
replication_cap_default: int = 10**8


class SampleConfig:
    """Configuration of a seeded Monte Carlo run."""

    # replications per independent random stream
    block_size = 4096

    def __init__(
        self,
        seed: int,
        replications: Optional[int] = None,
        mu: Optional[Fraction] = None,
        workers: int = 1,
        allow_large: bool = False,
        cap: Optional[int] = None,
    ) -> None:
        """Create SampleConfig object.

        Args:
            seed (int): Seed of the random streams (64-bit)
            replications (Optional[int]): Number of replications t
            mu (Optional[Fraction]): Accuracy; t defaults to ceil(80 m^3 n^3 / mu^4)
            workers (int): Number of threads drawing blocks
            allow_large (bool): Lift the replication cap of defaulted t
            cap (Optional[int]): Replication cap; replication_cap_default if None

        Raises:
            ValueError: A value is invalid.
        """
        if replications is not None and replications < 1:
            raise ValueError(
                f"Unexpected number of replications: {replications} / "
                "it must be 1 or more"
            )
        if mu is not None and mu <= 0:
            raise ValueError(f"Unexpected mu: {mu} / it must be positive")
        if workers < 1:
            raise ValueError(
                f"Unexpected number of workers: {workers} / it must be 1 or more"
            )
        self.seed = seed
        self.replications = replications
        self.mu = mu
        self.workers = workers
        self.allow_large = allow_large
        self.cap = cap

    def __repr__(self):
        return (
            f"SampleConfig(seed={self.seed}, replications={self.replications}, "
            f"mu={self.mu!r}, workers={self.workers}, allow_large={self.allow_large})"
        )

    def resolve_replications(self, n: int, m: int) -> int:
        """Get the number of replications for an instance of size n and support m.

        Raises:
            ValueError: Neither replications nor mu is given.
            BudgetExceededError: The defaulted count exceeds the cap
                                 and large runs are not allowed.
        """
        if self.replications is not None:
            return self.replications
        if self.mu is None:
            raise ValueError("Missing number of replications / give replications or mu")
        t = certified_replications(n, m, self.mu)
        cap = replication_cap_default if self.cap is None else self.cap
        if t > cap and not self.allow_large:
            raise BudgetExceededError(t, cap)
        return t


def certified_replications(n: int, m: int, mu: Fraction) -> int:
    """Get ceil(80 m^3 n^3 / mu^4)."""
    return math.ceil(Fraction(80 * m**3 * n**3) / Fraction(mu) ** 4)


class AcceptanceEstimate:
    """Estimated acceptance probabilities rho[i][k] = R[i][k] / t."""

    def __init__(self, counts: List[List[int]], replications: int, seed: int) -> None:
        self.counts = counts
        self.replications = replications
        self.seed = seed

    def __repr__(self):
        return (
            f"AcceptanceEstimate(rho={self.rho!r}, replications={self.replications}, "
            f"seed={self.seed})"
        )

    def __eq__(self, other):
        if isinstance(other, self.__class__):
            return (
                self.counts == other.counts
                and self.replications == other.replications
                and self.seed == other.seed
            )
        return False

    @property
    def rho(self) -> List[List[float]]:
        return [[r / self.replications for r in row] for row in self.counts]


def block_generator(seed: int, block: int) -> np.random.Generator:
    """Get the random stream of one block."""
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,)))
    )


def draw_counts(
    cfg: SampleConfig,
    replications: int,
    draw: Callable[[np.random.Generator, int], np.ndarray],
) -> "Counter[Tuple[int, ...]]":
    """Draw replications block by block and count the distinct rows.

    Args:
        cfg (SampleConfig): Seed, block size and workers
        replications (int): Total number of rows
        draw: Function returning a (size, width) integer array from a stream

    Returns:
        Counter[Tuple[int, ...]]: Number of draws per distinct row
    """
    blocks = [
        (b, min(cfg.block_size, replications - b * cfg.block_size))
        for b in range(math.ceil(replications / cfg.block_size))
    ]
    logger.info(
        "drawing %d replications in %d blocks with %d workers",
        replications,
        len(blocks),
        cfg.workers,
    )

    def run(block: Tuple[int, int]) -> "Counter[Tuple[int, ...]]":
        rows = draw(block_generator(cfg.seed, block[0]), block[1])
        return Counter(map(tuple, rows.tolist()))

    total: "Counter[Tuple[int, ...]]" = Counter()
    with ThreadPoolExecutor(max_workers=cfg.workers) as executor:
        for counts in executor.map(run, blocks):
            total.update(counts)
    return total


def _outcome_thresholds(inst: OlcpmInstance) -> List[np.ndarray]:
    thresholds = []
    for dist in inst.dists:
        cum = np.cumsum([float(p) for p in dist.probs])
        last = max(k for k, p in enumerate(dist.probs) if p > 0)
        # outcomes after the last positive one are never drawn
        cum[last:] = np.inf
        thresholds.append(cum)
    return thresholds


def sample_realizations(
    inst: OlcpmInstance, cfg: SampleConfig, replications: int
) -> "Counter[Realization]":
    """Draw independent realizations and count each distinct one."""
    thresholds = _outcome_thresholds(inst)

    def draw(rng: np.random.Generator, size: int) -> np.ndarray:
        u = rng.random((size, inst.n))
        rows = np.empty((size, inst.n), dtype=np.int64)
        for i, cum in enumerate(thresholds):
            rows[:, i] = np.searchsorted(cum, u[:, i], side="right")
        return np.minimum(rows, inst.m - 1)

    return draw_counts(cfg, replications, draw)


# replication counts when sampling, probabilities when enumerating
_Weight = TypeVar("_Weight", int, Fraction)


def _accumulate(
    inst: OlcpmInstance,
    alpha: Fraction,
    taus: Sequence[ExtRational],
    rows: Iterable[Tuple[Realization, _Weight]],
    zero: _Weight,
) -> List[List[_Weight]]:
    counts = [[zero] * inst.m for _ in range(inst.n)]
    spans: Dict[Tuple[int, FrozenSet[int]], bool] = {}
    for realization, weight in rows:
        if not weight:
            continue
        values = [inst.value(j, k) for j, k in enumerate(realization)]
        ys = [surrogate_from_grade(taus[j], alpha * v) for j, v in enumerate(values)]
        for i in range(inst.n):
            if taus[i] < 0:
                continue
            for k in range(inst.m):
                v_i = inst.value(i, k)
                y_i = surrogate_from_grade(taus[i], alpha * v_i)
                blockers = blocking_set(taus, ys, i, y_i, values, v_i)
                key = (i, blockers)
                if key not in spans:
                    spans[key] = not inst.matroid.in_span(blockers, i)
                if spans[key]:
                    counts[i][k] += weight
    return counts


def sample_acceptance(
    inst: OlcpmInstance, alpha: Fraction, cfg: SampleConfig
) -> AcceptanceEstimate:
    """Estimate acceptance probabilities r[i][k] by sampling.

    Every replication draws one realization; R[i][k] counts the replications
    in which element i with its outcome pinned to k has a nonnegative grade
    and is not spanned by its blocking set.

    Args:
        inst (OlcpmInstance): Instance
        alpha (Fraction): Contract parameter
        cfg (SampleConfig): Sampling configuration

    Raises:
        BudgetExceededError: The defaulted replication count exceeds the cap.

    Returns:
        AcceptanceEstimate: Counts and rho = R / t
    """
    t = cfg.resolve_replications(inst.n, inst.m)
    taus = policy_grades(inst, alpha)
    drawn = sample_realizations(inst, cfg, t)
    counts = _accumulate(inst, alpha, taus, sorted(drawn.items()), 0)
    return AcceptanceEstimate(counts, t, cfg.seed)


def acceptance_by_enumeration(
    inst: OlcpmInstance, alpha: Fraction, cap: Optional[int] = None
) -> List[List[Fraction]]:
    """Get exact r[i][k] through the sampling code path weighted by probabilities."""
    realizations = realization_iter(inst, cap)
    taus = policy_grades(inst, alpha)
    return _accumulate(inst, alpha, taus, realizations, Fraction(0))


def utility_from_acceptance(
    inst: OlcpmInstance,
    alpha: Fraction,
    rho: Sequence[Sequence[Union[float, Fraction]]],
) -> float:
    """Get (1 - alpha) * sum of v[i][k] * p[i][k] * rho[i][k] as a float.

    Raises:
        ValueError: rho does not have the shape n x m.
    """
    if len(rho) != inst.n or any(len(row) != inst.m for row in rho):
        raise ValueError(
            f"Unexpected shape of rho / it must be {inst.n} x {inst.m}"
        )
    total = 0.0
    for i in range(inst.n):
        for k in range(inst.m):
            total += float(inst.value(i, k) * inst.prob(i, k)) * float(rho[i][k])
    return (1.0 - float(alpha)) * total


def sample_agent_utility(
    inst: OlcpmInstance, alpha: Fraction, cfg: SampleConfig
) -> float:
    """Estimate the agent's expected utility E[max over independent J of sum Y_j].

    It uses the same draws as sample_acceptance for the same configuration.
    """
    t = cfg.resolve_replications(inst.n, inst.m)
    taus = grades(inst, alpha)
    drawn = sample_realizations(inst, cfg, t)
    total = Fraction(0)
    for realization, count in sorted(drawn.items()):
        ys = [
            surrogate_from_grade(taus[i], alpha * inst.value(i, k))
            for i, k in enumerate(realization)
        ]
        best = max_weight_independent_set(inst.matroid, ys)
        total += count * sum((ys[j] for j in best), Fraction(0))
    return float(total / t)
