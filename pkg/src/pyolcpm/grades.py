"""Provide grades, surrogates, the cost perturbation and critical values.

The grade of an element at contract alpha is the unique tau with
E[(alpha * X - tau)^+] = cost, or +inf when the cost is 0.
The surrogate of an element is min(alpha * X, grade).
"""

import logging
from fractions import Fraction
from typing import Iterable, List, Optional, Sequence, Set, Tuple

from pyolcpm.model import INF, ExtRational, OlcpmInstance, OutcomeDistribution

logger = logging.getLogger(__name__)

# affine function alpha -> a * alpha + b
Piece = Tuple[Fraction, Fraction]


def _check_inputs(cost: Fraction, dist: OutcomeDistribution) -> None:
    if cost < 0:
        raise ValueError(f"Unexpected cost: {cost} / it must be 0 or more")
    if any(p < 0 for p in dist.probs) or sum(dist.probs, Fraction(0)) != 1:
        raise ValueError(
            f"Unexpected distribution: {dist!r} / "
            "probabilities must be 0 or more and sum to 1"
        )


def _active_piece(cost: Fraction, dist: OutcomeDistribution, alpha: Fraction) -> Piece:
    # g(tau) = sum p * (alpha * v - tau)^+ is affine between sorted breakpoints;
    # scan from the largest value until the candidate root lies in its piece
    pairs = sorted(zip(dist.values, dist.probs), key=lambda vp: -vp[0])
    head_prob = Fraction(0)
    head_value = Fraction(0)
    for j, (v, p) in enumerate(pairs):
        head_prob += p
        head_value += p * v
        if head_prob == 0:
            continue
        a, b = head_value / head_prob, -cost / head_prob
        if j == len(pairs) - 1 or a * alpha + b >= alpha * pairs[j + 1][0]:
            return a, b
    raise ValueError(f"Unexpected distribution: {dist!r} / it has no probability")


def grade_at(cost: Fraction, dist: OutcomeDistribution, alpha: Fraction) -> ExtRational:
    """Get the grade of an element at contract alpha.

    Args:
        cost (Fraction): Probing cost (0 or more)
        dist (OutcomeDistribution): Outcome distribution
        alpha (Fraction): Contract parameter in [0, 1]

    Raises:
        ValueError: The cost is negative or the distribution is invalid.

    Returns:
        ExtRational: Grade, which may be negative; INF if cost is 0
    """
    _check_inputs(cost, dist)
    if cost == 0:
        return INF
    a, b = _active_piece(cost, dist, alpha)
    return a * alpha + b


def surrogate(
    cost: Fraction, dist: OutcomeDistribution, alpha: Fraction, k: int
) -> Fraction:
    """Get the surrogate min(alpha * v_k, grade) of outcome k."""
    if not 0 <= k < len(dist):
        raise ValueError(
            f"Unexpected outcome index: {k} / it must be in the range [0, {len(dist)})"
        )
    return surrogate_from_grade(grade_at(cost, dist, alpha), alpha * dist.values[k])


def surrogate_from_grade(grade: ExtRational, scaled_value: Fraction) -> Fraction:
    if grade == INF or scaled_value <= grade:
        return scaled_value
    return Fraction(grade)


def grades(
    inst: OlcpmInstance, alpha: Fraction, costs: Optional[Sequence[Fraction]] = None
) -> List[ExtRational]:
    """Get the grades of all elements at contract alpha.

    Args:
        inst (OlcpmInstance): Instance
        alpha (Fraction): Contract parameter
        costs (Optional[Sequence[Fraction]]): Cost vector; the instance costs if None

    Returns:
        List[ExtRational]: Grade per element
    """
    cost_vector = inst.costs if costs is None else costs
    return [grade_at(c, d, alpha) for c, d in zip(cost_vector, inst.dists)]


class GradeCurve:
    """A piecewise-linear representation of alpha -> grade on [0, 1].

    The curve of a zero-cost element is the constant +inf curve,
    which has no segments.
    """

    def __init__(self, breakpoints: Sequence[Fraction], pieces: Sequence[Piece]) -> None:
        """Create GradeCurve object.

        Args:
            breakpoints (Sequence[Fraction]): 0 = b_0 < ... < b_K = 1, or empty
            pieces (Sequence[Piece]): K affine pieces (a, b), one per segment
        """
        if breakpoints and len(breakpoints) != len(pieces) + 1:
            raise ValueError(
                f"Unexpected number of pieces: {len(pieces)} / "
                f"it must be {len(breakpoints) - 1}"
            )
        self.breakpoints = list(breakpoints)
        self.pieces = list(pieces)

    def __repr__(self):
        return f"GradeCurve({self.breakpoints!r}, {self.pieces!r})"

    def __eq__(self, other):
        if isinstance(other, self.__class__):
            return self.breakpoints == other.breakpoints and self.pieces == other.pieces
        return False

    @property
    def infinite(self) -> bool:
        return not self.pieces

    def segments(self) -> List[Tuple[Fraction, Fraction, Fraction, Fraction]]:
        """Get segments as tuples of (lo, hi, a, b)."""
        return [
            (self.breakpoints[s], self.breakpoints[s + 1], a, b)
            for s, (a, b) in enumerate(self.pieces)
        ]

    def __call__(self, alpha: Fraction) -> ExtRational:
        if self.infinite:
            return INF
        for lo, hi, a, b in self.segments():
            if lo <= alpha <= hi:
                return a * alpha + b
        raise ValueError(f"Unexpected alpha: {alpha} / it must be in the range [0, 1]")


def grade_curve(cost: Fraction, dist: OutcomeDistribution) -> GradeCurve:
    """Get the exact piecewise-linear grade curve of an element on [0, 1].

    The active piece changes only at alpha = cost / D_j where
    D_j = sum_{l <= j} p_l * (v_l - v_{j+1}) over values sorted in decreasing order.

    Args:
        cost (Fraction): Probing cost
        dist (OutcomeDistribution): Outcome distribution

    Raises:
        ValueError: The cost is negative or the distribution is invalid.

    Returns:
        GradeCurve: Curve with at most m + 1 segments
    """
    _check_inputs(cost, dist)
    if cost == 0:
        return GradeCurve([], [])
    pairs = sorted(zip(dist.values, dist.probs), key=lambda vp: -vp[0])
    cuts: Set[Fraction] = {Fraction(0), Fraction(1)}
    for j in range(len(pairs) - 1):
        spread = sum((p * (v - pairs[j + 1][0]) for v, p in pairs[: j + 1]), Fraction(0))
        if spread > 0 and 0 < cost / spread < 1:
            cuts.add(cost / spread)
    points = sorted(cuts)
    breakpoints = [points[0]]
    pieces: List[Piece] = []
    for lo, hi in zip(points, points[1:]):
        piece = _active_piece(cost, dist, (lo + hi) / 2)
        if pieces and pieces[-1] == piece:
            breakpoints[-1] = hi
        else:
            pieces.append(piece)
            breakpoints.append(hi)
    return GradeCurve(breakpoints, pieces)


def perturbed_costs(inst: OlcpmInstance, eps: Fraction) -> Tuple[Fraction, ...]:
    """Get the cost vector c * (1 - eps)."""
    return tuple(c * (1 - eps) for c in inst.costs)


def perturbation_epsilon(inst: OlcpmInstance, alpha: Fraction) -> Fraction:
    """Get the cost perturbation constant at contract alpha.

    With the returned eps, the grades under costs c * (1 - eps) keep every
    strict comparison among grades, scaled values and surrogates.
    eps = min(P_min, G / (2 * C_max)) where P_min is the minimum nonzero
    probability, G the minimum positive gap among {alpha * v - tau_i}, {0 - tau_i}
    and {tau_j - tau_i}, and C_max the maximum of c_i / p_i over positive costs
    (p_i being the minimum nonzero probability of element i).

    Args:
        inst (OlcpmInstance): Instance
        alpha (Fraction): Contract parameter

    Returns:
        Fraction: eps > 0
    """
    p_min = min(d.min_nonzero_prob or Fraction(1) for d in inst.dists)
    scaled = [
        c / d.min_nonzero_prob
        for c, d in zip(inst.costs, inst.dists)
        if c > 0 and d.min_nonzero_prob
    ]
    if not scaled:
        return p_min
    taus = [t for t in grades(inst, alpha) if t != INF]
    # the zero line keeps the sign of every grade
    values = {alpha * v for d in inst.dists for v in d.values} | {Fraction(0)}
    gaps = [x - t for t in taus for x in values if x > t]
    gaps += [s - t for t in taus for s in taus if s > t]
    if not gaps:
        return p_min
    eps = min(p_min, min(gaps) / (2 * max(scaled)))
    logger.debug("perturbation at alpha=%s: eps=%s", alpha, eps)
    return eps


def policy_grades(inst: OlcpmInstance, alpha: Fraction) -> List[ExtRational]:
    """Get the grades under the perturbed costs the frugal policy runs with."""
    return grades(inst, alpha, perturbed_costs(inst, perturbation_epsilon(inst, alpha)))


def _intersections(
    first: Tuple[Fraction, Fraction, Fraction, Fraction],
    second: Tuple[Fraction, Fraction, Fraction, Fraction],
) -> Iterable[Fraction]:
    lo = max(first[0], second[0])
    hi = min(first[1], second[1])
    if lo > hi:
        return []
    a1, b1, a2, b2 = first[2], first[3], second[2], second[3]
    if a1 == a2:
        # coincident pieces tie on the whole overlap
        return [lo, hi] if b1 == b2 else []
    alpha = (b2 - b1) / (a1 - a2)
    return [alpha] if lo <= alpha <= hi else []


def critical_values(inst: OlcpmInstance) -> List[Fraction]:
    """Get the critical values of an instance.

    They are 0, 1 and every alpha in [0, 1] where two functions of
    {grade curves} + {alpha -> v * alpha} + {alpha -> 0} intersect.
    Unperturbed costs are used.

    Args:
        inst (OlcpmInstance): Instance

    Returns:
        List[Fraction]: Sorted distinct critical values
    """
    curves = [grade_curve(c, d) for c, d in zip(inst.costs, inst.dists)]
    zero, one = Fraction(0), Fraction(1)
    lines = sorted({v for d in inst.dists for v in d.values} | {zero})
    line_segments = [(zero, one, v, zero) for v in lines]
    found: Set[Fraction] = {zero, one}
    for i, curve in enumerate(curves):
        for seg in curve.segments():
            for line in line_segments:
                found.update(_intersections(seg, line))
            for other in curves[i + 1 :]:
                for other_seg in other.segments():
                    found.update(_intersections(seg, other_seg))
    result = sorted(found)
    logger.debug("%d critical values", len(result))
    return result
