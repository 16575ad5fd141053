"""Provide matroid classes with independence, rank and span queries."""

from abc import ABC, abstractmethod
from typing import (
    Any,
    Dict,
    FrozenSet,
    Iterable,
    List,
    Mapping,
    Optional,
    Sequence,
    Tuple,
)

###############################################################################
# Matroid oracles
# Every oracle works on the ground set {0, ..., size - 1}.
# Oracles are immutable after construction, so concurrent read-only queries
# from multiple workers are safe.
###############################################################################

Weight = Any  # anything ordered and additive (int, Fraction, float)


class MatroidOracle(ABC):
    """A base class of matroids over the ground set {0, ..., size - 1}."""

    def __init__(self, size: int) -> None:
        if size < 1:
            raise ValueError(
                f"Unexpected size of the ground set: {size} / it must be 1 or more"
            )
        self._size = size

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}.create_from_dict({self.to_dict()!r})"

    def __eq__(self, other):
        if isinstance(other, MatroidOracle):
            return self.to_dict() == other.to_dict()
        return False

    @property
    def size(self) -> int:
        """Get the number of elements in the ground set.

        Returns:
            int: Number of elements
        """
        return self._size

    def is_independent(self, elements: Iterable[int]) -> bool:
        """Check the set of elements is independent.

        Args:
            elements (Iterable[int]): Element indices

        Raises:
            ValueError: An index is out of the ground set.

        Returns:
            bool: True if the set is independent
        """
        return self._is_independent(self._check(elements))

    def rank(self, elements: Iterable[int]) -> int:
        """Get the size of a maximal independent subset of the elements.

        Args:
            elements (Iterable[int]): Element indices

        Raises:
            ValueError: An index is out of the ground set.

        Returns:
            int: Rank of the set
        """
        return self._rank(self._check(elements))

    def in_span(self, elements: Iterable[int], element: int) -> bool:
        """Check the element is spanned by the set of elements.

        The element is spanned when adding it does not increase the rank.

        Args:
            elements (Iterable[int]): Element indices of the spanning set
            element (int): Element index to check

        Raises:
            ValueError: An index is out of the ground set.

        Returns:
            bool: True if rank(elements + {element}) == rank(elements)
        """
        s = self._check(elements)
        self._check((element,))
        if element in s:
            return True
        return self._in_span(s, element)

    def parallel_extend(self, multiplicities: Mapping[int, int]) -> "ParallelExtension":
        """Replace every element by the given number of parallel copies.

        Copies of base element b are numbered consecutively, and copies of
        smaller base elements come first.

        Args:
            multiplicities (Mapping[int, int]): Number of copies per base element

        Raises:
            ValueError: Multiplicities do not cover the ground set
                        or a multiplicity is not positive.

        Returns:
            ParallelExtension: Extended matroid
        """
        if set(multiplicities) != set(range(self._size)):
            raise ValueError(
                "Unexpected keys of the multiplicities: "
                f"{sorted(multiplicities)} / they must be 0..{self._size - 1}"
            )
        images = []
        for base in range(self._size):
            count = multiplicities[base]
            if count < 1:
                raise ValueError(
                    f"Unexpected multiplicity of element {base}: {count} / "
                    "it must be 1 or more"
                )
            images.extend([base] * count)
        return ParallelExtension(self, images)

    @abstractmethod
    def to_dict(self) -> Dict[str, Any]:
        """Convert to a dictionary of the instance file format.

        Returns:
            Dict[str, Any]: Dictionary with the "type" key
        """
        raise NotImplementedError

    @classmethod
    def create_from_dict(cls, data: Mapping[str, Any]) -> "MatroidOracle":
        """Create a matroid from a dictionary of the instance file format.

        Args:
            data (Mapping[str, Any]): Dictionary with the "type" key

        Raises:
            ValueError: It can be caused by invalid data format.

        Returns:
            MatroidOracle: New matroid object
        """
        kind = data.get("type")
        try:
            if kind == "uniform":
                return UniformMatroid(int(data["n"]), int(data["rank"]))
            if kind == "partition":
                return PartitionMatroid(
                    [list(block) for block in data["blocks"]],
                    [int(cap) for cap in data["capacities"]],
                )
            if kind == "laminar":
                return LaminarMatroid(
                    int(data["n"]),
                    [(list(a["set"]), int(a["capacity"])) for a in data["family"]],
                )
            if kind == "graphic":
                return GraphicMatroid(
                    int(data["vertices"]),
                    [(int(u), int(v)) for u, v in data["edges"]],
                )
            if kind == "parallel":
                return ParallelExtension(
                    MatroidOracle.create_from_dict(data["base"]),
                    [int(b) for b in data["images"]],
                )
        except KeyError as e:
            raise ValueError(f"Missing field of {kind} matroid: {e}") from e
        except TypeError as e:
            raise ValueError(f"Unexpected field of {kind} matroid: {e}") from e
        raise ValueError(
            f"Unsupported matroid type: {kind} / it must be one of "
            "uniform, partition, laminar, graphic, parallel"
        )

    def _check(self, elements: Iterable[int]) -> FrozenSet[int]:
        s = frozenset(elements)
        for e in s:
            if not 0 <= e < self._size:
                raise ValueError(
                    f"Unexpected element index: {e} / "
                    f"it must be in the range [0, {self._size})"
                )
        return s

    @abstractmethod
    def _is_independent(self, s: FrozenSet[int]) -> bool:
        raise NotImplementedError

    def _rank(self, s: FrozenSet[int]) -> int:
        return greedy_rank(self, s)

    def _in_span(self, s: FrozenSet[int], element: int) -> bool:
        return self._rank(s | {element}) == self._rank(s)


def greedy_rank(matroid: MatroidOracle, elements: Iterable[int]) -> int:
    """Get the rank of a set by greedy augmentation with independence queries.

    It is the generic rank used to cross-check the native rank of every matroid.

    Args:
        matroid (MatroidOracle): Matroid to query
        elements (Iterable[int]): Element indices

    Returns:
        int: Rank of the set
    """
    basis: FrozenSet[int] = frozenset()
    for e in sorted(set(elements)):
        if matroid.is_independent(basis | {e}):
            basis = basis | {e}
    return len(basis)


def max_weight_independent_set(
    matroid: MatroidOracle, weights: Sequence[Weight]
) -> FrozenSet[int]:
    """Get a maximum-weight independent set by the matroid greedy algorithm.

    Elements with non-positive weight are never taken; equal weights are
    taken in index order.

    Args:
        matroid (MatroidOracle): Matroid to query
        weights (Sequence[Weight]): Weight per element

    Returns:
        FrozenSet[int]: Independent set of maximum total weight
    """
    if len(weights) != matroid.size:
        raise ValueError(
            f"Unexpected number of weights: {len(weights)} / "
            f"it must be {matroid.size}"
        )
    order = sorted(
        (i for i in range(matroid.size) if weights[i] > 0),
        key=lambda i: (-weights[i], i),
    )
    chosen: FrozenSet[int] = frozenset()
    for i in order:
        if matroid.is_independent(chosen | {i}):
            chosen = chosen | {i}
    return chosen


class UniformMatroid(MatroidOracle):
    """A uniform matroid: every set of at most rank_bound elements is independent."""

    def __init__(self, size: int, rank_bound: int) -> None:
        """Create UniformMatroid object.

        Args:
            size (int): Number of elements
            rank_bound (int): Rank of the whole ground set

        Raises:
            ValueError: rank_bound is out of [0, size].
        """
        super().__init__(size)
        if not 0 <= rank_bound <= size:
            raise ValueError(
                f"Unexpected rank of uniform matroid: {rank_bound} / "
                f"it must be in the range [0, {size}]"
            )
        self.rank_bound = rank_bound

    def to_dict(self) -> Dict[str, Any]:
        return {"type": "uniform", "n": self._size, "rank": self.rank_bound}

    def _is_independent(self, s: FrozenSet[int]) -> bool:
        return len(s) <= self.rank_bound

    def _rank(self, s: FrozenSet[int]) -> int:
        return min(len(s), self.rank_bound)


class LaminarMatroid(MatroidOracle):
    """A laminar matroid given by capacities on a laminar family of sets.

    Elements covered by no set of the family are free (never constrained).
    """

    def __init__(self, size: int, family: Sequence[Tuple[Iterable[int], int]]) -> None:
        """Create LaminarMatroid object.

        Args:
            size (int): Number of elements
            family (Sequence[Tuple[Iterable[int], int]]): Pairs of (set, capacity)

        Raises:
            ValueError: The family is not laminar, a set is out of the ground set
                        or a capacity is negative.
        """
        super().__init__(size)
        self.family: List[Tuple[FrozenSet[int], int]] = []
        for index, (members, capacity) in enumerate(family):
            s = self._check(members)
            if capacity < 0:
                raise ValueError(
                    f"Unexpected capacity of set {index}: {capacity} / "
                    "it must be 0 or more"
                )
            self.family.append((s, capacity))
        for a in range(len(self.family)):
            for b in range(a + 1, len(self.family)):
                sa, sb = self.family[a][0], self.family[b][0]
                if sa & sb and not (sa <= sb or sb <= sa):
                    raise ValueError(
                        f"Unexpected family: sets {a} and {b} overlap / "
                        "any two sets must be disjoint or nested"
                    )
        self._build_tree()

    def _build_tree(self) -> None:
        # children are always ordered before their parent
        self._order = sorted(
            range(len(self.family)), key=lambda a: (len(self.family[a][0]), a)
        )
        self._parent: Dict[int, Optional[int]] = {}
        for pos, a in enumerate(self._order):
            parent = None
            for b in self._order[pos + 1 :]:
                if self.family[a][0] <= self.family[b][0]:
                    parent = b
                    break
            self._parent[a] = parent
        self._direct: Dict[int, FrozenSet[int]] = {}
        for a in self._order:
            covered = frozenset().union(
                *(self.family[c][0] for c in self._order if self._parent[c] == a)
            )
            self._direct[a] = self.family[a][0] - covered
        self._free = frozenset(range(self._size)).difference(
            *(s for s, _ in self.family)
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "type": "laminar",
            "n": self._size,
            "family": [
                {"set": sorted(s), "capacity": capacity} for s, capacity in self.family
            ],
        }

    def _is_independent(self, s: FrozenSet[int]) -> bool:
        return all(len(s & members) <= capacity for members, capacity in self.family)

    def _rank(self, s: FrozenSet[int]) -> int:
        capped: Dict[int, int] = {}
        for a in self._order:
            members, capacity = self.family[a]
            count = len(s & self._direct[a])
            count += sum(capped[c] for c in self._order if self._parent[c] == a)
            capped[a] = min(count, capacity)
        roots = sum(capped[a] for a in self._order if self._parent[a] is None)
        return roots + len(s & self._free)


class PartitionMatroid(LaminarMatroid):
    """A partition matroid: at most capacity elements from each block."""

    def __init__(self, blocks: Sequence[Iterable[int]], capacities: Sequence[int]) -> None:
        """Create PartitionMatroid object.

        Args:
            blocks (Sequence[Iterable[int]]): Disjoint blocks covering 0..n-1
            capacities (Sequence[int]): Capacity per block

        Raises:
            ValueError: Blocks do not partition the ground set
                        or capacities do not match the blocks.
        """
        sets = [frozenset(block) for block in blocks]
        if len(sets) != len(capacities):
            raise ValueError(
                f"Unexpected number of capacities: {len(capacities)} / "
                f"it must be {len(sets)}"
            )
        size = sum(len(block) for block in sets)
        if frozenset().union(*sets) != frozenset(range(size)):
            raise ValueError(
                "Unexpected blocks of partition matroid / "
                f"they must partition the elements 0..{size - 1}"
            )
        self.blocks = sets
        self.capacities = list(capacities)
        super().__init__(size, list(zip(sets, capacities)))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "type": "partition",
            "blocks": [sorted(block) for block in self.blocks],
            "capacities": list(self.capacities),
        }


class _UnionFind:
    """Disjoint sets with path compression and union by rank."""

    def __init__(self) -> None:
        self._parent: Dict[int, int] = {}
        self._rank: Dict[int, int] = {}

    def find(self, x: int) -> int:
        root = self._parent.setdefault(x, x)
        if root != x:
            root = self.find(root)
            self._parent[x] = root
        return root

    def union(self, x: int, y: int) -> bool:
        rx, ry = self.find(x), self.find(y)
        if rx == ry:
            return False
        if self._rank.get(rx, 0) < self._rank.get(ry, 0):
            rx, ry = ry, rx
        self._parent[ry] = rx
        if self._rank.get(rx, 0) == self._rank.get(ry, 0):
            self._rank[rx] = self._rank.get(rx, 0) + 1
        return True


class GraphicMatroid(MatroidOracle):
    """A graphic matroid: elements are edges, independent sets are forests.

    Parallel edges are allowed; a self-loop is a loop of the matroid.
    """

    def __init__(self, vertices: int, edges: Sequence[Tuple[int, int]]) -> None:
        """Create GraphicMatroid object.

        Args:
            vertices (int): Number of vertices
            edges (Sequence[Tuple[int, int]]): Endpoints per edge (element)

        Raises:
            ValueError: An endpoint is out of range.
        """
        super().__init__(len(edges))
        for index, (u, v) in enumerate(edges):
            if not (0 <= u < vertices and 0 <= v < vertices):
                raise ValueError(
                    f"Unexpected endpoints of edge {index}: ({u}, {v}) / "
                    f"they must be in the range [0, {vertices})"
                )
        self.vertices = vertices
        self.edges = [(u, v) for u, v in edges]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "type": "graphic",
            "vertices": self.vertices,
            "edges": [[u, v] for u, v in self.edges],
        }

    def _forest(self, s: FrozenSet[int]) -> Tuple[_UnionFind, int]:
        uf = _UnionFind()
        merged = 0
        for e in sorted(s):
            u, v = self.edges[e]
            if uf.union(u, v):
                merged += 1
        return uf, merged

    def _is_independent(self, s: FrozenSet[int]) -> bool:
        return self._forest(s)[1] == len(s)

    def _rank(self, s: FrozenSet[int]) -> int:
        return self._forest(s)[1]

    def _in_span(self, s: FrozenSet[int], element: int) -> bool:
        u, v = self.edges[element]
        uf = self._forest(s)[0]
        return uf.find(u) == uf.find(v)


class ParallelExtension(MatroidOracle):
    """A matroid whose elements are parallel copies of base elements.

    The rank of a set equals the base rank of the set of its images.
    """

    def __init__(self, base: MatroidOracle, images: Sequence[int]) -> None:
        """Create ParallelExtension object.

        Args:
            base (MatroidOracle): Base matroid
            images (Sequence[int]): Base element per new element

        Raises:
            ValueError: An image is out of the base ground set.
        """
        super().__init__(len(images))
        base._check(images)
        self.base = base
        self.images = list(images)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "type": "parallel",
            "base": self.base.to_dict(),
            "images": list(self.images),
        }

    def image(self, s: Iterable[int]) -> FrozenSet[int]:
        """Get the set of base elements of the given new elements."""
        return frozenset(self.images[e] for e in s)

    def _is_independent(self, s: FrozenSet[int]) -> bool:
        image = self.image(s)
        return len(image) == len(s) and self.base._is_independent(image)

    def _rank(self, s: FrozenSet[int]) -> int:
        return self.base._rank(self.image(s))

    def _in_span(self, s: FrozenSet[int], element: int) -> bool:
        image = self.image(s)
        target = self.images[element]
        if target in image:
            return True
        return self.base._in_span(image, target)

