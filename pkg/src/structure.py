"""
Causal order discovery from max-projection scalings

Works on any scaling source, so the exact oracle and the empirical
estimator run through the same code path.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import DescriptorError, InvariantError
from .projections import DEFAULT_A, MaxProjection, ScalingSource
from .tropical import MaxLinearMatrix, default_names


logger = logging.getLogger(__name__)

DEFAULT_EPSILON = 0.1
# Absolute slack on top of epsilon * |max colmin| so exact ties survive rounding
SELECTION_TOLERANCE = 1e-10


@dataclass(frozen=True, eq=False)
class DeltaMatrix:
    """Rescaling gaps minus their benchmark; +inf on ordered rows/columns and diagonal"""

    values: np.ndarray
    ordered: Tuple[int, ...]
    a: float

    @property
    def d(self) -> int:
        return self.values.shape[0]

    @property
    def unordered(self) -> List[int]:
        ordered = set(self.ordered)
        return [p for p in range(self.d) if p not in ordered]

    def column_minima(self) -> Dict[int, float]:
        return {p: float(self.values[:, p].min()) for p in self.unordered}


@dataclass(frozen=True)
class OrderResult:
    """
    Estimated causal order

    `order` is read left to right with every node before its ancestors;
    `steps` lists the groups in the sequence they were found (sources first).
    """

    order: Tuple[int, ...]
    steps: Tuple[Tuple[int, ...], ...]
    a: float = DEFAULT_A
    epsilon: float = DEFAULT_EPSILON
    k: Optional[int] = None

    def __post_init__(self):
        d = len(self.order)
        if sorted(self.order) != list(range(d)):
            raise InvariantError(f"order {self.order} is not a permutation of 0..{d - 1}")
        flattened = tuple(node for step in reversed(self.steps) for node in step)
        if flattened != tuple(self.order):
            raise InvariantError("steps in reverse discovery sequence do not spell the order")

    @classmethod
    def from_sequence(cls, order: Sequence[int], a: float = DEFAULT_A,
                      epsilon: float = DEFAULT_EPSILON, k: Optional[int] = None) -> "OrderResult":
        """Order with one node per step, e.g. a known well-ordering"""
        order = tuple(int(v) for v in order)
        return cls(order=order, steps=tuple((v,) for v in reversed(order)),
                   a=a, epsilon=epsilon, k=k)

    @property
    def d(self) -> int:
        return len(self.order)

    def positions(self) -> np.ndarray:
        """positions[v] = relabelled index of original node v"""
        pos = np.empty(self.d, dtype=int)
        pos[list(self.order)] = np.arange(self.d)
        return pos

    def step_of(self) -> np.ndarray:
        """step_of()[v] = discovery step index of node v"""
        out = np.empty(self.d, dtype=int)
        for s, step in enumerate(self.steps):
            out[list(step)] = s
        return out

    def to_dict(self, names: Optional[Sequence[str]] = None) -> dict:
        names = list(names) if names is not None else default_names(self.d)
        return {
            "order": [names[v] for v in self.order],
            "steps": [[names[v] for v in step] for step in self.steps],
            "a": self.a,
            "epsilon": self.epsilon,
            "k": self.k,
        }

    @classmethod
    def from_dict(cls, data: dict, names: Sequence[str]) -> "OrderResult":
        index = {name: v for v, name in enumerate(names)}
        try:
            return cls(
                order=tuple(index[name] for name in data["order"]),
                steps=tuple(tuple(index[name] for name in step) for step in data["steps"]),
                a=float(data.get("a", DEFAULT_A)),
                epsilon=float(data.get("epsilon", DEFAULT_EPSILON)),
                k=data.get("k"),
            )
        except KeyError as e:
            raise InvariantError(f"order refers to unknown node {e}") from e


def delta_matrix(source: ScalingSource, ordered: Sequence[int],
                 a: float = DEFAULT_A) -> DeltaMatrix:
    """
    Gap matrix for the current ordered set O

    Entry (i, j) for unordered i != j is
        sigma^2(M_{i, aj, aO}) - sigma^2(M_{i, j, O}) - (a^2 - 1) sigma^2(M_{j, O}),
    which is <= 0 in theory and vanishes for all i iff every ancestor of j
    is already in O.

    Args:
        source: Exact or empirical scaling source
        ordered: Nodes already ordered (O)
        a: Multiplier, a > 1

    Returns:
        DeltaMatrix with +inf outside the unordered block
    """
    if a <= 1.0:
        raise DescriptorError(f"multiplier a must exceed 1, got {a}")
    d = source.d
    ordered_set = set(int(o) for o in ordered)
    if len(ordered_set) >= d:
        raise DescriptorError("every node is already ordered")

    unordered = [p for p in range(d) if p not in ordered_set]
    values = np.full((d, d), np.inf)
    for j in unordered:
        benchmark = (a ** 2 - 1.0) * source.scaling(MaxProjection.of(ordered_set | {j}))
        for i in unordered:
            if i == j:
                continue
            scaled = source.scaling(MaxProjection.rescaled(i, j, ordered_set, a))
            plain = source.scaling(MaxProjection.of(ordered_set | {i, j}))
            values[i, j] = scaled - plain - benchmark
    return DeltaMatrix(values=values, ordered=tuple(ordered), a=a)


def select_step(delta: DeltaMatrix, epsilon: float = DEFAULT_EPSILON) -> List[int]:
    """
    Nodes whose column minimum is within epsilon * |max colmin| of the best

    Sorted by distance to the best column minimum, then by node index. A
    lone unordered node is returned as is.
    """
    if epsilon < 0:
        raise DescriptorError(f"epsilon must be nonnegative, got {epsilon}")
    unordered = delta.unordered
    if len(unordered) == 1:
        return unordered

    colmin = delta.column_minima()
    best = max(colmin.values())
    gaps = {p: value - best for p, value in colmin.items()}
    tolerance = epsilon * abs(best)
    chosen = [p for p in unordered if abs(gaps[p]) <= tolerance + SELECTION_TOLERANCE]
    if not chosen:
        chosen = [max(unordered, key=lambda p: (gaps[p], -p))]
    # gaps within the slack of the best count as ties and keep index order
    chosen.sort(key=lambda p: (-gaps[p] if abs(gaps[p]) > SELECTION_TOLERANCE else 0.0, p))

    logger.debug("delta_O: " + ", ".join(f"{p + 1}={g:.4g}" for p, g in gaps.items())
                 + f" | eps_O={tolerance:.4g} -> {[p + 1 for p in chosen]}")
    return chosen


def causal_order(source: ScalingSource, a: float = DEFAULT_A,
                 epsilon: float = DEFAULT_EPSILON) -> OrderResult:
    """
    Build a causal order by repeatedly prepending the most source-like nodes

    Args:
        source: Exact or empirical scaling source
        a: Multiplier, a > 1
        epsilon: Relative selection tolerance, epsilon >= 0

    Returns:
        OrderResult after at most d iterations
    """
    ordered: List[int] = []
    steps: List[Tuple[int, ...]] = []
    while len(ordered) < source.d:
        step = select_step(delta_matrix(source, ordered, a), epsilon)
        steps.append(tuple(step))
        ordered = list(step) + ordered
        logger.debug(f"step {len(steps)}: {[p + 1 for p in step]}")
    return OrderResult(order=tuple(ordered), steps=tuple(steps), a=a,
                       epsilon=epsilon, k=getattr(source, "k", None))


def is_valid_order(order: Union[OrderResult, Sequence[int]], matrix: MaxLinearMatrix) -> bool:
    """True when every node comes before all of its ancestors"""
    sequence = order.order if isinstance(order, OrderResult) else tuple(order)
    position = {v: p for p, v in enumerate(sequence)}
    return all(
        position[j] > position[i]
        for i in range(matrix.d)
        for j in matrix.ancestors(i)
    )


def same_step_pairs(order: OrderResult) -> List[Tuple[int, int]]:
    """Ordered pairs of distinct nodes that share a discovery step"""
    return [(u, v) for step in order.steps for u in step for v in step if u != v]


def pairwise_direction(source: ScalingSource, i: int, j: int, a: float = DEFAULT_A,
                       tolerance: float = SELECTION_TOLERANCE) -> Optional[Tuple[int, int]]:
    """
    Orientation of a two-node model from its two rescaling gaps

    Rescaling a source node raises the scaling of max(X_i, X_j) by exactly
    a^2 - 1; rescaling a node with an ancestor raises it by less.

    Returns:
        Edge (cause, effect), or None when both gaps reach a^2 - 1
    """
    if a <= 1.0:
        raise DescriptorError(f"multiplier a must exceed 1, got {a}")
    bench = a ** 2 - 1.0
    plain = source.scaling(MaxProjection.of([i, j]))
    short_j = bench - (source.scaling(MaxProjection.rescaled(i, j, (), a)) - plain)
    short_i = bench - (source.scaling(MaxProjection.rescaled(j, i, (), a)) - plain)
    logger.debug(f"pair ({i + 1}, {j + 1}): shortfalls {short_i:.4g}, {short_j:.4g}")
    if max(short_i, short_j) <= tolerance * max(1.0, bench):
        return None
    return (j, i) if short_j < short_i else (i, j)
