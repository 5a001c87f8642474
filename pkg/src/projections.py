"""
Max-projection descriptors and the scaling-source interface

A max-projection is a maximum over selected components of X, some of them
multiplied by a common factor a >= 1:

    M = max( X_c for c in nodes,  a * X_c for c in scaled )

Its squared scaling is the same functional whether it is evaluated on the
exact model or estimated from data, so both sides share this descriptor.
"""

from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, Optional, Protocol, Tuple

import numpy as np

from .errors import DescriptorError


DEFAULT_A = 1.3


@dataclass(frozen=True)
class MaxProjection:
    """Descriptor of a (possibly rescaled) max-projection, 0-based node labels"""

    nodes: FrozenSet[int]
    scaled: FrozenSet[int] = frozenset()
    a: float = 1.0

    def __post_init__(self):
        if not self.nodes and not self.scaled:
            raise DescriptorError("max-projection needs at least one node")
        if self.nodes & self.scaled:
            raise DescriptorError(
                f"nodes {sorted(self.nodes & self.scaled)} are both plain and scaled"
            )
        if self.a < 1.0:
            raise DescriptorError(f"multiplier a must be >= 1, got {self.a}")
        if self.scaled and len(self.nodes) != 1:
            raise DescriptorError("a scaled max-projection has exactly one unscaled node")
        if any(int(c) < 0 for c in self.nodes | self.scaled):
            raise DescriptorError("node labels must be nonnegative")

    @classmethod
    def of(cls, nodes: Iterable[int]) -> "MaxProjection":
        """Plain max-projection M_I over a node set"""
        return cls(nodes=frozenset(int(c) for c in nodes))

    @classmethod
    def single(cls, i: int) -> "MaxProjection":
        return cls.of([i])

    @classmethod
    def rescaled(cls, i: int, j: int, others: Iterable[int] = (),
                 a: float = DEFAULT_A) -> "MaxProjection":
        """
        Max-projection M_{i, aj, aI} = X_i v aX_j v max_{k in I} aX_k

        Args:
            i: The unscaled node
            j: The scaled pivot node
            others: The scaled set I (must not contain i or j)
            a: Common multiplier, a >= 1

        Returns:
            Descriptor; with a == 1 it collapses to the plain set {i, j} u I
        """
        others = frozenset(int(c) for c in others)
        if i == j:
            raise DescriptorError(f"i and j must differ, got i = j = {i}")
        if i in others or j in others:
            raise DescriptorError(f"i={i} and j={j} must lie outside I={sorted(others)}")
        if a < 1.0:
            raise DescriptorError(f"multiplier a must be >= 1, got {a}")
        if a == 1.0:
            return cls.of(others | {i, j})
        return cls(nodes=frozenset({int(i)}), scaled=others | {int(j)}, a=float(a))

    @property
    def involved(self) -> Tuple[int, ...]:
        """Sorted node labels the functional depends on"""
        return tuple(sorted(self.nodes | self.scaled))

    def multipliers(self) -> np.ndarray:
        """Per-coordinate multipliers aligned with `involved`"""
        return np.array([self.a if c in self.scaled else 1.0 for c in self.involved])

    def weights(self) -> Dict[int, float]:
        return dict(zip(self.involved, self.multipliers().tolist()))

    def functional(self, omega: np.ndarray) -> np.ndarray:
        """
        Squared max-projection functional f(w) = max_c (m_c * w_c)^2

        Args:
            omega: Array of shape (..., len(involved)) of angles restricted
                to the involved coordinates

        Returns:
            Array of shape (...)
        """
        return np.max((omega * self.multipliers()) ** 2, axis=-1)

    def label(self, names: Optional[Iterable[str]] = None) -> str:
        """Human-readable name, 1-based or from a name table"""
        names = list(names) if names is not None else None

        def show(c):
            return names[c] if names is not None else str(c + 1)

        if not self.scaled:
            return "M{" + ",".join(show(c) for c in self.involved) + "}"
        (i,) = tuple(self.nodes)
        scaled = ",".join(show(c) for c in sorted(self.scaled))
        return f"M{{{show(i)},{self.a:g}*{{{scaled}}}}}"

    def to_dict(self) -> dict:
        return {
            "nodes": sorted(c + 1 for c in self.nodes),
            "scaled": sorted(c + 1 for c in self.scaled),
            "a": self.a,
        }


class ScalingSource(Protocol):
    """Anything that can evaluate the squared scaling of a max-projection"""

    d: int
    k: Optional[int]

    def scaling(self, projection: MaxProjection) -> float:
        ...
