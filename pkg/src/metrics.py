"""
DAG comparison, centroid selection and edge stability over exceedance grids
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .errors import DimensionError, ModelSpecError
from .tropical import Dag, Edge, default_names


logger = logging.getLogger(__name__)


def shd(g1: Dag, g2: Dag) -> int:
    """
    Structural Hamming distance with reversal cost 1

    Every unordered node pair whose edge status differs (missing on one
    side, or pointing the other way) costs one edit.
    """
    if g1.d != g2.d:
        raise DimensionError(f"cannot compare DAGs on {g1.d} and {g2.d} nodes")
    pairs = {frozenset(e) for e in g1.edges | g2.edges}
    cost = 0
    for pair in pairs:
        u, v = sorted(pair)
        if ((u, v) in g1.edges, (v, u) in g1.edges) != ((u, v) in g2.edges, (v, u) in g2.edges):
            cost += 1
    return cost


def nshd(g1: Dag, g2: Dag) -> float:
    """SHD divided by |E1| + |E2|; two empty graphs are at distance 0"""
    total = len(g1.edges) + len(g2.edges)
    if total == 0:
        if g1.d != g2.d:
            raise DimensionError(f"cannot compare DAGs on {g1.d} and {g2.d} nodes")
        return 0.0
    return shd(g1, g2) / total


def pairwise_nshd(dags: Sequence[Dag]) -> np.ndarray:
    """Symmetric matrix of nSHD between all members"""
    n = len(dags)
    out = np.zeros((n, n))
    for p in range(n):
        for q in range(p + 1, n):
            out[p, q] = out[q, p] = nshd(dags[p], dags[q])
    return out


@dataclass(frozen=True)
class DagEnsemble:
    """DAGs estimated at one threshold over a grid of exceedance counts"""

    members: Tuple[Tuple[Dag, int], ...]
    delta: float = 0.0

    def __post_init__(self):
        members = tuple((dag, int(r)) for dag, r in self.members)
        if not members:
            raise ModelSpecError("ensemble needs at least one member")
        if len({dag.d for dag, _ in members}) != 1:
            raise DimensionError("ensemble members disagree on the node count")
        counts = [r for _, r in members]
        if len(set(counts)) != len(counts):
            raise ModelSpecError(f"exceedance counts must be distinct, got {counts}")
        object.__setattr__(self, "members", members)

    @property
    def d(self) -> int:
        return self.members[0][0].d

    @property
    def dags(self) -> List[Dag]:
        return [dag for dag, _ in self.members]

    @property
    def counts(self) -> List[int]:
        return [r for _, r in self.members]

    def __len__(self) -> int:
        return len(self.members)


def centroid_scores(ensemble: DagEnsemble) -> Dict[int, float]:
    """Sum of nSHD from each member to all others, keyed by exceedance count"""
    sums = pairwise_nshd(ensemble.dags).sum(axis=1)
    return {r: float(s) for r, s in zip(ensemble.counts, sums)}


def centroid(ensemble: DagEnsemble) -> Tuple[Dag, int]:
    """Member with the smallest nSHD sum; ties go to the smallest r"""
    scores = centroid_scores(ensemble)
    dags = dict((r, dag) for dag, r in ensemble.members)
    best = min(scores, key=lambda r: (scores[r], r))
    return dags[best], best


@dataclass(frozen=True, eq=False)
class StabilityScore:
    """counts[i, j] = number of members containing j -> i"""

    counts: np.ndarray
    size: int

    @property
    def d(self) -> int:
        return self.counts.shape[0]

    def edges_by_count(self) -> Dict[int, List[Edge]]:
        """Edges grouped by how many members contain them, for 1..size"""
        buckets: Dict[int, List[Edge]] = {c: [] for c in range(1, self.size + 1)}
        for i, j in zip(*np.nonzero(self.counts)):
            buckets[int(self.counts[i, j])].append((int(j), int(i)))
        for edges in buckets.values():
            edges.sort()
        return buckets

    def to_frame(self, names: Optional[Sequence[str]] = None) -> pd.DataFrame:
        """Edge list with counts, one row per edge seen at least once"""
        names = list(names) if names is not None else default_names(self.d)
        rows = [
            {"source": names[j], "target": names[i], "count": count, "share": count / self.size}
            for count, edges in self.edges_by_count().items()
            for j, i in edges
        ]
        frame = pd.DataFrame(rows, columns=["source", "target", "count", "share"])
        return frame.sort_values(["count", "source", "target"], ascending=[False, True, True],
                                 ignore_index=True)


def stability(ensemble: DagEnsemble) -> StabilityScore:
    counts = np.zeros((ensemble.d, ensemble.d), dtype=int)
    for dag in ensemble.dags:
        counts += dag.adjacency()
    return StabilityScore(counts=counts, size=len(ensemble))
