"""
Max-times linear algebra and DAG structures for recursive max-linear models

Node labels are 0-based inside the package and 1-based in every external
format. An edge (j, i) always means j -> i, and matrices follow the same
orientation as the coefficient matrix: entry [i, j] describes the influence
of j on i.
"""

import logging
from dataclasses import dataclass, field
from typing import FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

import networkx as nx
import numpy as np

from .errors import CycleError, DimensionError, InvariantError, ModelSpecError


logger = logging.getLogger(__name__)

# Slack for strict comparisons between products of reals
EDGE_TOLERANCE = 1e-12
NORM_TOLERANCE = 1e-9

Edge = Tuple[int, int]


def default_names(d: int) -> List[str]:
    """Name table used when the data carries none"""
    return [f"X{i + 1}" for i in range(d)]


def _check_acyclic(d: int, edges: Iterable[Edge]):
    graph = nx.DiGraph()
    graph.add_nodes_from(range(d))
    graph.add_edges_from(edges)
    if not nx.is_directed_acyclic_graph(graph):
        cycle = [(u + 1, v + 1) for u, v in nx.find_cycle(graph)]
        raise CycleError(f"Cycle found: {cycle}", cycle)
    return graph


@dataclass(frozen=True)
class Dag:
    """Pure DAG structure: d nodes and a set of edges (j, i) meaning j -> i"""

    d: int
    edges: FrozenSet[Edge] = field(default_factory=frozenset)

    def __post_init__(self):
        edges = frozenset((int(j), int(i)) for j, i in self.edges)
        for j, i in edges:
            if not (0 <= j < self.d and 0 <= i < self.d):
                raise ModelSpecError(f"edge {j + 1}->{i + 1} outside node range 1..{self.d}")
            if i == j:
                raise CycleError(f"self-loop on node {i + 1}", [(i + 1, i + 1)])
        _check_acyclic(self.d, edges)
        object.__setattr__(self, "edges", edges)

    @classmethod
    def from_adjacency(cls, adjacency: np.ndarray) -> "Dag":
        """Build from a matrix whose nonzero entry [i, j] (i != j) marks j -> i"""
        adjacency = np.asarray(adjacency)
        d = adjacency.shape[0]
        rows, cols = np.nonzero(adjacency)
        return cls(d, frozenset((int(j), int(i)) for i, j in zip(rows, cols) if i != j))

    def adjacency(self) -> np.ndarray:
        out = np.zeros((self.d, self.d), dtype=int)
        for j, i in self.edges:
            out[i, j] = 1
        return out

    def edge_list(self) -> List[Edge]:
        return sorted(self.edges)

    def parents(self, i: int) -> Set[int]:
        return {j for j, t in self.edges if t == i}

    def children(self, j: int) -> Set[int]:
        return {i for s, i in self.edges if s == j}

    def to_networkx(self, names: Optional[Sequence[str]] = None) -> nx.DiGraph:
        graph = nx.DiGraph()
        graph.add_nodes_from(range(self.d))
        graph.add_edges_from(self.edges)
        if names is not None:
            graph = nx.relabel_nodes(graph, dict(enumerate(names)))
        return graph

    def topological_order(self) -> List[int]:
        """Nodes with every parent before its children"""
        return list(nx.lexicographical_topological_sort(self.to_networkx()))

    def relabel(self, mapping: Sequence[int]) -> "Dag":
        """Rename node v to mapping[v]"""
        return Dag(self.d, frozenset((mapping[j], mapping[i]) for j, i in self.edges))

    def issubset(self, other: "Dag") -> bool:
        return self.d == other.d and self.edges <= other.edges

    def to_dict(self, names: Optional[Sequence[str]] = None) -> dict:
        names = list(names) if names is not None else default_names(self.d)
        return {
            "d": self.d,
            "names": names,
            "edges": [[j + 1, i + 1] for j, i in self.edge_list()],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Dag":
        d = int(data["d"])
        return cls(d, frozenset((int(j) - 1, int(i) - 1) for j, i in data.get("edges", [])))

    def to_dot(self, names: Optional[Sequence[str]] = None, title: str = "dag") -> str:
        """Graphviz DOT text, one line per node and per directed edge"""
        names = list(names) if names is not None else default_names(self.d)
        lines = [f'digraph "{title}" {{']
        lines.extend(f'  "{name}";' for name in names)
        lines.extend(f'  "{names[j]}" -> "{names[i]}";' for j, i in self.edge_list())
        lines.append("}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True, eq=False)
class DagSpec:
    """Generative graph of a RMLM: edges plus the edge-weight matrix C"""

    d: int
    edges: FrozenSet[Edge]
    weights: np.ndarray

    def __post_init__(self):
        C = np.array(self.weights, dtype=float)
        if C.shape != (self.d, self.d):
            raise DimensionError(f"weight matrix must be {self.d}x{self.d}, got {C.shape}")
        if np.any(C < 0) or not np.all(np.isfinite(C)):
            raise ModelSpecError("edge weights must be finite and nonnegative")
        if np.any(np.diag(C) <= 0):
            raise ModelSpecError("diagonal weights c_ii must be strictly positive")

        dag = Dag(self.d, self.edges)
        pattern = np.zeros_like(C, dtype=bool)
        for j, i in dag.edges:
            pattern[i, j] = True
        off = ~np.eye(self.d, dtype=bool)
        mismatch = off & ((C > 0) != pattern)
        if mismatch.any():
            i, j = (int(v) for v in np.argwhere(mismatch)[0])
            raise ModelSpecError(
                f"weight c[{i + 1},{j + 1}]={C[i, j]} does not match edge set "
                f"(edge {j + 1}->{i + 1} {'present' if pattern[i, j] else 'absent'})"
            )
        C.setflags(write=False)
        object.__setattr__(self, "edges", dag.edges)
        object.__setattr__(self, "weights", C)

    @classmethod
    def from_weights(cls, weights: np.ndarray) -> "DagSpec":
        """Edges are read off the positive off-diagonal entries of C"""
        C = np.asarray(weights, dtype=float)
        dag = Dag.from_adjacency((C > 0) & ~np.eye(C.shape[0], dtype=bool))
        return cls(C.shape[0], dag.edges, C)

    @property
    def dag(self) -> Dag:
        return Dag(self.d, self.edges)


@dataclass(frozen=True, eq=False)
class MaxLinearMatrix:
    """
    Max-linear coefficient matrix A (a_ij > 0 iff j in An(i))

    Stored read-only. With `standardised=True` every row must have unit
    Euclidean norm; column diagonal dominance is checked separately because
    estimated matrices need not satisfy it.
    """

    A: np.ndarray
    standardised: bool = False

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DimensionError(f"coefficient matrix must be square, got shape {A.shape}")
        if np.any(A < 0) or not np.all(np.isfinite(A)):
            raise InvariantError("coefficients must be finite and nonnegative")
        if np.any(np.diag(A) <= 0):
            bad = [int(i) + 1 for i in np.flatnonzero(np.diag(A) <= 0)]
            raise InvariantError(f"diagonal entries must be positive, rows {bad} are not")
        if self.standardised:
            norms = np.sqrt((A ** 2).sum(axis=1))
            if np.any(np.abs(norms - 1.0) > NORM_TOLERANCE):
                raise InvariantError(f"standardised matrix has row norms {norms.round(6).tolist()}")
        A.setflags(write=False)
        object.__setattr__(self, "A", A)

    @property
    def d(self) -> int:
        return self.A.shape[0]

    def row_norms(self) -> np.ndarray:
        return np.sqrt((self.A ** 2).sum(axis=1))

    def dominance_violations(self) -> List[Edge]:
        """Pairs (i, j), i != j, with a_ij >= a_jj"""
        diag = np.diag(self.A)
        bad = (self.A >= diag[None, :]) & ~np.eye(self.d, dtype=bool)
        return [(int(i), int(j)) for i, j in np.argwhere(bad)]

    def is_diagonally_dominant(self) -> bool:
        return not self.dominance_violations()

    def is_upper_triangular(self) -> bool:
        return not np.any(np.tril(self.A, k=-1) > 0)

    def ancestors(self, i: int) -> Set[int]:
        """an(i): nodes j != i with a_ij > 0"""
        return {int(j) for j in np.flatnonzero(self.A[i] > 0) if j != i}

    def descendants(self, j: int) -> Set[int]:
        return {int(i) for i in np.flatnonzero(self.A[:, j] > 0) if i != j}

    def is_source(self, j: int) -> bool:
        return not self.ancestors(j)

    def is_ancestrally_closed(self, nodes: Iterable[int]) -> bool:
        """True when An(I) contains no node outside I"""
        nodes = set(nodes)
        return all(self.ancestors(k) <= nodes for k in nodes)

    def relabel(self, order: Sequence[int]) -> "MaxLinearMatrix":
        """Matrix in new labels, where new node p is old node order[p]"""
        idx = np.asarray(order, dtype=int)
        return MaxLinearMatrix(self.A[np.ix_(idx, idx)], standardised=self.standardised)

    def to_dict(self, names: Optional[Sequence[str]] = None) -> dict:
        names = list(names) if names is not None else default_names(self.d)
        return {
            "d": self.d,
            "names": names,
            "A": self.A.tolist(),
            "standardised": self.standardised,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MaxLinearMatrix":
        A = np.asarray(data["A"], dtype=float)
        if "d" in data and A.shape[0] != int(data["d"]):
            raise DimensionError(f"matrix has {A.shape[0]} rows but d={data['d']}")
        return cls(A, standardised=bool(data.get("standardised", False)))


def max_times_multiply(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """
    Max-times product (A x_max B)_ij = max_k a_ik * b_kj

    Args:
        A: Nonnegative matrix of shape (n, m)
        B: Nonnegative matrix of shape (m, p) or vector of shape (m,)

    Returns:
        Matrix of shape (n, p), or vector of shape (n,) for vector B
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    vector = B.ndim == 1
    B2 = B[:, None] if vector else B
    if A.ndim != 2 or B2.ndim != 2 or A.shape[1] != B2.shape[0]:
        raise DimensionError(f"cannot multiply shapes {A.shape} and {B.shape}")
    if A.shape[1] == 0:
        out = np.zeros((A.shape[0], B2.shape[1]))
    else:
        out = np.max(A[:, :, None] * B2[None, :, :], axis=1)
    return out[:, 0] if vector else out


def max_times_identity(d: int) -> np.ndarray:
    return np.eye(d)


def coefficients_from_weights(spec: DagSpec) -> MaxLinearMatrix:
    """
    Path-weight matrix A of a RMLM from its edge weights

    a_ij is the largest weight c_jj * c_{k1 j} * ... * c_{i k_l} over all
    paths j ~> i, a_ii = c_ii and a_ij = 0 when j is not an ancestor of i.
    Computed by tropical power iteration A <- A v (W x_max A) with W the
    off-diagonal edge weights; on an acyclic pattern it stops after at most
    d - 1 rounds.

    Args:
        spec: Validated DAG specification

    Returns:
        Unstandardised max-linear coefficient matrix
    """
    _check_acyclic(spec.d, spec.edges)
    W = np.array(spec.weights, dtype=float)
    np.fill_diagonal(W, 0.0)
    A = np.diag(np.diag(spec.weights)).astype(float)
    for step in range(max(spec.d - 1, 0)):
        updated = np.maximum(A, max_times_multiply(W, A))
        if np.array_equal(updated, A):
            logger.debug(f"path weights converged after {step} rounds")
            break
        A = updated
    return MaxLinearMatrix(A)


def standardize(matrix, strict: bool = True) -> MaxLinearMatrix:
    """
    Divide every row of A by its Euclidean norm

    Args:
        matrix: MaxLinearMatrix or array-like coefficient matrix
        strict: Raise InvariantError when the result is not column
            diagonally dominant (a_jj > a_ij); otherwise only warn

    Returns:
        Standardised MaxLinearMatrix
    """
    A = matrix.A if isinstance(matrix, MaxLinearMatrix) else np.asarray(matrix, dtype=float)
    norms = np.sqrt((A ** 2).sum(axis=1))
    if np.any(norms == 0):
        rows = [int(i) + 1 for i in np.flatnonzero(norms == 0)]
        raise InvariantError(f"cannot standardise zero rows {rows}")
    result = MaxLinearMatrix(A / norms[:, None], standardised=True)

    violations = result.dominance_violations()
    if violations:
        pairs = [(i + 1, j + 1) for i, j in violations[:5]]
        message = f"diagonal does not dominate its column at (i, j) = {pairs}"
        if strict:
            raise InvariantError(message)
        logger.warning(message)
    return result


def two_hop_bounds(matrix: MaxLinearMatrix) -> np.ndarray:
    """
    bound[i, j] = max over k not in {i, j} of a_ik * a_kj / a_kk

    Only k with a_ik > 0 and a_kj > 0 contribute, i.e. k in de(j) n pa(i)
    of the reachability DAG; the empty maximum is 0.
    """
    A = matrix.A
    d = matrix.d
    ratios = A[:, None, :] * A.T[None, :, :] / np.diag(A)[None, None, :]
    idx = np.arange(d)
    ratios[idx, :, idx] = 0.0
    ratios[:, idx, idx] = 0.0
    return ratios.max(axis=2) if d else np.zeros((0, 0))


def minimum_dag(matrix: MaxLinearMatrix, delta: float = 0.0,
                tol: float = EDGE_TOLERANCE) -> Dag:
    """
    Hard-thresholded minimum max-linear DAG

    Keeps j -> i iff a_ij > max_{k in de(j) n pa(i)} a_ik a_kj / a_kk + delta,
    with de/pa read from the positive entries of A. With delta = 0 this is
    the minimum max-linear DAG of the reachability graph.

    Args:
        matrix: Coefficient matrix (standardised or not)
        delta: Threshold margin, delta >= 0
        tol: Fixed slack guarding exact ties

    Returns:
        Dag of retained edges
    """
    if delta < 0:
        raise ValueError(f"delta must be nonnegative, got {delta}")
    A = matrix.A
    bound = two_hop_bounds(matrix)
    keep = (A > 0) & (A > bound + delta + tol) & ~np.eye(matrix.d, dtype=bool)
    return Dag.from_adjacency(keep)


def reachability(matrix: MaxLinearMatrix) -> Dag:
    """Edge j -> i for every positive off-diagonal a_ij"""
    return Dag.from_adjacency((matrix.A > 0) & ~np.eye(matrix.d, dtype=bool))


def weights_from_dag(matrix: MaxLinearMatrix, dag: Dag) -> DagSpec:
    """
    Edge weights that re-express A on a sub-DAG: c_ii = a_ii, c_ik = a_ik / a_kk

    Feeding the result to coefficients_from_weights reproduces A whenever
    the DAG keeps every max-weighted path, e.g. for minimum_dag(A, 0).
    """
    A = matrix.A
    C = np.diag(np.diag(A)).astype(float)
    for k, i in dag.edges:
        C[i, k] = A[i, k] / A[k, k]
    return DagSpec(matrix.d, dag.edges, C)


def path_weight_bruteforce(spec: DagSpec) -> np.ndarray:
    """Reference path weights by enumerating every simple path (small d only)"""
    C = spec.weights
    graph = spec.dag.to_networkx()
    A = np.diag(np.diag(C)).astype(float)
    for j in range(spec.d):
        for i in range(spec.d):
            if i == j:
                continue
            best = 0.0
            for path in nx.all_simple_paths(graph, j, i):
                weight = C[j, j]
                for src, dst in zip(path[:-1], path[1:]):
                    weight *= C[dst, src]
                best = max(best, weight)
            A[i, j] = best
    return A
