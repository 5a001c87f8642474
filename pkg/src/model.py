"""
Recursive max-linear model: simulation and exact scalings

The exact side evaluates every squared scaling straight from the standardised
coefficient matrix, which makes it the oracle the empirical estimators and
the ordering algorithm are checked against.
"""

import logging
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import DescriptorError, ModelSpecError
from .projections import DEFAULT_A, MaxProjection
from .tropical import (
    DagSpec,
    MaxLinearMatrix,
    coefficients_from_weights,
    default_names,
    standardize,
)


logger = logging.getLogger(__name__)

ALPHA = 2


@dataclass(frozen=True, eq=False)
class RmlmModel:
    """Standardised RMLM X = A x_max Z with standard Frechet(2) innovations"""

    matrix: MaxLinearMatrix
    alpha: int = ALPHA
    seed: int = 0

    def __post_init__(self):
        if self.alpha != ALPHA:
            raise ModelSpecError(f"only tail index alpha = 2 is supported, got {self.alpha}")
        if not self.matrix.standardised:
            raise ModelSpecError("model requires a standardised coefficient matrix")
        # raises on dominance violations
        standardize(self.matrix, strict=True)

    @classmethod
    def from_spec(cls, spec: DagSpec, seed: int = 0) -> "RmlmModel":
        return cls(standardize(coefficients_from_weights(spec)), seed=seed)

    @classmethod
    def from_matrix(cls, A, seed: int = 0) -> "RmlmModel":
        """Standardise any valid coefficient matrix and wrap it"""
        return cls(standardize(A), seed=seed)

    @property
    def A(self) -> np.ndarray:
        return self.matrix.A

    @property
    def d(self) -> int:
        return self.matrix.d

    def ancestors(self, j: int):
        return self.matrix.ancestors(j)

    def to_dict(self, names: Optional[Sequence[str]] = None) -> dict:
        data = self.matrix.to_dict(names)
        data.update({"alpha": self.alpha, "seed": self.seed})
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "RmlmModel":
        matrix = MaxLinearMatrix.from_dict({**data, "standardised": False})
        return cls(standardize(matrix), alpha=int(data.get("alpha", ALPHA)),
                   seed=int(data.get("seed", 0)))


@dataclass(frozen=True, eq=False)
class AngularAtomSet:
    """Discrete angular measure: unit atoms (rows) with weights ||a_k||^2"""

    atoms: np.ndarray
    weights: np.ndarray
    columns: Tuple[int, ...]

    def __len__(self) -> int:
        return len(self.columns)

    def total_mass(self) -> float:
        return float(self.weights.sum())

    def to_records(self, names: Optional[Sequence[str]] = None) -> list:
        names = list(names) if names is not None else default_names(self.atoms.shape[1])
        return [
            {"column": names[k], "atom": atom.tolist(), "weight": float(w)}
            for k, atom, w in zip(self.columns, self.atoms, self.weights)
        ]


def _coefficients(source) -> np.ndarray:
    if isinstance(source, RmlmModel):
        return source.A
    if isinstance(source, MaxLinearMatrix):
        return source.A
    return np.asarray(source, dtype=float)


def frechet_innovations(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    """Standard Frechet(2) draws by inverse CDF, Z = (-ln U)^(-1/2)"""
    U = rng.random((n, d))
    with np.errstate(divide="ignore"):
        return (-np.log(U)) ** (-0.5)


def max_linear_apply(A: np.ndarray, Z: np.ndarray) -> np.ndarray:
    """Row-wise X = A x_max Z for an innovation matrix Z of shape (n, d)"""
    X = np.zeros((Z.shape[0], A.shape[0]))
    for k in range(A.shape[1]):
        np.maximum(X, Z[:, [k]] * A[:, k][None, :], out=X)
    return X


def simulate(model: RmlmModel, n: int, seed: Optional[int] = None,
             return_innovations: bool = False):
    """
    Draw n independent observations of the model

    Args:
        model: Standardised RMLM
        n: Number of rows, n >= 1
        seed: Overrides model.seed when given
        return_innovations: Also return the innovation matrix Z

    Returns:
        Array of shape (n, d), or the pair (X, Z)
    """
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    rng = np.random.default_rng(model.seed if seed is None else seed)
    Z = frechet_innovations(rng, n, model.d)
    X = max_linear_apply(model.A, Z)
    logger.debug(f"simulated {n} rows from a {model.d}-node model")
    return (X, Z) if return_innovations else X


def simulate_raw(spec: DagSpec, n: int, seed: int = 0, return_innovations: bool = False):
    """Simulate from the unstandardised path-weight matrix of a DAG spec"""
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    A = coefficients_from_weights(spec).A
    rng = np.random.default_rng(seed)
    Z = frechet_innovations(rng, n, spec.d)
    X = max_linear_apply(A, Z)
    return (X, Z) if return_innovations else X


def angular_atoms(source: Union[RmlmModel, MaxLinearMatrix, np.ndarray]) -> AngularAtomSet:
    """
    Atoms a_k / ||a_k|| with weights ||a_k||^2, one per nonzero column

    Accepts a model, a coefficient matrix or a raw array.
    """
    A = _coefficients(source)
    norms = np.sqrt((A ** 2).sum(axis=0))
    columns = tuple(int(k) for k in np.flatnonzero(norms > 0))
    atoms = (A[:, columns] / norms[list(columns)]).T
    return AngularAtomSet(atoms=atoms, weights=norms[list(columns)] ** 2, columns=columns)


def angular_moment(atoms: AngularAtomSet, projection: MaxProjection) -> float:
    """Integral of the max-projection functional against the atom measure"""
    omega = atoms.atoms[:, list(projection.involved)]
    return float(np.dot(atoms.weights, projection.functional(omega)))


def _check_labels(d: int, projection: MaxProjection):
    if projection.involved[-1] >= d:
        raise DescriptorError(f"descriptor {projection.label()} refers to nodes beyond d={d}")


def exact_scaling(model: RmlmModel, projection: MaxProjection) -> float:
    """
    Squared scaling sum_l max_c (m_c a_cl)^2 of a max-projection

    Covers single nodes, node sets, the full set and the rescaled triple;
    with row-norm one and column dominance it coincides with each of the
    closed forms in closed_form_scaling.
    """
    _check_labels(model.d, projection)
    rows = model.A[list(projection.involved)] * projection.multipliers()[:, None]
    return float(np.sum(np.max(rows ** 2, axis=0)))


def closed_form_scaling(model: RmlmModel, projection: MaxProjection) -> float:
    """Scalings written out per descriptor shape"""
    _check_labels(model.d, projection)
    A2 = model.A ** 2
    if not projection.scaled:
        nodes = list(projection.involved)
        if len(nodes) == model.d:
            return float(np.trace(A2))
        return float(A2[nodes].max(axis=0).sum())

    (i,) = tuple(projection.nodes)
    scaled = sorted(projection.scaled)
    a2 = projection.a ** 2
    inside = float(a2 * A2[scaled, scaled].sum())
    outside = [l for l in range(model.d) if l not in projection.scaled]
    rest = np.maximum(A2[i, outside], a2 * A2[np.ix_(scaled, outside)].max(axis=0))
    return inside + float(rest.sum())


def scaling_j_given_o(model: RmlmModel, j: int, ordered: Iterable[int]) -> float:
    """
    Scaling of max(X_j, X_O) for an ancestrally closed O

    Equals the diagonal mass of O u {j} plus the squared coefficients from
    the ancestors of j that are not yet in O. With O empty this is sigma_j^2.
    """
    ordered = set(ordered)
    if j in ordered:
        raise DescriptorError(f"node {j + 1} already belongs to O")
    if not model.matrix.is_ancestrally_closed(ordered):
        raise DescriptorError(f"O={sorted(o + 1 for o in ordered)} is not ancestrally closed")
    A2 = model.A ** 2
    diag = sum(A2[l, l] for l in ordered | {j})
    outside = sum(A2[j, l] for l in model.ancestors(j) - ordered)
    return float(diag + outside)


def gap_identity(model: RmlmModel, i: int, j: int, others: Iterable[int] = (),
                 a: float = DEFAULT_A) -> Tuple[float, float]:
    """
    Both sides of the rescaling gap identity for an ancestrally closed set I

    lhs = sigma^2(M_{i, aj, aI}) - sigma^2(M_{i, j, I})
    rhs = (a^2 - 1) sum_{l in I u {j}} a_ll^2
          + sum_{l in an(j) \\ I} (a_il^2 v a^2 a_jl^2 - a_il^2 v a_jl^2)

    Raises:
        DescriptorError: I is not ancestrally closed or i, j are misplaced
    """
    others = set(others)
    if not model.matrix.is_ancestrally_closed(others):
        raise DescriptorError(f"I={sorted(o + 1 for o in others)} is not ancestrally closed")
    scaled = MaxProjection.rescaled(i, j, others, a)
    plain = MaxProjection.of(others | {i, j})
    lhs = exact_scaling(model, scaled) - exact_scaling(model, plain)

    A2 = model.A ** 2
    a2 = a ** 2
    rhs = (a2 - 1.0) * sum(A2[l, l] for l in others | {j})
    for l in model.ancestors(j) - others:
        rhs += max(A2[i, l], a2 * A2[j, l]) - max(A2[i, l], A2[j, l])
    return lhs, float(rhs)


def source_gap(model: RmlmModel, i: int, j: int, a: float = DEFAULT_A) -> float:
    """sigma^2(M_{i, aj}) - sigma^2(M_{i, j}); equals a^2 - 1 iff j is a source"""
    lhs, _ = gap_identity(model, i, j, (), a)
    return lhs


def ordered_gap(model: RmlmModel, i: int, j: int, ordered: Iterable[int],
                a: float = DEFAULT_A) -> Tuple[float, float]:
    """
    Gap after conditioning on an ancestrally closed O, and its benchmark

    Returns:
        (sigma^2(M_{i, aj, aO}) - sigma^2(M_{i, j, O}), (a^2 - 1) sigma^2(M_{j, O}));
        equal when an(j) is inside O, the gap is smaller otherwise
    """
    ordered = set(ordered)
    lhs, _ = gap_identity(model, i, j, ordered, a)
    return lhs, (a ** 2 - 1.0) * scaling_j_given_o(model, j, ordered)


class ExactScalings:
    """Scaling source backed by the model's coefficients"""

    def __init__(self, model: RmlmModel):
        self.model = model
        self.d = model.d
        self.k = None

    def scaling(self, projection: MaxProjection) -> float:
        return exact_scaling(self.model, projection)


def random_spec(d: int, rng: np.random.Generator, edge_prob: float = 0.5,
                well_ordered: bool = True) -> DagSpec:
    """
    Random DAG with uniform weights

    Well-ordered specs only have edges j -> i with j > i, so their
    coefficient matrix is upper triangular.
    """
    C = np.diag(rng.uniform(0.5, 1.5, size=d))
    for i in range(d):
        for j in range(i + 1, d):
            if rng.random() < edge_prob:
                C[i, j] = rng.uniform(0.3, 1.0)
    if not well_ordered:
        perm = rng.permutation(d)
        C = C[np.ix_(perm, perm)]
    return DagSpec.from_weights(C)


def random_model(d: int, seed: int = 0, edge_prob: float = 0.5,
                 well_ordered: bool = True) -> RmlmModel:
    rng = np.random.default_rng(seed)
    return RmlmModel.from_spec(random_spec(d, rng, edge_prob, well_ordered), seed=seed)


def chain_spec(c12: float, c23: float, c13: float) -> DagSpec:
    """Three nodes, 3 -> 2 -> 1 plus the shortcut 3 -> 1, unit diagonal"""
    C = np.eye(3)
    C[0, 1], C[1, 2], C[0, 2] = c12, c23, c13
    return DagSpec.from_weights(C)


def four_node_spec() -> DagSpec:
    """
    Four-node reference DAG: sources 3 and 4, then 2, then 1

    Edges 2 -> 1, 3 -> 1, 4 -> 1, 3 -> 2, 4 -> 2 with unit diagonal; the
    shortcuts into 1 are dominated by the paths through 2.
    """
    C = np.eye(4)
    C[0, 1], C[0, 2], C[0, 3] = 0.8, 0.3, 0.3
    C[1, 2], C[1, 3] = 0.6, 0.5
    return DagSpec.from_weights(C)
