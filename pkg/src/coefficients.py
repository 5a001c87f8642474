"""
Recovery of the coefficient matrix from suffix-set scalings

All vectors here live in the relabelled coordinates of an estimated order:
new node p is original node order[p], so ancestors always carry larger
labels and A is upper triangular.
"""

import logging
from dataclasses import dataclass
from typing import List

import numpy as np

from .errors import DimensionError
from .projections import MaxProjection, ScalingSource
from .structure import OrderResult
from .tropical import Dag, MaxLinearMatrix, minimum_dag, standardize


logger = logging.getLogger(__name__)

# Squared entries at or below this are treated as exact zeros
NOISE_FLOOR = 1e-12


def vector_length(d: int) -> int:
    return d * (d + 1) // 2


def ell(i: int, j: int, d: int) -> int:
    """0-based position of the pair (i, j), i <= j, in the row-wise upper triangle"""
    if not 0 <= i <= j < d:
        raise DimensionError(f"pair ({i + 1}, {j + 1}) is not in the upper triangle of d={d}")
    return i * d - i * (i - 1) // 2 + (j - i)


def _dimension_of(length: int) -> int:
    d = int((np.sqrt(8 * length + 1) - 1) / 2)
    if vector_length(d) != length:
        raise DimensionError(f"length {length} is not d(d+1)/2 for any d")
    return d


@dataclass(frozen=True, eq=False)
class ScalingVector:
    """
    Suffix-set scalings, row block i holding
    sigma^2(M_{i, i+1..d}), sigma^2(M_{i, i+2..d}), ..., sigma^2(M_i)
    """

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).ravel()
        object.__setattr__(self, "values", values)
        _dimension_of(len(values))

    @property
    def d(self) -> int:
        return _dimension_of(len(self.values))

    def at(self, i: int, j: int) -> float:
        """sigma^2 of {i} u {j+1, ..., d-1} in relabelled 0-based nodes"""
        return float(self.values[ell(i, j, self.d)])


@dataclass(frozen=True, eq=False)
class SquaredCoefVector:
    """Row-wise vectorisation of the upper triangle of A^2"""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).ravel()
        object.__setattr__(self, "values", values)
        _dimension_of(len(values))

    @property
    def d(self) -> int:
        return _dimension_of(len(self.values))

    def to_matrix(self) -> np.ndarray:
        d = self.d
        out = np.zeros((d, d))
        out[np.triu_indices(d)] = self.values
        return out

    @classmethod
    def from_matrix(cls, A2: np.ndarray) -> "SquaredCoefVector":
        A2 = np.asarray(A2, dtype=float)
        return cls(A2[np.triu_indices(A2.shape[0])])


@dataclass(frozen=True, eq=False)
class TransformMatrix:
    """Sparse {-1, 0, 1} map from suffix-set scalings to squared coefficients"""

    T: np.ndarray

    @property
    def d(self) -> int:
        return _dimension_of(self.T.shape[0])


def build_scaling_vector(source: ScalingSource, order: OrderResult) -> ScalingVector:
    """
    Evaluate every suffix-set and single-node scaling under the order's relabelling

    Args:
        source: Exact or empirical scaling source
        order: Estimated causal order; position in the order is the new label

    Returns:
        ScalingVector of length d(d+1)/2
    """
    d = order.d
    if d != source.d:
        raise DimensionError(f"order has {d} nodes, scaling source has {source.d}")
    old = order.order
    values = np.empty(vector_length(d))
    for i in range(d):
        for j in range(i, d):
            nodes = {old[i]} | {old[q] for q in range(j + 1, d)}
            values[ell(i, j, d)] = source.scaling(MaxProjection.of(nodes))
    return ScalingVector(values)


def recover_A2_recursive(S: ScalingVector) -> SquaredCoefVector:
    """
    Squared coefficients by the row recursion

    a_dd^2 = sigma_d^2; a_ii^2 = sigma^2(M_{i..d}) - sigma^2(M_{i+1..d});
    a_ij^2 = sigma^2(M_{i, j+1..d}) - sigma^2(M_{j+1..d}) - sum_{k=i}^{j-1} a_ik^2;
    a_id^2 = sigma_i^2 - sum_{k=i}^{d-1} a_ik^2.
    """
    d = S.d
    A2 = np.zeros((d, d))
    for i in range(d):
        if i == d - 1:
            A2[i, i] = S.at(i, i)
            continue
        A2[i, i] = S.at(i, i) - S.at(i + 1, i + 1)
        for j in range(i + 1, d - 1):
            A2[i, j] = S.at(i, j) - S.at(j + 1, j + 1) - A2[i, i:j].sum()
        A2[i, d - 1] = S.at(i, d - 1) - A2[i, i:d - 1].sum()
    return SquaredCoefVector.from_matrix(A2)


def build_T(d: int) -> TransformMatrix:
    """
    Linear map with A^2 = T S

    Rows, in 1-based labels:
        a_ii^2 (i < d):       +S(i,i)  -S(i+1,i+1)
        a_dd^2:               +S(d,d)
        a_ij^2 (i < j < d):   +S(i,j)  -S(j+1,j+1)  -S(i,j-1)  +S(j,j)
        a_id^2 (i < d):       +S(i,d)  -S(i,d-1)    +S(d,d)
    """
    if d < 2:
        raise DimensionError(f"transform matrix needs d >= 2, got {d}")
    n = vector_length(d)
    T = np.zeros((n, n))
    last = d - 1
    for i in range(d):
        for j in range(i, d):
            row = ell(i, j, d)
            if i == j == last:
                T[row, ell(last, last, d)] += 1
            elif i == j:
                T[row, ell(i, i, d)] += 1
                T[row, ell(i + 1, i + 1, d)] -= 1
            elif j < last:
                T[row, ell(i, j, d)] += 1
                T[row, ell(j + 1, j + 1, d)] -= 1
                T[row, ell(i, j - 1, d)] -= 1
                T[row, ell(j, j, d)] += 1
            else:
                T[row, ell(i, last, d)] += 1
                T[row, ell(i, last - 1, d)] -= 1
                T[row, ell(last, last, d)] += 1
    return TransformMatrix(T)


def recover_A2_linear(S: ScalingVector, T: TransformMatrix) -> SquaredCoefVector:
    if T.T.shape != (len(S.values), len(S.values)):
        raise DimensionError(f"T of shape {T.T.shape} does not act on a vector of "
                             f"length {len(S.values)}")
    return SquaredCoefVector(T.T @ S.values)


def _constrained_square(A2: SquaredCoefVector, order: OrderResult) -> np.ndarray:
    """A^2 in relabelled order with forbidden entries zeroed and noise clamped"""
    if A2.d != order.d:
        raise DimensionError(f"A^2 has d={A2.d}, order has d={order.d}")
    M = A2.to_matrix()
    step = order.step_of()[list(order.order)]
    forbidden = (step[:, None] == step[None, :]) | np.tril(np.ones_like(M, dtype=bool), k=-1)
    np.fill_diagonal(forbidden, False)
    M[forbidden] = 0.0
    M[M <= NOISE_FLOOR] = 0.0
    return M


def degenerate_rows(A2: SquaredCoefVector, order: OrderResult) -> List[int]:
    """Original node labels whose diagonal vanishes after constraints and clamping"""
    M = _constrained_square(A2, order)
    return sorted(int(order.order[p]) for p in np.flatnonzero(np.diag(M) == 0))


def postprocess(A2: SquaredCoefVector, order: OrderResult) -> MaxLinearMatrix:
    """
    Turn recovered squared coefficients into a standardised matrix

    Same-step and lower-triangular entries are zeroed first, then squared
    entries at or below the noise floor are clamped to 0, the square root is
    taken and rows are renormalised. A row whose diagonal vanished falls back
    to the unit row. The result is mapped back to the original node labels.

    Args:
        A2: Squared coefficients in relabelled order
        order: The order that defined the relabelling

    Returns:
        Standardised MaxLinearMatrix in original labels
    """
    B = np.sqrt(_constrained_square(A2, order))
    d = order.d
    for p in np.flatnonzero(np.diag(B) == 0):
        logger.warning(f"row of node {order.order[p] + 1} degenerate, using unit diagonal")
        B[p] = 0.0
        B[p, p] = 1.0
    B /= np.sqrt((B ** 2).sum(axis=1))[:, None]

    idx = np.asarray(order.order)
    A = np.zeros((d, d))
    A[np.ix_(idx, idx)] = B
    return standardize(A, strict=False)


def estimate_coefficients(source: ScalingSource, order: OrderResult,
                          linear: bool = True) -> MaxLinearMatrix:
    """Scaling vector, A^2 recovery and postprocessing in one call"""
    S = build_scaling_vector(source, order)
    if linear and order.d >= 2:
        A2 = recover_A2_linear(S, build_T(order.d))
    else:
        A2 = recover_A2_recursive(S)
    return postprocess(A2, order)


def estimated_dag(matrix: MaxLinearMatrix, delta: float = 0.0) -> Dag:
    """Hard-thresholded DAG of an estimated coefficient matrix"""
    return minimum_dag(matrix, delta)


def symbolic_T_rows(d: int) -> List[str]:
    """Readable rows of T, e.g. 'a_12^2 = -S(1,1) +S(1,2) +S(2,2) -S(3,3)'"""
    T = build_T(d).T
    labels = [(i, j) for i in range(d) for j in range(i, d)]
    rows = []
    for (i, j), row in zip(labels, T):
        terms = [
            f"{'+' if row[c] > 0 else '-'}S({labels[c][0] + 1},{labels[c][1] + 1})"
            for c in np.flatnonzero(row)
        ]
        rows.append(f"a_{i + 1}{j + 1}^2 = " + " ".join(terms))
    return rows
