"""
Empirical tail estimation: marginal transform, polar coordinates and scalings
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, Iterator, Optional, Tuple

import numpy as np
from scipy.stats import rankdata

from .errors import DimensionError, EstimationError
from .projections import MaxProjection


logger = logging.getLogger(__name__)


def frechet_transform(raw) -> np.ndarray:
    """
    Empirical integral transform to standard Frechet(2) margins

    Each entry becomes (-ln(count / (n + 1)))^(-1/2), where count is the
    number of column values <= the entry, so ties share one value.

    Args:
        raw: Array-like of shape (n, d), n >= 2, no missing values

    Returns:
        Transformed array of the same shape
    """
    X = np.asarray(raw, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise DimensionError(f"expected an n x d matrix, got shape {X.shape}")
    n = X.shape[0]
    if n < 2:
        raise EstimationError(f"need at least 2 observations, got {n}")
    if np.isnan(X).any():
        raise EstimationError("input contains missing values")
    constant = [int(c) + 1 for c in np.flatnonzero(np.all(X == X[0], axis=0))]
    if constant:
        raise EstimationError(f"constant columns {constant} cannot be rank-transformed")

    counts = rankdata(X, method="max", axis=0)
    return (-np.log(counts / (n + 1.0))) ** (-0.5)


@dataclass(frozen=True)
class AngularSample:
    """One observation in polar form under the Euclidean norm"""

    R: float
    omega: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return self.R * self.omega


@dataclass(frozen=True, eq=False)
class PolarDecomposition:
    """
    Polar coordinates of a sample restricted to some coordinates

    Rows with zero radius have no angle; they are dropped and counted in
    `zero_rows`, and `rows` maps each kept entry back to its sample row.
    """

    involved: Tuple[int, ...]
    radii: np.ndarray
    angles: np.ndarray
    rows: np.ndarray
    zero_rows: int

    @property
    def m(self) -> int:
        return len(self.involved)

    def __len__(self) -> int:
        return len(self.radii)

    def __iter__(self) -> Iterator[AngularSample]:
        for R, omega in zip(self.radii, self.angles):
            yield AngularSample(float(R), omega)


@dataclass(frozen=True, eq=False)
class ExceedanceSet:
    """The k largest radii; ties at the threshold go to earlier rows"""

    k: int
    threshold: float
    selected: np.ndarray


def polar(sample, subset: Iterable[int]) -> PolarDecomposition:
    """
    Euclidean polar decomposition of the rows restricted to `subset`

    Args:
        sample: Array of shape (n, d)
        subset: Nonempty collection of 0-based coordinates

    Returns:
        PolarDecomposition over the rows with positive radius
    """
    involved = tuple(sorted(set(int(c) for c in subset)))
    if not involved:
        raise DimensionError("polar decomposition needs a nonempty coordinate subset")
    X = np.asarray(sample, dtype=float)
    if X.ndim != 2 or involved[-1] >= X.shape[1]:
        raise DimensionError(f"subset {[c + 1 for c in involved]} does not fit shape {X.shape}")

    sub = X[:, list(involved)]
    radii = np.sqrt((sub ** 2).sum(axis=1))
    keep = radii > 0
    zero_rows = int((~keep).sum())
    if zero_rows:
        logger.warning(f"dropped {zero_rows} zero-radius rows on coordinates "
                       f"{[c + 1 for c in involved]}")
    rows = np.flatnonzero(keep)
    return PolarDecomposition(
        involved=involved,
        radii=radii[keep],
        angles=sub[keep] / radii[keep][:, None],
        rows=rows,
        zero_rows=zero_rows,
    )


def select_exceedances(radii: np.ndarray, k: int) -> ExceedanceSet:
    """Indices of the k largest radii, stable in the original row order"""
    radii = np.asarray(radii, dtype=float)
    if k < 1:
        raise EstimationError(f"k must be at least 1, got {k}")
    if k > len(radii):
        raise EstimationError(f"k={k} exceeds the {len(radii)} usable observations")
    order = np.argsort(-radii, kind="stable")
    selected = order[:k]
    return ExceedanceSet(k=k, threshold=float(radii[selected[-1]]), selected=selected)


def empirical_moment(samples: PolarDecomposition, k: int,
                     f: Optional[Callable[[np.ndarray], np.ndarray]] = None) -> float:
    """
    m * (1/k) * sum of f over the angles of the k largest radii

    The factor m (number of coordinates) is the total mass of the angular
    measure of m standardised margins. Without f the functional is 1.
    """
    exceedances = select_exceedances(samples.radii, k)
    omega = samples.angles[exceedances.selected]
    values = np.ones(k) if f is None else np.asarray(f(omega), dtype=float)
    return float(samples.m * values.sum() / k)


def estimate_scaling(sample, k: int, projection: MaxProjection) -> float:
    """
    Empirical squared scaling of a max-projection

    Only the coordinates the projection involves enter the polar
    decomposition.

    Args:
        sample: Frechet-margined data of shape (n, d)
        k: Number of exceedances
        projection: Max-projection descriptor

    Returns:
        Scaling estimate
    """
    samples = polar(sample, projection.involved)
    return empirical_moment(samples, k, projection.functional)


class EmpiricalScalings:
    """Scaling source over a fixed sample and exceedance count, with a cache"""

    def __init__(self, sample, k: int):
        self.sample = np.asarray(sample, dtype=float)
        if self.sample.ndim != 2:
            raise DimensionError(f"expected an n x d sample, got shape {self.sample.shape}")
        if not 1 <= k <= self.sample.shape[0]:
            raise EstimationError(f"k={k} must lie in 1..{self.sample.shape[0]}")
        self.d = self.sample.shape[1]
        self.k = int(k)
        self._cache: Dict[MaxProjection, float] = {}

    def scaling(self, projection: MaxProjection) -> float:
        if projection not in self._cache:
            self._cache[projection] = estimate_scaling(self.sample, self.k, projection)
        return self._cache[projection]

    def with_k(self, k: int) -> "EmpiricalScalings":
        return EmpiricalScalings(self.sample, k)

    def scaling_report(self, names=None) -> list:
        """Records {descriptor, k, estimate} of every scaling evaluated so far"""
        return [
            {"descriptor": p.label(names), "k": self.k, "estimate": value}
            for p, value in sorted(self._cache.items(), key=lambda item: item[0].label())
        ]
