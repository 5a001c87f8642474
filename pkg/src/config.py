"""
Run configuration: dataclass defaults, JSON config file, then CLI flags
"""

import json
import logging
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Dict, List, Optional

from .errors import ConfigError


logger = logging.getLogger(__name__)

ROUTES = ("linear", "recursive")


@dataclass(frozen=True)
class PipelineConfig:
    """Parameters of an end-to-end estimation run"""

    input: Optional[str] = None
    date_column: bool = False
    negate: bool = False
    k_order: int = 250
    a: float = 1.3
    epsilon: float = 0.1
    k_bases: List[int] = field(default_factory=lambda: [50, 60, 70, 80, 90])
    k_offsets: List[int] = field(default_factory=lambda: [0, 2, 4, 6, 8])
    delta_grid: List[float] = field(default_factory=lambda: [0.0, 0.025, 0.05, 0.1])
    # estimation draws no random numbers; the seed drives `simulate` and is kept in
    # report.json as provenance of the data
    seed: int = 0
    output_dir: str = "output"
    jobs: int = 1
    route: str = "linear"

    @classmethod
    def from_dict(cls, data: Dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown configuration keys: {unknown}")
        return cls(**data)

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        path = Path(path)
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except FileNotFoundError as e:
            raise ConfigError(f"config file not found: {path}") from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"config file {path} is not valid JSON: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"config file {path} must hold a JSON object")
        logger.debug(f"loaded config from {path}: {sorted(data)}")
        return cls.from_dict(data)

    def merged(self, **overrides) -> "PipelineConfig":
        """Copy with every override that is not None applied"""
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    def k_grid(self, base: int) -> List[int]:
        return [base + offset for offset in self.k_offsets]

    def grids(self) -> Dict[int, List[int]]:
        return {base: self.k_grid(base) for base in self.k_bases}

    def all_counts(self) -> List[int]:
        return sorted({r for grid in self.grids().values() for r in grid})

    def validate(self, n: Optional[int] = None) -> "PipelineConfig":
        """
        Check parameter ranges, and exceedance counts against n once known

        Raises:
            ConfigError: On the first violated constraint
        """
        if self.a <= 1.0:
            raise ConfigError(f"a must exceed 1, got {self.a}")
        if self.epsilon < 0:
            raise ConfigError(f"epsilon must be nonnegative, got {self.epsilon}")
        if not self.k_bases or not self.k_offsets or not self.delta_grid:
            raise ConfigError("k_bases, k_offsets and delta_grid must be nonempty")
        if any(delta < 0 for delta in self.delta_grid):
            raise ConfigError(f"delta grid must be nonnegative, got {self.delta_grid}")
        if len(set(self.k_offsets)) != len(self.k_offsets):
            raise ConfigError(f"k offsets must be distinct, got {self.k_offsets}")
        if self.jobs < 1:
            raise ConfigError(f"jobs must be at least 1, got {self.jobs}")
        if self.route not in ROUTES:
            raise ConfigError(f"route must be one of {ROUTES}, got {self.route!r}")

        flat = [r for grid in self.grids().values() for r in grid]
        if len(set(flat)) != len(flat):
            raise ConfigError(f"exceedance grids overlap: {self.grids()}")

        counts = [self.k_order] + self.all_counts()
        if min(counts) < 1:
            raise ConfigError(f"exceedance counts must be at least 1, got {min(counts)}")
        if n is not None and max(counts) > n:
            raise ConfigError(f"exceedance count {max(counts)} exceeds n={n} observations")
        return self

    def to_dict(self) -> Dict:
        return asdict(self)


@dataclass(frozen=True)
class ValidationConfig:
    """Parameters of the self-checking oracle harness"""

    dims: List[int] = field(default_factory=lambda: [3, 4, 5, 6])
    models_per_dim: int = 50
    tolerance: float = 1e-10
    a: float = 1.3
    epsilon: float = 0.1
    mc_n: int = 1_000_000
    mc_k: int = 10_000
    mc_d: int = 5
    mc_descriptors: int = 20
    mc_order_seeds: int = 20
    mc_order_pass: float = 0.9
    seed: int = 0

    def merged(self, **overrides) -> "ValidationConfig":
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    def validate(self) -> "ValidationConfig":
        if not self.dims or min(self.dims) < 2:
            raise ConfigError(f"dims must be nonempty and at least 2, got {self.dims}")
        if self.models_per_dim < 1 or self.mc_descriptors < 1:
            raise ConfigError("model and descriptor counts must be at least 1")
        if self.a <= 1.0:
            raise ConfigError(f"a must exceed 1, got {self.a}")
        if self.mc_n > 0 and not 1 <= self.mc_k <= self.mc_n:
            raise ConfigError(f"mc_k={self.mc_k} must lie in 1..mc_n={self.mc_n}")
        if self.mc_order_seeds < 0 or not 0.0 <= self.mc_order_pass <= 1.0:
            raise ConfigError("mc_order_seeds must be nonnegative and mc_order_pass in [0, 1]")
        return self

    def to_dict(self) -> Dict:
        return asdict(self)
