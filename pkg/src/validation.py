"""
Self-checking harness: exact identities, fixtures and a Monte-Carlo check

Each check returns a CheckResult instead of raising, so one run reports
every failure at once.
"""

import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Dict, List

import numpy as np
import pandas as pd

from .coefficients import (
    SquaredCoefVector,
    build_T,
    build_scaling_vector,
    postprocess,
    recover_A2_linear,
    recover_A2_recursive,
    ScalingVector,
    vector_length,
)
from .config import ValidationConfig
from .model import (
    ExactScalings,
    RmlmModel,
    angular_atoms,
    angular_moment,
    closed_form_scaling,
    exact_scaling,
    four_node_spec,
    gap_identity,
    ordered_gap,
    random_model,
    simulate,
    source_gap,
)
from .projections import MaxProjection
from .structure import OrderResult, causal_order, is_valid_order
from .tail import EmpiricalScalings, estimate_scaling, frechet_transform


# Transform matrix for four nodes, rows a_11..a_44 and columns S in row-block order
REFERENCE_T4 = np.array([
    [1, 0, 0, 0, -1, 0, 0, 0, 0, 0],
    [-1, 1, 0, 0, 1, 0, 0, -1, 0, 0],
    [0, -1, 1, 0, 0, 0, 0, 1, 0, -1],
    [0, 0, -1, 1, 0, 0, 0, 0, 0, 1],
    [0, 0, 0, 0, 1, 0, 0, -1, 0, 0],
    [0, 0, 0, 0, -1, 1, 0, 1, 0, -1],
    [0, 0, 0, 0, 0, -1, 1, 0, 0, 1],
    [0, 0, 0, 0, 0, 0, 0, 1, 0, -1],
    [0, 0, 0, 0, 0, 0, 0, -1, 1, 1],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 1],
], dtype=float)

REFERENCE_ATOMS_MATRIX = np.array([[0.8, 0.26], [0.0, 0.43]])
REFERENCE_ATOMS = np.array([[1.0, 0.0], [0.52, 0.86]])


@dataclass
class CheckResult:
    name: str
    passed: bool
    cases: int
    worst: float
    detail: str = ""


@dataclass
class ValidationReport:
    config: Dict
    checks: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([c.__dict__ for c in self.checks],
                            columns=["name", "passed", "cases", "worst", "detail"])

    def to_dict(self) -> Dict:
        return {
            "config": self.config,
            "passed": self.passed,
            "checks": [dict(c.__dict__) for c in self.checks],
        }


def ancestral_closure(model: RmlmModel, nodes) -> set:
    closed = set(nodes)
    for v in list(closed):
        closed |= model.ancestors(v)
    return closed


def all_descriptors(d: int, a: float) -> List[MaxProjection]:
    """Every node set plus every triple (i, aj, aI) over d nodes"""
    out = [MaxProjection.of(s) for size in range(1, d + 1) for s in combinations(range(d), size)]
    for i in range(d):
        for j in range(d):
            if i == j:
                continue
            rest = [v for v in range(d) if v not in (i, j)]
            for size in range(len(rest) + 1):
                for others in combinations(rest, size):
                    out.append(MaxProjection.rescaled(i, j, others, a))
    return out


def random_descriptor(d: int, rng: np.random.Generator, a: float) -> MaxProjection:
    if rng.random() < 0.5:
        size = int(rng.integers(1, d + 1))
        return MaxProjection.of(rng.choice(d, size=size, replace=False).tolist())
    i, j = (int(v) for v in rng.choice(d, size=2, replace=False))
    rest = [v for v in range(d) if v not in (i, j)]
    others = [v for v in rest if rng.random() < 0.5]
    return MaxProjection.rescaled(i, j, others, a)


class ModelValidator:
    """Runs the invariant suite on random models"""

    def __init__(self, config: ValidationConfig = None, verbose: bool = False):
        """
        Initialize the validator

        Args:
            config: Harness parameters (default: ValidationConfig())
            verbose: Enable verbose logging (default: False)
        """
        self.config = (config or ValidationConfig()).validate()

        log_level = logging.DEBUG if verbose else logging.INFO
        self.logger = logging.getLogger(__name__)
        self.logger.setLevel(log_level)

    def models(self, well_ordered: bool = True) -> List[RmlmModel]:
        cfg = self.config
        out = []
        for d in cfg.dims:
            for m in range(cfg.models_per_dim):
                seed = cfg.seed + 1000 * d + m
                out.append(random_model(d, seed=seed, well_ordered=well_ordered))
        return out

    def _check(self, name: str, fn: Callable[[], CheckResult]) -> CheckResult:
        try:
            result = fn()
        except Exception as e:
            result = CheckResult(name, False, 0, float("nan"), f"raised {type(e).__name__}: {e}")
        mark = "✓" if result.passed else "❌"
        self.logger.info(f"{mark} {name}: {result.cases} cases, worst {result.worst:.3g}")
        return result

    def check_scaling_formulas(self) -> CheckResult:
        tol = self.config.tolerance
        worst, cases = 0.0, 0
        for model in self.models():
            atoms = angular_atoms(model)
            descriptors = (all_descriptors(model.d, self.config.a) if model.d <= 5 else
                           [random_descriptor(model.d, np.random.default_rng(s), self.config.a)
                            for s in range(200)])
            for p in descriptors:
                value = exact_scaling(model, p)
                worst = max(worst, abs(value - angular_moment(atoms, p)),
                            abs(value - closed_form_scaling(model, p)))
                cases += 1
        return CheckResult("scaling formulas vs atom moments", worst <= tol, cases, worst)

    def check_gap_identity(self) -> CheckResult:
        tol = self.config.tolerance
        rng = np.random.default_rng(self.config.seed)
        worst, cases = 0.0, 0
        for model in self.models(well_ordered=False):
            d = model.d
            for _ in range(20):
                seed_nodes = [v for v in range(d) if rng.random() < 0.3]
                closed = ancestral_closure(model, seed_nodes)
                free = [v for v in range(d) if v not in closed]
                if len(free) < 2:
                    continue
                i, j = (int(v) for v in rng.choice(free, size=2, replace=False))
                lhs, rhs = gap_identity(model, i, j, closed, self.config.a)
                worst = max(worst, abs(lhs - rhs))
                cases += 1
        return CheckResult("rescaling gap identity", worst <= tol, cases, worst)

    def check_source_battery(self) -> CheckResult:
        """Gap equals its benchmark once an(j) is ordered, falls strictly below it for i in an(j)"""
        tol = self.config.tolerance
        a = self.config.a
        bench = a ** 2 - 1.0
        worst, cases, failures = 0.0, 0, 0
        for model in self.models(well_ordered=False):
            for j in range(model.d):
                ancestors = model.ancestors(j)
                for i in range(model.d):
                    if i == j:
                        continue
                    gap = source_gap(model, i, j, a)
                    cases += 1
                    if not ancestors:
                        worst = max(worst, abs(gap - bench))
                    elif gap > bench + tol or (i in ancestors and not gap < bench):
                        failures += 1

                    if i not in ancestors:
                        lhs, rhs = ordered_gap(model, i, j, ancestors, a)
                        worst = max(worst, abs(lhs - rhs))
                        cases += 1
                    for k in ancestors:
                        ordered = model.ancestors(k)
                        if i not in ancestors - ordered:
                            continue
                        lhs, rhs = ordered_gap(model, i, j, ordered, a)
                        cases += 1
                        if not lhs < rhs:
                            failures += 1
        passed = worst <= tol and failures == 0
        return CheckResult("source and ordered gap battery", passed, cases, worst,
                           f"{failures} inequality failures" if failures else "")

    def check_two_routes(self) -> CheckResult:
        rng = np.random.default_rng(self.config.seed)
        worst, cases = 0.0, 0
        for d in range(2, 9):
            T = build_T(d)
            for _ in range(100):
                S = ScalingVector(rng.normal(size=vector_length(d)))
                diff = recover_A2_linear(S, T).values - recover_A2_recursive(S).values
                worst = max(worst, float(np.abs(diff).max()))
                cases += 1
        return CheckResult("linear and recursive recovery agree", worst <= 1e-12, cases, worst)

    def check_round_trip(self) -> CheckResult:
        tol = self.config.tolerance
        worst, cases = 0.0, 0
        for model in self.models(well_ordered=True):
            order = OrderResult.from_sequence(range(model.d))
            S = build_scaling_vector(ExactScalings(model), order)
            A2 = recover_A2_linear(S, build_T(model.d))
            truth = SquaredCoefVector.from_matrix(model.A ** 2)
            worst = max(worst, float(np.abs(A2.values - truth.values).max()),
                        float(np.abs(postprocess(A2, order).A - model.A).max()))
            cases += 1
        return CheckResult("exact round trip", worst <= tol, cases, worst)

    def check_exact_orders(self) -> CheckResult:
        cfg = self.config
        valid, cases = 0, 0
        for model in self.models(well_ordered=False):
            order = causal_order(ExactScalings(model), cfg.a, cfg.epsilon)
            valid += is_valid_order(order, model.matrix)
            cases += 1
        return CheckResult("exact-scaling orders are valid", valid == cases, cases,
                           float(cases - valid))

    def check_fixtures(self) -> CheckResult:
        problems = []
        model = RmlmModel.from_spec(four_node_spec())
        for a in (1.1, 1.3, 2.0):
            order = causal_order(ExactScalings(model), a=a, epsilon=0.0)
            if order.steps != ((2, 3), (1,), (0,)) or order.order != (0, 1, 2, 3):
                problems.append(f"four-node order at a={a}: {order.to_dict()}")
        if not np.array_equal(build_T(4).T, REFERENCE_T4):
            problems.append("transform matrix for d=4 differs from reference")
        atoms = angular_atoms(REFERENCE_ATOMS_MATRIX).atoms
        atom_error = float(np.abs(atoms - REFERENCE_ATOMS).max())
        if atom_error > 0.01:
            problems.append(f"atoms off by {atom_error:.3g}")
        return CheckResult("reference fixtures", not problems, 5, atom_error, "; ".join(problems))

    def check_monte_carlo(self) -> CheckResult:
        cfg = self.config
        model = random_model(cfg.mc_d, seed=cfg.seed)
        X = simulate(model, cfg.mc_n, seed=cfg.seed)
        rng = np.random.default_rng(cfg.seed + 1)
        worst = 0.0
        for _ in range(cfg.mc_descriptors):
            p = random_descriptor(cfg.mc_d, rng, cfg.a)
            worst = max(worst, abs(estimate_scaling(X, cfg.mc_k, p) - exact_scaling(model, p)))
        return CheckResult(f"Monte-Carlo scalings (n={cfg.mc_n}, k={cfg.mc_k})",
                           worst <= 0.05, cfg.mc_descriptors, worst)

    def check_monte_carlo_orders(self) -> CheckResult:
        """Orders from empirical scalings on rank-transformed samples, one model per seed"""
        cfg = self.config
        invalid = []
        for s in range(cfg.mc_order_seeds):
            seed = cfg.seed + s
            model = random_model(cfg.mc_d, seed=seed, well_ordered=False)
            sample = frechet_transform(simulate(model, cfg.mc_n, seed=seed))
            order = causal_order(EmpiricalScalings(sample, cfg.mc_k), cfg.a, cfg.epsilon)
            if not is_valid_order(order, model.matrix):
                invalid.append(seed)
            self.logger.debug(f"seed {seed}: order {order.order}, valid={seed not in invalid}")
        valid = cfg.mc_order_seeds - len(invalid)
        needed = int(np.ceil(cfg.mc_order_pass * cfg.mc_order_seeds - 1e-9))
        detail = f"invalid at seeds {invalid}" if invalid else ""
        return CheckResult(f"Monte-Carlo orders (n={cfg.mc_n}, k={cfg.mc_k})",
                           valid >= needed, cfg.mc_order_seeds, float(len(invalid)), detail)

    def run(self) -> ValidationReport:
        report = ValidationReport(config=self.config.to_dict())
        checks = [
            ("scaling formulas vs atom moments", self.check_scaling_formulas),
            ("rescaling gap identity", self.check_gap_identity),
            ("source and ordered gap battery", self.check_source_battery),
            ("linear and recursive recovery agree", self.check_two_routes),
            ("exact round trip", self.check_round_trip),
            ("exact-scaling orders are valid", self.check_exact_orders),
            ("reference fixtures", self.check_fixtures),
        ]
        if self.config.mc_n > 0:
            checks.append(("Monte-Carlo scalings", self.check_monte_carlo))
            if self.config.mc_order_seeds > 0:
                checks.append(("Monte-Carlo orders", self.check_monte_carlo_orders))
        for name, fn in checks:
            report.checks.append(self._check(name, fn))
        return report


def generate_validation_report(report: ValidationReport) -> str:
    """Plain-text report in the CLI banner style"""
    lines = ["=" * 60, "VALIDATION REPORT", "=" * 60, ""]
    for c in report.checks:
        mark = "✓" if c.passed else "❌"
        lines.append(f"{mark} {c.name}: {c.cases} cases, worst deviation {c.worst:.3g}")
        if c.detail:
            lines.append(f"    {c.detail}")
    lines += ["", f"Overall: {'PASSED' if report.passed else 'FAILED'}", "=" * 60]
    return "\n".join(lines) + "\n"
