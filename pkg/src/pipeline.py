"""
End-to-end estimation run

ingest -> transform -> order -> estimate over the (delta, r) grid ->
centroid selection -> stability -> report. Every stage flushes its own
artifacts, so a failed run leaves everything produced so far plus a FAILED
marker.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .coefficients import (
    build_T,
    build_scaling_vector,
    degenerate_rows,
    estimated_dag,
    postprocess,
    recover_A2_linear,
    recover_A2_recursive,
)
from .config import PipelineConfig
from .errors import ConfigError, IngestError, RmlmError, StageError
from .exporter import DataExporter
from .metrics import DagEnsemble, StabilityScore, centroid, centroid_scores, stability
from .structure import OrderResult, causal_order
from .tail import EmpiricalScalings, frechet_transform
from .tropical import Dag, MaxLinearMatrix, default_names


# 30 industry portfolios: abbreviation -> description
PORTFOLIO_NAMES = {
    "Food": "Food products",
    "Beer": "Beer & Liquor",
    "Smoke": "Tobacco Products",
    "Games": "Recreation",
    "Books": "Printing & Publishing",
    "Hshld": "Consumer Goods",
    "Clths": "Apparel",
    "Hlth": "Healthcare, Medical Equipment, Pharmaceutical Products",
    "Chems": "Chemicals",
    "Txtls": "Textiles",
    "Cnstr": "Construction & Construction Materials",
    "Steel": "Steel Works etc.",
    "FabPr": "Fabricated Products and Machinery",
    "ElcEq": "Electrical Equipment",
    "Autos": "Automobiles & Trucks",
    "Carry": "Aircrafts, Ships & Railroad Equipment",
    "Mines": "Precious Metals, Non-Metallic & Industrial Metal Mining",
    "Coal": "Coal",
    "Oil": "Petroleum and Natural Gas",
    "Util": "Utilities",
    "Telcm": "Communication",
    "Servs": "Personal and Business Services",
    "BusEq": "Business Equipment",
    "Paper": "Business Supplies and Shipping Containers",
    "Trans": "Transportation",
    "Whlsl": "Wholesale",
    "Rtail": "Retail",
    "Meals": "Restaurants, Hotels & Motels",
    "Fin": "Banking, Insurance, Real Estate, Trading",
    "Other": "Everything Else",
}

STAGES = ("ingest", "transform", "order", "estimate", "select", "stability", "write")


def negate_losses(raw: np.ndarray) -> np.ndarray:
    """Loss side of returns, max(-X, 0)"""
    return np.maximum(-np.asarray(raw, dtype=float), 0.0)


def ingest(path, date_column: bool = False, negate: bool = False) -> Tuple[np.ndarray, List[str]]:
    """
    Read a CSV of observations

    Args:
        path: CSV file with a header row
        date_column: Drop the leading date column
        negate: Replace X by max(-X, 0)

    Returns:
        (n x d matrix, column names)
    """
    try:
        frame = pd.read_csv(path, skipinitialspace=True)
    except FileNotFoundError as e:
        raise IngestError(f"input file not found: {path}") from e
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise IngestError(f"cannot parse {path}: {e}") from e

    if date_column:
        frame = frame.iloc[:, 1:]
    if frame.shape[1] < 2:
        raise IngestError(f"need at least 2 numeric columns, found {frame.shape[1]}")

    numeric = frame.apply(pd.to_numeric, errors="coerce")
    bad = numeric.isna() & frame.notna()
    if bad.any().any():
        column = bad.any()[bad.any()].index[0]
        row = int(bad[column].to_numpy().nonzero()[0][0])
        raise IngestError(f"non-numeric value {frame[column].iloc[row]!r} in column "
                          f"'{column}', data row {row + 1}")
    if numeric.isna().any().any():
        column = numeric.columns[numeric.isna().any()][0]
        raise IngestError(f"missing values in column '{column}'")

    X = numeric.to_numpy(dtype=float)
    if negate:
        X = negate_losses(X)
    names = [str(c).strip() for c in frame.columns]
    return X, names


def describe_name(name: str) -> str:
    return f"{name} ({PORTFOLIO_NAMES[name]})" if name in PORTFOLIO_NAMES else name


def delta_tag(delta: float) -> str:
    return f"{delta:g}"


@dataclass
class CentroidChoice:
    delta: float
    base: int
    r: int
    score: float
    dag: Dag
    scores: Dict[int, float]


@dataclass
class RunReport:
    """Everything a run produced, in original node labels"""

    config: Dict
    names: List[str]
    n: int
    order: OrderResult
    matrices: Dict[int, MaxLinearMatrix] = field(default_factory=dict)
    degenerate: Dict[int, List[int]] = field(default_factory=dict)
    dags: Dict[Tuple[float, int], Dag] = field(default_factory=dict)
    centroids: List[CentroidChoice] = field(default_factory=list)
    chosen: Optional[CentroidChoice] = None
    stability: Optional[StabilityScore] = None
    artifacts: List[str] = field(default_factory=list)

    @property
    def d(self) -> int:
        return len(self.names)

    def nshd_table(self) -> pd.DataFrame:
        """Sum of nSHD per (delta, grid, r)"""
        rows = [
            {"delta": c.delta, "base": c.base, "r": r, "nshd_sum": s, "centroid": r == c.r}
            for c in self.centroids
            for r, s in c.scores.items()
        ]
        return pd.DataFrame(rows, columns=["delta", "base", "r", "nshd_sum", "centroid"])

    def to_dict(self) -> Dict:
        names = self.names

        def choice(c: CentroidChoice) -> Dict:
            return {"delta": c.delta, "base": c.base, "r": c.r, "score": c.score,
                    "edges": len(c.dag.edges)}

        return {
            "config": self.config,
            "names": names,
            "n": self.n,
            "d": self.d,
            "order": self.order.to_dict(names),
            "matrices": [
                {"r": r, "file": f"matrices/A_r{r}.json",
                 "degenerate_rows": [names[v] for v in self.degenerate.get(r, [])]}
                for r in sorted(self.matrices)
            ],
            "dags": [
                {"delta": delta, "r": r, "edges": len(dag.edges),
                 "file": f"dags/dag_delta{delta_tag(delta)}_r{r}.json"}
                for (delta, r), dag in sorted(self.dags.items())
            ],
            "centroids": [choice(c) for c in self.centroids],
            "chosen": choice(self.chosen) if self.chosen else None,
            "stability": {
                "size": self.stability.size,
                "edges": self.stability.to_frame(names).to_dict(orient="records"),
            } if self.stability is not None else None,
            "artifacts": sorted(self.artifacts),
        }


def summary_markdown(report: RunReport) -> str:
    """Markdown run summary with tables rendered through tabulate"""
    names = report.names
    lines = ["# Max-linear DAG estimation run", ""]
    lines.append(f"Observations: {report.n}, nodes: {report.d}, "
                 f"order exceedances: {report.order.k}, a = {report.order.a}, "
                 f"epsilon = {report.order.epsilon}")
    lines += ["", "## Causal order", ""]
    steps = pd.DataFrame(
        [{"step": s, "nodes": ", ".join(describe_name(names[v]) for v in step)}
         for s, step in enumerate(report.order.steps, start=1)]
    )
    lines += [steps.to_markdown(index=False), ""]

    lines += ["## Centroids", ""]
    centroids = pd.DataFrame(report.to_dict()["centroids"])
    lines += [centroids.to_markdown(index=False), ""]

    if report.chosen is not None:
        c = report.chosen
        lines += ["## Selected DAG", "",
                  f"delta = {c.delta:g}, r = {c.r} (grid starting at {c.base}), "
                  f"nSHD sum {c.score:.4f}", ""]
        edges = pd.DataFrame(
            [{"from": describe_name(names[j]), "to": describe_name(names[i])}
             for j, i in c.dag.edge_list()],
            columns=["from", "to"],
        )
        lines += [edges.to_markdown(index=False) if not edges.empty else "(no edges)", ""]

    if report.stability is not None:
        lines += ["## Stability over the selected grid", ""]
        table = report.stability.to_frame(names)
        lines += [table.to_markdown(index=False) if not table.empty else "(no edges)", ""]
    return "\n".join(lines)


class PipelineRunner:
    """Runs the estimation workflow and writes its artifacts"""

    def __init__(self, config: PipelineConfig, verbose: bool = False):
        """
        Initialize the runner

        Args:
            config: Run configuration
            verbose: Enable verbose logging (default: False)
        """
        self.config = config
        self.verbose = verbose
        self.current_stage = "ingest"

        log_level = logging.DEBUG if verbose else logging.INFO
        self.logger = logging.getLogger(__name__)
        self.logger.setLevel(log_level)

    @contextmanager
    def _stage(self, name: str):
        self.current_stage = name
        self.logger.info(f"▶ stage: {name}")
        try:
            yield
        except (StageError, ConfigError):
            raise
        except (RmlmError, ValueError, OSError) as e:
            raise StageError(name, str(e)) from e

    def _estimate_one(self, sample: np.ndarray, order: OrderResult, r: int):
        source = EmpiricalScalings(sample, r)
        S = build_scaling_vector(source, order)
        if self.config.route == "linear" and order.d >= 2:
            A2 = recover_A2_linear(S, build_T(order.d))
        else:
            A2 = recover_A2_recursive(S)
        return postprocess(A2, order), degenerate_rows(A2, order)

    def estimate_matrices(self, sample: np.ndarray, order: OrderResult,
                          counts: Sequence[int]) -> List[Tuple[MaxLinearMatrix, List[int]]]:
        """Coefficient matrices for each exceedance count, in the order given"""
        if self.config.jobs > 1:
            with ThreadPoolExecutor(max_workers=self.config.jobs) as pool:
                return list(pool.map(lambda r: self._estimate_one(sample, order, r), counts))
        return [self._estimate_one(sample, order, r) for r in counts]

    def select(self, dags: Dict[Tuple[float, int], Dag]) -> Tuple[List[CentroidChoice], CentroidChoice]:
        """Centroid per (delta, grid) and the overall minimum in grid order"""
        choices = []
        for delta in self.config.delta_grid:
            for base, grid in self.config.grids().items():
                ensemble = DagEnsemble(tuple((dags[(delta, r)], r) for r in grid), delta)
                scores = centroid_scores(ensemble)
                dag, r = centroid(ensemble)
                choices.append(CentroidChoice(delta, base, r, scores[r], dag, scores))
        best = choices[0]
        for c in choices[1:]:
            if c.score < best.score:
                best = c
        return choices, best

    def run(self, raw: Optional[np.ndarray] = None,
            names: Optional[Sequence[str]] = None) -> RunReport:
        """
        Execute the workflow

        Args:
            raw: Observations to use instead of reading config.input
            names: Column names for `raw`

        Returns:
            RunReport; artifacts are on disk under config.output_dir

        Raises:
            StageError: A stage failed; partial artifacts and FAILED are written
            ConfigError: The configuration does not fit the data; FAILED is written too
        """
        cfg = self.config
        exporter = DataExporter(cfg.output_dir, verbose=self.verbose)
        try:
            with self._stage("ingest"):
                if raw is None:
                    if not cfg.input:
                        raise IngestError("no input file configured")
                    raw, names = ingest(cfg.input, cfg.date_column, cfg.negate)
                else:
                    raw = np.asarray(raw, dtype=float)
                    raw = negate_losses(raw) if cfg.negate else raw
                    names = list(names) if names is not None else default_names(raw.shape[1])
                self.logger.info(f"✓ {raw.shape[0]} observations of {raw.shape[1]} variables")
                cfg.validate(n=raw.shape[0])

            with self._stage("transform"):
                sample = frechet_transform(raw)

            with self._stage("order"):
                order = causal_order(EmpiricalScalings(sample, cfg.k_order), cfg.a, cfg.epsilon)
                report = RunReport(config=cfg.to_dict(), names=list(names),
                                   n=raw.shape[0], order=order)
                exporter.save_json(order.to_dict(names), "order.json")
                self.logger.info(f"✓ order found in {len(order.steps)} steps")

            with self._stage("estimate"):
                counts = cfg.all_counts()
                for r, (matrix, degenerate) in zip(counts, self.estimate_matrices(sample, order, counts)):
                    report.matrices[r] = matrix
                    report.degenerate[r] = degenerate
                    exporter.save_matrix(matrix, names, f"matrices/A_r{r}.json",
                                         extra={"k": r, "order": order.to_dict(names)})
                    for delta in cfg.delta_grid:
                        dag = estimated_dag(matrix, delta)
                        report.dags[(delta, r)] = dag
                        exporter.save_dag(dag, names, f"dags/dag_delta{delta_tag(delta)}_r{r}",
                                          extra={"delta": delta, "k": r})
                self.logger.info(f"✓ {len(report.dags)} DAGs over {len(counts)} exceedance counts")

            with self._stage("select"):
                report.centroids, report.chosen = self.select(report.dags)
                exporter.save_csv(report.nshd_table(), "nshd_scores.csv")
                for c in report.centroids:
                    exporter.save_dag(c.dag, names,
                                      f"centroids/centroid_delta{delta_tag(c.delta)}_k{c.base}",
                                      extra={"delta": c.delta, "k": c.r, "score": c.score})

            with self._stage("stability"):
                best = report.chosen
                ensemble = DagEnsemble(
                    tuple((report.dags[(best.delta, r)], r) for r in cfg.k_grid(best.base)),
                    best.delta,
                )
                report.stability = stability(ensemble)
                table = report.stability.to_frame(names)
                exporter.save_csv(table, "stability.csv")

            with self._stage("write"):
                report.artifacts = list(exporter.written) + ["report.json", "summary.md"]
                exporter.save_json(report.to_dict(), "report.json")
                exporter.save_markdown(summary_markdown(report), "summary.md")
        except StageError as e:
            exporter.write_failure(e.stage, e.message)
            raise
        except ConfigError as e:
            exporter.write_failure(self.current_stage, str(e))
            raise
        return report


def run_pipeline(config: PipelineConfig, verbose: bool = False, raw=None, names=None) -> RunReport:
    return PipelineRunner(config, verbose=verbose).run(raw, names)
