"""
Artifact export for orders, matrices, DAGs and run reports
"""

import json
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from .tropical import Dag, MaxLinearMatrix


class DataExporter:
    """Writes every run artifact below one output directory"""

    def __init__(self, output_dir: str = "output", verbose: bool = False):
        """
        Initialize the exporter

        Args:
            output_dir: Directory to save output files (default: "output")
            verbose: Enable verbose logging (default: False)
        """
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.written: List[str] = []

        log_level = logging.DEBUG if verbose else logging.INFO
        self.logger = logging.getLogger(__name__)
        self.logger.setLevel(log_level)

    def _path(self, filename: str) -> Path:
        filepath = self.output_dir / filename
        filepath.parent.mkdir(parents=True, exist_ok=True)
        if filename not in self.written:
            self.written.append(filename)
        return filepath

    def save_json(self, data: Union[Dict, List], filename: str) -> Path:
        """
        Save a JSON document with sorted keys

        Args:
            data: JSON-serialisable object
            filename: Path relative to the output directory
        """
        filepath = self._path(filename)
        with open(filepath, 'w', encoding='utf-8') as f:
            json.dump(data, f, indent=2, sort_keys=True, ensure_ascii=False)
            f.write("\n")
        self.logger.debug(f"✓ Saved JSON to {filepath}")
        return filepath

    def save_csv(self, frame: Union[pd.DataFrame, List[Dict]], filename: str,
                 index: bool = False) -> Path:
        """
        Save a table to CSV

        Args:
            frame: DataFrame or list of row dictionaries
            filename: Path relative to the output directory
            index: Write the frame index (default: False)
        """
        if not isinstance(frame, pd.DataFrame):
            frame = pd.DataFrame(frame)
        if frame.empty:
            self.logger.warning(f"Empty table written to {filename}")
        filepath = self._path(filename)
        frame.to_csv(filepath, index=index)
        self.logger.debug(f"✓ Saved CSV to {filepath}")
        return filepath

    def save_sample(self, sample: np.ndarray, names: Sequence[str], filename: str) -> Path:
        """Observation matrix as CSV with node names as header"""
        return self.save_csv(pd.DataFrame(sample, columns=list(names)), filename)

    def save_matrix(self, matrix: MaxLinearMatrix, names: Sequence[str], filename: str,
                    extra: Optional[Dict] = None) -> Path:
        data = matrix.to_dict(names)
        if extra:
            data.update(extra)
        return self.save_json(data, filename)

    def save_dag(self, dag: Dag, names: Sequence[str], stem: str,
                 extra: Optional[Dict] = None) -> Path:
        """
        Save a DAG as JSON and DOT

        Args:
            dag: DAG to save
            names: Node name table
            stem: Path without extension, relative to the output directory
            extra: Additional fields for the JSON document
        """
        data = dag.to_dict(names)
        if extra:
            data.update(extra)
        self.save_json(data, f"{stem}.json")
        filepath = self._path(f"{stem}.dot")
        with open(filepath, 'w', encoding='utf-8') as f:
            f.write(dag.to_dot(names, title=Path(stem).name))
        return filepath

    def save_markdown(self, text: str, filename: str = "summary.md") -> Path:
        filepath = self._path(filename)
        with open(filepath, 'w', encoding='utf-8') as f:
            f.write(text)
        self.logger.info(f"✓ Saved Markdown to {filepath}")
        return filepath

    def write_failure(self, stage: str, message: str) -> Path:
        """FAILED marker naming the stage that broke the run"""
        filepath = self._path("FAILED")
        with open(filepath, 'w', encoding='utf-8') as f:
            f.write(f"stage: {stage}\nmessage: {message}\n")
        self.logger.error(f"Run failed in stage '{stage}', marker written to {filepath}")
        return filepath

    def print_summary(self, report: Dict):
        """
        Print the end-of-run summary

        Args:
            report: Run report dictionary as produced by RunReport.to_dict
        """
        chosen = report["chosen"]
        print("\n" + "="*60)
        print("RUN SUMMARY")
        print("="*60)
        print(f"\nObservations: {report['n']}  Nodes: {report['d']}")
        print(f"Causal order ({len(report['order']['steps'])} steps):")
        for s, step in enumerate(report['order']['steps'], start=1):
            print(f"  {s:>2}. {', '.join(step)}")

        print("\n--- Centroids per (delta, grid) ---")
        frame = pd.DataFrame(report["centroids"])[["delta", "base", "r", "score", "edges"]]
        print(frame.to_string(index=False))

        print(f"\nSelected: delta={chosen['delta']:g}, r={chosen['r']} "
              f"(grid K_{chosen['base']}, nSHD sum {chosen['score']:.4f}, "
              f"{chosen['edges']} edges)")

        stable = [e for e in report["stability"]["edges"] if e["count"] == report["stability"]["size"]]
        print(f"Edges present in all {report['stability']['size']} members: {len(stable)}")
        print(f"Artifacts written: {len(report['artifacts'])} files in {self.output_dir}")
        print("\n" + "="*60 + "\n")
