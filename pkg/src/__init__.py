"""
Max-linear DAG estimation

Causal order and coefficient recovery for recursive max-linear models from
heavy-tailed observations, with DAG thresholding, centroid selection and
edge stability scores.
"""

from .errors import RmlmError, StageError
from .projections import MaxProjection
from .tropical import (
    Dag,
    DagSpec,
    MaxLinearMatrix,
    coefficients_from_weights,
    max_times_multiply,
    minimum_dag,
    reachability,
    standardize,
)
from .model import ExactScalings, RmlmModel, angular_atoms, exact_scaling, simulate
from .tail import EmpiricalScalings, estimate_scaling, frechet_transform
from .structure import OrderResult, causal_order, pairwise_direction
from .coefficients import estimate_coefficients, estimated_dag
from .metrics import centroid, nshd, shd, stability
from .config import PipelineConfig
from .exporter import DataExporter
from .pipeline import PipelineRunner, run_pipeline
from .validation import ModelValidator

__all__ = [
    'RmlmError',
    'StageError',
    'MaxProjection',
    'Dag',
    'DagSpec',
    'MaxLinearMatrix',
    'coefficients_from_weights',
    'max_times_multiply',
    'minimum_dag',
    'reachability',
    'standardize',
    'ExactScalings',
    'RmlmModel',
    'angular_atoms',
    'exact_scaling',
    'simulate',
    'EmpiricalScalings',
    'estimate_scaling',
    'frechet_transform',
    'OrderResult',
    'causal_order',
    'pairwise_direction',
    'estimate_coefficients',
    'estimated_dag',
    'centroid',
    'nshd',
    'shd',
    'stability',
    'PipelineConfig',
    'DataExporter',
    'PipelineRunner',
    'run_pipeline',
    'ModelValidator',
]

__version__ = '0.1.0'
