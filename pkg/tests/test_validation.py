#!/usr/bin/env python3
"""Tests for the self-checking harness"""

import sys
from pathlib import Path

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

import numpy as np
import pytest

from src.config import ValidationConfig
from src.model import random_model
from src.validation import (
    CheckResult,
    ModelValidator,
    all_descriptors,
    ancestral_closure,
    generate_validation_report,
)


@pytest.fixture(scope="module")
def small_report():
    config = ValidationConfig(dims=[3, 4], models_per_dim=5, mc_n=0)
    return ModelValidator(config).run()


def test_exact_checks_pass(small_report):
    assert small_report.passed, generate_validation_report(small_report)
    assert len(small_report.checks) == 7
    assert all(c.cases > 0 for c in small_report.checks)


def test_report_formats(small_report):
    text = generate_validation_report(small_report)
    assert "VALIDATION REPORT" in text
    assert "Overall: PASSED" in text
    frame = small_report.to_frame()
    assert list(frame.columns) == ["name", "passed", "cases", "worst", "detail"]
    assert frame["passed"].all()
    data = small_report.to_dict()
    assert data["passed"] is True
    assert data["config"]["models_per_dim"] == 5


def test_fixture_check():
    result = ModelValidator(ValidationConfig(dims=[3], models_per_dim=1)).check_fixtures()
    assert result.passed, result.detail
    assert result.worst <= 0.01


def test_failing_check_is_reported():
    class Broken(ModelValidator):
        def check_round_trip(self):
            raise RuntimeError("boom")

    validator = Broken(ValidationConfig(dims=[3], models_per_dim=1, mc_n=0))
    report = validator.run()
    assert not report.passed
    failed = [c for c in report.checks if not c.passed]
    assert [c.name for c in failed] == ["exact round trip"]
    assert "RuntimeError: boom" in failed[0].detail
    assert "Overall: FAILED" in generate_validation_report(report)


def test_monte_carlo_check_runs():
    config = ValidationConfig(dims=[3], models_per_dim=1, mc_n=20_000, mc_k=500,
                              mc_d=4, mc_descriptors=5)
    result = ModelValidator(config).check_monte_carlo()
    assert result.cases == 5
    assert np.isfinite(result.worst) and result.worst < 0.5


def test_monte_carlo_order_check_counts_seeds():
    config = ValidationConfig(dims=[3], models_per_dim=1, mc_n=20_000, mc_k=500, mc_d=3,
                              mc_order_seeds=3, mc_order_pass=0.0)
    result = ModelValidator(config).check_monte_carlo_orders()
    assert result.cases == 3
    assert result.passed
    assert result.worst in (0.0, 1.0, 2.0, 3.0)
    assert ("invalid at seeds" in result.detail) == (result.worst > 0)


def test_monte_carlo_checks_join_the_run():
    config = ValidationConfig(dims=[3], models_per_dim=1, mc_n=5_000, mc_k=200, mc_d=3,
                              mc_descriptors=2, mc_order_seeds=2, mc_order_pass=0.0)
    names = [c.name for c in ModelValidator(config).run().checks]
    assert len(names) == 9
    assert names[-2].startswith("Monte-Carlo scalings")
    assert names[-1].startswith("Monte-Carlo orders")

    config = config.merged(mc_order_seeds=0)
    assert len(ModelValidator(config).run().checks) == 8


@pytest.mark.slow
def test_monte_carlo_acceptance():
    validator = ModelValidator(ValidationConfig(dims=[3], models_per_dim=1))
    scalings = validator.check_monte_carlo()
    assert scalings.cases == 20 and scalings.worst < 0.08
    orders = validator.check_monte_carlo_orders()
    assert orders.cases == 20
    assert orders.passed, orders.detail


def test_descriptor_enumeration():
    # 7 node sets plus 6 ordered pairs with 2 choices of I each
    assert len(all_descriptors(3, 1.3)) == 7 + 12


def test_ancestral_closure():
    model = random_model(5, seed=0)
    closed = ancestral_closure(model, [0])
    assert closed == {0} | model.ancestors(0)
    assert model.matrix.is_ancestrally_closed(closed)


def test_check_result_defaults():
    result = CheckResult("x", True, 1, 0.0)
    assert result.detail == ""


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
