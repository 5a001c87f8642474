"""
Exception hierarchy for max-linear DAG estimation
"""


class RmlmError(Exception):
    """Base class for all errors raised by this package"""


class DimensionError(RmlmError, ValueError):
    """Matrix or vector shapes do not conform"""


class CycleError(RmlmError, ValueError):
    """An edge relation that must be acyclic contains a cycle"""

    def __init__(self, message: str, cycle=None):
        self.cycle = cycle
        super().__init__(message)


class ModelSpecError(RmlmError, ValueError):
    """A model or DAG specification is malformed"""


class InvariantError(RmlmError, ValueError):
    """A coefficient matrix violates a required structural property"""


class DescriptorError(RmlmError, ValueError):
    """A max-projection descriptor violates its preconditions"""


class EstimationError(RmlmError, ValueError):
    """Empirical estimation cannot be carried out on the given sample"""


class IngestError(RmlmError, ValueError):
    """Input data could not be parsed"""


class ConfigError(RmlmError, ValueError):
    """Pipeline configuration is invalid"""


class StageError(RmlmError):
    """Pipeline failure tagged with the stage it occurred in"""

    def __init__(self, stage: str, message: str):
        self.stage = stage
        self.message = message
        super().__init__(f"[{stage}] {message}")
