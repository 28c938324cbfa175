"""An embeddable tabled logic-programming engine with automatic incremental
table maintenance under the well-founded semantics."""

from .engine import Engine, ReevalOutcome
from .errors import (
    EngineError,
    EvaluationTimeout,
    ExistenceError,
    InstantiationError,
    InternalStateError,
    ParseError,
    PermissionViolation,
)

__all__ = [
    "Engine",
    "ReevalOutcome",
    "EngineError",
    "EvaluationTimeout",
    "ExistenceError",
    "InstantiationError",
    "InternalStateError",
    "ParseError",
    "PermissionViolation",
]

__version__ = "0.1.0"
