"""Engine error hierarchy."""


class EngineError(Exception):
    pass


class ParseError(EngineError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        super().__init__(f"{message} at line {line}, column {column}" if line else message)
        self.line = line
        self.column = column


class ExistenceError(EngineError):
    """Reference to an undeclared predicate or a missing table."""


class InstantiationError(EngineError):
    """A goal was insufficiently instantiated (non-ground tnot)."""


class PermissionViolation(EngineError):
    """Unsupported declaration mixture, or an update racing an incomplete table."""


class InternalStateError(EngineError):
    """Consistency violation that indicates an engine bug."""


class EvaluationTimeout(EngineError):
    """Raised by the engine step loop when a deadline expires."""
