from typing import Optional


class ProbeLBError(Exception):
    pass


class ConfigurationError(ProbeLBError, ValueError):
    pass


class UnstableSystemError(ProbeLBError):
    def __init__(self, message: str, condition: Optional[str] = None) -> None:
        super().__init__(message)
        self.condition: Optional[str] = condition


class InfeasibleError(ProbeLBError):
    pass


class SimulationError(ProbeLBError):
    pass


class VerificationError(ProbeLBError):
    pass
