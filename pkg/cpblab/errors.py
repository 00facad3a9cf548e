from __future__ import annotations

from typing import Iterable, List, Optional


class CpbLabError(ValueError):
    """Base class for every error raised by cpblab."""

    def to_dict(self) -> dict:
        return {"error": type(self).__name__, "message": str(self), "problems": []}


class ParameterError(CpbLabError):
    pass


class BasisMismatchError(CpbLabError):
    pass


class TruncationError(CpbLabError):
    pass


class ConvergenceError(CpbLabError):
    """Solver failure; info is the LAPACK count of unconverged eigenpairs or off-diagonals when known."""

    def __init__(self, message: str, info: Optional[int] = None):
        if info is not None:
            message = f"{message} (LAPACK info={info})"
        super().__init__(message)
        self.info = info

    def to_dict(self) -> dict:
        d = super().to_dict()
        d["info"] = self.info
        return d


class StepSizeError(CpbLabError):
    pass


class PositivityError(CpbLabError):
    pass


class UsageError(CpbLabError):
    """Command line that argparse could not parse."""


class ConfigError(CpbLabError):
    """All violated preconditions of one run, reported together."""

    def __init__(self, problems: Iterable[str]):
        self.problems: List[str] = list(problems)
        n = len(self.problems)
        super().__init__(f"{n} invalid setting{'s' if n != 1 else ''}: " + "; ".join(self.problems))

    def to_dict(self) -> dict:
        d = super().to_dict()
        d["problems"] = list(self.problems)
        return d


class ValidityWarning(UserWarning):
    """A linearization or small-deviation assumption is being stretched."""


class TruncationWarning(UserWarning):
    """Probability is reaching the top of a truncated basis."""
