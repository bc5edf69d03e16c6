"""
Exception hierarchy for ssmspec.

All library errors derive from SsmSpecError and also from the closest builtin
(ValueError / ArithmeticError / RuntimeError) so callers can catch either.
"""

from __future__ import annotations

from typing import Sequence


class SsmSpecError(Exception):
    """Root of all ssmspec errors."""


class ZeroSignal(SsmSpecError, ValueError):
    """A signal with zero Euclidean norm cannot be normalized (dead channel)."""


class LengthMismatch(SsmSpecError, ValueError):
    pass


class DimensionMismatch(SsmSpecError, ValueError):
    pass


class LagTooLarge(SsmSpecError, ValueError):
    pass


class BadK(SsmSpecError, ValueError):
    pass


class EmptyInput(SsmSpecError, ValueError):
    pass


class DegenerateSignal(SsmSpecError, ValueError):
    pass


class ConstantInput(SsmSpecError, ValueError):
    """Pearson correlation is undefined because one sequence is constant."""


class RankDeficient(SsmSpecError, ArithmeticError):
    """The FIR regressor matrix is (numerically) rank deficient: the input is not PE enough."""

    def __init__(self, message: str, smallest: float = 0.0, largest: float = 0.0):
        super().__init__(message)
        self.smallest = smallest
        self.largest = largest


class NonFinite(SsmSpecError, ArithmeticError):
    """A NaN or infinity appeared; the training run diverged."""

    def __init__(self, message: str, where: str = ""):
        super().__init__(message)
        self.where = where


class ConfigError(SsmSpecError, ValueError):
    def __init__(self, errors: Sequence[str]):
        self.errors = list(errors)
        head = "; ".join(self.errors[:3])
        more = " …" if len(self.errors) > 3 else ""
        super().__init__(f"Invalid configuration: {head}{more}")


class ExperimentDiverged(SsmSpecError, RuntimeError):
    def __init__(self, failed: int, total: int, tolerance: float):
        self.failed = failed
        self.total = total
        self.tolerance = tolerance
        super().__init__(
            f"{failed}/{total} runs diverged (more than {tolerance:.0%} allowed)"
        )


class InstabilityWarning(UserWarning):
    """Spectral radius of A is >= 1 on a long simulation."""


__all__ = [
    "SsmSpecError",
    "ZeroSignal",
    "LengthMismatch",
    "DimensionMismatch",
    "LagTooLarge",
    "BadK",
    "EmptyInput",
    "DegenerateSignal",
    "ConstantInput",
    "RankDeficient",
    "NonFinite",
    "ConfigError",
    "ExperimentDiverged",
    "InstabilityWarning",
]
