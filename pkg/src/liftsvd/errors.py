"""Exception hierarchy shared by all liftsvd modules."""

import numpy as np


class LiftSVDError(Exception):
    pass


class ExprSyntaxError(LiftSVDError):
    """Malformed expression text. ``offset`` is a byte offset into the source."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class DomainError(LiftSVDError, ArithmeticError):
    """Evaluation left the real domain (division by zero, sqrt of a negative...)."""

    def __init__(self, message, component=None):
        if component is not None:
            message = f"component {component}: {message}"
        super().__init__(message)
        self.component = component


class SpecError(LiftSVDError, ValueError):
    """An invalid FunctionSpec or configuration."""


class BoundViolationError(LiftSVDError):
    """A declared norm bound is too small: the admissibility sum reached 1 at ``witness``."""

    def __init__(self, witness, S):
        self.witness = np.asarray(witness, dtype=float)
        self.S = float(S)
        super().__init__(
            f"declared norm bounds violated at x={self.witness.tolist()} (S={self.S!r} >= 1)"
        )


class InadmissibleSigmaError(LiftSVDError, AssertionError):
    pass


class EstimationError(LiftSVDError):
    pass


class NotUnitaryError(LiftSVDError, ValueError):
    pass
