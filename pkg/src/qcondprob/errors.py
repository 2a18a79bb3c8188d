"""Exception types.

Every validation error carries the offending magnitude in its message so a
failure can be told apart from tolerance noise.
"""


class QCPError(ValueError):
    """Base class for all errors raised by this package."""


class ShapeMismatch(QCPError):
    pass


class NotHermitian(QCPError):
    pass


class NotPositive(QCPError):
    pass


class TraceNotOne(QCPError):
    pass


class NotFaithful(QCPError):
    pass


class NotTracePreserving(QCPError):
    pass


class IncompletePOVM(QCPError):
    pass


class NotConditional(QCPError):
    """Operator violates ``pi >= 0`` or ``Tr_B pi = I_A``."""


class NotOrthonormal(QCPError):
    pass


class NotNormalized(QCPError):
    pass


class NotUnitary(QCPError):
    pass


class NonDiagonalizable(QCPError):
    """Eigenvector matrix is too ill conditioned for a damping basis."""


class NotQC(QCPError):
    pass


class NotCC(QCPError):
    pass


class NotPrimitive(QCPError):
    pass


class ValidationFailed(QCPError):
    """A map failed sampled positivity / trace-preservation checks."""


class ConflictingWitness(QCPError):
    """Spectral flags disagree with the sampled defining tests."""
