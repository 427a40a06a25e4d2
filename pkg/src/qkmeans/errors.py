"""Exception types shared across the package."""


class QKMError(Exception):
    """Base class for all package errors."""


class CapacityError(QKMError, ValueError):
    """A size limit (qubits, permutation bound) was exceeded."""


class DegenerateInputError(QKMError, ValueError):
    """Input cannot be encoded, e.g. a zero-norm vector."""


class PreconditionError(QKMError, ValueError):
    """A state or argument violates an operation's precondition."""


class BoundsError(QKMError, IndexError):
    """A qubit index lies outside the register."""


class AliasError(QKMError, ValueError):
    """Qubit index sets that must be disjoint overlap."""


class ShapeError(QKMError, ValueError):
    """Array dimensions do not agree."""


class DataError(QKMError, ValueError):
    """Malformed or unusable dataset contents."""


class ClassCountError(DataError):
    """Too few classes, or a class is missing from training data."""
