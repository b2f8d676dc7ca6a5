"""Exception hierarchy for the sharing scheme.

Every failure raised by the library derives from ``MssgasError``. The category
bases (``ParameterError``, ``StructureError`` ...) are what the CLI maps to exit
codes; the leaf classes name the exact violated condition.
"""
from typing import Iterable, Optional, Tuple


class MssgasError(Exception):
    """Base class for all scheme errors."""


# Parameters and arithmetic

class ParameterError(MssgasError, ValueError):
    """Invalid numeric or configuration parameter."""


class NotPrime(ParameterError):
    pass


class TooSmall(ParameterError):
    pass


class DegreeTooSmall(ParameterError):
    pass


class DuplicateAbscissa(ParameterError):
    pass


class InsufficientPoints(ParameterError):
    pass


class IndexOverflow(ParameterError):
    pass


class UnknownHashAlgorithm(ParameterError):
    pass


class MissingGenerator(ParameterError):
    pass


class SecretOutOfRange(ParameterError):
    pass


class FieldExhausted(ParameterError):
    pass


class MissingReplacement(ParameterError):
    pass


class DuplicateShare(ParameterError):
    """Supplied shares collide; ``participants`` must resubmit."""

    def __init__(self, message: str, participants: Iterable[int] = ()):
        super().__init__(message)
        self.participants = tuple(participants)


class DuplicateId(ParameterError):
    pass


# Access structure

class StructureError(MssgasError, ValueError):
    """The access structure is malformed or the referenced part is absent."""


class StructureInvalid(StructureError):
    pass


class DuplicateSet(StructureError):
    pass


class UnknownSet(StructureError):
    pass


class UnknownSecretIndex(StructureError):
    pass


class UnknownTriple(StructureError):
    pass


class OrphanedSecret(StructureError):
    """Removing members or sets would leave a secret with no qualified set."""

    def __init__(self, message: str, secret_index: Optional[int] = None):
        super().__init__(message)
        self.secret_index = secret_index


class CapacityError(MssgasError):
    """The frozen index widths cannot hold another secret or set."""


class CapacityExceeded(CapacityError):
    pass


# Protocol roles

class MembershipError(MssgasError):
    pass


class NotAMember(MembershipError):
    pass


class IncompleteSet(MembershipError):
    """Reconstruction was attempted without every member of the set."""

    def __init__(self, message: str, missing: Iterable[int] = ()):
        super().__init__(message)
        self.missing: Tuple[int, ...] = tuple(sorted(missing))


class VerificationError(MssgasError):
    pass


class VerificationFailed(VerificationError):
    """At least one pseudo-share did not match its published commitment."""

    def __init__(self, message: str, failed: Iterable[int] = ()):
        super().__init__(message)
        self.failed: Tuple[int, ...] = tuple(sorted(failed))


# Files

class SerializationError(MssgasError, ValueError):
    """A bulletin, share or state document could not be parsed."""
