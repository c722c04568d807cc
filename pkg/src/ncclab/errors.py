"""Exception taxonomy shared across the toolkit.

DomainError covers rejected inputs and violated preconditions; the CLI maps
it to exit code 1.  InvariantViolation marks internal defects: conditions
the algebra guarantees can never fail on valid inputs, mapped to exit 2 so
they are maximally loud.
"""


class NcclabError(Exception):
    pass


class DomainError(NcclabError):
    pass


class CircuitError(DomainError):
    """Structural validation failure; the message names the offending node."""


class GuardError(DomainError):
    """A configured resource guard (word length, matrix size) was exceeded."""


class InvariantViolation(NcclabError):
    """An internal consistency check failed; this is a defect, not user error."""
