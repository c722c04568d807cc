"""Resource guards.

WORD_GUARD caps the length of any monomial produced by arithmetic, turning
runaway products into errors instead of memory exhaustion.  The matrix
guard caps how many logical entries a coefficient matrix may span before
dense materialization (rank elimination) is refused; it can be overridden
with the NCCLAB_GUARD_ENTRIES environment variable.
"""

import os

from .errors import DomainError

WORD_GUARD = 64

GUARD_ENV = "NCCLAB_GUARD_ENTRIES"
DEFAULT_MATRIX_GUARD = 1 << 20


def matrix_guard_entries() -> int:
    raw = os.environ.get(GUARD_ENV)
    if raw is None:
        return DEFAULT_MATRIX_GUARD
    try:
        value = int(raw)
    except ValueError as exc:
        raise DomainError(f"{GUARD_ENV} must be an integer, got {raw!r}") from exc
    if value <= 0:
        raise DomainError(f"{GUARD_ENV} must be positive, got {value}")
    return value
