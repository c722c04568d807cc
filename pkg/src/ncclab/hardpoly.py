"""Generators of full-rank witness polynomials and their naive circuits.

The mirror polynomial sums w followed by its reversal over all words w of
half the target degree, with every coefficient 1.  Its coefficient matrix
at the middle cut has exactly one entry per row, at column reverse(row), a
permutation pattern; full rank n^(d/2) is immediate and certified.

The companion circuit is the obvious one: a balanced product tree per
monomial sharing one input leaf per variable, under a single top sum.  It
has (d-1) * n^(d/2) products of two non-constant operands, a useful upper
anchor when tracing.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product as iter_product

from .circuit import Circuit, CircuitBuilder
from .errors import DomainError, GuardError
from .fields import Field, QQ
from .freealgebra import Alphabet, NcPoly, Word, xvar
from .limits import matrix_guard_entries


@dataclass(frozen=True)
class HardPolySpec:
    n: int
    d: int

    def __post_init__(self):
        if self.n < 2:
            raise DomainError(f"alphabet size must be >= 2, got {self.n}")
        if self.d < 2 or self.d % 2 != 0:
            raise DomainError(f"degree must be even and >= 2, got {self.d}")

    def half_words(self) -> int:
        return self.n ** (self.d // 2)


def _check_guard(spec: HardPolySpec) -> None:
    guard = matrix_guard_entries()
    if spec.half_words() > guard:
        raise GuardError(
            f"mirror polynomial needs {spec.half_words()} monomials "
            f"(n^(d/2) with n={spec.n}, d={spec.d}), above the guard {guard}")


def palindrome_poly(spec: HardPolySpec, field: Field = QQ) -> NcPoly:
    """Sum of w . reverse(w) over all words w of length d/2, coefficients 1."""
    _check_guard(spec)
    alphabet = Alphabet(spec.n, 0)
    one = field.one()
    terms = []
    for indices in iter_product(range(1, spec.n + 1), repeat=spec.d // 2):
        half: Word = tuple(xvar(i) for i in indices)
        terms.append((half + half[::-1], one))
    return NcPoly(field, alphabet, terms)


def palindrome_circuit(spec: HardPolySpec, field: Field = QQ) -> Circuit:
    """The naive circuit: one balanced product tree per monomial, one top sum."""
    _check_guard(spec)
    builder = CircuitBuilder(field, spec.n, 0)
    leaves = {i: builder.input(i) for i in range(1, spec.n + 1)}

    def tree(indices: tuple[int, ...]) -> int:
        if len(indices) == 1:
            return leaves[indices[0]]
        mid = len(indices) // 2
        return builder.prod(tree(indices[:mid]), tree(indices[mid:]))

    roots = []
    for indices in iter_product(range(1, spec.n + 1), repeat=spec.d // 2):
        word = indices + indices[::-1]
        roots.append(tree(word))
    output = builder.sum(roots)
    return builder.build(output)
