"""Sparse exact arithmetic in free (non-commutative) polynomial rings.

A monomial is a word: a tuple of letters, each letter ("x", i) or ("z", i)
naming a variable of the ambient alphabet.  A polynomial maps words to
nonzero scalars of its field.  Multiplication concatenates words and
extends bilinearly; nothing commutes except the scalars.

Canonical form: no zero coefficients are stored, so polynomial identity is
exact map equality.  Iteration and serialization order words by plain tuple
comparison (letter by letter, shorter prefix first), which keeps every
serialized artifact byte-stable.

The degree of the zero polynomial is the sentinel None, never an ordinary
integer, so arithmetic on it fails loudly instead of silently.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional

from . import limits
from .errors import DomainError, GuardError
from .fields import Field, Scalar, field_from_name

Letter = tuple[str, int]
Word = tuple[Letter, ...]

EMPTY_WORD: Word = ()


def xvar(i: int) -> Letter:
    if i < 1:
        raise DomainError(f"x-variable index must be >= 1, got {i}")
    return ("x", i)


def zvar(i: int) -> Letter:
    if i < 1:
        raise DomainError(f"z-variable index must be >= 1, got {i}")
    return ("z", i)


def format_word(word: Word) -> str:
    return ".".join(f"{kind}{index}" for kind, index in word)


def parse_letter(token: str) -> Letter:
    kind, digits = token[:1], token[1:]
    if kind not in ("x", "z") or not digits.isdigit() or int(digits) < 1:
        raise DomainError(f"cannot parse variable {token!r}")
    return (kind, int(digits))


def parse_word(text: str) -> Word:
    text = text.strip()
    if not text:
        return EMPTY_WORD
    return tuple(parse_letter(tok.strip()) for tok in text.split("."))


@dataclass(frozen=True)
class Alphabet:
    """Finite variable supply: x1..x{n_x} plus z1..z{n_z}."""

    n_x: int
    n_z: int = 0

    def __post_init__(self):
        if self.n_x < 0 or self.n_z < 0:
            raise DomainError(f"alphabet sizes must be non-negative: {self}")

    def __contains__(self, letter: Letter) -> bool:
        kind, index = letter
        if kind == "x":
            return 1 <= index <= self.n_x
        if kind == "z":
            return 1 <= index <= self.n_z
        return False

    def letters(self) -> Iterable[Letter]:
        for i in range(1, self.n_x + 1):
            yield ("x", i)
        for i in range(1, self.n_z + 1):
            yield ("z", i)


class NcPoly:
    """A non-commutative polynomial over a declared field and alphabet."""

    __slots__ = ("field", "alphabet", "_terms")

    def __init__(self, field: Field, alphabet: Alphabet, terms: Mapping[Word, Scalar] | Iterable[tuple[Word, Scalar]] = ()):
        items = terms.items() if isinstance(terms, Mapping) else terms
        canon: dict[Word, Scalar] = {}
        zero = field.zero()
        for word, coeff in items:
            word = tuple(word)
            for letter in word:
                if letter not in alphabet:
                    raise DomainError(
                        f"letter {format_word((letter,))} outside alphabet "
                        f"(n_x={alphabet.n_x}, n_z={alphabet.n_z})"
                    )
            if len(word) > limits.WORD_GUARD:
                raise GuardError(
                    f"word of length {len(word)} exceeds guard {limits.WORD_GUARD}"
                )
            value = field.add(canon.get(word, zero), field.coerce(coeff))
            if value == zero:
                canon.pop(word, None)
            else:
                canon[word] = value
        self.field = field
        self.alphabet = alphabet
        self._terms = canon

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, field: Field, alphabet: Alphabet) -> "NcPoly":
        return cls(field, alphabet)

    @classmethod
    def constant(cls, field: Field, alphabet: Alphabet, value) -> "NcPoly":
        return cls(field, alphabet, [(EMPTY_WORD, field.coerce(value))])

    @classmethod
    def variable(cls, field: Field, alphabet: Alphabet, letter: Letter) -> "NcPoly":
        return cls(field, alphabet, [((letter,), field.one())])

    @classmethod
    def from_word(cls, field: Field, alphabet: Alphabet, word: Word, coeff=1) -> "NcPoly":
        return cls(field, alphabet, [(tuple(word), field.coerce(coeff))])

    # -- inspection --------------------------------------------------------

    def sorted_terms(self) -> list[tuple[Word, Scalar]]:
        return sorted(self._terms.items())

    def coefficient(self, word: Word) -> Scalar:
        return self._terms.get(tuple(word), self.field.zero())

    def num_terms(self) -> int:
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def degree(self) -> Optional[int]:
        if not self._terms:
            return None
        return max(len(word) for word in self._terms)

    def constant_term(self) -> Scalar:
        return self._terms.get(EMPTY_WORD, self.field.zero())

    def uses_z(self) -> bool:
        return any(kind == "z" for word in self._terms for kind, _ in word)

    # -- ring operations ---------------------------------------------------

    def _check_compatible(self, other: "NcPoly") -> None:
        if self.field != other.field:
            raise DomainError(f"field mismatch: {self.field.name} vs {other.field.name}")
        if self.alphabet != other.alphabet:
            raise DomainError(f"alphabet mismatch: {self.alphabet} vs {other.alphabet}")

    def __add__(self, other):
        if not isinstance(other, NcPoly):
            return NotImplemented
        self._check_compatible(other)
        merged = dict(self._terms)
        zero = self.field.zero()
        for word, coeff in other._terms.items():
            value = self.field.add(merged.get(word, zero), coeff)
            if value == zero:
                merged.pop(word, None)
            else:
                merged[word] = value
        out = NcPoly(self.field, self.alphabet)
        out._terms = merged
        return out

    def __neg__(self):
        out = NcPoly(self.field, self.alphabet)
        out._terms = {w: self.field.neg(c) for w, c in self._terms.items()}
        return out

    def __sub__(self, other):
        if not isinstance(other, NcPoly):
            return NotImplemented
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, NcPoly):
            return NotImplemented
        self._check_compatible(other)
        zero = self.field.zero()
        acc: dict[Word, Scalar] = {}
        for w1, c1 in self._terms.items():
            for w2, c2 in other._terms.items():
                if len(w1) + len(w2) > limits.WORD_GUARD:
                    raise GuardError(
                        f"product word of length {len(w1) + len(w2)} exceeds "
                        f"guard {limits.WORD_GUARD}"
                    )
                word = w1 + w2
                value = self.field.add(acc.get(word, zero), self.field.mul(c1, c2))
                if value == zero:
                    acc.pop(word, None)
                else:
                    acc[word] = value
        out = NcPoly(self.field, self.alphabet)
        out._terms = acc
        return out

    def scale(self, coeff) -> "NcPoly":
        c = self.field.coerce(coeff)
        if c == self.field.zero():
            return NcPoly.zero(self.field, self.alphabet)
        out = NcPoly(self.field, self.alphabet)
        out._terms = {w: self.field.mul(c, v) for w, v in self._terms.items()}
        return out

    # -- degree structure --------------------------------------------------

    def homogeneous_part(self, r: int) -> "NcPoly":
        if r < 0:
            raise DomainError(f"degree must be >= 0, got {r}")
        out = NcPoly(self.field, self.alphabet)
        out._terms = {w: c for w, c in self._terms.items() if len(w) == r}
        return out

    def positive_part(self) -> "NcPoly":
        out = NcPoly(self.field, self.alphabet)
        out._terms = {w: c for w, c in self._terms.items() if w}
        return out

    # -- substitution ------------------------------------------------------

    def substitute(self, mapping: Mapping[Letter, "NcPoly"], target: Alphabet | None = None) -> "NcPoly":
        """Apply the ring homomorphism sending each mapped letter to its image.

        Every letter of the source alphabet must either be mapped or belong
        to the target alphabet; images must share one field and alphabet.
        """
        images = {tuple(k): v for k, v in mapping.items()}
        if target is None:
            if images:
                target = next(iter(images.values())).alphabet
            else:
                target = self.alphabet
        for letter, image in images.items():
            if letter not in self.alphabet:
                raise DomainError(f"mapped letter {format_word((letter,))} not in source alphabet")
            if image.field != self.field:
                raise DomainError("substitution images must share the polynomial's field")
            if image.alphabet != target:
                raise DomainError("substitution images must share one target alphabet")
        for letter in self.alphabet.letters():
            if letter not in images and letter not in target:
                raise DomainError(
                    f"letter {format_word((letter,))} is neither mapped nor in the target alphabet"
                )
        result = NcPoly.zero(self.field, target)
        for word, coeff in self.sorted_terms():
            acc = NcPoly.constant(self.field, target, coeff)
            for letter in word:
                factor = images.get(letter)
                if factor is None:
                    factor = NcPoly.variable(self.field, target, letter)
                acc = acc * factor
            result = result + acc
        return result

    def with_alphabet(self, alphabet: Alphabet) -> "NcPoly":
        """Re-home the polynomial in another alphabet containing its letters."""
        out = NcPoly(self.field, alphabet, self._terms)
        return out

    # -- equality / display -------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, NcPoly):
            return NotImplemented
        return (
            self.field == other.field
            and self.alphabet == other.alphabet
            and self._terms == other._terms
        )

    def __ne__(self, other):
        result = self.__eq__(other)
        if result is NotImplemented:
            return result
        return not result

    def __repr__(self):
        return f"NcPoly({self.field.name}, {self.terms_text()})"

    def terms_text(self) -> str:
        if not self._terms:
            return self.field.format(self.field.zero())
        parts = []
        for word, coeff in self.sorted_terms():
            text = self.field.format(coeff)
            if word:
                text += " * " + format_word(word)
            parts.append(text)
        return " + ".join(parts)


# -- text serialization ------------------------------------------------------


def poly_to_text(p: NcPoly) -> str:
    lines = [
        f"field: {p.field.name}",
        f"x_vars: {p.alphabet.n_x}",
        f"z_vars: {p.alphabet.n_z}",
        p.terms_text(),
    ]
    return "\n".join(lines) + "\n"


def poly_from_text(text: str) -> NcPoly:
    headers: dict[str, str] = {}
    term_line = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        key, sep, value = line.partition(":")
        if sep and key.strip() in ("field", "x_vars", "z_vars"):
            headers[key.strip()] = value.strip()
        else:
            if term_line is not None:
                raise DomainError("polynomial text must have a single term line")
            term_line = line
    if "field" not in headers:
        raise DomainError("polynomial text is missing the 'field:' header")
    field = field_from_name(headers["field"])
    if term_line is None:
        raise DomainError("polynomial text is missing its term line")

    terms: list[tuple[Word, str]] = []
    for chunk in term_line.split(" + "):
        chunk = chunk.strip()
        if not chunk:
            raise DomainError("empty term in polynomial text")
        coeff_text, sep, word_text = chunk.partition("*")
        word = parse_word(word_text) if sep else EMPTY_WORD
        terms.append((word, coeff_text.strip()))

    def header_int(key: str, fallback: int) -> int:
        if key in headers:
            try:
                return int(headers[key])
            except ValueError as exc:
                raise DomainError(f"bad {key} header {headers[key]!r}") from exc
        return fallback

    max_x = max((i for w, _ in terms for k, i in w if k == "x"), default=0)
    max_z = max((i for w, _ in terms for k, i in w if k == "z"), default=0)
    alphabet = Alphabet(header_int("x_vars", max_x), header_int("z_vars", max_z))
    return NcPoly(field, alphabet, terms)
