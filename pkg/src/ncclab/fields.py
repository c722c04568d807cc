"""Exact scalar backends: arbitrary-precision rationals and prime residue fields.

Scalars are plain values (fractions.Fraction for the rationals, reduced int
residues for GF(p)); the field object supplies arithmetic, parsing and
formatting.  Nothing here touches floating point.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from .errors import DomainError

Scalar = Union[Fraction, int]


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    if p % 2 == 0:
        return p == 2
    f = 3
    while f * f <= p:
        if p % f == 0:
            return False
        f += 2
    return True


@dataclass(frozen=True)
class Rationals:
    """The rational numbers; scalars are Fraction values in lowest terms."""

    @property
    def name(self) -> str:
        return "Q"

    def zero(self) -> Fraction:
        return Fraction(0)

    def one(self) -> Fraction:
        return Fraction(1)

    def coerce(self, value) -> Fraction:
        if isinstance(value, bool):
            raise DomainError("boolean is not a rational scalar")
        if isinstance(value, (int, Fraction)):
            return Fraction(value)
        if isinstance(value, str):
            try:
                return Fraction(value)
            except (ValueError, ZeroDivisionError) as exc:
                raise DomainError(f"cannot parse rational scalar {value!r}") from exc
        raise DomainError(f"cannot coerce {type(value).__name__} into Q")

    def add(self, a: Fraction, b: Fraction) -> Fraction:
        return a + b

    def sub(self, a: Fraction, b: Fraction) -> Fraction:
        return a - b

    def neg(self, a: Fraction) -> Fraction:
        return -a

    def mul(self, a: Fraction, b: Fraction) -> Fraction:
        return a * b

    def inv(self, a: Fraction) -> Fraction:
        if a == 0:
            raise DomainError("division by zero in Q")
        return 1 / a

    def format(self, a: Fraction) -> str:
        return f"{a.numerator}/{a.denominator}"

    def scalar_to_json(self, a: Fraction):
        if a.denominator == 1:
            return a.numerator
        return self.format(a)


@dataclass(frozen=True)
class PrimeField:
    """Integers modulo a prime; scalars are reduced residues in [0, p)."""

    p: int

    def __post_init__(self):
        if not _is_prime(self.p):
            raise DomainError(f"modulus {self.p} is not prime")

    @property
    def name(self) -> str:
        return f"GF({self.p})"

    def zero(self) -> int:
        return 0

    def one(self) -> int:
        return 1 % self.p

    def coerce(self, value) -> int:
        if isinstance(value, bool):
            raise DomainError("boolean is not a field scalar")
        if isinstance(value, int):
            return value % self.p
        if isinstance(value, Fraction):
            if value.denominator % self.p == 0:
                raise DomainError(f"denominator of {value} vanishes in {self.name}")
            return (value.numerator * pow(value.denominator, -1, self.p)) % self.p
        if isinstance(value, str):
            try:
                return self.coerce(Fraction(value))
            except (ValueError, ZeroDivisionError) as exc:
                raise DomainError(f"cannot parse scalar {value!r} in {self.name}") from exc
        raise DomainError(f"cannot coerce {type(value).__name__} into {self.name}")

    def add(self, a: int, b: int) -> int:
        return (a + b) % self.p

    def sub(self, a: int, b: int) -> int:
        return (a - b) % self.p

    def neg(self, a: int) -> int:
        return (-a) % self.p

    def mul(self, a: int, b: int) -> int:
        return (a * b) % self.p

    def inv(self, a: int) -> int:
        if a % self.p == 0:
            raise DomainError(f"division by zero in {self.name}")
        return pow(a, -1, self.p)

    def format(self, a: int) -> str:
        return str(a)

    def scalar_to_json(self, a: int):
        return a


Field = Union[Rationals, PrimeField]

QQ = Rationals()


def GF(p: int) -> PrimeField:
    return PrimeField(p)


def field_to_json(field: Field):
    if isinstance(field, Rationals):
        return "Q"
    return {"GF": field.p}


def field_from_json(obj) -> Field:
    if obj == "Q":
        return QQ
    if isinstance(obj, dict) and set(obj) == {"GF"}:
        p = obj["GF"]
        if not isinstance(p, int):
            raise DomainError(f"GF modulus must be an integer, got {p!r}")
        return GF(p)
    raise DomainError(f"unrecognized field declaration {obj!r}")


_GF_NAME = re.compile(r"^GF\((\d+)\)$")


def field_from_name(name: str) -> Field:
    name = name.strip()
    if name == "Q":
        return QQ
    m = _GF_NAME.match(name)
    if m:
        return GF(int(m.group(1)))
    raise DomainError(f"unrecognized field name {name!r}")
