"""Translation of circuits over the polynomial ring F<Z> down to the field.

A ring circuit's constant leaves carry polynomials in the z variables; its
formal polynomial therefore lives over both alphabets.  Replacing every
constant leaf by its constant term yields a field circuit with identical
structure (same ids, same gate counts, size and depth) computing exactly
the z-free restriction of the ring circuit's polynomial.

The substitution checker drives the x_i -> z_i^D probe with D above every
relevant degree: terms that mention z keep a z-letter count strictly
between 0 and D per original term, so after substitution their degrees are
not multiples of D and cannot collide with the z-free part.  Decoding the
surviving blocks of z^D back to x words gives a second, independent path
to the equality of the z-free restriction with a target polynomial.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .circuit import (
    Circuit,
    CircuitBuilder,
    ConstNode,
    InputNode,
    ProdNode,
    SumNode,
    classify_gates,
    compute_polynomial,
    evaluate_function,
    node_polynomials,
)
from .errors import DomainError, InvariantViolation
from .freealgebra import Alphabet, NcPoly, Word, format_word, xvar, zvar


def ring_circuit_polynomial(rc: Circuit) -> NcPoly:
    """The formal polynomial over both alphabets, mixing x inputs with the
    z-polynomial constants."""
    return compute_polynomial(rc)


def restrict_g0(g: NcPoly) -> NcPoly:
    """Keep exactly the terms mentioning no z variable; the result lives
    over the x-only alphabet (it equals evaluating every z at 0)."""
    x_alpha = Alphabet(g.alphabet.n_x, 0)
    terms = [(w, c) for w, c in g.sorted_terms()
             if all(kind == "x" for kind, _ in w)]
    return NcPoly(g.field, x_alpha, terms)


def restrict_gprime(g: NcPoly) -> NcPoly:
    """The complementary part: terms in which some z variable appears."""
    terms = [(w, c) for w, c in g.sorted_terms()
             if any(kind == "z" for kind, _ in w)]
    return NcPoly(g.field, g.alphabet, terms)


def translate(rc: Circuit) -> Circuit:
    """Replace each constant leaf by its constant term; verify that the
    structure is untouched and the result computes the z-free restriction."""
    builder = CircuitBuilder(rc.field, rc.n_x, 0)
    for node in rc.nodes:
        if isinstance(node, InputNode):
            builder.input(node.var)
        elif isinstance(node, ConstNode):
            builder.const(node.value.constant_term())
        elif isinstance(node, SumNode):
            builder.sum(node.args)
        else:
            builder.prod(node.left, node.right)
    result = builder.build(rc.output)

    before = classify_gates(rc).counts
    after = classify_gates(result).counts
    same_counts = (
        before.sum_gates == after.sum_gates
        and before.nonscalar_products + before.scalar_products
        == after.nonscalar_products + after.scalar_products
        and before.size == after.size
        and before.depth == after.depth
    )
    if not same_counts:
        raise InvariantViolation("translation changed gate counts, size, or depth")
    if compute_polynomial(result) != restrict_g0(ring_circuit_polynomial(rc)):
        raise InvariantViolation(
            "translated circuit does not compute the z-free restriction")
    return result


# -- the z^D substitution probe ---------------------------------------------------


@dataclass(frozen=True)
class SubstitutionCheck:
    d_exponent: int
    g0: NcPoly
    gprime: NcPoly
    gprime_term_degrees_ok: bool   # every z-term keeps 0 < z-count < D
    gprime_vanishes: bool          # g' becomes 0 under x_i -> z_i^D
    substitution_equal: bool       # g0(z^D) == f(z^D)
    decoded_equal: bool            # decoding z^D blocks recovers f
    direct_equal: bool             # g0 == f as polynomials

    @property
    def functional_equality_confirmed(self) -> bool:
        """The probe instance g(z, z^D) = f(z^D) holds."""
        return self.gprime_vanishes and self.substitution_equal

    def to_json(self) -> dict:
        return {
            "D": self.d_exponent,
            "gprime_term_degrees_ok": self.gprime_term_degrees_ok,
            "gprime_vanishes": self.gprime_vanishes,
            "substitution_equal": self.substitution_equal,
            "decoded_equal": self.decoded_equal,
            "direct_equal": self.direct_equal,
            "confirmed": self.functional_equality_confirmed and self.direct_equal,
        }


def _z_power(field, z_alpha: Alphabet, i: int, d_exp: int) -> NcPoly:
    return NcPoly.from_word(field, z_alpha, tuple(zvar(i) for _ in range(d_exp)))


def decode_z_blocks(p: NcPoly, d_exp: int, n_x: int) -> NcPoly:
    """Invert the x_i -> z_i^D encoding: every word must split into runs of
    identical z letters of length exactly D.  Any remainder is a defect."""
    x_alpha = Alphabet(n_x, 0)
    terms = []
    for word, coeff in p.sorted_terms():
        if len(word) % d_exp != 0:
            raise InvariantViolation(
                f"word {format_word(word)} has length not divisible by {d_exp}")
        decoded: list = []
        for start in range(0, len(word), d_exp):
            block = word[start:start + d_exp]
            kind, index = block[0]
            if kind != "z" or any(letter != ("z", index) for letter in block):
                raise InvariantViolation(
                    f"word {format_word(word)} is not a chain of z^{d_exp} blocks")
            decoded.append(xvar(index))
        terms.append((tuple(decoded), coeff))
    return NcPoly(p.field, x_alpha, terms)


def verify_lemma_substitution(g: NcPoly, f: NcPoly, d_exp: Optional[int] = None) -> SubstitutionCheck:
    """Run the x_i -> z_i^D probe for g over (x, z) against the target f
    over x alone."""
    n_x = g.alphabet.n_x
    n_z = g.alphabet.n_z
    if f.alphabet != Alphabet(n_x, 0):
        raise DomainError(f"target polynomial must live over the x alphabet "
                          f"({n_x}, 0), got {f.alphabet}")
    if f.field != g.field:
        raise DomainError("polynomials must share a field")
    if n_z < n_x:
        raise DomainError(f"need one z variable per x variable: n_x={n_x}, n_z={n_z}")
    g_deg = g.degree() or 0
    f_deg = f.degree() or 0
    if d_exp is None:
        d_exp = max(g_deg, f_deg) + 1
    if d_exp <= g_deg or d_exp <= f_deg:
        raise DomainError(
            f"exponent D={d_exp} must exceed both degrees ({g_deg} and {f_deg})")

    z_alpha = Alphabet(0, n_z)
    field = g.field
    mapping = {xvar(i): _z_power(field, z_alpha, i, d_exp) for i in range(1, n_x + 1)}

    g0 = restrict_g0(g)
    gprime = restrict_gprime(g)

    degrees_ok = True
    for word, _ in gprime.sorted_terms():
        z_count = sum(1 for kind, _ in word if kind == "z")
        if not 0 < z_count < d_exp:
            degrees_ok = False

    gprime_sub = gprime.substitute(mapping, z_alpha)
    g0_sub = g0.with_alphabet(g.alphabet).substitute(mapping, z_alpha)
    f_sub = f.with_alphabet(g.alphabet).substitute(mapping, z_alpha)

    substitution_equal = g0_sub == f_sub
    decoded_equal = decode_z_blocks(g0_sub, d_exp, n_x) == f
    direct_equal = g0 == f

    return SubstitutionCheck(
        d_exponent=d_exp,
        g0=g0,
        gprime=gprime,
        gprime_term_degrees_ok=degrees_ok,
        gprime_vanishes=gprime_sub.is_zero(),
        substitution_equal=substitution_equal,
        decoded_equal=decoded_equal,
        direct_equal=direct_equal,
    )


# -- functional agreement ------------------------------------------------------------


@dataclass(frozen=True)
class AgreementReport:
    sample_results: tuple[bool, ...]
    substitution: SubstitutionCheck
    all_samples_agree: bool
    certified: bool  # probe passed and the z-free restriction equals f

    def to_json(self) -> dict:
        return {
            "samples": list(self.sample_results),
            "all_samples_agree": self.all_samples_agree,
            "substitution": self.substitution.to_json(),
            "certified": self.certified,
        }


def check_function_agreement(rc: Circuit, f: NcPoly,
                             samples: Sequence[Sequence[NcPoly]] = ()) -> AgreementReport:
    """Compare the circuit-as-function against f at the given sample tuples,
    then run the decisive z^D probe on the circuit's formal polynomial."""
    if f.alphabet != Alphabet(rc.n_x, 0):
        raise DomainError("target polynomial must live over the circuit's x alphabet")
    z_alpha = rc.z_alphabet()
    results = []
    for sample in samples:
        got = evaluate_function(rc, list(sample))
        mapping = {xvar(i): h for i, h in enumerate(sample, start=1)}
        want = f.with_alphabet(rc.alphabet()).substitute(mapping, z_alpha)
        results.append(got == want)
    g = ring_circuit_polynomial(rc)
    substitution = verify_lemma_substitution(g, f)
    certified = substitution.functional_equality_confirmed and substitution.direct_equal
    return AgreementReport(
        sample_results=tuple(results),
        substitution=substitution,
        all_samples_agree=all(results),
        certified=certified,
    )
