"""Deterministic pseudo-random circuit corpora for the property suites.

Circuits are grown bottom-up from a seeded generator, tracking each node's
exact polynomial so degree limits are enforced on actual degrees and the
output's positive-degree part is guaranteed nonzero (regeneration draws
more randomness from the same stream, so a seed fully determines the
corpus).  Unreachable nodes are pruned and ids renumbered densely before
validation.

Ring variants start from a field circuit and inject cancelling z noise:
paired constant leaves q and -q hung off sum gates, and constant leaves
whose z part is cancelled by a twin, so the circuit computes the same
function while its constants genuinely mention z.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass
from fractions import Fraction

from .circuit import (
    Circuit,
    CircuitBuilder,
    ConstNode,
    InputNode,
    ProdNode,
    SumNode,
    circuit_to_text,
    classify_gates,
    compute_polynomial,
    node_polynomials,
)
from .errors import DomainError
from .fields import Field, GF, QQ, Rationals
from .freealgebra import Alphabet, NcPoly, poly_to_text, zvar

DEFAULT_FIELDS: tuple[Field, ...] = (QQ, GF(2), GF(101))


@dataclass(frozen=True)
class CorpusLimits:
    max_n: int = 4
    max_degree: int = 6
    max_nodes: int = 40

    def __post_init__(self):
        if self.max_n < 2 or self.max_degree < 1 or self.max_nodes < 4:
            raise DomainError(f"corpus limits out of range: {self}")


def _random_scalar(rng: random.Random, field: Field):
    if isinstance(field, Rationals):
        choices = [1, -1, 2, -2, 3, Fraction(1, 2), Fraction(-3, 2)]
        return Fraction(rng.choice(choices))
    residue = rng.randrange(1, min(field.p, 7))
    return residue


def _prune_rebuild(field: Field, n: int, nodes: list, output: int) -> Circuit:
    """Drop nodes unreachable from the output, renumber densely, validate."""
    reachable: set[int] = set()
    stack = [output]
    while stack:
        node_id = stack.pop()
        if node_id in reachable:
            continue
        reachable.add(node_id)
        kind = nodes[node_id][0]
        if kind == "sum":
            stack.extend(child for child, _ in nodes[node_id][1])
        elif kind == "prod":
            stack.extend(nodes[node_id][1])
    builder = CircuitBuilder(field, n, 0)
    mapping: dict[int, int] = {}
    for node_id in sorted(reachable):
        kind, payload = nodes[node_id]
        if kind == "input":
            mapping[node_id] = builder.input(payload)
        elif kind == "const":
            mapping[node_id] = builder.const(payload)
        elif kind == "sum":
            mapping[node_id] = builder.sum(
                (mapping[child], label) for child, label in payload)
        else:
            mapping[node_id] = builder.prod(mapping[payload[0]], mapping[payload[1]])
    return builder.build(mapping[output])


def random_circuit(rng: random.Random, field: Field,
                   limits: CorpusLimits = CorpusLimits()) -> Circuit:
    """One random field circuit with a nonzero positive-degree part."""
    for _ in range(200):
        n = rng.randint(2, limits.max_n)
        alphabet = Alphabet(n, 0)
        target = rng.randint(8, limits.max_nodes)

        nodes: list = []
        polys: list[NcPoly] = []

        def add(kind, payload, poly) -> int:
            nodes.append((kind, payload))
            polys.append(poly)
            return len(nodes) - 1

        for var in range(1, n + 1):
            add("input", var, NcPoly.variable(field, alphabet, ("x", var)))
        for _ in range(rng.randint(0, 2)):
            value = field.coerce(rng.choice([0, 1, 2, -1, 3]))
            add("const", value, NcPoly.constant(field, alphabet, value))

        while len(nodes) < target:
            if rng.random() < 0.5:
                width = rng.randint(1, 3)
                args = []
                for _ in range(width):
                    args.append((rng.randrange(len(nodes)), _random_scalar(rng, field)))
                poly = NcPoly.zero(field, alphabet)
                for child, label in args:
                    poly = poly + polys[child].scale(label)
                add("sum", tuple(args), poly)
            else:
                candidates = [
                    (left, right)
                    for left in range(len(nodes))
                    for right in range(len(nodes))
                    if (polys[left].degree() or 0) + (polys[right].degree() or 0)
                    <= limits.max_degree
                ]
                if not candidates:
                    continue
                left, right = candidates[rng.randrange(len(candidates))]
                add("prod", (left, right), polys[left] * polys[right])

        output = len(nodes) - 1
        if polys[output].positive_part().is_zero():
            continue
        circuit = _prune_rebuild(field, n, nodes, output)
        if len(circuit.nodes) < 3:
            continue
        return circuit
    raise DomainError("corpus generation failed to find a usable circuit")


def generate_corpus(seed: int, count: int,
                    limits: CorpusLimits = CorpusLimits(),
                    fields: tuple[Field, ...] = DEFAULT_FIELDS) -> list[Circuit]:
    rng = random.Random(seed)
    return [random_circuit(rng, fields[i % len(fields)], limits) for i in range(count)]


def corpus_ledger(circuits: list[Circuit]) -> dict:
    """Stable digest of the corpus: per-circuit polynomial and gate data."""
    entries = []
    for index, circuit in enumerate(circuits):
        poly = compute_polynomial(circuit)
        counts = classify_gates(circuit).counts
        entries.append({
            "index": index,
            "field": circuit.field.name,
            "n": circuit.n_x,
            "nodes": len(circuit.nodes),
            "size": counts.size,
            "depth": counts.depth,
            "nonscalar_products": counts.nonscalar_products,
            "scalar_products": counts.scalar_products,
            "degree": poly.degree(),
            "poly_sha256": hashlib.sha256(poly_to_text(poly).encode()).hexdigest(),
            "circuit_sha256": hashlib.sha256(circuit_to_text(circuit).encode()).hexdigest(),
        })
    blob = json.dumps(entries, sort_keys=True).encode()
    return {"entries": entries, "ledger_sha256": hashlib.sha256(blob).hexdigest()}


# -- ring circuits with cancelling z noise ------------------------------------------


def _random_z_poly(rng: random.Random, field: Field, n_z: int) -> NcPoly:
    alphabet = Alphabet(0, n_z)
    terms = []
    for _ in range(rng.randint(1, 3)):
        length = rng.randint(1, 2)
        word = tuple(zvar(rng.randint(1, n_z)) for _ in range(length))
        terms.append((word, _random_scalar(rng, field)))
    poly = NcPoly(field, alphabet, terms)
    if poly.is_zero():
        poly = NcPoly.variable(field, alphabet, zvar(1))
    return poly


def make_noisy_ring_circuit(rng: random.Random, base: Circuit) -> Circuit:
    """Lift a field circuit to a ring circuit computing the same function,
    by attaching z-noise constants that cancel exactly."""
    if base.n_z != 0:
        raise DomainError("noise injection starts from a field circuit")
    n_z = base.n_x
    field = base.field
    z_alpha = Alphabet(0, n_z)

    # mutable descriptors: ("input", var) | ("const", NcPoly) | ("sum", [(child, label)]) | ("prod", (l, r))
    nodes: list[list] = []
    for node in base.nodes:
        if isinstance(node, InputNode):
            nodes.append(["input", node.var])
        elif isinstance(node, ConstNode):
            nodes.append(["const", node.value.with_alphabet(z_alpha)])
        elif isinstance(node, SumNode):
            nodes.append(["sum", list(node.args)])
        else:
            nodes.append(["prod", (node.left, node.right)])

    output = base.output
    sums = [i for i, (kind, _) in enumerate(nodes) if kind == "sum"]
    if not sums:
        nodes.append(["sum", [(output, field.one())]])
        output = len(nodes) - 1
        sums.append(output)

    def fresh_const(poly: NcPoly) -> int:
        nodes.append(["const", poly])
        return len(nodes) - 1

    # pattern 1: paired leaves q, -q hung off a sum with opposite labels
    for sum_id in sums:
        if rng.random() < 0.75:
            noise = _random_z_poly(rng, field, n_z)
            label = field.coerce(_random_scalar(rng, field))
            nodes[sum_id][1].append((fresh_const(noise), label))
            nodes[sum_id][1].append((fresh_const(noise), field.neg(label)))

    # pattern 2: fold z noise into a scalar constant feeding a sum, with a
    # cancelling -q twin on the same sum; only safe for leaves with exactly
    # one consumer edge
    refcount: dict[int, int] = {}
    for kind, payload in nodes:
        if kind == "sum":
            for child, _ in payload:
                refcount[child] = refcount.get(child, 0) + 1
        elif kind == "prod":
            for child in payload:
                refcount[child] = refcount.get(child, 0) + 1
    for sum_id in sums:
        for child, label in list(nodes[sum_id][1]):
            kind, payload = nodes[child][0], nodes[child][1]
            if (kind == "const" and refcount.get(child) == 1
                    and not payload.uses_z() and rng.random() < 0.5):
                q = _random_z_poly(rng, field, n_z)
                nodes[child][1] = payload + q
                nodes[sum_id][1].append((fresh_const(-q), label))
                break

    builder = CircuitBuilder(field, base.n_x, n_z)
    for kind, payload in nodes:
        if kind == "input":
            builder.input(payload)
        elif kind == "const":
            builder.const(payload)
        elif kind == "sum":
            builder.sum(payload)
        else:
            builder.prod(*payload)
    return builder.build(output)
