"""Arithmetic-circuit IR: a DAG of input/const/sum/product nodes, one output.

Sum edges carry scalar labels (default 1); product children are ordered and
multiply left-to-right.  Constants are polynomials over the circuit's z
variables, so a field circuit (z_vars = 0) can only carry plain scalars.

Two evaluation modes are provided: the formal polynomial each node computes
(over the circuit's own x and z variables, nothing commutes), and function
evaluation where every x input takes a value in the polynomial ring over z.

Circuits are immutable after construction; analyses allocate their own memo
tables, so concurrent analyses of one circuit are safe.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from graphlib import CycleError, TopologicalSorter
from typing import Iterable, Sequence, Union

from .errors import CircuitError, DomainError
from .fields import Field, Scalar, field_from_json, field_to_json
from .freealgebra import Alphabet, NcPoly, Word, zvar


@dataclass(frozen=True)
class InputNode:
    id: int
    var: int


@dataclass(frozen=True)
class ConstNode:
    id: int
    value: NcPoly  # over Alphabet(0, n_z); a scalar when n_z == 0


@dataclass(frozen=True)
class SumNode:
    id: int
    args: tuple[tuple[int, Scalar], ...]


@dataclass(frozen=True)
class ProdNode:
    id: int
    left: int
    right: int


Node = Union[InputNode, ConstNode, SumNode, ProdNode]


@dataclass(frozen=True)
class Circuit:
    field: Field
    n_x: int
    n_z: int
    nodes: tuple[Node, ...]
    output: int

    def node(self, node_id: int) -> Node:
        return self.nodes[node_id]

    def alphabet(self) -> Alphabet:
        return Alphabet(self.n_x, self.n_z)

    def z_alphabet(self) -> Alphabet:
        return Alphabet(0, self.n_z)

    def children(self, node_id: int) -> list[int]:
        node = self.nodes[node_id]
        if isinstance(node, SumNode):
            return [child for child, _ in node.args]
        if isinstance(node, ProdNode):
            return [node.left, node.right]
        return []

    def edges(self) -> Iterable[tuple[int, int]]:
        """Yield (child, parent) pairs, one per wire (multi-edges repeat)."""
        for node in self.nodes:
            for child in self.children(node.id):
                yield (child, node.id)

    def size(self) -> int:
        """Number of wires."""
        return sum(1 for _ in self.edges())

    def topo_order(self) -> list[int]:
        sorter: TopologicalSorter = TopologicalSorter()
        for node in self.nodes:
            sorter.add(node.id, *set(self.children(node.id)))
        return list(sorter.static_order())

    def depth(self) -> int:
        """Length in edges of the longest leaf-to-output path."""
        depth: dict[int, int] = {}
        for node_id in self.topo_order():
            kids = self.children(node_id)
            depth[node_id] = 1 + max(depth[k] for k in kids) if kids else 0
        return depth[self.output]


def validate_circuit(field: Field, n_x: int, n_z: int, nodes: Sequence[Node], output: int) -> Circuit:
    if n_x < 0 or n_z < 0:
        raise CircuitError(f"variable counts must be non-negative: x={n_x}, z={n_z}")
    ids = [node.id for node in nodes]
    if not nodes:
        raise CircuitError("circuit has no nodes")
    if sorted(ids) != list(range(len(nodes))):
        raise CircuitError(f"node ids must be dense 0..{len(nodes) - 1}, got {sorted(ids)}")
    by_id = tuple(sorted(nodes, key=lambda node: node.id))

    z_alpha = Alphabet(0, n_z)
    referenced: set[int] = set()
    for node in by_id:
        if isinstance(node, InputNode):
            if not 1 <= node.var <= n_x:
                raise CircuitError(f"node {node.id}: input variable x{node.var} outside 1..{n_x}")
        elif isinstance(node, ConstNode):
            if node.value.field != field:
                raise CircuitError(f"node {node.id}: constant field {node.value.field.name} "
                                   f"differs from circuit field {field.name}")
            if node.value.alphabet != z_alpha:
                raise CircuitError(f"node {node.id}: constant must live over the z alphabet "
                                   f"(0, {n_z}), got {node.value.alphabet}")
        elif isinstance(node, SumNode):
            if len(node.args) < 1:
                raise CircuitError(f"node {node.id}: sum gate needs in-degree >= 1")
            for child, _ in node.args:
                referenced.add(child)
                if not 0 <= child < len(nodes):
                    raise CircuitError(f"node {node.id}: dangling reference to node {child}")
        elif isinstance(node, ProdNode):
            for child in (node.left, node.right):
                referenced.add(child)
                if not 0 <= child < len(nodes):
                    raise CircuitError(f"node {node.id}: dangling reference to node {child}")
        else:
            raise CircuitError(f"node {node.id}: unknown node kind {type(node).__name__}")

    if not 0 <= output < len(nodes):
        raise CircuitError(f"output references missing node {output}")

    circuit = Circuit(field, n_x, n_z, by_id, output)
    try:
        circuit.topo_order()
    except CycleError as exc:
        raise CircuitError(f"cycle detected: {exc.args[1]}") from exc

    sinks = [node.id for node in by_id if node.id not in referenced]
    if sinks != [output]:
        raise CircuitError(
            f"exactly the output may have out-degree 0; output={output}, sinks={sinks}"
        )
    return circuit


class CircuitBuilder:
    """Incrementally allocate nodes with dense ids, then validate."""

    def __init__(self, field: Field, n_x: int, n_z: int = 0):
        self.field = field
        self.n_x = n_x
        self.n_z = n_z
        self._nodes: list[Node] = []

    def _add(self, node: Node) -> int:
        self._nodes.append(node)
        return node.id

    def input(self, var: int) -> int:
        return self._add(InputNode(len(self._nodes), var))

    def const(self, value) -> int:
        if not isinstance(value, NcPoly):
            value = NcPoly.constant(self.field, Alphabet(0, self.n_z), value)
        return self._add(ConstNode(len(self._nodes), value))

    def const_z(self, terms) -> int:
        return self._add(ConstNode(len(self._nodes), NcPoly(self.field, Alphabet(0, self.n_z), terms)))

    def sum(self, args: Iterable) -> int:
        packed = []
        for arg in args:
            if isinstance(arg, tuple):
                child, label = arg
            else:
                child, label = arg, 1
            packed.append((child, self.field.coerce(label)))
        return self._add(SumNode(len(self._nodes), tuple(packed)))

    def prod(self, left: int, right: int) -> int:
        return self._add(ProdNode(len(self._nodes), left, right))

    def build(self, output: int) -> Circuit:
        return validate_circuit(self.field, self.n_x, self.n_z, self._nodes, output)


# -- evaluation ---------------------------------------------------------------


def node_polynomials(circuit: Circuit) -> dict[int, NcPoly]:
    """The formal polynomial computed at every node, freshly memoized."""
    alphabet = circuit.alphabet()
    field = circuit.field
    polys: dict[int, NcPoly] = {}
    for node_id in circuit.topo_order():
        node = circuit.node(node_id)
        if isinstance(node, InputNode):
            polys[node_id] = NcPoly.variable(field, alphabet, ("x", node.var))
        elif isinstance(node, ConstNode):
            polys[node_id] = node.value.with_alphabet(alphabet)
        elif isinstance(node, SumNode):
            acc = NcPoly.zero(field, alphabet)
            for child, label in node.args:
                acc = acc + polys[child].scale(label)
            polys[node_id] = acc
        else:
            polys[node_id] = polys[node.left] * polys[node.right]
    return polys


def compute_polynomial(circuit: Circuit) -> NcPoly:
    return node_polynomials(circuit)[circuit.output]


def evaluate_function(circuit: Circuit, inputs: Sequence[NcPoly]) -> NcPoly:
    """Evaluate the circuit as a function: every x input takes a value in F<Z>."""
    if len(inputs) != circuit.n_x:
        raise DomainError(
            f"missing input assignment: expected {circuit.n_x} values, got {len(inputs)}"
        )
    z_alpha = circuit.z_alphabet()
    field = circuit.field
    for position, value in enumerate(inputs, start=1):
        if value.field != field:
            raise DomainError(f"input x{position} has field {value.field.name}, "
                              f"circuit uses {field.name}")
        if value.alphabet != z_alpha:
            raise DomainError(f"input x{position} must live over the z alphabet {z_alpha}")
    values: dict[int, NcPoly] = {}
    for node_id in circuit.topo_order():
        node = circuit.node(node_id)
        if isinstance(node, InputNode):
            values[node_id] = inputs[node.var - 1]
        elif isinstance(node, ConstNode):
            values[node_id] = node.value
        elif isinstance(node, SumNode):
            acc = NcPoly.zero(field, z_alpha)
            for child, label in node.args:
                acc = acc + values[child].scale(label)
            values[node_id] = acc
        else:
            values[node_id] = values[node.left] * values[node.right]
    return values[circuit.output]


# -- gate classification -------------------------------------------------------

NONSCALAR = "nonscalar"
SCALAR = "scalar"


@dataclass(frozen=True)
class GateCounts:
    nonscalar_products: int
    scalar_products: int
    sum_gates: int
    input_leaves: int
    const_leaves: int
    size: int
    depth: int


@dataclass(frozen=True)
class GateClassification:
    classes: dict[int, str]  # product node id -> NONSCALAR | SCALAR
    counts: GateCounts


def classify_gates(circuit: Circuit, polys: dict[int, NcPoly] | None = None) -> GateClassification:
    """Split product gates by whether both operands have degree >= 1."""
    if polys is None:
        polys = node_polynomials(circuit)
    classes: dict[int, str] = {}
    sums = inputs = consts = 0
    for node in circuit.nodes:
        if isinstance(node, ProdNode):
            left_deg = polys[node.left].degree() or 0
            right_deg = polys[node.right].degree() or 0
            classes[node.id] = NONSCALAR if left_deg >= 1 and right_deg >= 1 else SCALAR
        elif isinstance(node, SumNode):
            sums += 1
        elif isinstance(node, InputNode):
            inputs += 1
        else:
            consts += 1
    counts = GateCounts(
        nonscalar_products=sum(1 for c in classes.values() if c == NONSCALAR),
        scalar_products=sum(1 for c in classes.values() if c == SCALAR),
        sum_gates=sums,
        input_leaves=inputs,
        const_leaves=consts,
        size=circuit.size(),
        depth=circuit.depth(),
    )
    return GateClassification(classes, counts)


# -- JSON serialization ---------------------------------------------------------


def _const_poly_to_json(field: Field, value: NcPoly) -> list:
    out = []
    for word, coeff in value.sorted_terms():
        out.append([field.scalar_to_json(coeff), [index for _, index in word]])
    return out


def _const_poly_from_json(field: Field, n_z: int, payload, node_id: int) -> NcPoly:
    if not isinstance(payload, list):
        raise CircuitError(f"node {node_id}: const poly must be a list of [coeff, [z-indices]]")
    terms = []
    for entry in payload:
        if not (isinstance(entry, list) and len(entry) == 2 and isinstance(entry[1], list)):
            raise CircuitError(f"node {node_id}: bad const term {entry!r}")
        coeff, indices = entry
        word: Word = tuple(zvar(i) for i in indices)
        terms.append((word, coeff))
    try:
        return NcPoly(field, Alphabet(0, n_z), terms)
    except DomainError as exc:
        raise CircuitError(f"node {node_id}: {exc}") from exc


def circuit_to_json(circuit: Circuit) -> dict:
    field = circuit.field
    nodes = []
    for node in circuit.nodes:
        if isinstance(node, InputNode):
            nodes.append({"id": node.id, "kind": "input", "var": node.var})
        elif isinstance(node, ConstNode):
            nodes.append({"id": node.id, "kind": "const",
                          "poly": _const_poly_to_json(field, node.value)})
        elif isinstance(node, SumNode):
            nodes.append({"id": node.id, "kind": "sum",
                          "args": [{"node": child, "scalar": field.scalar_to_json(label)}
                                   for child, label in node.args]})
        else:
            nodes.append({"id": node.id, "kind": "prod", "left": node.left, "right": node.right})
    return {
        "field": field_to_json(field),
        "x_vars": circuit.n_x,
        "z_vars": circuit.n_z,
        "nodes": nodes,
        "output": circuit.output,
    }


def circuit_to_text(circuit: Circuit) -> str:
    return json.dumps(circuit_to_json(circuit), sort_keys=True, indent=2) + "\n"


def parse_circuit(document) -> Circuit:
    """Parse and validate the JSON circuit format."""
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise CircuitError(f"malformed JSON: {exc}") from exc
    if not isinstance(document, dict):
        raise CircuitError("circuit document must be a JSON object")
    missing = {"field", "x_vars", "z_vars", "nodes", "output"} - set(document)
    if missing:
        raise CircuitError(f"circuit document missing keys: {sorted(missing)}")
    field = field_from_json(document["field"])
    n_x, n_z = document["x_vars"], document["z_vars"]
    if not (isinstance(n_x, int) and isinstance(n_z, int)):
        raise CircuitError("x_vars and z_vars must be integers")

    nodes: list[Node] = []
    for raw in document["nodes"]:
        if not isinstance(raw, dict) or "id" not in raw or "kind" not in raw:
            raise CircuitError(f"bad node record {raw!r}")
        node_id, kind = raw["id"], raw["kind"]
        if not isinstance(node_id, int):
            raise CircuitError(f"node id must be an integer, got {node_id!r}")
        if kind == "input":
            if "var" not in raw:
                raise CircuitError(f"node {node_id}: input node needs 'var'")
            nodes.append(InputNode(node_id, raw["var"]))
        elif kind == "const":
            nodes.append(ConstNode(node_id, _const_poly_from_json(field, n_z, raw.get("poly"), node_id)))
        elif kind == "sum":
            args = raw.get("args")
            if not isinstance(args, list):
                raise CircuitError(f"node {node_id}: sum node needs an 'args' list")
            packed = []
            for arg in args:
                if not (isinstance(arg, dict) and "node" in arg):
                    raise CircuitError(f"node {node_id}: bad sum argument {arg!r}")
                try:
                    label = field.coerce(arg.get("scalar", 1))
                except DomainError as exc:
                    raise CircuitError(f"node {node_id}: {exc}") from exc
                packed.append((arg["node"], label))
            nodes.append(SumNode(node_id, tuple(packed)))
        elif kind == "prod":
            if "left" not in raw or "right" not in raw:
                raise CircuitError(f"node {node_id}: prod node needs 'left' and 'right'")
            nodes.append(ProdNode(node_id, raw["left"], raw["right"]))
        else:
            raise CircuitError(f"node {node_id}: unknown kind {kind!r}")

    output = document["output"]
    if not isinstance(output, int):
        raise CircuitError(f"output must be an integer node id, got {output!r}")
    return validate_circuit(field, n_x, n_z, nodes, output)
