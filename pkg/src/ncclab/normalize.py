"""Pipeline of semantics-preserving passes over field circuits.

Given a circuit computing f with a nonzero constant-free part, the pipeline
produces a circuit computing exactly f minus its constant term, with:

  P1  no products with a degree-0 operand; scalars appear only as sum-edge
      labels (and no constant leaves remain at all)
  P2  every node computes a nonzero polynomial with zero constant term
  P3  every edge leaving a leaf enters a sum gate
  P4  the output gate is a sum gate
  P5  sum and product gates alternate along every path

The count of products of two non-constant operands never increases.

Passes run in a fixed order on a mutable working graph: node splitting into
constant/positive parts, output selection, constant folding to leaves,
pruning, scalar-product elimination into edge labels, constant-leaf removal,
alternation repair, and a final prune.  The working graph permits labels on
arbitrary edges mid-flight; the exported circuit is back in the core IR.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field
from graphlib import TopologicalSorter
from typing import Optional

from .circuit import (
    Circuit,
    CircuitBuilder,
    ConstNode,
    InputNode,
    ProdNode,
    SumNode,
    classify_gates,
    compute_polynomial,
    node_polynomials,
)
from .errors import DomainError, InvariantViolation
from .fields import Field, Scalar
from .freealgebra import Alphabet, NcPoly


# -- working graph -------------------------------------------------------------


@dataclass
class _WNode:
    kind: str  # "input" | "const" | "sum" | "prod"
    var: int = 0
    value: Optional[Scalar] = None
    children: list[list] = dataclass_field(default_factory=list)  # [child_id, label]


class _Graph:
    def __init__(self, field: Field, n_x: int):
        self.field = field
        self.n_x = n_x
        self.nodes: dict[int, _WNode] = {}
        self.output: int = -1
        self.provenance: dict[int, tuple[Optional[int], str]] = {}
        self._next = 0

    @classmethod
    def from_circuit(cls, circuit: Circuit) -> "_Graph":
        g = cls(circuit.field, circuit.n_x)
        one = circuit.field.one()
        for node in circuit.nodes:
            if isinstance(node, InputNode):
                wnode = _WNode("input", var=node.var)
            elif isinstance(node, ConstNode):
                wnode = _WNode("const", value=node.value.constant_term())
            elif isinstance(node, SumNode):
                wnode = _WNode("sum", children=[[c, label] for c, label in node.args])
            else:
                wnode = _WNode("prod", children=[[node.left, one], [node.right, one]])
            g.nodes[node.id] = wnode
            g.provenance[node.id] = (node.id, "0")
        g.output = circuit.output
        g._next = len(circuit.nodes)
        return g

    def new_node(self, wnode: _WNode, origin: Optional[int], step: str) -> int:
        node_id = self._next
        self._next += 1
        self.nodes[node_id] = wnode
        self.provenance[node_id] = (origin, step)
        return node_id

    def topo(self) -> list[int]:
        sorter: TopologicalSorter = TopologicalSorter()
        for node_id, wnode in self.nodes.items():
            sorter.add(node_id, *{child for child, _ in wnode.children})
        return list(sorter.static_order())

    def parents(self) -> dict[int, list[int]]:
        table: dict[int, list[int]] = {node_id: [] for node_id in self.nodes}
        for node_id, wnode in self.nodes.items():
            for child, _ in wnode.children:
                table[child].append(node_id)
        return table

    def polynomials(self) -> dict[int, NcPoly]:
        """Label-aware evaluation: an edge with label c contributes c times
        its child's polynomial, on sum and product edges alike."""
        alphabet = Alphabet(self.n_x, 0)
        fld = self.field
        polys: dict[int, NcPoly] = {}
        for node_id in self.topo():
            wnode = self.nodes[node_id]
            if wnode.kind == "input":
                polys[node_id] = NcPoly.variable(fld, alphabet, ("x", wnode.var))
            elif wnode.kind == "const":
                polys[node_id] = NcPoly.constant(fld, alphabet, wnode.value)
            elif wnode.kind == "sum":
                acc = NcPoly.zero(fld, alphabet)
                for child, label in wnode.children:
                    acc = acc + polys[child].scale(label)
                polys[node_id] = acc
            else:
                (lc, ll), (rc, rl) = wnode.children
                polys[node_id] = polys[lc].scale(ll) * polys[rc].scale(rl)
        return polys

    def to_circuit(self) -> tuple[Circuit, dict[int, int]]:
        """Renumber surviving nodes densely (ascending old id) and validate."""
        from .circuit import validate_circuit

        one = self.field.one()
        z_alpha = Alphabet(0, 0)
        mapping = {old: new for new, old in enumerate(sorted(self.nodes))}
        records: list = []
        for old_id, new_id in mapping.items():
            wnode = self.nodes[old_id]
            if wnode.kind == "input":
                records.append(InputNode(new_id, wnode.var))
            elif wnode.kind == "const":
                records.append(ConstNode(
                    new_id, NcPoly.constant(self.field, z_alpha, wnode.value)))
            elif wnode.kind == "sum":
                records.append(SumNode(new_id, tuple(
                    (mapping[child], label) for child, label in wnode.children)))
            else:
                (lc, ll), (rc, rl) = wnode.children
                if ll != one or rl != one:
                    raise InvariantViolation(
                        f"node {old_id}: product edges still carry labels at export"
                    )
                records.append(ProdNode(new_id, mapping[lc], mapping[rc]))
        circuit = validate_circuit(self.field, self.n_x, 0, records, mapping[self.output])
        return circuit, mapping


# -- pipeline steps -------------------------------------------------------------


def _split_nodes(g: _Graph, circuit: Circuit, polys: dict[int, NcPoly]) -> dict[int, tuple[int, int]]:
    """Split every node v into a constant part and a positive-degree part.

    Returns old id -> (constant-part id, positive-part id).  For a product
    of two non-constant operands, the positive part is a one-sum/three-
    product gadget of which exactly one product is non-scalar.
    """
    fld = g.field
    one = fld.one()
    zero = fld.zero()
    split: dict[int, tuple[int, int]] = {}
    for old_id in circuit.topo_order():
        node = circuit.node(old_id)
        if isinstance(node, InputNode):
            z_id = g.new_node(_WNode("const", value=zero), old_id, "1")
            p_id = g.new_node(_WNode("input", var=node.var), old_id, "1")
        elif isinstance(node, ConstNode):
            z_id = g.new_node(_WNode("const", value=node.value.constant_term()), old_id, "1")
            p_id = g.new_node(_WNode("const", value=zero), old_id, "1")
        elif isinstance(node, SumNode):
            z_id = g.new_node(
                _WNode("sum", children=[[split[c][0], label] for c, label in node.args]),
                old_id, "1")
            p_id = g.new_node(
                _WNode("sum", children=[[split[c][1], label] for c, label in node.args]),
                old_id, "1")
        else:
            l0, l1 = split[node.left]
            r0, r1 = split[node.right]
            z_id = g.new_node(_WNode("prod", children=[[l0, one], [r0, one]]), old_id, "1")
            left_pos = polys[node.left].positive_part()
            right_pos = polys[node.right].positive_part()
            if left_pos.is_zero() or right_pos.is_zero():
                # scalar product: pair the constant side with the other's
                # positive part (either works when both sides are constant)
                if left_pos.is_zero():
                    p_id = g.new_node(_WNode("prod", children=[[l0, one], [r1, one]]), old_id, "1")
                else:
                    p_id = g.new_node(_WNode("prod", children=[[l1, one], [r0, one]]), old_id, "1")
            else:
                s1 = g.new_node(_WNode("prod", children=[[l0, one], [r1, one]]), old_id, "1")
                s2 = g.new_node(_WNode("prod", children=[[r0, one], [l1, one]]), old_id, "1")
                ns = g.new_node(_WNode("prod", children=[[l1, one], [r1, one]]), old_id, "1")
                p_id = g.new_node(
                    _WNode("sum", children=[[s1, one], [s2, one], [ns, one]]), old_id, "1")
        split[old_id] = (z_id, p_id)
    return split


def _set_output(g: _Graph, pos_output: int) -> None:
    if g.nodes[pos_output].kind == "sum":
        g.output = pos_output
    else:
        g.output = g.new_node(
            _WNode("sum", children=[[pos_output, g.field.one()]]), None, "2")


def _fold_constant_nodes(g: _Graph) -> None:
    """Replace every node whose polynomial has no positive part by a
    constant leaf carrying that value (step 3.1)."""
    polys = g.polynomials()
    for node_id, wnode in g.nodes.items():
        poly = polys[node_id]
        if poly.positive_part().is_zero() and wnode.kind != "const":
            g.nodes[node_id] = _WNode("const", value=poly.constant_term())
            origin, _ = g.provenance[node_id]
            g.provenance[node_id] = (origin, "3.1")


def _prune_unreachable(g: _Graph) -> None:
    reachable: set[int] = set()
    stack = [g.output]
    while stack:
        node_id = stack.pop()
        if node_id in reachable:
            continue
        reachable.add(node_id)
        stack.extend(child for child, _ in g.nodes[node_id].children)
    for node_id in list(g.nodes):
        if node_id not in reachable:
            del g.nodes[node_id]


def _fold_scalar_products(g: _Graph) -> None:
    """Eliminate products with a constant-leaf operand by moving the scalar
    onto the edges toward each parent, then push any label resting on a
    product input up onto the product's outgoing edges (step 3.3)."""
    fld = g.field
    one = fld.one()
    for node_id in g.topo():
        wnode = g.nodes.get(node_id)
        if wnode is None or wnode.kind != "prod":
            continue
        (lc, ll), (rc, rl) = wnode.children
        left_const = g.nodes[lc].kind == "const"
        right_const = g.nodes[rc].kind == "const"
        if not (left_const or right_const):
            continue
        if left_const and right_const:
            raise InvariantViolation(
                f"node {node_id}: product of two constants survived constant folding")
        if left_const:
            scalar = fld.mul(fld.mul(g.nodes[lc].value, ll), rl)
            survivor, leaf = rc, lc
        else:
            scalar = fld.mul(fld.mul(g.nodes[rc].value, rl), ll)
            survivor, leaf = lc, rc
        parents = g.parents()
        for parent in set(parents[node_id]):
            for entry in g.nodes[parent].children:
                if entry[0] == node_id:
                    entry[0] = survivor
                    entry[1] = fld.mul(entry[1], scalar)
        del g.nodes[node_id]
        if not any(leaf in (c for c, _ in w.children) for w in g.nodes.values()):
            if leaf != g.output:
                g.nodes.pop(leaf, None)

    # push labels off product inputs, bottom up
    parents = g.parents()
    for node_id in g.topo():
        wnode = g.nodes.get(node_id)
        if wnode is None or wnode.kind != "prod":
            continue
        (lc, ll), (rc, rl) = wnode.children
        carried = fld.mul(ll, rl)
        if carried == one:
            continue
        wnode.children = [[lc, one], [rc, one]]
        for parent in set(parents[node_id]):
            for entry in g.nodes[parent].children:
                if entry[0] == node_id:
                    entry[1] = fld.mul(entry[1], carried)


def _drop_constant_leaves(g: _Graph) -> None:
    """Remove constant leaves and their edges (step 3.4); after scalar-
    product folding these edges all enter sum gates and their total
    contribution at each sum is zero."""
    const_ids = {node_id for node_id, w in g.nodes.items() if w.kind == "const"}
    if g.output in const_ids:
        raise InvariantViolation("output degenerated to a constant leaf")
    for node_id, wnode in g.nodes.items():
        if wnode.kind == "prod":
            if any(child in const_ids for child, _ in wnode.children):
                raise InvariantViolation(
                    f"node {node_id}: product still fed by a constant leaf")
        elif wnode.kind == "sum":
            kept = [entry for entry in wnode.children if entry[0] not in const_ids]
            if not kept:
                raise InvariantViolation(f"node {node_id}: sum gate lost all children")
            wnode.children = kept
    for node_id in const_ids:
        del g.nodes[node_id]


def _alternate_gates(g: _Graph) -> None:
    """Insert unary sums under products fed by leaves or products, then
    contract sum-over-sum edges, multiplying labels (step 4)."""
    one = g.field.one()
    for node_id in list(g.nodes):
        wnode = g.nodes[node_id]
        if wnode.kind != "prod":
            continue
        for entry in wnode.children:
            child_kind = g.nodes[entry[0]].kind
            if child_kind in ("input", "prod"):
                buffer = g.new_node(
                    _WNode("sum", children=[[entry[0], one]]), entry[0], "4")
                entry[0] = buffer
    for node_id in g.topo():
        wnode = g.nodes.get(node_id)
        if wnode is None or wnode.kind != "sum":
            continue
        flattened: list[list] = []
        for child, label in wnode.children:
            child_node = g.nodes[child]
            if child_node.kind == "sum":
                for grandchild, inner in child_node.children:
                    flattened.append([grandchild, g.field.mul(label, inner)])
            else:
                flattened.append([child, label])
        wnode.children = flattened


# -- properties ------------------------------------------------------------------


@dataclass(frozen=True)
class PropertyFlags:
    p1: bool  # no scalar products, no constant leaves
    p2: bool  # every node computes a nonzero, constant-free polynomial
    p3: bool  # leaf edges enter sum gates only
    p4: bool  # the output is a sum gate
    p5: bool  # sum/product gates alternate along every edge

    def all(self) -> bool:
        return self.p1 and self.p2 and self.p3 and self.p4 and self.p5

    def to_json(self) -> dict:
        return {"P1": self.p1, "P2": self.p2, "P3": self.p3, "P4": self.p4, "P5": self.p5}


def check_properties(circuit: Circuit, polys: dict[int, NcPoly] | None = None) -> PropertyFlags:
    """Evaluate each structural property independently."""
    if polys is None:
        polys = node_polynomials(circuit)
    classes = classify_gates(circuit, polys)
    p1 = classes.counts.scalar_products == 0 and classes.counts.const_leaves == 0
    p2 = all(
        not polys[node.id].is_zero() and polys[node.id].constant_term() == circuit.field.zero()
        for node in circuit.nodes
    )
    p3 = True
    p5 = True
    for child, parent in circuit.edges():
        child_node = circuit.node(child)
        parent_node = circuit.node(parent)
        child_is_leaf = isinstance(child_node, (InputNode, ConstNode))
        if child_is_leaf and not isinstance(parent_node, SumNode):
            p3 = False
        if isinstance(child_node, SumNode) and isinstance(parent_node, SumNode):
            p5 = False
        if isinstance(child_node, ProdNode) and isinstance(parent_node, ProdNode):
            p5 = False
    p4 = isinstance(circuit.node(circuit.output), SumNode)
    return PropertyFlags(p1, p2, p3, p4, p5)


# -- reports ----------------------------------------------------------------------


@dataclass(frozen=True)
class NormalizationReport:
    nonscalar_before: int
    nonscalar_after: int
    scalar_before: int
    scalar_after: int
    total_gates_before: int
    total_gates_after: int
    size_before: int
    size_after: int
    depth_before: int
    depth_after: int
    properties: PropertyFlags
    blowup: str  # total_gates_after / total_gates_before, exact fraction text
    provenance: dict[int, tuple[Optional[int], str]]

    def to_json(self) -> dict:
        return {
            "nonscalar_products": {"before": self.nonscalar_before, "after": self.nonscalar_after},
            "scalar_products": {"before": self.scalar_before, "after": self.scalar_after},
            "total_gates": {"before": self.total_gates_before, "after": self.total_gates_after},
            "size": {"before": self.size_before, "after": self.size_after},
            "depth": {"before": self.depth_before, "after": self.depth_after},
            "properties": self.properties.to_json(),
            "blowup": self.blowup,
            "provenance": {
                str(node): {"origin": origin, "step": step}
                for node, (origin, step) in sorted(self.provenance.items())
            },
        }


# -- public operations --------------------------------------------------------------


def _require_field_circuit(circuit: Circuit) -> None:
    if circuit.n_z != 0:
        raise DomainError("normalization applies to field circuits (z_vars = 0); "
                          "translate the circuit first")


def split_degree_parts(circuit: Circuit) -> tuple[Circuit, dict[int, tuple[int, int]]]:
    """Split every node into constant/positive twins (step 1 only).

    The returned circuit's output is a fresh sum recombining both parts of
    the original output, so the full polynomial is preserved; the map gives
    old node id -> (constant-part id, positive-part id), post-renumbering.
    """
    _require_field_circuit(circuit)
    polys = node_polynomials(circuit)
    g = _Graph(circuit.field, circuit.n_x)
    split = _split_nodes(g, circuit, polys)
    one = circuit.field.one()
    z_id, p_id = split[circuit.output]
    g.output = g.new_node(_WNode("sum", children=[[z_id, one], [p_id, one]]), None, "1")
    result, mapping = g.to_circuit()

    result_polys = node_polynomials(result)
    for old_id, (zero_part, pos_part) in split.items():
        want = polys[old_id]
        got = result_polys[mapping[zero_part]] + result_polys[mapping[pos_part]]
        if got != want:
            raise InvariantViolation(f"node {old_id}: split parts do not sum back")
        if not result_polys[mapping[zero_part]].positive_part().is_zero():
            raise InvariantViolation(f"node {old_id}: constant part has positive degree")
        if result_polys[mapping[pos_part]].constant_term() != circuit.field.zero():
            raise InvariantViolation(f"node {old_id}: positive part has a constant term")
    return result, {old: (mapping[z], mapping[p]) for old, (z, p) in split.items()}


def normalize(circuit: Circuit) -> tuple[Circuit, NormalizationReport]:
    """Run the full pass pipeline; reject circuits whose constant-free part
    is zero."""
    _require_field_circuit(circuit)
    polys = node_polynomials(circuit)
    target = polys[circuit.output].positive_part()
    if target.is_zero():
        raise DomainError(
            "precondition violated: the circuit's polynomial has no positive-degree part")

    before = classify_gates(circuit, polys)

    g = _Graph(circuit.field, circuit.n_x)
    split = _split_nodes(g, circuit, polys)
    _set_output(g, split[circuit.output][1])
    _fold_constant_nodes(g)
    _prune_unreachable(g)
    _fold_scalar_products(g)
    _drop_constant_leaves(g)
    _alternate_gates(g)
    _prune_unreachable(g)

    result, mapping = g.to_circuit()
    result_polys = node_polynomials(result)

    if result_polys[result.output] != target:
        raise InvariantViolation("normalized circuit computes the wrong polynomial")
    flags = check_properties(result, result_polys)
    if not flags.all():
        raise InvariantViolation(f"normalized circuit violates properties: {flags.to_json()}")
    after = classify_gates(result, result_polys)
    if after.counts.nonscalar_products > before.counts.nonscalar_products:
        raise InvariantViolation("normalization increased the non-scalar product count")

    def total(counts) -> int:
        return (counts.nonscalar_products + counts.scalar_products + counts.sum_gates
                + counts.input_leaves + counts.const_leaves)

    provenance = {
        mapping[old]: g.provenance[old] for old in g.nodes if old in mapping
    }
    report = NormalizationReport(
        nonscalar_before=before.counts.nonscalar_products,
        nonscalar_after=after.counts.nonscalar_products,
        scalar_before=before.counts.scalar_products,
        scalar_after=after.counts.scalar_products,
        total_gates_before=total(before.counts),
        total_gates_after=total(after.counts),
        size_before=before.counts.size,
        size_after=after.counts.size,
        depth_before=before.counts.depth,
        depth_after=after.counts.depth,
        properties=flags,
        blowup=f"{total(after.counts)}/{total(before.counts)}",
        provenance=provenance,
    )
    return result, report
