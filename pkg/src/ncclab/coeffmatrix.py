"""Coefficient matrices of non-commutative polynomials at a fixed cut.

For a polynomial over x1..xn and cut lengths (a, b), the matrix has n^a
rows and n^b columns, indexed by words; the entry at (u, w) is the
coefficient of the concatenated word u.w.  Matrices are kept sparse and
compacted to their occupied rows/columns before elimination; nothing is
materialized densely beyond the configured guard.

Rank is exact over the declared field: fraction-free (integer-preserving)
elimination for the rationals, straightforward modular elimination for
GF(p).  Pivots are chosen deterministically (lexicographically smallest
occupied row, then column), and every rank result carries a pivot witness
whose square submatrix certifies the rank lower bound.

The per-gate checks verify, for sum gates, that the matrix is the labeled
sum of its children's matrices and that rank is subadditive across them;
for product gates with constant-free operands, that the matrix decomposes
exactly into Kronecker products of the operands' matrices over all split
positions, with the induced rank bound.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm

from .circuit import Circuit, ProdNode, SumNode, node_polynomials
from .errors import DomainError, GuardError
from .fields import Field, PrimeField, QQ, Rationals, Scalar
from .freealgebra import NcPoly, Word, format_word
from .limits import matrix_guard_entries


@dataclass(frozen=True)
class CutMatrix:
    field: Field
    n: int
    a: int
    b: int
    entries: dict  # (row Word, col Word) -> nonzero Scalar

    def logical_shape(self) -> tuple[int, int]:
        return (self.n ** self.a, self.n ** self.b)

    def occupied(self) -> tuple[list[Word], list[Word]]:
        rows = sorted({rw for rw, _ in self.entries})
        cols = sorted({cw for _, cw in self.entries})
        return rows, cols

    def entry(self, row: Word, col: Word) -> Scalar:
        return self.entries.get((row, col), self.field.zero())

    def is_zero(self) -> bool:
        return not self.entries

    def __eq__(self, other):
        if not isinstance(other, CutMatrix):
            return NotImplemented
        return (self.field == other.field and self.n == other.n
                and self.a == other.a and self.b == other.b
                and self.entries == other.entries)


def build_matrix(p: NcPoly, a: int, b: int) -> CutMatrix:
    """Slice the degree-(a+b) part of p at position a."""
    if a < 0 or b < 0:
        raise DomainError(f"cut lengths must be non-negative, got ({a}, {b})")
    n = p.alphabet.n_x
    if n < 1:
        raise DomainError("coefficient matrices need at least one x variable")
    entries: dict[tuple[Word, Word], Scalar] = {}
    for word, coeff in p.sorted_terms():
        if len(word) != a + b:
            continue
        if any(kind != "x" for kind, _ in word):
            raise DomainError(
                f"matrix slicing applies to x-only polynomials; term {format_word(word)}")
        entries[(word[:a], word[a:])] = coeff
    return CutMatrix(p.field, n, a, b, entries)


def matrix_add(m1: CutMatrix, m2: CutMatrix, scale2: Scalar | None = None) -> CutMatrix:
    if (m1.field, m1.n, m1.a, m1.b) != (m2.field, m2.n, m2.a, m2.b):
        raise DomainError("matrix shape/field mismatch in addition")
    field = m1.field
    factor = field.one() if scale2 is None else field.coerce(scale2)
    zero = field.zero()
    merged = dict(m1.entries)
    for key, value in m2.entries.items():
        total = field.add(merged.get(key, zero), field.mul(factor, value))
        if total == zero:
            merged.pop(key, None)
        else:
            merged[key] = total
    return CutMatrix(field, m1.n, m1.a, m1.b, merged)


def zero_matrix(field: Field, n: int, a: int, b: int) -> CutMatrix:
    return CutMatrix(field, n, a, b, {})


def kronecker(m1: CutMatrix, m2: CutMatrix) -> CutMatrix:
    """Word-concatenation realization of the Kronecker product."""
    if m1.field != m2.field:
        raise DomainError("Kronecker factors must share a field")
    if m1.n != m2.n:
        raise DomainError(f"alphabet mismatch: {m1.n} vs {m2.n}")
    field = m1.field
    entries: dict[tuple[Word, Word], Scalar] = {}
    for (r1, c1), v1 in m1.entries.items():
        for (r2, c2), v2 in m2.entries.items():
            entries[(r1 + r2, c1 + c2)] = field.mul(v1, v2)
    return CutMatrix(field, m1.n, m1.a + m2.a, m1.b + m2.b, entries)


# -- exact rank -----------------------------------------------------------------


@dataclass(frozen=True)
class RankResult:
    rank: int
    pivots: tuple[tuple[Word, Word], ...]


def _compact_grid(m: CutMatrix) -> tuple[list[Word], list[Word], list[list[Scalar]]]:
    rows, cols = m.occupied()
    guard = matrix_guard_entries()
    if len(rows) * len(cols) > guard:
        raise GuardError(
            f"compacted matrix of {len(rows)}x{len(cols)} entries exceeds guard {guard}")
    col_index = {w: j for j, w in enumerate(cols)}
    zero = m.field.zero()
    grid = [[zero] * len(cols) for _ in rows]
    row_index = {w: i for i, w in enumerate(rows)}
    for (r, c), v in m.entries.items():
        grid[row_index[r]][col_index[c]] = v
    return rows, cols, grid


def _rank_fraction_free(rows: list[Word], cols: list[Word], grid: list[list[Fraction]]):
    """Bareiss elimination on integer rows (each row scaled by its common
    denominator, which preserves rank)."""
    int_grid: list[list[int]] = []
    for row in grid:
        scale = lcm(*(v.denominator for v in row)) if row else 1
        int_grid.append([int(v * scale) for v in row])
    origin = list(range(len(rows)))
    pivots: list[tuple[Word, Word]] = []
    prev = 1
    r = 0
    n_rows, n_cols = len(int_grid), len(cols)
    for c in range(n_cols):
        pivot_row = next((i for i in range(r, n_rows) if int_grid[i][c] != 0), None)
        if pivot_row is None:
            continue
        int_grid[r], int_grid[pivot_row] = int_grid[pivot_row], int_grid[r]
        origin[r], origin[pivot_row] = origin[pivot_row], origin[r]
        for i in range(r + 1, n_rows):
            for j in range(c + 1, n_cols):
                int_grid[i][j] = (int_grid[i][j] * int_grid[r][c]
                                  - int_grid[i][c] * int_grid[r][j]) // prev
            int_grid[i][c] = 0
        prev = int_grid[r][c]
        pivots.append((rows[origin[r]], cols[c]))
        r += 1
        if r == n_rows:
            break
    return RankResult(r, tuple(pivots))


def _rank_mod_p(rows: list[Word], cols: list[Word], grid: list[list[int]], p: int):
    origin = list(range(len(rows)))
    pivots: list[tuple[Word, Word]] = []
    r = 0
    n_rows, n_cols = len(grid), len(cols)
    for c in range(n_cols):
        pivot_row = next((i for i in range(r, n_rows) if grid[i][c] % p != 0), None)
        if pivot_row is None:
            continue
        grid[r], grid[pivot_row] = grid[pivot_row], grid[r]
        origin[r], origin[pivot_row] = origin[pivot_row], origin[r]
        inv = pow(grid[r][c], -1, p)
        for i in range(r + 1, n_rows):
            if grid[i][c] % p == 0:
                continue
            factor = (grid[i][c] * inv) % p
            grid[i] = [(grid[i][j] - factor * grid[r][j]) % p for j in range(n_cols)]
        pivots.append((rows[origin[r]], cols[c]))
        r += 1
        if r == n_rows:
            break
    return RankResult(r, tuple(pivots))


def rank(m: CutMatrix) -> RankResult:
    rows, cols, grid = _compact_grid(m)
    if not rows or not cols:
        return RankResult(0, ())
    if isinstance(m.field, Rationals):
        return _rank_fraction_free(rows, cols, grid)
    return _rank_mod_p(rows, cols, grid, m.field.p)


def certify_rank(m: CutMatrix, result: RankResult) -> bool:
    """Replay the pivot witness: the square submatrix on the witness rows
    and columns must be nonsingular, certifying rank >= len(pivots)."""
    t = len(result.pivots)
    if t != result.rank:
        return False
    if t == 0:
        return True
    witness_rows = [rw for rw, _ in result.pivots]
    witness_cols = [cw for _, cw in result.pivots]
    if isinstance(m.field, Rationals):
        grid = [[m.entry(rw, cw) for cw in witness_cols] for rw in witness_rows]
        det = _bareiss_det(grid)
        return det != 0
    p = m.field.p
    grid = [[m.entry(rw, cw) % p for cw in witness_cols] for rw in witness_rows]
    sub = _rank_mod_p(witness_rows, witness_cols, grid, p)
    return sub.rank == t


def _bareiss_det(grid: list[list[Fraction]]) -> Fraction:
    size = len(grid)
    work = [[Fraction(v) for v in row] for row in grid]
    sign = 1
    prev = Fraction(1)
    for k in range(size - 1):
        if work[k][k] == 0:
            swap = next((i for i in range(k + 1, size) if work[i][k] != 0), None)
            if swap is None:
                return Fraction(0)
            work[k], work[swap] = work[swap], work[k]
            sign = -sign
        for i in range(k + 1, size):
            for j in range(k + 1, size):
                work[i][j] = (work[i][j] * work[k][k] - work[i][k] * work[k][j]) / prev
            work[i][k] = Fraction(0)
        prev = work[k][k]
    return sign * work[size - 1][size - 1]


# -- rank caching over a circuit --------------------------------------------------


class RankCache:
    """Memoized per-node matrices and ranks for one circuit's polynomials."""

    def __init__(self, circuit: Circuit, polys: dict[int, NcPoly] | None = None):
        self.circuit = circuit
        self.polys = polys if polys is not None else node_polynomials(circuit)
        self._matrices: dict[tuple[int, int, int], CutMatrix] = {}
        self._ranks: dict[tuple[int, int, int], int] = {}

    def matrix(self, node_id: int, a: int, b: int) -> CutMatrix:
        key = (node_id, a, b)
        if key not in self._matrices:
            self._matrices[key] = build_matrix(self.polys[node_id], a, b)
        return self._matrices[key]

    def rank(self, node_id: int, a: int, b: int) -> int:
        key = (node_id, a, b)
        if key not in self._ranks:
            self._ranks[key] = rank(self.matrix(node_id, a, b)).rank
        return self._ranks[key]


# -- per-gate checks ---------------------------------------------------------------


@dataclass(frozen=True)
class SumGateCheck:
    node: int
    a: int
    b: int
    lhs_rank: int
    rhs_rank_sum: int
    holds: bool
    identity_ok: bool
    child_ranks: tuple[tuple[int, int], ...]  # (child id, rank), distinct children

    def to_json(self) -> dict:
        return {
            "node": self.node, "kind": "sum", "a": self.a, "b": self.b,
            "lhs_rank": self.lhs_rank, "rhs_rank_sum": self.rhs_rank_sum,
            "holds": self.holds, "identity_ok": self.identity_ok,
            "child_ranks": [{"node": c, "rank": r} for c, r in self.child_ranks],
        }


@dataclass(frozen=True)
class ProductGateCheck:
    node: int
    a: int
    b: int
    lhs_rank: int
    rhs_rank_sum: int
    holds: bool
    identity_ok: bool
    right_term_ranks: tuple[int, ...]  # rank of right child at (a-i, b), i = 1..a
    left_term_ranks: tuple[int, ...]   # rank of left child at (a, b-i), i = 1..b-1

    def to_json(self) -> dict:
        return {
            "node": self.node, "kind": "prod", "a": self.a, "b": self.b,
            "lhs_rank": self.lhs_rank, "rhs_rank_sum": self.rhs_rank_sum,
            "holds": self.holds, "identity_ok": self.identity_ok,
            "right_term_ranks": list(self.right_term_ranks),
            "left_term_ranks": list(self.left_term_ranks),
        }


def check_sum_inequality(circuit: Circuit, node_id: int, a: int, b: int,
                         cache: RankCache | None = None) -> SumGateCheck:
    """rank(M_v) <= sum of child ranks, plus the exact labeled-sum identity."""
    node = circuit.node(node_id)
    if not isinstance(node, SumNode):
        raise DomainError(f"node {node_id} is not a sum gate")
    if cache is None:
        cache = RankCache(circuit)
    lhs_matrix = cache.matrix(node_id, a, b)
    lhs = cache.rank(node_id, a, b)
    combined = zero_matrix(circuit.field, lhs_matrix.n, a, b)
    for child, label in node.args:
        combined = matrix_add(combined, cache.matrix(child, a, b), label)
    identity_ok = combined == lhs_matrix
    child_ranks = tuple(
        (child, cache.rank(child, a, b)) for child in sorted({c for c, _ in node.args})
    )
    rhs = sum(r for _, r in child_ranks)
    return SumGateCheck(node_id, a, b, lhs, rhs, lhs <= rhs, identity_ok, child_ranks)


def check_product_inequality(circuit: Circuit, node_id: int, a: int, b: int,
                             cache: RankCache | None = None) -> ProductGateCheck:
    """Exact split-position decomposition at a product gate, plus the rank
    bound it induces.  Requires constant-free operands and a, b >= 1."""
    node = circuit.node(node_id)
    if not isinstance(node, ProdNode):
        raise DomainError(f"node {node_id} is not a product gate")
    if a < 1 or b < 1:
        raise DomainError(f"product check needs a, b >= 1, got ({a}, {b})")
    if cache is None:
        cache = RankCache(circuit)
    zero = circuit.field.zero()
    for child in (node.left, node.right):
        if cache.polys[child].constant_term() != zero:
            raise DomainError(
                f"node {child}: operand of product {node_id} has a nonzero constant term")

    lhs_matrix = cache.matrix(node_id, a, b)
    lhs = cache.rank(node_id, a, b)
    n = lhs_matrix.n
    combined = zero_matrix(circuit.field, n, a, b)
    for i in range(1, a + 1):
        term = kronecker(cache.matrix(node.left, i, 0), cache.matrix(node.right, a - i, b))
        combined = matrix_add(combined, term)
    for i in range(1, b):
        term = kronecker(cache.matrix(node.left, a, b - i), cache.matrix(node.right, 0, i))
        combined = matrix_add(combined, term)
    identity_ok = combined == lhs_matrix

    right_terms = tuple(cache.rank(node.right, a - i, b) for i in range(1, a + 1))
    left_terms = tuple(cache.rank(node.left, a, b - i) for i in range(1, b))
    rhs = sum(right_terms) + sum(left_terms)
    return ProductGateCheck(node_id, a, b, lhs, rhs, lhs <= rhs, identity_ok,
                            right_terms, left_terms)


def check_all_gates(circuit: Circuit, a: int, b: int,
                    cache: RankCache | None = None) -> list:
    """Run the applicable inequality check at every gate, at one cut (a, b)."""
    if cache is None:
        cache = RankCache(circuit)
    reports = []
    for node in circuit.nodes:
        if isinstance(node, SumNode):
            reports.append(check_sum_inequality(circuit, node.id, a, b, cache))
        elif isinstance(node, ProdNode) and a >= 1 and b >= 1:
            reports.append(check_product_inequality(circuit, node.id, a, b, cache))
    return reports
