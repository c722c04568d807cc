"""Backward rank-descent walk from the output gate of a normalized circuit.

Starting at the output with both cut lengths set to half the target degree,
the walk tracks the rank r of the node's coefficient matrix at the current
cut and descends one child per step:

  sum gates   keep the cut.  If some child's matrix already has rank at
              least t = (c/sqrt(n)) * r, descend into the smallest-id such
              child (rule 1).  Otherwise bucket the children by rank scale
              (bucket k holds children with rank in [alpha^(k+1) t,
              alpha^k t)), pick the smallest k whose bucket carries at
              least a 2^-(k+1) share of r, and descend into a member of
              that bucket below which no other member lies; the whole
              bucket is recorded as that step's witness set (rule 2).

  product     scan drops j = 1, 2, ... and keep the child whose matrix at
  gates       the reduced cut retains at least a 2^-(j+1) share of r,
              preferring the right child (row drop) at each j.

The walk stops when the rank falls to 1 or below.  Admissible choices are
guaranteed by the per-gate rank inequalities; their absence is an internal
defect, never swallowed.

All threshold comparisons against c/sqrt(n) multiples are performed by
squaring in exact integer/rational arithmetic; no floating point anywhere.

verify_trace re-derives every recorded quantity from the circuit and
re-checks the per-step descent inequalities, witness-set disjointness and
membership, the degree budget, the step-count budget, exact telescoping of
the rank ratio, and (when the start rank equals n^(d/2) and the default
constants are used) the closed-form witness-count bounds.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .circuit import Circuit, ConstNode, InputNode, ProdNode, SumNode, classify_gates, node_polynomials
from .coeffmatrix import RankCache
from .errors import DomainError, InvariantViolation
from .fields import Scalar
from .normalize import check_properties

DEFAULT_C = 64
DEFAULT_ALPHA = Fraction(1, 4)


@dataclass(frozen=True)
class TraceConfig:
    d: int
    n: int
    c: int = DEFAULT_C
    alpha: Fraction = DEFAULT_ALPHA

    def __post_init__(self):
        if self.d < 2 or self.d % 2 != 0:
            raise DomainError(f"target degree must be even and >= 2, got {self.d}")
        if self.n < 1:
            raise DomainError(f"alphabet size must be >= 1, got {self.n}")
        if self.c < 1:
            raise DomainError(f"scale constant must be >= 1, got {self.c}")
        if not (0 < self.alpha < 1):
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")

    def is_default_constants(self) -> bool:
        return self.c == DEFAULT_C and self.alpha == DEFAULT_ALPHA


SUM_RULE1 = "sum-rule1"
SUM_RULE2 = "sum-rule2"
PRODUCT = "product"


@dataclass(frozen=True)
class TraceStep:
    index: int
    node: int
    a: int
    b: int
    r: int
    kind: str
    chosen: int
    t_scaled: Optional[int] = None  # c * r; the threshold is t_scaled / sqrt(n)
    k: Optional[int] = None
    j: Optional[int] = None
    side: Optional[str] = None      # "right-kept" | "left-kept"
    witness: tuple[int, ...] = ()   # rule-2 bucket, the step's witness set

    def to_json(self) -> dict:
        out = {"index": self.index, "node": self.node, "a": self.a, "b": self.b,
               "r": self.r, "kind": self.kind, "chosen": self.chosen}
        if self.kind in (SUM_RULE1, SUM_RULE2):
            # the threshold is t_scaled / sqrt(n); kept symbolic, never a float
            out["t_scaled"] = self.t_scaled
        if self.kind == SUM_RULE2:
            out["k"] = self.k
            out["witness"] = list(self.witness)
        if self.kind == PRODUCT:
            out["j"] = self.j
            out["side"] = self.side
        return out


@dataclass(frozen=True)
class Terminal:
    node: int
    a: int
    b: int
    r: int
    reason: str  # "rank" | "leaf" | "cut-exhausted"

    def to_json(self) -> dict:
        return {"node": self.node, "a": self.a, "b": self.b, "r": self.r,
                "reason": self.reason}


@dataclass(frozen=True)
class PathTrace:
    config: TraceConfig
    steps: tuple[TraceStep, ...]
    terminal: Terminal

    @property
    def t(self) -> int:
        return len(self.steps)

    def index_sets(self) -> tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...]]:
        i1 = tuple(s.index for s in self.steps if s.kind == SUM_RULE1)
        i2 = tuple(s.index for s in self.steps if s.kind == SUM_RULE2)
        i3 = tuple(s.index for s in self.steps if s.kind == PRODUCT)
        return i1, i2, i3

    def witness_union(self) -> tuple[int, ...]:
        members: set[int] = set()
        for step in self.steps:
            members.update(step.witness)
        return tuple(sorted(members))

    def rank_sequence(self) -> list[int]:
        return [s.r for s in self.steps] + [self.terminal.r]

    def to_json(self) -> dict:
        i1, i2, i3 = self.index_sets()
        return {
            "config": {"d": self.config.d, "n": self.config.n, "c": self.config.c,
                       "alpha": f"{self.config.alpha.numerator}/{self.config.alpha.denominator}"},
            "steps": [s.to_json() for s in self.steps],
            "terminal": self.terminal.to_json(),
            "t": self.t,
            "index_sets": {"I1": list(i1), "I2": list(i2), "I3": list(i3)},
            "witness_set": list(self.witness_union()),
        }


# -- exact threshold comparisons -------------------------------------------------


def _ge_scaled_sqrt(value: int, scaled: Fraction, n: int) -> bool:
    """value >= scaled / sqrt(n), all quantities non-negative."""
    return n * Fraction(value) ** 2 >= Fraction(scaled) ** 2


def _lt_scaled_sqrt(value: int, scaled: Fraction, n: int) -> bool:
    """value < scaled / sqrt(n), all quantities non-negative."""
    return n * Fraction(value) ** 2 < Fraction(scaled) ** 2


def _bucket_of(rank_value: int, t_scaled: int, alpha: Fraction, n: int) -> int:
    """The unique k >= 0 with alpha^(k+1) t <= rank < alpha^k t, where
    t = t_scaled / sqrt(n); requires 1 <= rank and rank < t."""
    k = 0
    while not _ge_scaled_sqrt(rank_value, alpha ** (k + 1) * t_scaled, n):
        k += 1
    return k


def _descendants(circuit: Circuit) -> dict[int, frozenset[int]]:
    desc: dict[int, frozenset[int]] = {}
    for node_id in circuit.topo_order():
        below: set[int] = set()
        for child in circuit.children(node_id):
            below.add(child)
            below |= desc[child]
        desc[node_id] = frozenset(below)
    return desc


# -- the walk ---------------------------------------------------------------------


def trace_path(circuit: Circuit, cfg: TraceConfig, *, require_normalized: bool = True,
               cache: RankCache | None = None) -> PathTrace:
    if cfg.n != circuit.n_x:
        raise DomainError(f"config says n={cfg.n} but the circuit has {circuit.n_x} x-variables")
    if cache is None:
        cache = RankCache(circuit)
    if require_normalized:
        flags = check_properties(circuit, cache.polys)
        if not flags.all():
            raise DomainError(f"P1..P5 required: circuit is not normalized "
                              f"({flags.to_json()})")

    desc: Optional[dict[int, frozenset[int]]] = None
    steps: list[TraceStep] = []
    v = circuit.output
    a = b = cfg.d // 2
    index = 0
    while True:
        node = circuit.node(v)
        r = cache.rank(v, a, b)
        if isinstance(node, (InputNode, ConstNode)):
            terminal = Terminal(v, a, b, r, "leaf")
            break
        if a == 0 or b == 0:
            terminal = Terminal(v, a, b, r, "cut-exhausted")
            break
        if r <= 1:
            terminal = Terminal(v, a, b, r, "rank")
            break

        if isinstance(node, SumNode):
            t_scaled = cfg.c * r
            children = sorted({child for child, _ in node.args})
            chosen = next(
                (u for u in children if _ge_scaled_sqrt(cache.rank(u, a, b), t_scaled, cfg.n)),
                None)
            if chosen is not None:
                steps.append(TraceStep(index, v, a, b, r, SUM_RULE1, chosen,
                                       t_scaled=t_scaled))
                v = chosen
            else:
                buckets: dict[int, list[int]] = {}
                for u in children:
                    ru = cache.rank(u, a, b)
                    if ru == 0:
                        continue
                    buckets.setdefault(_bucket_of(ru, t_scaled, cfg.alpha, cfg.n), []).append(u)
                k_chosen = None
                for k in sorted(buckets):
                    share = sum(cache.rank(u, a, b) for u in buckets[k])
                    if share * 2 ** (k + 1) >= r:
                        k_chosen = k
                        break
                if k_chosen is None:
                    raise InvariantViolation(
                        f"step {index} at sum gate {v}: no bucket carries its rank share; "
                        f"this contradicts rank subadditivity")
                bucket = buckets[k_chosen]
                if desc is None:
                    desc = _descendants(circuit)
                members = set(bucket)
                chosen = next(u for u in sorted(bucket)
                              if not (desc[u] & (members - {u})))
                steps.append(TraceStep(index, v, a, b, r, SUM_RULE2, chosen,
                                       t_scaled=t_scaled, k=k_chosen,
                                       witness=tuple(sorted(bucket))))
                v = chosen
        elif isinstance(node, ProdNode):
            found = None
            for j in range(1, max(a, b - 1) + 1):
                if j <= a and cache.rank(node.right, a - j, b) * 2 ** (j + 1) >= r:
                    found = (node.right, a - j, b, j, "right-kept")
                    break
                if j <= b - 1 and cache.rank(node.left, a, b - j) * 2 ** (j + 1) >= r:
                    found = (node.left, a, b - j, j, "left-kept")
                    break
            if found is None:
                raise InvariantViolation(
                    f"step {index} at product gate {v}: no drop j retains its rank share; "
                    f"this contradicts the product-cut decomposition")
            chosen, a_next, b_next, j, side = found
            steps.append(TraceStep(index, v, a, b, r, PRODUCT, chosen, j=j, side=side))
            v, a, b = chosen, a_next, b_next
        else:
            raise InvariantViolation(f"unexpected node kind at {v}")
        index += 1
    return PathTrace(cfg, tuple(steps), terminal)


# -- verification -------------------------------------------------------------------


@dataclass(frozen=True)
class CheckRecord:
    name: str
    index: Optional[int]
    ok: bool
    detail: str

    def to_json(self) -> dict:
        return {"name": self.name, "index": self.index, "ok": self.ok,
                "detail": self.detail}


@dataclass(frozen=True)
class TraceVerification:
    checks: tuple[CheckRecord, ...]
    closed_form: Optional[dict]
    sum_k: Optional[int]

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def failures(self) -> list[CheckRecord]:
        return [c for c in self.checks if not c.ok]

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "checks": [c.to_json() for c in self.checks],
            "closed_form": self.closed_form,
            "sum_k": self.sum_k,
        }


def verify_trace(trace: PathTrace, circuit: Circuit, cfg: TraceConfig,
                 cache: RankCache | None = None) -> TraceVerification:
    """Re-check every recorded step against the circuit, independently of
    how the walk made its choices."""
    if cache is None:
        cache = RankCache(circuit)
    checks: list[CheckRecord] = []

    def record(name: str, index: Optional[int], ok: bool, detail: str = "") -> None:
        checks.append(CheckRecord(name, index, bool(ok), detail))

    classes = classify_gates(circuit, cache.polys)
    desc = _descendants(circuit)
    ranks = trace.rank_sequence()
    nodes_on_path = [s.node for s in trace.steps] + [trace.terminal.node]

    # recorded ranks match recomputation
    cuts = [(s.a, s.b) for s in trace.steps] + [(trace.terminal.a, trace.terminal.b)]
    for i, (node_id, (ai, bi), ri) in enumerate(zip(nodes_on_path, cuts, ranks)):
        actual = cache.rank(node_id, ai, bi)
        record("rank-recomputation", i, actual == ri,
               f"node {node_id} at cut ({ai},{bi}): recorded {ri}, recomputed {actual}")

    # per-step structure and descent inequalities
    alpha, c, n = cfg.alpha, cfg.c, cfg.n
    for step in trace.steps:
        nxt_r = ranks[step.index + 1]
        node = circuit.node(step.node)
        record("child-edge", step.index, step.chosen in circuit.children(step.node),
               f"{step.chosen} must be a child of {step.node}")
        if step.kind == SUM_RULE1:
            ok = n * Fraction(nxt_r) ** 2 >= Fraction(c * step.r) ** 2
            record("descent-rule1", step.index, ok,
                   f"r_next={nxt_r} >= (c/sqrt(n)) * {step.r}")
        elif step.kind == SUM_RULE2:
            bound = alpha ** (step.k + 1) * c * step.r
            ok = n * Fraction(nxt_r) ** 2 >= bound ** 2
            record("descent-rule2", step.index, ok,
                   f"r_next={nxt_r} >= alpha^(k+1) * (c/sqrt(n)) * {step.r}, k={step.k}")
            record("witness-nonempty", step.index, len(step.witness) > 0,
                   "rule-2 witness set must be nonempty")
            for member in step.witness:
                is_prod = isinstance(circuit.node(member), ProdNode)
                record("witness-product", step.index, is_prod,
                       f"witness member {member} must be a product gate")
                if is_prod:
                    record("witness-nonscalar", step.index,
                           classes.classes.get(member) == "nonscalar",
                           f"witness member {member} must be non-scalar")
                record("witness-child", step.index,
                       member in circuit.children(step.node),
                       f"witness member {member} must be a child of {step.node}")
                record("witness-not-below-chosen", step.index,
                       member == step.chosen or member not in desc[step.chosen],
                       f"witness member {member} must not lie below {step.chosen}")
                ru = cache.rank(member, step.a, step.b)
                in_band = (n * Fraction(ru) ** 2 >= (alpha ** (step.k + 1) * c * step.r) ** 2
                           and n * Fraction(ru) ** 2 < (alpha ** step.k * c * step.r) ** 2)
                record("witness-band", step.index, in_band,
                       f"witness member {member} rank {ru} must sit in bucket {step.k}")
            share = sum(cache.rank(u, step.a, step.b) for u in step.witness)
            record("bucket-share", step.index, share * 2 ** (step.k + 1) >= step.r,
                   f"bucket rank mass {share} must cover a 2^-(k+1) share of {step.r}")
            expected = set()
            for u in sorted({child for child, _ in node.args}):
                ru = cache.rank(u, step.a, step.b)
                if ru == 0:
                    continue
                lo = (alpha ** (step.k + 1) * c * step.r) ** 2 <= n * Fraction(ru) ** 2
                hi = n * Fraction(ru) ** 2 < (alpha ** step.k * c * step.r) ** 2
                if lo and hi:
                    expected.add(u)
            record("witness-complete", step.index, expected == set(step.witness),
                   f"witness set must be the full rank band: expected {sorted(expected)}, "
                   f"recorded {sorted(step.witness)}")
        else:
            ok = nxt_r * 4 ** step.j >= step.r
            record("descent-product", step.index, ok,
                   f"r_next={nxt_r} >= 4^-j * {step.r}, j={step.j}")
            record("product-side", step.index,
                   (step.side == "right-kept" and step.chosen == node.right)
                   or (step.side == "left-kept" and step.chosen == node.left),
                   "recorded side must match the kept child")

    # cut-length bookkeeping: sums keep the cut, products drop one side by j
    a, b = cfg.d // 2, cfg.d // 2
    for step in trace.steps:
        record("cut-recorded", step.index, (step.a, step.b) == (a, b),
               f"step cut must be ({a},{b})")
        if step.kind == PRODUCT:
            if step.side == "right-kept":
                a -= step.j
            else:
                b -= step.j
    record("cut-terminal", None, (trace.terminal.a, trace.terminal.b) == (a, b),
           "terminal cut must follow the recorded drops")

    i1, i2, i3 = trace.index_sets()
    j_total = sum(trace.steps[i].j for i in i3)
    record("degree-budget", None, j_total <= cfg.d,
           f"sum of drops {j_total} must not exceed d={cfg.d}")
    record("sum-step-budget", None, len(i1) + len(i2) <= cfg.d,
           f"|I1|+|I2|={len(i1) + len(i2)} must not exceed d={cfg.d}")
    if trace.terminal.reason == "rank":
        record("terminal-cut-positive", None, trace.terminal.a + trace.terminal.b >= 1,
               "a rank-stop must leave a positive cut")

    # witness sets pairwise disjoint; later sets lie below earlier chosen nodes
    seen: set[int] = set()
    prev_chosen: list[int] = []
    for step in trace.steps:
        if step.kind != SUM_RULE2:
            continue
        overlap = seen & set(step.witness)
        record("witness-disjoint", step.index, not overlap,
               f"witness overlap {sorted(overlap)}")
        for earlier in prev_chosen:
            ok = all(m in desc[earlier] for m in step.witness)
            record("witness-below-earlier", step.index, ok,
                   f"members must be descendants of earlier chosen node {earlier}")
        seen |= set(step.witness)
        prev_chosen.append(step.chosen)

    # exact telescoping of the recorded rank ratio
    if ranks[0] > 0:
        product = Fraction(1)
        telescoping_ok = True
        for i in range(len(trace.steps)):
            if ranks[i] == 0:
                telescoping_ok = ranks[-1] == 0
                break
            product *= Fraction(ranks[i + 1], ranks[i])
        else:
            telescoping_ok = product == Fraction(ranks[-1], ranks[0])
        record("telescoping", None, telescoping_ok,
               "product of step ratios must equal r_t / r_0")

    # closed-form conclusions, applicable only at full start rank with the
    # default constants
    closed_form: Optional[dict] = None
    sum_k = sum(trace.steps[i].k for i in i2) if i2 else 0
    full_rank_start = ranks[0] == cfg.n ** (cfg.d // 2)
    if full_rank_start and cfg.is_default_constants():
        witness = trace.witness_union()
        sizes = {i: len(trace.steps[i].witness) for i in i2}
        per_set = {}
        for i in i2:
            k = trace.steps[i].k
            lhs_sq = 4 * c * c * Fraction(sizes[i]) ** 2 * (2 * alpha) ** (2 * k)
            per_set[i] = lhs_sq > n
            record("witness-size-bound", i, per_set[i],
                   f"|S|={sizes[i]} must exceed (sqrt(n)/2c) * (2*alpha)^-k, k={k}")
        record("sum-k-bound", None, sum_k >= cfg.d,
               f"sum of bucket indices {sum_k} must reach d={cfg.d}")
        total_rhs = sum((2 * alpha) ** (-trace.steps[i].k) for i in i2)
        union_ok = 4 * c * c * Fraction(len(witness)) ** 2 > n * total_rhs ** 2
        record("witness-union-bound", None, union_ok,
               f"|S|={len(witness)} must exceed (sqrt(n)/2c) * sum of (2*alpha)^-k")
        closed_form = {
            "applicable": True,
            "r0": ranks[0],
            "sum_k": sum_k,
            "witness_size": len(witness),
            "per_set_sizes": {str(i): sizes[i] for i in i2},
        }
    else:
        reason = ("start rank below full" if not full_rank_start
                  else "non-default constants")
        closed_form = {"applicable": False, "reason": reason, "r0": ranks[0],
                       "sum_k": sum_k}

    return TraceVerification(tuple(checks), closed_form, sum_k)
