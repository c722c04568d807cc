"""ncclab: exact tools for non-commutative arithmetic circuits.

Free-algebra arithmetic, a circuit IR with formal-polynomial and
function-over-ring semantics, a normalization pass pipeline, coefficient-
matrix rank certificates with per-gate inequality checks, a backward
rank-descent trace that extracts a disjoint witness set of product gates,
full-rank witness polynomial generators, and the ring-to-field circuit
translation with its substitution-probe verifier.
"""

__version__ = "0.1.0"

from .circuit import (
    Circuit,
    CircuitBuilder,
    ConstNode,
    GateCounts,
    InputNode,
    ProdNode,
    SumNode,
    circuit_to_json,
    circuit_to_text,
    classify_gates,
    compute_polynomial,
    evaluate_function,
    node_polynomials,
    parse_circuit,
)
from .coeffmatrix import (
    CutMatrix,
    RankCache,
    RankResult,
    build_matrix,
    certify_rank,
    check_all_gates,
    check_product_inequality,
    check_sum_inequality,
    kronecker,
    matrix_add,
    rank,
)
from .errors import CircuitError, DomainError, GuardError, InvariantViolation, NcclabError
from .fields import GF, QQ, Field, PrimeField, Rationals
from .freealgebra import (
    Alphabet,
    NcPoly,
    Word,
    format_word,
    parse_word,
    poly_from_text,
    poly_to_text,
    xvar,
    zvar,
)
from .hardpoly import HardPolySpec, palindrome_circuit, palindrome_poly
from .normalize import (
    NormalizationReport,
    PropertyFlags,
    check_properties,
    normalize,
    split_degree_parts,
)
from .pathtrace import PathTrace, TraceConfig, TraceStep, trace_path, verify_trace
from .ringtrans import (
    AgreementReport,
    SubstitutionCheck,
    check_function_agreement,
    restrict_g0,
    restrict_gprime,
    ring_circuit_polynomial,
    translate,
    verify_lemma_substitution,
)
