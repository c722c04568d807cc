"""Command-line entry point wiring all subsystems together.

Subcommands: parse, eval, normalize, rank, trace, hardpoly, translate,
verify-ring, corpus.  Every JSON report embeds a run manifest (tool
version, subcommand, input digests, configuration echo) and is serialized
with sorted keys, so identical runs produce byte-identical reports.

Exit codes: 0 success; 1 domain errors (bad inputs, violated
preconditions), with diagnostics on stderr; 2 internal invariant
violations, which on valid inputs would contradict the per-gate rank
inequalities and must be maximally loud.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import random
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__
from .circuit import (
    circuit_to_json,
    circuit_to_text,
    classify_gates,
    compute_polynomial,
    node_polynomials,
    parse_circuit,
)
from .coeffmatrix import RankCache, build_matrix, check_all_gates, rank as matrix_rank
from .corpus import CorpusLimits, corpus_ledger, generate_corpus, make_noisy_ring_circuit, random_circuit
from .errors import DomainError, InvariantViolation
from .fields import QQ
from .freealgebra import format_word, poly_from_text, poly_to_text
from .hardpoly import HardPolySpec, palindrome_circuit, palindrome_poly
from .normalize import normalize
from .pathtrace import TraceConfig, trace_path, verify_trace
from .ringtrans import check_function_agreement, ring_circuit_polynomial, translate


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(1)


def _sha256_file(path: str) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _manifest(subcommand: str, inputs: dict[str, str], config: dict) -> dict:
    return {
        "tool": "ncclab",
        "version": __version__,
        "subcommand": subcommand,
        "inputs": {name: _sha256_file(path) for name, path in inputs.items()},
        "config": config,
    }


def _emit(report: dict, out_path: str | None) -> None:
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if out_path:
        Path(out_path).write_text(text)
    else:
        sys.stdout.write(text)


def _load_circuit(path: str):
    return parse_circuit(Path(path).read_text())


# -- subcommand handlers -------------------------------------------------------


def _cmd_parse(args) -> int:
    circuit = _load_circuit(args.infile)
    counts = classify_gates(circuit).counts
    report = {
        "manifest": _manifest("parse", {"in": args.infile}, {}),
        "field": circuit.field.name,
        "x_vars": circuit.n_x,
        "z_vars": circuit.n_z,
        "nodes": len(circuit.nodes),
        "size": counts.size,
        "depth": counts.depth,
        "sum_gates": counts.sum_gates,
        "nonscalar_products": counts.nonscalar_products,
        "scalar_products": counts.scalar_products,
    }
    _emit(report, args.out)
    return 0


def _cmd_eval(args) -> int:
    circuit = _load_circuit(args.infile)
    poly = compute_polynomial(circuit)
    text = poly_to_text(poly)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_normalize(args) -> int:
    circuit = _load_circuit(args.infile)
    result, report = normalize(circuit)
    Path(args.out).write_text(circuit_to_text(result))
    payload = {
        "manifest": _manifest("normalize", {"in": args.infile}, {}),
        "report": report.to_json(),
    }
    _emit(payload, args.report)
    return 0


def _cmd_rank(args) -> int:
    circuit = _load_circuit(args.infile)
    cache = RankCache(circuit)
    config = {"a": args.a, "b": args.b, "node": args.node,
              "check_gates": args.check_gates}
    payload = {"manifest": _manifest("rank", {"in": args.infile}, config)}
    if args.check_gates:
        gate_reports = check_all_gates(circuit, args.a, args.b, cache)
        payload["gates"] = [g.to_json() for g in gate_reports]
        payload["violations"] = [
            g.to_json() for g in gate_reports if not (g.holds and g.identity_ok)
        ]
    node_id = args.node if args.node is not None else circuit.output
    matrix = cache.matrix(node_id, args.a, args.b)
    result = matrix_rank(matrix)
    payload["node"] = node_id
    payload["rank"] = result.rank
    payload["pivots"] = [
        {"row": format_word(rw), "col": format_word(cw)} for rw, cw in result.pivots
    ]
    _emit(payload, args.out)
    return 0


def _cmd_trace(args) -> int:
    circuit = _load_circuit(args.infile)
    alpha = Fraction(args.alpha) if args.alpha else Fraction(1, 4)
    cfg = TraceConfig(d=args.d, n=circuit.n_x, c=args.c, alpha=alpha)
    cache = RankCache(circuit)
    trace = trace_path(circuit, cfg, cache=cache)
    verification = verify_trace(trace, circuit, cfg)
    payload = {
        "manifest": _manifest("trace", {"in": args.infile},
                              {"d": cfg.d, "n": cfg.n, "c": cfg.c,
                               "alpha": f"{cfg.alpha.numerator}/{cfg.alpha.denominator}"}),
        "trace": trace.to_json(),
        "verification": verification.to_json(),
    }
    _emit(payload, args.report)
    if not verification.ok:
        raise InvariantViolation(
            "trace verification failed: " +
            "; ".join(f"step {c.index}: {c.name}" for c in verification.failures()))
    return 0


def _cmd_hardpoly(args) -> int:
    spec = HardPolySpec(n=args.n, d=args.d)
    poly = palindrome_poly(spec, QQ)
    if args.emit_circuit:
        circuit = palindrome_circuit(spec, QQ)
        Path(args.emit_circuit).write_text(circuit_to_text(circuit))
    if args.out:
        Path(args.out).write_text(poly_to_text(poly))
    else:
        sys.stdout.write(poly_to_text(poly))
    return 0


def _cmd_translate(args) -> int:
    circuit = _load_circuit(args.infile)
    result = translate(circuit)
    Path(args.out).write_text(circuit_to_text(result))
    return 0


def _cmd_verify_ring(args) -> int:
    circuit = _load_circuit(args.infile)
    target = poly_from_text(Path(args.poly).read_text())
    rng = random.Random(args.seed)
    samples = []
    from .freealgebra import Alphabet, NcPoly, zvar

    z_alpha = Alphabet(0, circuit.n_z)
    for _ in range(args.samples):
        sample = []
        for _ in range(circuit.n_x):
            length = rng.randint(1, 2)
            word = tuple(zvar(rng.randint(1, max(circuit.n_z, 1))) for _ in range(length))
            sample.append(NcPoly.from_word(circuit.field, z_alpha, word))
        samples.append(sample)
    report = check_function_agreement(circuit, target, samples)
    payload = {
        "manifest": _manifest("verify-ring", {"in": args.infile, "f": args.poly},
                              {"samples": args.samples, "seed": args.seed}),
        "agreement": report.to_json(),
    }
    _emit(payload, args.out)
    return 0 if (report.certified and report.all_samples_agree) else 1


def _cmd_corpus(args) -> int:
    limits = CorpusLimits(max_n=args.max_n, max_degree=args.max_degree,
                          max_nodes=args.max_nodes)
    circuits = generate_corpus(args.seed, args.count, limits)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for index, circuit in enumerate(circuits):
        (out_dir / f"circuit_{index:03d}.json").write_text(circuit_to_text(circuit))
    ledger = corpus_ledger(circuits)
    payload = {
        "manifest": _manifest("corpus", {}, {
            "seed": args.seed, "count": args.count, "max_n": limits.max_n,
            "max_degree": limits.max_degree, "max_nodes": limits.max_nodes}),
        "ledger": ledger,
    }
    _emit(payload, str(out_dir / "ledger.json"))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ncclab",
                     description="exact non-commutative arithmetic circuit toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="validate a circuit file and print a summary")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_parse)

    p = sub.add_parser("eval", help="compute the circuit's formal polynomial")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("normalize", help="run the normalization pipeline")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--report")
    p.set_defaults(func=_cmd_normalize)

    p = sub.add_parser("rank", help="coefficient-matrix rank and per-gate checks")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--a", type=int, required=True)
    p.add_argument("--b", type=int, required=True)
    p.add_argument("--node", type=int)
    p.add_argument("--check-gates", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_rank)

    p = sub.add_parser("trace", help="backward rank-descent trace with verification")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--c", type=int, default=64)
    p.add_argument("--alpha", help="rational like 1/4")
    p.add_argument("--report")
    p.set_defaults(func=_cmd_trace)

    p = sub.add_parser("hardpoly", help="emit a full-rank witness polynomial")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--emit-circuit")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_hardpoly)

    p = sub.add_parser("translate", help="replace ring constants by their constant terms")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_translate)

    p = sub.add_parser("verify-ring", help="check a ring circuit against a target polynomial")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--f", dest="poly", required=True)
    p.add_argument("--samples", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_verify_ring)

    p = sub.add_parser("corpus", help="deterministic random circuit corpus")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--max-n", type=int, default=4)
    p.add_argument("--max-degree", type=int, default=6)
    p.add_argument("--max-nodes", type=int, default=40)
    p.set_defaults(func=_cmd_corpus)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    try:
        return args.func(args)
    except DomainError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except InvariantViolation as exc:
        sys.stderr.write(f"internal invariant violation: {exc}\n")
        return 2
    except FileNotFoundError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
