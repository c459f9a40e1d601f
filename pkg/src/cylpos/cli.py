"""Command-line entry point.

Exit status: 0 accepted / valid / equal, 1 rejected / mismatch (a witness
is printed), 2 unreadable input or bad flags.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from pathlib import Path

from . import colops, oracle, synth
from .colops import format_certificate, parse_certificate
from .cylnet import (
    boundary_measurements,
    format_network,
    parse_network,
    require_valid,
    slice_network,
)
from .errors import InputError
from .exactmat import (
    Matrix,
    cvar_matrix,
    format_matrix,
    format_rational,
    maximal_minors,
    parse_matrix,
    parse_rational,
    rank,
)

OK, REJECTED, BAD_INPUT = 0, 1, 2

# desk-scale limits for the exhaustive oracle run
MAX_ORACLE_COLS = 5
MAX_ORACLE_ENTRY = 3


class UsageError(Exception):
    pass


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise InputError(f"{path}: {e.strerror}") from None


def _write(path: str, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8", newline="\n")


def _load(path: str, parse):
    try:
        return parse(_read(path))
    except InputError as e:
        raise InputError(f"{path}: {e}") from None


def _conditions(M: Matrix) -> str:
    fr = format_rational
    parts = [f"rank={rank(M)}"]
    if M.m == 2:
        parts.append(f"cvar={cvar_matrix(M)}")
    else:
        parts.append(f"min-entry={fr(min(M.entries()))}")
        minors = [v for _, v in maximal_minors(M)]
        parts.append(f"min-minor={fr(min(minors)) if minors else '-'}")
    return " ".join(parts)


def _verdict(M: Matrix, out) -> synth.Verdict:
    v = synth.decide(M)
    print("ACCEPT" if v.accepted else f"REJECT {v.witness}", file=out)
    print(_conditions(M), file=out)
    return v


def cmd_check(args, out) -> int:
    M = _load(args.matrix, parse_matrix)
    return OK if _verdict(M, out).accepted else REJECTED


def cmd_synthesize(args, out) -> int:
    M = _load(args.matrix, parse_matrix)
    v = _verdict(M, out)
    if not v.accepted:
        return REJECTED
    text = format_certificate(v.certificate)
    if args.emit_cert:
        _write(args.emit_cert, text)
    else:
        out.write(text)
    if args.emit_network:
        _write(args.emit_network, format_network(colops.to_network(v.certificate)))
    return OK


def cmd_measure(args, out) -> int:
    N = _load(args.network, parse_network)
    require_valid(N)
    out.write(format_matrix(boundary_measurements(N)))
    return OK


def cmd_slice(args, out) -> int:
    N = _load(args.network, parse_network)
    result = slice_network(N, args.t)
    out.write(format_network(result.network))
    out.write("\n")
    out.write(format_matrix(boundary_measurements(result.network)))
    return OK


def cmd_verify(args, out) -> int:
    M = _load(args.matrix, parse_matrix)
    c = _load(args.cert, parse_certificate)
    problem = colops.first_difference(c, M)
    if problem is None:
        print("OK", file=out)
        return OK
    print(f"MISMATCH {problem}", file=out)
    return REJECTED


def cmd_gen(args, out) -> int:
    if args.rows not in (2, 3):
        raise UsageError("--rows must be 2 or 3")
    if args.ops < 0:
        raise UsageError("--ops must be nonnegative")
    c = oracle.random_certificate(args.rows, args.ops, args.seed)
    M = colops.apply_certificate(c)
    cert_text, matrix_text = format_certificate(c), format_matrix(M)
    N = colops.to_network(c) if (args.emit_network or args.check) else None
    if args.emit_cert:
        _write(args.emit_cert, cert_text)
    if args.emit_matrix:
        _write(args.emit_matrix, matrix_text)
    if args.emit_network:
        _write(args.emit_network, format_network(N))
    if not (args.emit_cert or args.emit_matrix or args.emit_network):
        out.write(cert_text + "\n" + matrix_text)
    if args.check:
        measured = boundary_measurements(N)
        if measured != M:
            print("MISMATCH network measures", file=out)
            out.write(format_matrix(measured))
            return REJECTED
        print("CONSISTENT", file=out)
    return OK


def cmd_oracle(args, out) -> int:
    if args.rows not in (2, 3):
        raise UsageError("--rows must be 2 or 3")
    if not args.rows <= args.cols_max <= MAX_ORACLE_COLS:
        raise UsageError(f"--cols-max must lie in {args.rows}..{MAX_ORACLE_COLS}")
    if not 0 <= args.max_entry <= MAX_ORACLE_ENTRY:
        raise UsageError(f"--max-entry must lie in 0..{MAX_ORACLE_ENTRY}")
    if args.jobs < 1:
        raise UsageError("--jobs must be at least 1")
    spec = oracle.EnumSpec(args.rows, args.cols_max, tuple(range(args.max_entry + 1)))
    report = oracle.sharded_cross_check(spec, args.jobs, networks=not args.no_networks)
    out.write(report.to_text())
    return OK if report.ok else REJECTED


def _rational(text: str) -> Fraction:
    try:
        return parse_rational(text)
    except InputError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cylpos", description="Boundary measurement matrices of cylinder networks.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("check", help="decide whether a matrix is a boundary measurement matrix")
    s.add_argument("matrix")
    s.set_defaults(func=cmd_check)

    s = sub.add_parser("synthesize", help="build a certificate (and network) for an accepted matrix")
    s.add_argument("matrix")
    s.add_argument("--emit-cert", metavar="PATH")
    s.add_argument("--emit-network", metavar="PATH")
    s.set_defaults(func=cmd_synthesize)

    s = sub.add_parser("measure", help="print a network's boundary measurement matrix")
    s.add_argument("network")
    s.set_defaults(func=cmd_measure)

    s = sub.add_parser("slice", help="cut a network at layer t")
    s.add_argument("network")
    s.add_argument("--t", type=_rational, required=True, metavar="P/Q")
    s.set_defaults(func=cmd_slice)

    s = sub.add_parser("verify", help="check that a certificate rebuilds a matrix")
    s.add_argument("matrix")
    s.add_argument("cert")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("gen", help="random certificate with its matrix and network")
    s.add_argument("--rows", type=int, required=True)
    s.add_argument("--ops", type=int, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--emit-matrix", metavar="PATH")
    s.add_argument("--emit-cert", metavar="PATH")
    s.add_argument("--emit-network", metavar="PATH")
    s.add_argument("--check", action="store_true", help="confirm the network measures the matrix")
    s.set_defaults(func=cmd_gen)

    s = sub.add_parser("oracle", help="exhaustive cross-check of the characterization")
    s.add_argument("--rows", type=int, required=True)
    s.add_argument("--cols-max", type=int, required=True)
    s.add_argument("--max-entry", type=int, required=True)
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--no-networks", action="store_true", help="skip compiling accepted certificates")
    s.set_defaults(func=cmd_oracle)
    return p


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return BAD_INPUT if e.code else OK
    try:
        return args.func(args, out)
    except (InputError, UsageError) as e:
        print(f"error: {e}", file=sys.stderr)
        return BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
