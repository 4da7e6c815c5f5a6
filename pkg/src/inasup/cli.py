"""Command-line interface.

Subcommands: atoms, lambda, simulate, opscan, seedwords, build, verify.
Exit codes: 0 success/verified, 1 asymmetry-fail/unverified, 2 budget
exceeded, 64 usage error.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np

from .dynamics import atom_table, params
from .engine import Certificate, CertificateError, Outcome, build_inasup, seed_words, verify_certificate
from .optimizer import standard_family
from .rationals import format_rational, parse_rational
from .simulate import (
    detect_onset,
    max_op_summary,
    op_scan,
    order_parameter,
    orbit_to_csv,
    rows_to_csv,
    simulate_orbit,
)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_BUDGET = 2
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class UsageError(ValueError):
    pass


def _parse_epsilon(text: str):
    if "." in text:
        raise UsageError(
            f"epsilon must be an exact fraction p/q, got {text!r} (e.g. write 11/25, not 0.44)"
        )
    try:
        eps = parse_rational(text)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if not (0 <= eps < parse_rational("1/2")):
        raise UsageError(f"epsilon must lie in [0, 1/2), got {text}")
    return eps


def _parse_word(text: str):
    try:
        return tuple(int(a) for a in text.split(","))
    except ValueError as exc:
        raise UsageError(f"word must be comma-separated atom labels, got {text!r}") from exc


def _parse_grid(text: str):
    try:
        lo, hi, n = text.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
    except ValueError as exc:
        raise UsageError(f"grid must be lo:hi:n, got {text!r}") from exc
    if n < 2 or not lo < hi:
        raise UsageError(f"need lo < hi and n >= 2 in grid, got {text!r}")
    return [lo + (hi - lo) * k / (n - 1) for k in range(n)]


def _threads(args) -> int:
    env = os.environ.get("INASUP_THREADS")
    if env is not None:
        return max(1, int(env))
    if args.threads is not None:
        return max(1, args.threads)
    return os.cpu_count() or 1


def _write_out(text: str, path):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _cmd_atoms(args) -> int:
    table = atom_table(args.dim, 0)
    lines = table.dump_lines()
    _write_out("\n".join([f"count={len(table)}"] + lines) + "\n", args.out)
    return EXIT_OK


def _cmd_lambda(args) -> int:
    family = standard_family(args.dim)
    cards = family.cardinalities()
    uniform = len(set(cards)) == 1
    lines = [f"D={args.dim} rows={family.row_count}"]
    if uniform:
        lines.append(f"#Lambda_i={cards[0]} (identical across all i)")
    else:
        lines.append("#Lambda_i varies: " + " ".join(str(c) for c in cards))
    lines.append(f"#Lambda'_i={family.semi_cardinalities()[0]}")
    _write_out("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def _initial_condition(args, dim):
    rng = np.random.default_rng(args.seed)
    return tuple(rng.uniform(0.0, 1.0, dim))


def _cmd_simulate(args) -> int:
    p = params(args.dim, _parse_epsilon(args.eps))
    table = atom_table(args.dim, p.epsilon)
    x0 = _initial_condition(args, args.dim)
    orbit = simulate_orbit(p, x0, args.discard, args.keep, table, seed=args.seed)
    _write_out(orbit_to_csv(orbit), args.out)
    op = order_parameter(orbit, args.keep)
    print(f"order_parameter={op.value:.6g} T={op.horizon}", file=sys.stderr)
    return EXIT_OK


def _cmd_opscan(args) -> int:
    grid = _parse_grid(args.eps_grid)
    horizons = [int(t) for t in args.T.split(",")]
    rows = op_scan(args.dim, grid, args.n_initial, horizons, args.seed, threads=_threads(args))
    _write_out(rows_to_csv(rows), args.out)
    if args.report_onset:
        onset = detect_onset(rows)
        print(f"onset_epsilon={onset}", file=sys.stderr)
        for eps, top in max_op_summary(rows):
            print(f"max_op {eps:.6g} {top:.6g}", file=sys.stderr)
    return EXIT_OK


def _cmd_seedwords(args) -> int:
    p = params(args.dim, _parse_epsilon(args.eps))
    table = atom_table(args.dim, p.epsilon)
    family = standard_family(args.dim)
    rng = np.random.default_rng(args.seed)
    words = []
    for _ in range(args.tries):
        x0 = tuple(rng.uniform(0.0, 1.0, args.dim))
        orbit = simulate_orbit(p, x0, args.discard, args.keep, table)
        if order_parameter(orbit, args.keep).value <= args.op_threshold:
            continue
        words = seed_words(p, orbit.word, args.cyl_len, table, family, count=args.count)
        if words:
            break
    if not words:
        print("no positive-OP trajectory found; try another --seed", file=sys.stderr)
        return EXIT_FAIL
    _write_out("\n".join(",".join(str(a) for a in w) for w in words) + "\n", args.out)
    return EXIT_OK


def _cmd_build(args) -> int:
    p = params(args.dim, _parse_epsilon(args.eps))
    word = _parse_word(args.word)
    table = atom_table(args.dim, p.epsilon)
    family = standard_family(args.dim)
    t0 = time.perf_counter()
    report = build_inasup(
        p,
        word,
        max_cardinality=args.max_card,
        use_semi_opt=args.semi_opt == "on",
        table=table,
        family=family,
    )
    wall = time.perf_counter() - t0
    print(
        f"D={p.dim} eps={format_rational(p.epsilon)} word={args.word} "
        f"outcome={report.outcome.value} cardinality={report.final_cardinality} "
        f"steps={report.steps} time={wall:.3f}s"
    )
    if report.outcome is Outcome.SUCCESS:
        if args.out is not None:
            with open(args.out, "w") as fh:
                fh.write(report.certificate.to_text())
            print(f"certificate written to {args.out}")
        return EXIT_OK
    if report.outcome is Outcome.ASYMMETRY_FAIL:
        return EXIT_FAIL
    return EXIT_BUDGET


def _cmd_verify(args) -> int:
    try:
        with open(args.certificate) as fh:
            cert = Certificate.from_text(fh.read())
    except OSError as exc:
        print(f"cannot read certificate: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CertificateError as exc:
        print(f"malformed certificate: {exc}", file=sys.stderr)
        return EXIT_FAIL
    ok = verify_certificate(cert)
    print("VERIFIED" if ok else "FAILED")
    return EXIT_OK if ok else EXIT_FAIL


def _build_parser() -> _Parser:
    parser = _Parser(prog="inasup", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(sp, eps=True):
        sp.add_argument("--dim", type=int, required=True, help="torus dimension D")
        if eps:
            sp.add_argument("--eps", type=str, required=True, help="coupling as exact fraction p/q")
        sp.add_argument("--out", type=str, default=None, help="output path (default stdout)")

    sp = sub.add_parser("atoms", help="enumerate the atom partition")
    sp.add_argument("--dim", type=int, required=True)
    sp.add_argument("--out", type=str, default=None)
    sp.set_defaults(func=_cmd_atoms)

    sp = sub.add_parser("lambda", help="multiplier family cardinalities")
    sp.add_argument("--dim", type=int, required=True)
    sp.add_argument("--out", type=str, default=None)
    sp.set_defaults(func=_cmd_lambda)

    sp = sub.add_parser("simulate", help="simulate one orbit, dump CSV")
    add_common(sp)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--discard", type=int, default=15000, help="transient iterates dropped")
    sp.add_argument("--keep", type=int, default=5000, help="iterates recorded")
    sp.set_defaults(func=_cmd_simulate)

    sp = sub.add_parser("opscan", help="order-parameter scan over a coupling grid")
    sp.add_argument("--dim", type=int, required=True)
    sp.add_argument("--eps-grid", type=str, required=True, help="float grid lo:hi:n")
    sp.add_argument("--n-initial", type=int, default=100)
    sp.add_argument("--T", type=str, default="10000,100000", help="comma-separated horizons")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--threads", type=int, default=None)
    sp.add_argument("--report-onset", action="store_true")
    sp.add_argument("--out", type=str, default=None)
    sp.set_defaults(func=_cmd_opscan)

    sp = sub.add_parser("seedwords", help="cylinder words from a positive-OP trajectory")
    add_common(sp)
    sp.add_argument("--cyl-len", type=int, required=True, help="word length")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--count", type=int, default=None, help="stop after this many words")
    sp.add_argument("--tries", type=int, default=20, help="initial conditions to try")
    sp.add_argument("--discard", type=int, default=15000)
    sp.add_argument("--keep", type=int, default=5000)
    sp.add_argument("--op-threshold", type=float, default=0.02)
    sp.set_defaults(func=_cmd_seedwords)

    sp = sub.add_parser("build", help="construct an invariant asymmetric union")
    add_common(sp)
    sp.add_argument("--word", type=str, required=True, help="comma-separated atom labels")
    sp.add_argument("--max-card", type=int, default=10_000_000)
    sp.add_argument("--semi-opt", choices=("on", "off"), default="off")
    sp.add_argument("--threads", type=int, default=None, help="accepted; construction is sequential")
    sp.set_defaults(func=_cmd_build)

    sp = sub.add_parser("verify", help="verify a certificate file")
    sp.add_argument("certificate", type=str)
    sp.set_defaults(func=_cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
