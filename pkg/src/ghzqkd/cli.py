"""Command-line front end.

Usage::

    ghzqkd decode-matrix --p 0
    ghzqkd decode-matrix --p 0.2 --symbolic --charlie-op 0
    ghzqkd simulate --config session.json --bob-bits 0xa5 --charlie-bits 0x3c --out t.json
    ghzqkd detect --n-max 12
    ghzqkd oracle --attack intercept-resend --trials 2000 --n 10 --seed 7

Exit codes: 0 success, 1 usage error, 2 input-file error, 3 internal
consistency failure. Detecting Eve is a result, not an error.

``GHZQKD_SEED`` supplies the seed when ``--seed`` is not given.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import decoding, detection_stats
from .channels import InterceptResend, NoAttack, PhaseDamping
from .protocol_ops import CoefficientTable
from .quantum_core import ConsistencyError
from .session import SessionConfig, parse_bits, run_session

EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_INTERNAL = 3

SEED_ENV = "GHZQKD_SEED"
ATTACKS = ("none", "phase-damping", "intercept-resend")


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV}={raw!r} is not an integer") from None


def _load_coeffs(path):
    if path is None:
        return CoefficientTable.default()
    try:
        return CoefficientTable.load(path)
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read coefficient file {path}: {exc}") from exc


def cmd_decode_matrix(args) -> int:
    if not 0.0 <= args.p <= 1.0:
        raise UsageError("--p must lie in [0, 1]")
    coeffs = _load_coeffs(args.coeffs)
    matrix = decoding.build_decoding_matrix(coeffs, p=args.p)
    if args.charlie_op is not None:
        if not 0 <= args.charlie_op < len(matrix.alphabet.charlie_ops):
            raise UsageError(f"--charlie-op {args.charlie_op} out of range")
        entries = {k: v for k, v in matrix.entries.items() if k[2] == args.charlie_op}
        matrix = decoding.DecodingMatrix(entries, matrix.p, matrix.alphabet)
    if args.symbolic:
        if args.p == 0:
            forms = {k: decoding._fmt_triple(v) for k, v in matrix.entries.items()}
        else:
            forms = decoding.affine_forms(coeffs)
        coef = decoding.affine_coefficients(coeffs)
        if args.format == "json":
            al = matrix.alphabet
            cells = []
            for key in sorted(matrix.entries):
                a, b, c = key
                cells.append({
                    "alice_op": al.alice_label(a),
                    "bob_symbol": al.bob_ops[b].label,
                    "charlie_symbol": al.charlie_ops[c].label,
                    "form": forms[key],
                    "constant": [x for x, _ in coef[key]],
                    "slope_in_1_minus_p": [s for _, s in coef[key]],
                })
            print(json.dumps({"p": args.p, "cells": cells}, indent=2))
        elif args.format == "csv":
            print("alice_op,bob_symbol,charlie_symbol,form")
            al = matrix.alphabet
            for (a, b, c) in sorted(matrix.entries):
                print(f'{al.alice_label(a)},{al.bob_ops[b].label},{al.charlie_ops[c].label},'
                      f'"{forms[(a, b, c)]}"')
        else:
            print(decoding.render_pretty(matrix, labels=forms))
        return 0
    render = {"csv": decoding.render_csv, "json": decoding.render_json,
              "pretty": decoding.render_pretty}[args.format]
    out = render(matrix)
    print(out, end="" if out.endswith("\n") else "\n")
    return 0


def cmd_simulate(args) -> int:
    try:
        config = SessionConfig.load(args.config)
    except (OSError, ValueError, TypeError, KeyError) as exc:
        raise InputError(f"invalid session config {args.config}: {exc}") from exc
    if args.seed is not None:
        config.seed = args.seed
    try:
        bob = parse_bits(args.bob_bits)
        charlie = parse_bits(args.charlie_bits)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    try:
        transcript = run_session(config, bob, charlie)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    text = transcript.to_json()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    print(transcript.summary(), file=sys.stderr if not args.out else sys.stdout)
    return 0


def cmd_detect(args) -> int:
    if args.n_max < 1:
        raise UsageError("--n-max must be at least 1")
    rows = [detection_stats.detection_resolution(n, k=args.threshold)
            for n in range(1, args.n_max + 1)]
    needed = rows[0].copies_needed
    if args.format == "json":
        print(json.dumps({"rows": [r.to_dict() for r in rows], "copies_needed": needed},
                         indent=2))
        return 0
    clean = (3, 3, 3)
    print(f"{'n':>4}  {'f(n)':<16} {'delta':<36} separation/delta")
    for r in rows:
        sig = tuple(float(x) for x in r.signature)
        sep = tuple(abs(s - c) / d for s, c, d in zip(sig, clean, r.delta))
        delta = "(" + ", ".join(f"{d:.6g}" for d in r.delta) + ")"
        ratio = "(" + ", ".join(f"{x:.4g}" for x in sep) + ")"
        print(f"{r.n:>4}  {decoding._fmt_triple(sig):<16} {delta:<36} {ratio}")
    print(f"copies_needed: {needed} (threshold {args.threshold} resolutions)")
    return 0


def _attack(args):
    if args.attack == "none":
        return NoAttack()
    if args.attack == "phase-damping":
        if not 0.0 <= args.p <= 1.0:
            raise UsageError("--p must lie in [0, 1]")
        return PhaseDamping(args.p, (args.target,))
    if args.attack == "intercept-resend":
        return InterceptResend(args.target)
    raise UsageError(f"unknown attack {args.attack!r}; valid: {', '.join(ATTACKS)}")


def cmd_oracle(args) -> int:
    if args.trials < 1 or args.n < 1:
        raise UsageError("--trials and --n must be at least 1")
    attack = _attack(args)
    seed = args.seed if args.seed is not None else _default_seed()
    sim = detection_stats.monte_carlo_signature(args.trials, args.n, attack, seed=seed)
    analytic = detection_stats.expected_signature(args.n)
    report = {
        "attack": args.attack,
        "trials": args.trials,
        "n": args.n,
        "seed": seed,
        "simulated": {"signature": list(sim.mean), "stderr": list(sim.stderr)},
        "analytic_intercept_resend": [float(x) for x in analytic],
    }
    if args.format == "json":
        print(json.dumps(report, indent=2))
        return 0
    print(f"attack: {args.attack}  trials: {args.trials}  copies: {args.n}  seed: {seed}")
    print("simulated (Monte Carlo): (" + ", ".join(
        f"{m:.6g} ± {s:.2g}" for m, s in zip(sim.mean, sim.stderr)) + ")")
    print("analytic (binomial mixture model) intercept-resend signature: "
          + decoding._fmt_triple(tuple(float(x) for x in analytic)))
    print("analytic vs simulated: reported side by side, not reconciled")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ghzqkd", description="Three-party GHZ key distribution toolkit")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("decode-matrix", help="print the decoding matrix at damping strength p")
    p.add_argument("--p", type=float, default=0.0)
    p.add_argument("--coeffs", default=None, help="JSON coefficient table")
    p.add_argument("--format", choices=("csv", "json", "pretty"), default="pretty")
    p.add_argument("--symbolic", action="store_true", help="print affine forms in (1-p)")
    p.add_argument("--charlie-op", type=int, default=None)
    p.set_defaults(func=cmd_decode_matrix)

    p = sub.add_parser("simulate", help="run a key-distribution session")
    p.add_argument("--config", required=True)
    p.add_argument("--bob-bits", required=True)
    p.add_argument("--charlie-bits", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("detect", help="interception statistics per copy count")
    p.add_argument("--n-max", type=int, default=12)
    p.add_argument("--threshold", type=float, default=detection_stats.DEFAULT_SIGMA_THRESHOLD)
    p.add_argument("--format", choices=("pretty", "json"), default="pretty")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("oracle", help="Monte Carlo signature under an attack")
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--attack", default="intercept-resend")
    p.add_argument("--p", type=float, default=1.0, help="damping strength for phase-damping")
    p.add_argument("--target", choices=("B", "C"), default="B")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--format", choices=("pretty", "json"), default="pretty")
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"ghzqkd: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InputError as exc:
        print(f"ghzqkd: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ConsistencyError as exc:
        print(f"ghzqkd: internal consistency failure: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
