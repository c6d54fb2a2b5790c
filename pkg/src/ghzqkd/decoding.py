"""Decoding matrix construction, symbol decoding and table rendering."""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .channels import NoAttack, PhaseDamping, transmit
from .protocol_ops import (
    PARTIES,
    CoefficientTable,
    LocalUnitaryParams,
    PartyRole,
    build_unitary,
    closed_form_payoff,
    expected_payoff,
)
from .quantum_core import CHAIN_TOL, ConsistencyError

DEFAULT_TOL = 0.25


@dataclass(frozen=True)
class Symbol:
    label: str
    theta: float


@dataclass(frozen=True)
class OperatorAlphabet:
    alice_ops: tuple = (
        LocalUnitaryParams(0.0, 0.0, 0.0),
        LocalUnitaryParams(math.pi, math.pi, math.pi),
    )
    bob_ops: tuple = (Symbol("m1", 0.0), Symbol("m2", math.pi))
    charlie_ops: tuple = (Symbol("m3", 0.0), Symbol("m4", math.pi))

    def __post_init__(self):
        object.__setattr__(self, "alice_ops", tuple(self.alice_ops))
        object.__setattr__(self, "bob_ops", tuple(self.bob_ops))
        object.__setattr__(self, "charlie_ops", tuple(self.charlie_ops))
        for ops in (self.bob_ops, self.charlie_ops):
            labels = [s.label for s in ops]
            if len(set(labels)) != len(labels):
                raise ValueError(f"duplicate symbol labels {labels}")
        if not (self.alice_ops and self.bob_ops and self.charlie_ops):
            raise ValueError("every party needs at least one operator")
        for a in self.alice_ops:
            a.validate(PartyRole.ALICE)
        for s in self.bob_ops + self.charlie_ops:
            LocalUnitaryParams(s.theta).validate(PartyRole.BOB)

    def alice_label(self, index: int) -> str:
        a = self.alice_ops[index]
        return f"U_A({_angle(a.theta)},{_angle(a.alpha)},{_angle(a.beta)})"

    def unitaries(self, a: int, b: int, c: int):
        return (
            build_unitary(PartyRole.ALICE, self.alice_ops[a]),
            build_unitary(PartyRole.BOB, LocalUnitaryParams(self.bob_ops[b].theta)),
            build_unitary(PartyRole.CHARLIE, LocalUnitaryParams(self.charlie_ops[c].theta)),
        )

    def cells(self):
        return itertools.product(
            range(len(self.alice_ops)), range(len(self.bob_ops)), range(len(self.charlie_ops))
        )

    def to_dict(self) -> dict:
        return {
            "alice_ops": [[a.theta, a.alpha, a.beta] for a in self.alice_ops],
            "bob_ops": [[s.label, s.theta] for s in self.bob_ops],
            "charlie_ops": [[s.label, s.theta] for s in self.charlie_ops],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "OperatorAlphabet":
        default = cls()
        alice = data.get("alice_ops")
        bob = data.get("bob_ops")
        charlie = data.get("charlie_ops")
        return cls(
            tuple(LocalUnitaryParams(*map(float, a)) for a in alice) if alice else default.alice_ops,
            tuple(Symbol(str(l), float(t)) for l, t in bob) if bob else default.bob_ops,
            tuple(Symbol(str(l), float(t)) for l, t in charlie) if charlie else default.charlie_ops,
        )


def _angle(x: float) -> str:
    if x == 0:
        return "0"
    ratio = Fraction(x / math.pi).limit_denominator(12)
    if abs(float(ratio) * math.pi - x) > 1e-12:
        return f"{x:.12g}"
    if ratio == 1:
        return "pi"
    if ratio == -1:
        return "-pi"
    return f"{ratio}pi"


@dataclass(frozen=True)
class DecodingMatrix:
    entries: dict
    p: float
    alphabet: OperatorAlphabet = field(default_factory=OperatorAlphabet)

    def row(self, alice_index: int) -> dict:
        return {(b, c): v for (a, b, c), v in self.entries.items() if a == alice_index}

    def min_row_separation(self) -> float:
        """Smallest max-norm distance between two cells sharing an Alice row."""
        best = math.inf
        for a in range(len(self.alphabet.alice_ops)):
            vals = list(self.row(a).values())
            for x, y in itertools.combinations(vals, 2):
                best = min(best, max(abs(u - v) for u, v in zip(x, y)))
        return best


def build_decoding_matrix(
    coeffs: CoefficientTable | None = None,
    alphabet: OperatorAlphabet | None = None,
    p: float = 0.0,
    targets: Sequence[PartyRole] = (PartyRole.BOB,),
) -> DecodingMatrix:
    """Expected payoff triple for every operator combination.

    Each cell runs the full density-matrix pipeline. With a single damped
    line it is also checked against :func:`closed_form_payoff`.
    """
    coeffs = coeffs or CoefficientTable.default()
    alphabet = alphabet or OperatorAlphabet()
    attack = PhaseDamping(p, tuple(targets)) if p > 0 else NoAttack()
    entries = {}
    for a, b, c in alphabet.cells():
        rho = transmit(*alphabet.unitaries(a, b, c), attack)
        triple = tuple(expected_payoff(k, rho, coeffs) for k in PARTIES)
        if len(targets) == 1 or p == 0:
            ap = alphabet.alice_ops[a]
            for k, got in zip(PARTIES, triple):
                want = closed_form_payoff(
                    k, ap.theta, ap.alpha, ap.beta,
                    alphabet.bob_ops[b].theta, alphabet.charlie_ops[c].theta, p, coeffs,
                )
                if abs(got - want) > CHAIN_TOL:
                    raise ConsistencyError(
                        f"cell {(a, b, c)} party {k.value}: pipeline {got!r} vs closed form {want!r}"
                    )
        entries[(a, b, c)] = triple
    return DecodingMatrix(entries, p, alphabet)


@dataclass(frozen=True)
class Decoded:
    bob_symbol: str
    charlie_symbol: str
    residual: float
    bob_index: int
    charlie_index: int
    kind = "decoded"


@dataclass(frozen=True)
class EveDetected:
    best_residual: float
    kind = "eve-detected"


@dataclass(frozen=True)
class Ambiguous:
    candidates: tuple
    kind = "ambiguous"


def verdict_to_dict(v) -> dict:
    if isinstance(v, Decoded):
        return {
            "kind": v.kind, "bob_symbol": v.bob_symbol, "charlie_symbol": v.charlie_symbol,
            "residual": v.residual,
        }
    if isinstance(v, EveDetected):
        return {"kind": v.kind, "best_residual": v.best_residual}
    return {"kind": v.kind, "candidates": [list(c) for c in v.candidates]}


def decode(measured, alice_index: int, matrix: DecodingMatrix, tol: float = DEFAULT_TOL):
    """Match a measured triple against Alice's row of the library.

    Returns :class:`Decoded` when exactly one cell lies within ``tol`` in
    max-norm, :class:`EveDetected` when none does and :class:`Ambiguous` when
    several do.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    measured = tuple(float(x) for x in measured)
    dist = {
        key: max(abs(m - v) for m, v in zip(measured, triple))
        for key, triple in matrix.row(alice_index).items()
    }
    hits = sorted(key for key, d in dist.items() if d <= tol)
    if not hits:
        return EveDetected(min(dist.values()))
    if len(hits) > 1:
        return Ambiguous(tuple(hits))
    b, c = hits[0]
    al = matrix.alphabet
    return Decoded(al.bob_ops[b].label, al.charlie_ops[c].label, dist[hits[0]], b, c)


# -- rendering ---------------------------------------------------------------


def _fmt(x: float) -> str:
    # 12 significant digits; rounding residue around zero prints as 0
    if abs(x) < 1e-12:
        x = 0.0
    return f"{x:.12g}"


def matrix_rows(matrix: DecodingMatrix) -> list[dict]:
    al = matrix.alphabet
    rows = []
    for (a, b, c), triple in sorted(matrix.entries.items()):
        rows.append({
            "alice_op": al.alice_label(a),
            "bob_symbol": al.bob_ops[b].label,
            "charlie_symbol": al.charlie_ops[c].label,
            "A": triple[0], "B": triple[1], "C": triple[2],
        })
    return rows


def render_csv(matrix: DecodingMatrix) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["alice_op", "bob_symbol", "charlie_symbol", "A", "B", "C"])
    for r in matrix_rows(matrix):
        writer.writerow([r["alice_op"], r["bob_symbol"], r["charlie_symbol"],
                         _fmt(r["A"]), _fmt(r["B"]), _fmt(r["C"])])
    return buf.getvalue()


def render_json(matrix: DecodingMatrix) -> str:
    rows = matrix_rows(matrix)
    for r in rows:
        for k in "ABC":
            r[k] = float(_fmt(r[k]))
    return json.dumps({"p": matrix.p, "cells": rows}, indent=2)


def _fmt_triple(t) -> str:
    return "(" + ",".join(_fmt(x) for x in t) + ")"


def render_pretty(matrix: DecodingMatrix, labels: dict | None = None) -> str:
    """Alice rows by (Charlie, Bob) columns.

    ``labels`` optionally replaces the numeric cell text, keyed like
    ``matrix.entries``.
    """
    al = matrix.alphabet
    if labels is None:
        labels = {key: _fmt_triple(v) for key, v in matrix.entries.items()}
    charlies = sorted({c for _, _, c in matrix.entries})
    cols = [(b, c) for c in charlies for b in range(len(al.bob_ops))]
    header = ["Alice's operation"] + [
        f"{al.charlie_ops[c].label}/{al.bob_ops[b].label}" for b, c in cols
    ]
    body = []
    for a in range(len(al.alice_ops)):
        body.append([al.alice_label(a)] + [labels[(a, b, c)] for b, c in cols])
    widths = [max(len(r[i]) for r in [header] + body) for i in range(len(header))]
    lines = [" | ".join(s.ljust(w) for s, w in zip(r, widths)) for r in [header] + body]
    lines.insert(1, "-+-".join("-" * w for w in widths))
    return "\n".join(lines)


# -- affine forms in (1 - p) ------------------------------------------------


def _frac(x: float) -> Fraction:
    f = Fraction(x).limit_denominator(1000)
    if abs(float(f) - x) > 1e-9:
        raise ValueError(f"{x!r} has no small rational form")
    return f


def affine_coefficients(coeffs=None, alphabet=None, targets=(PartyRole.BOB,)) -> dict:
    """Per cell and party, ``(constant, slope)`` with payoff = constant + slope*(1-p)."""
    at0 = build_decoding_matrix(coeffs, alphabet, 0.0, targets)
    at1 = build_decoding_matrix(coeffs, alphabet, 1.0, targets)
    out = {}
    for key in at0.entries:
        out[key] = tuple(
            (c1, c0 - c1) for c0, c1 in zip(at0.entries[key], at1.entries[key])
        )
    return out


def format_affine(constant: float, slope: float) -> str:
    """Render constant + slope*(1-p) as text, e.g. ``5/2-5/2(1-p)``."""
    c, s = _frac(constant), _frac(slope)
    if s == 0:
        return str(c)
    mag = "" if abs(s) == 1 else str(abs(s))
    term = f"{mag}(1-p)"
    if c == 0:
        return term if s > 0 else "-" + term
    return f"{c}{'+' if s > 0 else '-'}{term}"


def affine_forms(coeffs=None, alphabet=None, targets=(PartyRole.BOB,)) -> dict:
    return {
        key: "(" + ",".join(format_affine(c, s) for c, s in triple) + ")"
        for key, triple in affine_coefficients(coeffs, alphabet, targets).items()
    }
