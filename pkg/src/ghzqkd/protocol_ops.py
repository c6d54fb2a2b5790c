"""GHZ state, party unitaries, GHZ measurement basis and payoff operators."""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .quantum_core import (
    CHAIN_TOL,
    ConsistencyError,
    check_density,
    dagger,
    ket,
    outer,
    tensor_all,
    trace,
)

OUTCOMES = ("000", "001", "010", "011", "100", "101", "110", "111")

_IMAG_TOL = 1e-10


class PartyRole(str, enum.Enum):
    ALICE = "A"
    BOB = "B"
    CHARLIE = "C"

    @property
    def qubit(self) -> int:
        return "ABC".index(self.value)


PARTIES = (PartyRole.ALICE, PartyRole.BOB, PartyRole.CHARLIE)


@dataclass(frozen=True)
class LocalUnitaryParams:
    theta: float = 0.0
    alpha: float = 0.0
    beta: float = 0.0

    def validate(self, role: PartyRole) -> None:
        if not 0.0 <= self.theta <= math.pi:
            raise ValueError(f"theta={self.theta!r} outside [0, pi]")
        for name in ("alpha", "beta"):
            value = getattr(self, name)
            if not -math.pi <= value <= math.pi:
                raise ValueError(f"{name}={value!r} outside [-pi, pi]")
        if role is not PartyRole.ALICE and (self.alpha != 0.0 or self.beta != 0.0):
            raise ValueError(f"party {role.value} takes no phase parameters")


_DEFAULT_PAYOFFS = {
    "A": {"000": 3, "001": 2, "010": 2, "011": 0, "100": 5, "101": 4, "110": 4, "111": 1},
    "B": {"000": 3, "001": 2, "010": 5, "011": 4, "100": 2, "101": 0, "110": 4, "111": 1},
    "C": {"000": 3, "001": 5, "010": 2, "011": 4, "100": 2, "101": 4, "110": 0, "111": 1},
}


@dataclass(frozen=True)
class CoefficientTable:
    """Real payoff attached to each GHZ outcome, one set per party.

    ``payoff["A"]["100"]`` is the value Alice's measurement operator assigns
    to the outcome ``100``.
    """

    payoff: Mapping[str, Mapping[str, float]]

    def __post_init__(self):
        clean = {}
        for k in "ABC":
            if k not in self.payoff:
                raise ValueError(f"coefficient table is missing party {k!r}")
            row = self.payoff[k]
            missing = [rst for rst in OUTCOMES if rst not in row]
            if missing:
                raise ValueError(f"party {k!r} is missing outcomes {missing}")
            extra = set(row) - set(OUTCOMES)
            if extra:
                raise ValueError(f"party {k!r} has unknown outcomes {sorted(extra)}")
            values = {}
            for rst in OUTCOMES:
                v = row[rst]
                if isinstance(v, bool) or not isinstance(v, (int, float)):
                    raise ValueError(f"payoff {k}/{rst} is not a number: {v!r}")
                if not math.isfinite(v):
                    raise ValueError(f"payoff {k}/{rst} is not finite")
                values[rst] = float(v)
            clean[k] = values
        extra = set(self.payoff) - set("ABC")
        if extra:
            raise ValueError(f"unknown parties {sorted(extra)}")
        object.__setattr__(self, "payoff", clean)

    @classmethod
    def default(cls) -> "CoefficientTable":
        return cls(_DEFAULT_PAYOFFS)

    @classmethod
    def from_json(cls, text: str) -> "CoefficientTable":
        data = json.loads(text)
        if not isinstance(data, dict):
            raise ValueError("coefficient document must be a JSON object")
        return cls(data)

    @classmethod
    def load(cls, path) -> "CoefficientTable":
        return cls.from_json(Path(path).read_text())

    def to_dict(self) -> dict:
        return {k: dict(v) for k, v in self.payoff.items()}

    def __getitem__(self, party) -> Mapping[str, float]:
        return self.payoff[PartyRole(party).value]

    def vector(self, party) -> np.ndarray:
        """Payoffs ordered like :data:`OUTCOMES`."""
        row = self[party]
        return np.array([row[rst] for rst in OUTCOMES])

    def bounds(self, party) -> tuple[float, float]:
        v = self.vector(party)
        return float(v.min()), float(v.max())


def ghz_initial_state() -> np.ndarray:
    """(|000> + i|111>)/sqrt(2)."""
    return (ket("000") + 1j * ket("111")) / math.sqrt(2)


def build_unitary(role: PartyRole, params: LocalUnitaryParams) -> np.ndarray:
    """cos(theta/2) R + sin(theta/2) P for the given party.

    Columns are the images of |0> and |1>. Alice's R carries the phases
    exp(+-i alpha) and her P maps |0> -> exp(i(pi/2 - beta))|1>,
    |1> -> exp(i(pi/2 + beta))|0>. Bob and Charlie share R = I and
    P: |0> -> |1>, |1> -> -|0>.
    """
    role = PartyRole(role)
    params.validate(role)
    if role is PartyRole.ALICE:
        a, b = params.alpha, params.beta
        r = np.array([[np.exp(1j * a), 0], [0, np.exp(-1j * a)]])
        p = np.array(
            [[0, np.exp(1j * (math.pi / 2 + b))], [np.exp(1j * (math.pi / 2 - b)), 0]]
        )
    else:
        r = np.eye(2, dtype=complex)
        p = np.array([[0, -1], [1, 0]], dtype=complex)
    half = params.theta / 2
    return math.cos(half) * r + math.sin(half) * p


def unitary_A(theta: float, alpha: float = 0.0, beta: float = 0.0) -> np.ndarray:
    return build_unitary(PartyRole.ALICE, LocalUnitaryParams(theta, alpha, beta))


def unitary_B(theta: float) -> np.ndarray:
    return build_unitary(PartyRole.BOB, LocalUnitaryParams(theta))


def unitary_C(theta: float) -> np.ndarray:
    return build_unitary(PartyRole.CHARLIE, LocalUnitaryParams(theta))


def _complement(rst: str) -> str:
    return "".join("1" if b == "0" else "0" for b in rst)


def ghz_phase_sign(rst: str, literal: bool = False) -> int:
    """Sign of the ``i`` in psi_rst = (|rst> + sign * i |~rst>)/sqrt(2).

    The default sign is +1 when the B and C bits agree; with the unitaries of
    :func:`build_unitary` this is the labelling under which the measured
    payoffs match :func:`closed_form_payoff` for every angle and damping
    strength. ``literal=True`` keys the sign on the A and B bits instead
    (+1 for 000, 001, 110, 111), which assigns the labels within the
    {001, 110} and {011, 100} pairs the other way round.
    """
    r, s, t = rst
    if literal:
        return 1 if r == s else -1
    return 1 if s == t else -1


def ghz_vector(rst: str, literal: bool = False) -> np.ndarray:
    sign = ghz_phase_sign(rst, literal)
    return (ket(rst) + sign * 1j * ket(_complement(rst))) / math.sqrt(2)


@dataclass(frozen=True)
class GhzBasis:
    vectors: dict
    projectors: dict

    @classmethod
    def build(cls, literal: bool = False) -> "GhzBasis":
        vectors = {rst: ghz_vector(rst, literal) for rst in OUTCOMES}
        return cls(vectors, {rst: outer(v) for rst, v in vectors.items()})

    @property
    def matrix(self) -> np.ndarray:
        """Basis vectors as columns, ordered like :data:`OUTCOMES`."""
        return np.column_stack([self.vectors[rst] for rst in OUTCOMES])

    def probabilities(self, rho) -> np.ndarray:
        """Born probabilities Tr(pi_rst rho), ordered like :data:`OUTCOMES`."""
        rho = np.asarray(rho)
        return np.array(
            [np.real(np.vdot(self.vectors[rst], rho @ self.vectors[rst])) for rst in OUTCOMES]
        )


GHZ_BASIS = GhzBasis.build()


def payoff_operator(
    k: PartyRole, coeffs: CoefficientTable, basis: GhzBasis = GHZ_BASIS
) -> np.ndarray:
    row = coeffs[k]
    out = np.zeros((8, 8), dtype=complex)
    for rst in OUTCOMES:
        out += row[rst] * basis.projectors[rst]
    return out


def evolve(rho_in, uA, uB, uC) -> np.ndarray:
    """Conjugate a three-qubit density matrix by U_A ⊗ U_B ⊗ U_C."""
    u = tensor_all(uA, uB, uC)
    return check_density(u @ np.asarray(rho_in) @ dagger(u), tol=CHAIN_TOL)


def expected_payoff(
    k: PartyRole, rho_f, coeffs: CoefficientTable, basis: GhzBasis = GHZ_BASIS
) -> float:
    """Tr(P^k rho_f).

    Raises
    ------
    ConsistencyError
        If the trace has an imaginary part of 1e-10 or more.
    """
    value = trace(payoff_operator(k, coeffs, basis) @ np.asarray(rho_f))
    if abs(value.imag) >= _IMAG_TOL:
        raise ConsistencyError(f"payoff has imaginary part {value.imag!r}")
    return value.real


def closed_form_payoff(
    k: PartyRole,
    thetaA: float,
    alphaA: float,
    betaA: float,
    thetaB: float,
    thetaC: float,
    p: float,
    coeffs: CoefficientTable,
) -> float:
    """Analytic payoff with single-line phase damping of strength ``p``.

    Written out term by term from the weights c_i = cos^2(theta_i/2),
    s_i = sin^2(theta_i/2) and the surviving coherence mu = 1 - p. Shares no
    code with :func:`expected_payoff` so the two can check each other.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p={p!r} outside [0, 1]")
    d = coeffs[k]
    cA, sA = math.cos(thetaA / 2) ** 2, math.sin(thetaA / 2) ** 2
    cB, sB = math.cos(thetaB / 2) ** 2, math.sin(thetaB / 2) ** 2
    cC, sC = math.cos(thetaC / 2) ** 2, math.sin(thetaC / 2) ** 2
    mu = 1.0 - p
    ca2 = math.cos(2 * alphaA)
    cb2 = math.cos(2 * betaA)

    def pair(x, y, sign, phase):
        return ((d[x] + d[y]) + sign * (d[x] - d[y]) * mu * phase) / 2

    return (
        cA * cB * cC * pair("000", "111", +1, ca2)
        + sA * sB * sC * pair("000", "111", -1, cb2)
        + cA * cB * sC * pair("001", "110", +1, ca2)
        + sA * sB * cC * pair("001", "110", -1, cb2)
        + sA * cB * cC * pair("100", "011", +1, cb2)
        + cA * sB * sC * pair("100", "011", -1, ca2)
        + sA * cB * sC * pair("101", "010", +1, cb2)
        + cA * sB * cC * pair("101", "010", -1, ca2)
    )
