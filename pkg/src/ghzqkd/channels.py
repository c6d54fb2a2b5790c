"""Eavesdropper models acting on the return lines from Bob and Charlie.

Two attacks are modelled: a phase-damping channel of strength ``p`` on one or
more qubits, and an intercept-resend attack in which Eve measures one qubit in
the computational basis and forwards a fresh qubit in the state she saw.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .protocol_ops import PartyRole, evolve, ghz_initial_state
from .quantum_core import CHAIN_TOL, check_density, check_state, dagger, outer, tensor_all

_I2 = np.eye(2, dtype=complex)


@dataclass(frozen=True)
class NoAttack:
    name = "none"


@dataclass(frozen=True)
class PhaseDamping:
    p: float
    targets: tuple = (PartyRole.BOB,)
    name = "phase-damping"

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p={self.p!r} outside [0, 1]")
        targets = tuple(PartyRole(t) for t in self.targets)
        if not targets:
            raise ValueError("phase damping needs at least one target qubit")
        if len(set(targets)) != len(targets):
            raise ValueError("duplicate phase-damping targets")
        object.__setattr__(self, "targets", targets)


@dataclass(frozen=True)
class InterceptResend:
    target: PartyRole = PartyRole.BOB
    name = "intercept-resend"

    def __post_init__(self):
        object.__setattr__(self, "target", PartyRole(self.target))


AttackKind = Union[NoAttack, PhaseDamping, InterceptResend]


def attack_to_dict(attack: AttackKind) -> dict:
    if isinstance(attack, PhaseDamping):
        return {"kind": attack.name, "p": attack.p, "targets": [t.value for t in attack.targets]}
    if isinstance(attack, InterceptResend):
        return {"kind": attack.name, "target": attack.target.value}
    return {"kind": "none"}


def attack_from_dict(data) -> AttackKind:
    if data is None:
        return NoAttack()
    if isinstance(data, str):
        data = {"kind": data}
    kind = data.get("kind", "none")
    if kind == "none":
        return NoAttack()
    if kind == "phase-damping":
        targets = data.get("targets", ["B"])
        return PhaseDamping(float(data["p"]), tuple(targets))
    if kind == "intercept-resend":
        return InterceptResend(data.get("target", "B"))
    raise ValueError(f"unknown attack kind {kind!r}")


def kraus_operators(p: float) -> list[np.ndarray]:
    """sqrt(p)|0><0|, sqrt(p)|1><1|, sqrt(1-p) I."""
    return [
        math.sqrt(p) * np.diag([1.0, 0.0]).astype(complex),
        math.sqrt(p) * np.diag([0.0, 1.0]).astype(complex),
        math.sqrt(1.0 - p) * _I2,
    ]


def _on_qubit(op, qubit: int, n: int = 3) -> np.ndarray:
    return tensor_all(*[op if q == qubit else _I2 for q in range(n)])


def damp_qubit(rho, p: float, qubit: int) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    n = int(round(math.log2(rho.shape[0])))
    out = np.zeros_like(rho)
    for a in kraus_operators(p):
        full = _on_qubit(a, qubit, n)
        out += full @ rho @ dagger(full)
    return out


def phase_damp(rho, params: PhaseDamping) -> np.ndarray:
    """Apply the damping channel to each target qubit in turn."""
    out = np.asarray(rho, dtype=complex)
    for target in params.targets:
        out = damp_qubit(out, params.p, target.qubit)
    return check_density(out, tol=CHAIN_TOL)


def dephase(rho, qubit: PartyRole) -> np.ndarray:
    """Ensemble form of a computational-basis measurement on one qubit."""
    return phase_damp(rho, PhaseDamping(1.0, (qubit,)))


def intercept_resend(state, qubit: PartyRole, rng: np.random.Generator):
    """Eve measures ``qubit`` in the computational basis and resends.

    The resent qubit is |outcome>, which is exactly what the collapsed joint
    state already holds on that line, so resending leaves the collapsed state
    as is.

    Returns
    -------
    (numpy.ndarray, int)
        Collapsed, renormalized state and Eve's measured bit.
    """
    psi = check_state(state, tol=CHAIN_TOL)
    q = PartyRole(qubit).qubit
    n = int(round(math.log2(psi.size)))
    bits = (np.arange(psi.size) >> (n - 1 - q)) & 1
    p1 = float(np.sum(np.abs(psi[bits == 1]) ** 2))
    outcome = int(rng.random() < p1)
    collapsed = np.where(bits == outcome, psi, 0)
    return collapsed / np.linalg.norm(collapsed), outcome


def transmit(uA, uB, uC, attack: AttackKind = NoAttack(), rho_in=None) -> np.ndarray:
    """Final density matrix Alice measures.

    Bob and Charlie act first, the attack hits the returning qubits, then
    Alice applies her operator. Since the attack never touches qubit A this
    equals the single joint conjugation followed by the channel.
    """
    if rho_in is None:
        rho_in = outer(ghz_initial_state())
    rho = evolve(rho_in, _I2, uB, uC)
    if isinstance(attack, PhaseDamping):
        rho = phase_damp(rho, attack)
    elif isinstance(attack, InterceptResend):
        rho = dephase(rho, attack.target)
    return evolve(rho, uA, _I2, _I2)


def transmit_sample(uA, uB, uC, attack: AttackKind, rng: np.random.Generator):
    """One copy through the pure-state path.

    Only intercept-resend is sampled per copy; the other attacks return the
    ensemble density matrix. Returns ``(rho_f, eve_bit)`` with ``eve_bit``
    None when Eve did not measure.
    """
    if not isinstance(attack, InterceptResend):
        return transmit(uA, uB, uC, attack), None
    psi = tensor_all(_I2, uB, uC) @ ghz_initial_state()
    psi, bit = intercept_resend(psi, attack.target, rng)
    psi = tensor_all(uA, _I2, _I2) @ psi
    return outer(psi / np.linalg.norm(psi)), bit
