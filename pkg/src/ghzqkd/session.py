"""Multi-round key distribution between Bob, Charlie and Alice.

Each round Alice picks one of her operators at random, Bob and Charlie each
encode one bit, the attack (if any) acts on the returning qubits and Alice
estimates the payoff triple, either exactly or from ``n`` sampled GHZ
measurements. The triple is decoded against the eavesdropper-free library;
anything that fails to decode is treated as Eve's footprint.

Randomness comes from ``numpy.random.SeedSequence(seed).spawn(rounds)``, one
substream per round, so transcripts do not depend on the worker count.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .channels import (
    AttackKind,
    InterceptResend,
    NoAttack,
    attack_from_dict,
    attack_to_dict,
    intercept_resend,
    transmit,
)
from .decoding import (
    DEFAULT_TOL,
    Decoded,
    DecodingMatrix,
    OperatorAlphabet,
    build_decoding_matrix,
    decode,
    verdict_to_dict,
)
from .protocol_ops import (
    GHZ_BASIS,
    OUTCOMES,
    PARTIES,
    CoefficientTable,
    GhzBasis,
    expected_payoff,
    ghz_initial_state,
)
from .quantum_core import ConsistencyError, tensor_all

EXACT = "exact"
SAMPLED = "sampled"
ABORT = "abort"
DISCARD = "discard"

_PROB_TOL = 1e-10


def calibrated_tolerance(library: DecodingMatrix, n: int) -> float:
    """Sampled-mode tolerance: library separation over 2 sqrt(n)."""
    return library.min_row_separation() / (2 * math.sqrt(n))


@dataclass
class SessionConfig:
    rounds: int = 1
    copies: int = 10
    mode: str = EXACT
    attack: AttackKind = field(default_factory=NoAttack)
    tolerance: float | None = None
    alphabet: OperatorAlphabet = field(default_factory=OperatorAlphabet)
    coeffs: CoefficientTable = field(default_factory=CoefficientTable.default)
    seed: int = 0
    on_detect: str = ABORT
    workers: int = 1

    def __post_init__(self):
        if self.rounds < 1:
            raise ValueError("rounds must be at least 1")
        if self.copies < 1:
            raise ValueError("copies must be at least 1")
        if self.mode not in (EXACT, SAMPLED):
            raise ValueError(f"unknown measurement mode {self.mode!r}")
        if self.on_detect not in (ABORT, DISCARD):
            raise ValueError(f"unknown detection policy {self.on_detect!r}")
        if self.tolerance is not None and self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @cached_property
    def library(self) -> DecodingMatrix:
        return build_decoding_matrix(self.coeffs, self.alphabet, 0.0)

    @property
    def tol(self) -> float:
        if self.tolerance is not None:
            return self.tolerance
        if self.mode == SAMPLED:
            return calibrated_tolerance(self.library, self.copies)
        return DEFAULT_TOL

    def to_dict(self) -> dict:
        return {
            "rounds": self.rounds,
            "copies": self.copies,
            "mode": self.mode,
            "attack": attack_to_dict(self.attack),
            "tolerance": self.tol,
            "alphabet": self.alphabet.to_dict(),
            "coefficients": self.coeffs.to_dict(),
            "seed": self.seed,
            "on_detect": self.on_detect,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SessionConfig":
        known = {"rounds", "copies", "mode", "attack", "tolerance", "alphabet",
                 "coefficients", "seed", "on_detect", "workers"}
        extra = set(data) - known
        if extra:
            raise ValueError(f"unknown config keys {sorted(extra)}")
        kwargs = {k: data[k] for k in ("rounds", "copies", "mode", "tolerance", "seed",
                                        "on_detect", "workers") if k in data}
        kwargs["attack"] = attack_from_dict(data.get("attack"))
        if "alphabet" in data:
            kwargs["alphabet"] = OperatorAlphabet.from_dict(data["alphabet"])
        if "coefficients" in data:
            kwargs["coeffs"] = CoefficientTable(data["coefficients"])
        return cls(**kwargs)

    @classmethod
    def load(cls, path) -> "SessionConfig":
        data = json.loads(Path(path).read_text())
        if not isinstance(data, dict):
            raise ValueError("session config must be a JSON object")
        return cls.from_dict(data)


def ghz_probabilities(rho, basis: GhzBasis = GHZ_BASIS) -> np.ndarray:
    """Born probabilities over the GHZ outcomes, clamped and renormalized.

    Raises
    ------
    ConsistencyError
        If a probability is below -1e-10 or the total is off by more than 1e-10.
    """
    probs = basis.probabilities(rho)
    if probs.min() < -_PROB_TOL:
        raise ConsistencyError(f"negative outcome probability {probs.min()!r}")
    if abs(probs.sum() - 1.0) > _PROB_TOL:
        raise ConsistencyError(f"outcome probabilities sum to {probs.sum()!r}")
    probs = np.clip(probs, 0.0, None)
    return probs / probs.sum()


def sample_ghz_outcome(rho, basis: GhzBasis = GHZ_BASIS, rng=None) -> str:
    rng = rng if rng is not None else np.random.default_rng()
    return OUTCOMES[int(rng.choice(8, p=ghz_probabilities(rho, basis)))]


def histogram_triple(hist, coeffs: CoefficientTable) -> tuple:
    hist = np.asarray(hist, dtype=float)
    total = hist.sum()
    return tuple(float(hist @ coeffs.vector(k) / total) for k in PARTIES)


def sample_triple(config: SessionConfig, alice_index: int, bob_bit: int, charlie_bit: int,
                  n: int, attack: AttackKind, rng: np.random.Generator):
    """Empirical payoff triple from ``n`` measured copies.

    Returns ``(triple, histogram, eve_bits)``; ``eve_bits`` lists Eve's
    outcomes under intercept-resend and is empty otherwise.
    """
    us = config.alphabet.unitaries(alice_index, bob_bit, charlie_bit)
    if isinstance(attack, InterceptResend):
        i2 = np.eye(2)
        returned = tensor_all(i2, us[1], us[2]) @ ghz_initial_state()
        alice = tensor_all(us[0], i2, i2)
        readout = GHZ_BASIS.matrix.conj().T @ alice
        hist = np.zeros(8, dtype=np.int64)
        eve = []
        for _ in range(n):
            psi, bit = intercept_resend(returned, attack.target, rng)
            cdf = np.cumsum(np.abs(readout @ psi) ** 2)
            hist[min(int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right")), 7)] += 1
            eve.append(bit)
    else:
        hist = rng.multinomial(n, ghz_probabilities(transmit(*us, attack)))
        eve = []
    return histogram_triple(hist, config.coeffs), [int(x) for x in hist], eve


def exact_triple(config: SessionConfig, alice_index: int, bob_bit: int, charlie_bit: int,
                 attack: AttackKind) -> tuple:
    rho = transmit(*config.alphabet.unitaries(alice_index, bob_bit, charlie_bit), attack)
    return tuple(expected_payoff(k, rho, config.coeffs) for k in PARTIES)


@dataclass(frozen=True)
class RoundRecord:
    round_index: int
    alice_op_index: int
    bob_bit: int
    charlie_bit: int
    bob_symbol_sent: str
    charlie_symbol_sent: str
    measured_triple: tuple
    verdict: object
    histogram: tuple | None = None
    eve_bits: tuple = ()

    @property
    def decoded(self) -> bool:
        return isinstance(self.verdict, Decoded)

    def decoded_bits(self) -> tuple:
        return (self.verdict.bob_index, self.verdict.charlie_index)

    def to_dict(self) -> dict:
        out = {
            "round": self.round_index,
            "alice_op": self.alice_op_index,
            "bob_symbol_sent": self.bob_symbol_sent,
            "charlie_symbol_sent": self.charlie_symbol_sent,
            "measured": list(self.measured_triple),
            "verdict": verdict_to_dict(self.verdict),
        }
        if self.histogram is not None:
            out["histogram"] = dict(zip(OUTCOMES, self.histogram))
        if self.eve_bits:
            out["eve_bits"] = list(self.eve_bits)
        return out


def run_round(config: SessionConfig, bob_bit: int, charlie_bit: int,
              rng: np.random.Generator, round_index: int = 0) -> RoundRecord:
    al = config.alphabet
    if not (0 <= bob_bit < len(al.bob_ops) and 0 <= charlie_bit < len(al.charlie_ops)):
        raise ValueError(f"symbol index out of range: ({bob_bit}, {charlie_bit})")
    alice = int(rng.integers(len(al.alice_ops)))
    hist = None
    eve = []
    if config.mode == SAMPLED:
        measured, hist, eve = sample_triple(
            config, alice, bob_bit, charlie_bit, config.copies, config.attack, rng
        )
        hist = tuple(hist)
    else:
        measured = exact_triple(config, alice, bob_bit, charlie_bit, config.attack)
    verdict = decode(measured, alice, config.library, config.tol)
    return RoundRecord(
        round_index=round_index,
        alice_op_index=alice,
        bob_bit=int(bob_bit),
        charlie_bit=int(charlie_bit),
        bob_symbol_sent=al.bob_ops[bob_bit].label,
        charlie_symbol_sent=al.charlie_ops[charlie_bit].label,
        measured_triple=tuple(float(x) for x in measured),
        verdict=verdict,
        histogram=hist,
        eve_bits=tuple(eve),
    )


@dataclass(frozen=True)
class SessionTranscript:
    config: SessionConfig
    rounds: tuple
    aborted_at: int | None
    key: str

    @property
    def established(self) -> bool:
        return self.aborted_at is None

    @property
    def completed_rounds(self) -> int:
        return sum(r.decoded for r in self.rounds)

    def summary(self) -> str:
        status = "key established" if self.established else f"Aborted at round {self.aborted_at}"
        return (f"{status}: {len(self.rounds)} rounds run, "
                f"{self.completed_rounds} decoded, key length {len(self.key)} bits")

    def to_dict(self) -> dict:
        if self.established:
            outcome = {"kind": "key-established"}
        else:
            outcome = {"kind": "aborted", "at_round": self.aborted_at}
        return {
            "config": self.config.to_dict(),
            "rounds": [r.to_dict() for r in self.rounds],
            "outcome": outcome,
            "key_bits": len(self.key),
            "key": bits_to_hex(self.key),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def parse_bits(text: str) -> str:
    """Bit string from ``0x``-hex, ``0b``-binary, plain binary or plain hex text.

    Text made only of 0s and 1s is read as binary; use the ``0x`` prefix to
    force hex.
    """
    s = text.strip().replace("_", "").lower()
    if s.startswith("0b"):
        body = s[2:]
        if not body or set(body) - set("01"):
            raise ValueError(f"invalid binary string {text!r}")
        return body
    if s.startswith("0x"):
        s = s[2:]
    elif s and not set(s) - set("01"):
        return s
    if not s:
        raise ValueError("empty bit string")
    try:
        int(s, 16)
    except ValueError:
        raise ValueError(f"invalid hex string {text!r}") from None
    return "".join(f"{int(ch, 16):04b}" for ch in s)


def bits_to_hex(bits: str) -> str:
    if not bits:
        return ""
    padded = bits + "0" * (-len(bits) % 4)
    return "".join(f"{int(padded[i:i + 4], 2):x}" for i in range(0, len(padded), 4))


def run_session(config: SessionConfig, bob_bits, charlie_bits) -> SessionTranscript:
    """Run ``config.rounds`` rounds and assemble the key.

    Under the abort policy the first round that fails to decode ends the
    session with an empty key; under the discard policy that round is simply
    left out of the key.
    """
    bob = [int(b) for b in bob_bits]
    charlie = [int(b) for b in charlie_bits]
    if len(bob) < config.rounds or len(charlie) < config.rounds:
        raise ValueError(f"need at least {config.rounds} bits from each sender")
    streams = np.random.SeedSequence(config.seed).spawn(config.rounds)

    def one(i):
        return run_round(config, bob[i], charlie[i], np.random.default_rng(streams[i]), i)

    _ = config.library
    if config.workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(config.workers) as pool:
            records = list(pool.map(one, range(config.rounds)))
    else:
        records = []
        for i in range(config.rounds):
            records.append(one(i))
            if config.on_detect == ABORT and not records[-1].decoded:
                break

    aborted_at = None
    kept = []
    for rec in records:
        kept.append(rec)
        if not rec.decoded and config.on_detect == ABORT:
            aborted_at = rec.round_index
            break
    key = ""
    if aborted_at is None:
        key = "".join(f"{b}{c}" for r in kept if r.decoded for b, c in [r.decoded_bits()])
    return SessionTranscript(config, tuple(kept), aborted_at, key)
