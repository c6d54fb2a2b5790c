import json
import math

import numpy as np
import pytest

from ghzqkd.channels import InterceptResend, PhaseDamping, transmit
from ghzqkd.decoding import Decoded, EveDetected
from ghzqkd.protocol_ops import GHZ_BASIS, OUTCOMES, PARTIES, PartyRole, expected_payoff
from ghzqkd.protocol_ops import unitary_A, unitary_B, unitary_C
from ghzqkd.quantum_core import ConsistencyError, outer
from ghzqkd.session import (
    DISCARD,
    SAMPLED,
    SessionConfig,
    bits_to_hex,
    calibrated_tolerance,
    ghz_probabilities,
    parse_bits,
    run_round,
    run_session,
    sample_ghz_outcome,
)

PI = math.pi


def rng_for(alice_index, config, start=0):
    """Generator whose first integers() draw picks ``alice_index``."""
    for seed in range(start, start + 1000):
        if int(np.random.default_rng(seed).integers(len(config.alphabet.alice_ops))) == alice_index:
            return np.random.default_rng(seed)
    raise AssertionError("no seed found")


def test_exact_round_no_attack():
    cfg = SessionConfig()
    rec = run_round(cfg, 0, 0, rng_for(0, cfg))
    assert rec.alice_op_index == 0
    assert rec.measured_triple == pytest.approx((3, 3, 3), abs=1e-12)
    assert isinstance(rec.verdict, Decoded)
    assert (rec.verdict.bob_symbol, rec.verdict.charlie_symbol) == ("m1", "m3")


def test_exact_round_damped():
    cfg = SessionConfig(attack=PhaseDamping(0.5), tolerance=0.25)
    rec = run_round(cfg, 0, 0, rng_for(0, cfg))
    assert rec.measured_triple == pytest.approx((2.5, 2.5, 2.5), abs=1e-12)
    assert isinstance(rec.verdict, EveDetected)


def test_sampled_round_converges():
    cfg = SessionConfig(mode=SAMPLED, copies=10_000, attack=PhaseDamping(0.5))
    rec = run_round(cfg, 1, 0, rng_for(0, cfg))
    us = cfg.alphabet.unitaries(0, 1, 0)
    rho = transmit(*us, cfg.attack)
    probs = ghz_probabilities(rho)
    for k, got in zip(PARTIES, rec.measured_triple):
        v = cfg.coeffs.vector(k)
        mean = probs @ v
        sigma = math.sqrt((probs @ v**2 - mean**2) / cfg.copies)
        assert abs(got - mean) <= 3 * sigma
    assert sum(rec.histogram) == cfg.copies


def test_sampled_estimator_unbiased():
    cfg = SessionConfig(mode=SAMPLED, copies=10, attack=PhaseDamping(0.3))
    rounds = 4000
    streams = np.random.SeedSequence(11).spawn(rounds)
    got = {0: [], 1: []}
    for ss in streams:
        rec = run_round(cfg, 0, 1, np.random.default_rng(ss))
        got[rec.alice_op_index].append(rec.measured_triple)
    for a, triples in got.items():
        rho = transmit(*cfg.alphabet.unitaries(a, 0, 1), cfg.attack)
        analytic = [expected_payoff(k, rho, cfg.coeffs) for k in PARTIES]
        arr = np.array(triples)
        se = arr.std(axis=0, ddof=1) / math.sqrt(len(arr))
        assert np.all(np.abs(arr.mean(axis=0) - analytic) <= 4 * se + 1e-12)


def test_verdict_consistent_with_measured():
    from ghzqkd.decoding import decode

    cfg = SessionConfig(mode=SAMPLED, rounds=50, attack=InterceptResend(), on_detect=DISCARD)
    t = run_session(cfg, "0" * 50, "1" * 50)
    for rec in t.rounds:
        assert decode(rec.measured_triple, rec.alice_op_index, cfg.library, cfg.tol) == rec.verdict
        assert len(rec.eve_bits) == cfg.copies


def test_session_no_attack_key():
    rng = np.random.default_rng(5)
    bob = "".join(map(str, rng.integers(0, 2, 100)))
    charlie = "".join(map(str, rng.integers(0, 2, 100)))
    t = run_session(SessionConfig(rounds=100, seed=3), bob, charlie)
    assert t.established
    assert t.key == "".join(b + c for b, c in zip(bob, charlie))
    assert len(t.key) == 200
    assert {r.alice_op_index for r in t.rounds} == {0, 1}


def test_no_attack_every_cell_decodes():
    cfg = SessionConfig()
    for a, b, c in cfg.alphabet.cells():
        rec = run_round(cfg, b, c, rng_for(a, cfg))
        assert rec.alice_op_index == a
        assert rec.decoded and rec.decoded_bits() == (b, c)


def test_immediate_abort_empty_key():
    cfg = SessionConfig(rounds=5, attack=PhaseDamping(1.0))
    t = run_session(cfg, "00000", "00000")
    assert not t.established
    assert t.aborted_at == 0
    assert t.key == ""
    assert "Aborted at round 0" in t.summary()


def test_discard_policy_keeps_going():
    cfg = SessionConfig(rounds=20, attack=PhaseDamping(1.0), on_detect=DISCARD)
    t = run_session(cfg, "0" * 20, "0" * 20)
    assert t.established and len(t.rounds) == 20 and t.key == ""


def test_intercept_resend_aborts():
    cfg = SessionConfig(rounds=50, mode=SAMPLED, attack=InterceptResend(), seed=9)
    t = run_session(cfg, "0" * 50, "0" * 50)
    assert not t.established


def test_determinism_and_workers():
    cfg = dict(rounds=40, mode=SAMPLED, attack=InterceptResend(PartyRole.CHARLIE),
               on_detect=DISCARD, seed=123)
    a = run_session(SessionConfig(**cfg), "01" * 20, "10" * 20).to_json()
    b = run_session(SessionConfig(**cfg), "01" * 20, "10" * 20).to_json()
    c = run_session(SessionConfig(workers=4, **cfg), "01" * 20, "10" * 20).to_json()
    assert a == b == c


def test_bits_too_short():
    with pytest.raises(ValueError):
        run_session(SessionConfig(rounds=4), "01", "0101")


def test_transcript_json_schema():
    t = run_session(SessionConfig(rounds=4, seed=1), "0110", "1100")
    data = json.loads(t.to_json())
    assert set(data) >= {"config", "rounds", "outcome", "key"}
    assert data["key"] == bits_to_hex("01111000")
    assert data["outcome"] == {"kind": "key-established"}
    assert SessionConfig.from_dict(data["config"]).to_dict() == data["config"]


@pytest.mark.parametrize(
    "text,bits",
    [("0xa5", "10100101"), ("A5", "10100101"), ("0b101", "101"), ("0110", "0110"),
     ("0x01", "00000001")],
)
def test_parse_bits(text, bits):
    assert parse_bits(text) == bits


@pytest.mark.parametrize("text", ["", "0xzz", "0b012", "hello"])
def test_parse_bits_invalid(text):
    with pytest.raises(ValueError):
        parse_bits(text)


def test_config_validation():
    with pytest.raises(ValueError):
        SessionConfig(rounds=0)
    with pytest.raises(ValueError):
        SessionConfig(mode="guess")
    with pytest.raises(ValueError):
        SessionConfig(tolerance=0)
    with pytest.raises(ValueError):
        SessionConfig.from_dict({"rounds": 2, "colour": "blue"})


def test_calibrated_tolerance():
    cfg = SessionConfig(mode=SAMPLED, copies=10)
    # closest pair in an Alice row, e.g. (3,3,3) vs (2,5,2), is 2 apart
    assert cfg.library.min_row_separation() == pytest.approx(2)
    assert cfg.tol == pytest.approx(2 / (2 * math.sqrt(10)))
    assert calibrated_tolerance(cfg.library, 16) == pytest.approx(0.25)
    assert SessionConfig().tol == 0.25


def test_sample_outcome_pure_projector():
    rng = np.random.default_rng(0)
    rho = GHZ_BASIS.projectors["000"]
    assert {sample_ghz_outcome(rho, rng=rng) for _ in range(200)} == {"000"}


def test_sample_outcome_frequencies():
    rho = transmit(unitary_A(0), unitary_B(PI), unitary_C(PI))
    probs = ghz_probabilities(rho)
    # |011>/|100> support only
    assert probs[[OUTCOMES.index("011"), OUTCOMES.index("100")]].sum() == pytest.approx(1)
    rng = np.random.default_rng(1)
    draws = 100_000
    counts = {r: 0 for r in OUTCOMES}
    for _ in range(draws):
        counts[sample_ghz_outcome(rho, rng=rng)] += 1
    for r, p in zip(OUTCOMES, probs):
        assert abs(counts[r] - draws * p) <= 3 * math.sqrt(draws * p * (1 - p)) + 1e-9


def test_sample_outcome_fully_dephased():
    damp = PhaseDamping(1.0, tuple(PartyRole))
    rho = transmit(unitary_A(0.4, 0.2, 0.1), unitary_B(1.1), unitary_C(0.3), damp)
    probs = ghz_probabilities(rho)
    for r in OUTCOMES:
        comp = "".join("1" if b == "0" else "0" for b in r)
        assert probs[OUTCOMES.index(r)] == pytest.approx(probs[OUTCOMES.index(comp)], abs=1e-12)
    expected = [np.real(np.trace(GHZ_BASIS.projectors[r] @ rho)) for r in OUTCOMES]
    assert probs == pytest.approx(expected, abs=1e-12)


def test_probabilities_reject_negative():
    rho = np.zeros((8, 8), dtype=complex)
    rho[0, 0] = 1.5
    rho[1, 1] = -0.5
    with pytest.raises(ConsistencyError):
        ghz_probabilities(rho)
