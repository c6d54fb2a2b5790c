"""Interception statistics over ``n`` copies per symbol.

The analytic part works in exact rationals: the probability that ``i`` of
``n`` copies are intercepted is C(n, i) / 2**n, a corrupted library entry is
the copy-weighted mixture of the clean and intercepted triples, and the
expected signature is the binomial average of those mixtures. A Monte Carlo
estimate through the real session pipeline is provided next to it; the two
are reported side by side and are not expected to agree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

DEFAULT_SIGMA_THRESHOLD = 3


def _as_triple(t) -> tuple:
    return tuple(Fraction(x) for x in t)


@dataclass(frozen=True)
class InterceptionModel:
    n: int
    intercepted: tuple = (Fraction(5), Fraction(2), Fraction(2))
    clean: tuple = (Fraction(3), Fraction(3), Fraction(3))

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be at least 1")
        object.__setattr__(self, "intercepted", _as_triple(self.intercepted))
        object.__setattr__(self, "clean", _as_triple(self.clean))


@dataclass(frozen=True)
class DetectionEstimate:
    n: int
    signature: tuple
    delta: tuple
    copies_needed: int

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "signature": [float(x) for x in self.signature],
            "delta": [float(x) for x in self.delta],
            "copies_needed": self.copies_needed,
        }


def binomial_prob(n: int, i: int) -> Fraction:
    """Exact C(n, i) / 2**n."""
    if n < 0 or not 0 <= i <= n:
        raise ValueError(f"need 0 <= i <= n, got n={n}, i={i}")
    return Fraction(math.comb(n, i), 2**n)


def corrupted_element(n: int, i: int, model: InterceptionModel) -> tuple:
    """Library entry seen when ``i`` of ``n`` copies were intercepted.

    Weights the clean triple by ``n - i`` copies, so ``i = 0`` gives back the
    clean entry and ``i = n`` the intercepted one.
    """
    if not 0 <= i <= n:
        raise ValueError(f"need 0 <= i <= n, got n={n}, i={i}")
    return tuple(
        (c * (n - i) + x * i) / n for c, x in zip(model.clean, model.intercepted)
    )


def expected_signature(n: int, model: InterceptionModel | None = None) -> tuple:
    model = model or InterceptionModel(n)
    if n < 1:
        raise ValueError("n must be at least 1")
    out = [Fraction(0)] * 3
    for i in range(n + 1):
        w = binomial_prob(n, i)
        for j, v in enumerate(corrupted_element(n, i, model)):
            out[j] += w * v
    return tuple(out)


def resolution(n: int, clean, intercepted) -> tuple:
    """Per-coordinate |clean - intercepted| / (2 sqrt(n)) as floats."""
    return tuple(abs(float(c) - float(x)) / (2 * math.sqrt(n)) for c, x in zip(clean, intercepted))


def _separated(n: int, clean, intercepted, signature, k) -> bool:
    # |sig - clean| >= k * |clean - x| / (2 sqrt n), squared to stay rational
    for c, x, s in zip(clean, intercepted, signature):
        if c == x:
            continue
        if (s - c) ** 2 * 4 * n < Fraction(k) ** 2 * (c - x) ** 2:
            return False
    return True


def copies_needed(clean=(3, 3, 3), intercepted=(5, 2, 2), k=DEFAULT_SIGMA_THRESHOLD,
                  n_max: int = 10_000) -> int:
    """Smallest ``n`` at which the expected signature sits ``k`` resolutions away from ``clean``.

    Only coordinates where ``clean`` and ``intercepted`` differ count. With
    the defaults the signature is half way between them, so the condition is
    sqrt(n) >= k and ``k = 3`` gives 9.
    """
    clean, intercepted = _as_triple(clean), _as_triple(intercepted)
    if clean == intercepted:
        raise ValueError("clean and intercepted triples coincide; nothing to detect")
    for n in range(1, n_max + 1):
        sig = expected_signature(n, InterceptionModel(n, intercepted, clean))
        if _separated(n, clean, intercepted, sig, k):
            return n
    raise ValueError(f"no n <= {n_max} separates the signature")


def detection_resolution(n: int, clean=(3, 3, 3), intercepted=(5, 2, 2),
                         k=DEFAULT_SIGMA_THRESHOLD) -> DetectionEstimate:
    if n < 1:
        raise ValueError("n must be at least 1")
    model = InterceptionModel(n, intercepted, clean)
    return DetectionEstimate(
        n=n,
        signature=expected_signature(n, model),
        delta=resolution(n, model.clean, model.intercepted),
        copies_needed=copies_needed(model.clean, model.intercepted, k),
    )


@dataclass(frozen=True)
class SimulatedSignature:
    mean: tuple
    stderr: tuple
    trials: int
    n: int

    def to_dict(self) -> dict:
        return {"trials": self.trials, "n": self.n,
                "signature": list(self.mean), "stderr": list(self.stderr)}


def monte_carlo_signature(trials: int, n: int, attack, config=None, seed: int = 0,
                          alice_index: int = 0, bob_bit: int = 0, charlie_bit: int = 0,
                          workers: int = 1) -> SimulatedSignature:
    """Average sampled payoff triple over ``trials`` symbols of ``n`` copies.

    Every trial goes through :func:`ghzqkd.session.sample_triple` with its own
    random substream, so the result depends only on ``seed``, never on
    ``workers``.
    """
    from .session import SessionConfig, sample_triple

    if trials < 1:
        raise ValueError("trials must be at least 1")
    config = config or SessionConfig()
    streams = np.random.SeedSequence(seed).spawn(trials)

    def one(ss):
        rng = np.random.default_rng(ss)
        triple, _, _ = sample_triple(config, alice_index, bob_bit, charlie_bit, n, attack, rng)
        return triple

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(workers) as pool:
            triples = list(pool.map(one, streams))
    else:
        triples = [one(ss) for ss in streams]
    arr = np.array(triples)
    mean = arr.mean(axis=0)
    se = arr.std(axis=0, ddof=1) / math.sqrt(trials) if trials > 1 else np.zeros(3)
    return SimulatedSignature(tuple(float(x) for x in mean), tuple(float(x) for x in se), trials, n)
