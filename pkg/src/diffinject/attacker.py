"""The adversary's statistical layer: guesses, case formulas, pair selection."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from ._backend import kernels
from .errors import ParameterError

# RNG stream id for guess draws made outside a campaign
GUESS_STREAM = 0x6775


def _check_prob(name, x):
    if not 0.0 <= x <= 1.0:
        raise ParameterError(f"{name} must lie in [0, 1], got {x}")


def _check_bit(name, b):
    if b not in (0, 1):
        raise ParameterError(f"{name} must be 0 or 1, got {b!r}")


@dataclass(frozen=True)
class FlipPair:
    """Flip probabilities of one attack signal.

    ``u`` flips 1 to 0, ``v`` flips 0 to 1. ``meta`` optionally records the
    signal as ``(frequency_hz, amplitude_vpp)``; ``None`` marks SendNothing.
    """
    u: float
    v: float
    meta: tuple[float, float] | None = None

    def __post_init__(self):
        _check_prob("u", self.u)
        _check_prob("v", self.v)

    @property
    def is_send_nothing(self) -> bool:
        return self.u == 0.0 and self.v == 0.0 and self.meta is None

    def to_dict(self) -> dict:
        d = {"u": self.u, "v": self.v, "send_nothing": self.is_send_nothing}
        if self.meta is not None:
            d["freq_hz"], d["amplitude_vpp"] = self.meta
        return d


SEND_NOTHING = FlipPair(0.0, 0.0)


@dataclass(frozen=True)
class FeasibleSet:
    pairs: tuple[FlipPair, ...]

    def __init__(self, pairs: Iterable[FlipPair] = ()):
        ps = tuple(pairs)
        if SEND_NOTHING not in ps:
            ps = ps + (SEND_NOTHING,)
        object.__setattr__(self, "pairs", ps)

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)


@dataclass(frozen=True)
class GuessModel:
    g: float

    def __post_init__(self):
        _check_prob("g", self.g)


@dataclass(frozen=True)
class AttackDecision:
    pair: FlipPair | None = None  # None -> stay silent

    @property
    def silent(self) -> bool:
        return self.pair is None

    def __str__(self):
        return "Silent" if self.silent else f"Radiate(u={self.pair.u}, v={self.pair.v})"


def draw_guess(m: GuessModel, seed: int) -> int:
    """Bernoulli(g) guess, a pure function of ``seed``."""
    base = kernels.stream_base(seed, GUESS_STREAM)
    return int(kernels.unit_draws(base, np.zeros(1, dtype=np.uint64), 0)[0] < m.g)


def draw_guesses(m: GuessModel, seed: int, n: int) -> np.ndarray:
    """``n`` independent guesses from one seed (trial index = draw index)."""
    base = kernels.stream_base(seed, GUESS_STREAM)
    return (kernels.unit_draws(base, np.arange(n, dtype=np.uint64), 0) < m.g).astype(np.uint8)


def decide(intended_bit: int, guess: int, pair: FlipPair) -> AttackDecision:
    """Stay silent when the guess says the line already carries the intended bit."""
    if guess == intended_bit:
        return AttackDecision(None)
    return AttackDecision(pair)


def success_prob_inject1(actual_bit: int, guess: int, pair: FlipPair) -> float:
    _check_bit("actual_bit", actual_bit)
    _check_bit("guess", guess)
    if actual_bit == 1:
        return guess + (1 - guess) * (1 - pair.u)
    return (1 - guess) * pair.v


def success_prob_inject0(actual_bit: int, guess: int, pair: FlipPair) -> float:
    _check_bit("actual_bit", actual_bit)
    _check_bit("guess", guess)
    if actual_bit == 1:
        return guess * pair.u
    return (1 - guess) + guess * (1 - pair.v)


def expected_p1(g: float, pair: FlipPair, actual_bit: int) -> float:
    """E(P1) over G ~ Bernoulli(g)."""
    _check_prob("g", g)
    _check_bit("actual_bit", actual_bit)
    if actual_bit == 1:
        return pair.u * g + 1 - pair.u
    return -pair.v * g + pair.v


def expected_p0(g: float, pair: FlipPair, actual_bit: int) -> float:
    _check_prob("g", g)
    _check_bit("actual_bit", actual_bit)
    if actual_bit == 1:
        return g * pair.u
    return (1 - g) + g * (1 - pair.v)


def bit_success_prob(intended_bit: int, actual_bit: int, g: float, pair: FlipPair) -> float:
    if intended_bit == 1:
        return expected_p1(g, pair, actual_bit)
    return expected_p0(g, pair, actual_bit)


def objective(pair: FlipPair, g: float, target_bit: int) -> float:
    """Weighted-sum score: weight g on keeping/forcing 1, 1 - g on the other objective."""
    if target_bit == 1:
        return g * (1 - pair.u) + (1 - g) * pair.v
    return g * pair.u + (1 - g) * (1 - pair.v)


def _tie_key(pair: FlipPair, target_bit: int):
    u_rank = pair.u if target_bit == 1 else -pair.u
    meta_rank = (0,) if pair.meta is None else (1,) + tuple(pair.meta)
    return (u_rank, meta_rank, pair.v)


def optimal_pair(fs: FeasibleSet | Iterable[FlipPair], g: float, target_bit: int) -> FlipPair:
    """Best pair for injecting ``target_bit`` by the weighted-sum method.

    SendNothing is always a candidate. Ties go to the smaller u (target 1) or
    larger u (target 0), then SendNothing before any measured pair, then
    ascending meta.
    """
    _check_prob("g", g)
    _check_bit("target_bit", target_bit)
    pairs = list(fs.pairs if isinstance(fs, FeasibleSet) else FeasibleSet(fs).pairs)
    best = None
    best_score = -np.inf
    for p in pairs:
        s = objective(p, g, target_bit)
        if s > best_score or (s == best_score and _tie_key(p, target_bit) < _tie_key(best, target_bit)):
            best, best_score = p, s
    return best
