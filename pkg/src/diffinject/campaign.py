"""Monte Carlo bit and message injection campaigns.

Every trial draws its randomness from a counter-based hash of
``(master_seed, stream, trial_index, draw_index)``, so results do not
depend on how trials are split across blocks or worker threads. Two
campaigns run with the same seed see the same random numbers, which makes
comparisons between attack signals use common random numbers.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._backend import kernels
from .attacker import FlipPair, _check_bit, _check_prob, bit_success_prob
from .errors import ParameterError

MESSAGE_STREAM = 0x6D7367
SAMPLE_STREAM_A1 = 0x736131
SAMPLE_STREAM_A0 = 0x736130

INDEPENDENT = "independent"
GROUPED = "grouped"
MODES = (INDEPENDENT, GROUPED)

# fixed block size keeps the work split independent of the worker count
BLOCK = 1 << 16


@dataclass(frozen=True)
class MessageSpec:
    intended_bits: tuple[int, ...]
    line_bits: tuple[int, ...]

    def __init__(self, intended_bits: Sequence[int], line_bits: Sequence[int]):
        ib, lb = tuple(int(b) for b in intended_bits), tuple(int(b) for b in line_bits)
        if not ib:
            raise ParameterError("message is empty")
        if len(ib) != len(lb):
            raise ParameterError(f"intended ({len(ib)}) and line ({len(lb)}) lengths differ")
        if any(b not in (0, 1) for b in ib + lb):
            raise ParameterError("bits must be 0 or 1")
        object.__setattr__(self, "intended_bits", ib)
        object.__setattr__(self, "line_bits", lb)

    def __len__(self):
        return len(self.intended_bits)

    def runs(self) -> list[tuple[int, int]]:
        """Maximal runs of identical (line, intended) bits as (start, stop)."""
        out = []
        start = 0
        for i in range(1, len(self) + 1):
            if i == len(self) or (self.line_bits[i], self.intended_bits[i]) != (
                self.line_bits[start], self.intended_bits[start]
            ):
                out.append((start, i))
                start = i
        return out

    def active_positions(self, mode: str) -> np.ndarray:
        """Bits that decide the outcome: all of them, or the first of each run."""
        if mode == INDEPENDENT:
            return np.arange(len(self), dtype=np.int64)
        if mode == GROUPED:
            return np.array([s for s, _ in self.runs()], dtype=np.int64)
        raise ParameterError(f"unknown mode {mode!r}; expected one of {MODES}")


@dataclass(frozen=True)
class CampaignConfig:
    trials: int
    master_seed: int
    pair: FlipPair
    g: float | tuple[float, ...] = 1.0
    mode: str = INDEPENDENT

    def __post_init__(self):
        if self.trials < 1:
            raise ParameterError("trials must be >= 1")
        if self.mode not in MODES:
            raise ParameterError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if isinstance(self.g, (list, tuple, np.ndarray)):
            object.__setattr__(self, "g", tuple(float(x) for x in self.g))
            for x in self.g:
                _check_prob("g", x)
        else:
            _check_prob("g", self.g)

    def g_vector(self, n: int) -> np.ndarray:
        if isinstance(self.g, tuple):
            if len(self.g) != n:
                raise ParameterError(f"g schedule has {len(self.g)} entries for {n} bits")
            return np.array(self.g, dtype=np.float64)
        return np.full(n, float(self.g))

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "master_seed": self.master_seed,
            "mode": self.mode,
            "g": list(self.g) if isinstance(self.g, tuple) else self.g,
            "pair": self.pair.to_dict(),
        }


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    from scipy.stats import binomtest

    ci = binomtest(successes, trials).proportion_ci(confidence_level=confidence, method="wilson")
    return max(0.0, float(ci.low)), min(1.0, float(ci.high))


@dataclass(frozen=True)
class CampaignResult:
    successes: int
    trials: int
    per_bit_failures: tuple[int, ...] = field(default=())

    @property
    def rate(self) -> float:
        return self.successes / self.trials

    @property
    def ci95(self) -> tuple[float, float]:
        return wilson_interval(self.successes, self.trials)

    @property
    def stderr(self) -> float:
        p = self.rate
        return math.sqrt(p * (1 - p) / self.trials)

    def to_dict(self) -> dict:
        lo, hi = self.ci95
        return {
            "successes": self.successes,
            "trials": self.trials,
            "rate": self.rate,
            "ci95": [lo, hi],
            "per_bit_failures": list(self.per_bit_failures),
        }


def _run(spec: MessageSpec, cfg: CampaignConfig, stream: int, workers: int) -> CampaignResult:
    base = kernels.stream_base(cfg.master_seed, stream)
    positions = spec.active_positions(cfg.mode)
    line = np.array(spec.line_bits, dtype=np.uint8)
    want = np.array(spec.intended_bits, dtype=np.uint8)
    g = cfg.g_vector(len(spec))
    u, v = float(cfg.pair.u), float(cfg.pair.v)
    blocks = [(s, min(BLOCK, cfg.trials - s)) for s in range(0, cfg.trials, BLOCK)]

    def one(block):
        return kernels.message_trials(base, block[0], block[1], positions, line, want, g, u, v)

    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(one, blocks))
    else:
        parts = [one(b) for b in blocks]
    successes = sum(p[0] for p in parts)
    hist = np.sum([p[1] for p in parts], axis=0)
    return CampaignResult(int(successes), cfg.trials, tuple(int(x) for x in hist))


def simulate_message(spec: MessageSpec, cfg: CampaignConfig, workers: int = 1) -> CampaignResult:
    """Estimate the probability that every bit of ``spec`` ends up as intended.

    Per bit the attacker draws a guess, stays silent if it matches the
    intended bit and otherwise radiates ``cfg.pair``. In grouped mode only
    the first bit of each run of identical (line, intended) bits is drawn;
    once it succeeds the rest of the run is taken to succeed too.
    ``per_bit_failures[i]`` counts trials whose first failing bit was ``i``.
    """
    return _run(spec, cfg, MESSAGE_STREAM, workers)


def simulate_bit(intended: int, actual: int, cfg: CampaignConfig) -> CampaignResult:
    _check_bit("intended", intended)
    _check_bit("actual", actual)
    return simulate_message(MessageSpec([intended], [actual]), cfg)


def analytic_rate(spec: MessageSpec, g, pair: FlipPair, mode: str = INDEPENDENT) -> float:
    """Exact success probability of the model ``simulate_message`` samples."""
    gv = CampaignConfig(1, 0, pair, g, mode).g_vector(len(spec))
    rate = 1.0
    for i in spec.active_positions(mode):
        rate *= bit_success_prob(spec.intended_bits[i], spec.line_bits[i], gv[i], pair)
    return rate


def count_dominant_groups(bits: Sequence[int]) -> tuple[int, int]:
    """(number of 0 bits, number of maximal runs of 0 bits)."""
    bits = [int(b) for b in bits]
    if not bits:
        raise ParameterError("bit sequence is empty")
    dominant = bits.count(0)
    groups = sum(1 for i, b in enumerate(bits) if b == 0 and (i == 0 or bits[i - 1] != 0))
    return dominant, groups


def message_bounds(bits: Sequence[int], u: float) -> tuple[float, float]:
    """Bracket for injecting the dominant bits of an idle (recessive) line.

    Lower: every dominant bit is an independent flip, u**dominant.
    Upper: only the first flip of each dominant run counts, u**groups.
    """
    _check_prob("u", u)
    dominant, groups = count_dominant_groups(bits)
    return u ** dominant, u ** groups


def success_rate_samples(pair: FlipPair, g: float, n_samples: int, bits_per_sample: int,
                         master_seed: int, target_bit: int = 1) -> np.ndarray:
    """Repeated small simulations of injecting ``target_bit`` at guess parameter g.

    Sample k simulates ``bits_per_sample`` injections with the line at 1 and
    as many with the line at 0 and reports the pooled success rate. Runs with
    equal seeds share random numbers, whatever the pair.
    """
    _check_bit("target_bit", target_bit)
    if n_samples < 1 or bits_per_sample < 1:
        raise ParameterError("n_samples and bits_per_sample must be >= 1")
    gv = np.array([g], dtype=np.float64)
    want = np.array([target_bit], dtype=np.uint8)
    pos = np.zeros(1, dtype=np.int64)
    out = np.empty(n_samples)
    b1 = kernels.stream_base(master_seed, SAMPLE_STREAM_A1)
    b0 = kernels.stream_base(master_seed, SAMPLE_STREAM_A0)
    for k in range(n_samples):
        s1, _ = kernels.message_trials(b1, k * bits_per_sample, bits_per_sample, pos,
                                       np.ones(1, np.uint8), want, gv, pair.u, pair.v)
        s0, _ = kernels.message_trials(b0, k * bits_per_sample, bits_per_sample, pos,
                                       np.zeros(1, np.uint8), want, gv, pair.u, pair.v)
        out[k] = (s1 + s0) / (2 * bits_per_sample)
    return out


A_BETTER = "A_better"
NOT_SIGNIFICANT = "NotSignificant"


def compare_pairs(samples_a, samples_b, alpha: float = 0.05) -> str:
    """One-sided Welch t-test of mean(A) > mean(B)."""
    from scipy.stats import ttest_ind

    a = np.asarray(samples_a, dtype=np.float64)
    b = np.asarray(samples_b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise ParameterError("each sample set needs at least two values")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ParameterError("samples must be finite")
    _check_prob("alpha", alpha)
    if a.var() == 0 and b.var() == 0:
        return A_BETTER if a.mean() > b.mean() else NOT_SIGNIFICANT
    p = ttest_ind(a, b, equal_var=False, alternative="greater").pvalue
    return A_BETTER if p < alpha else NOT_SIGNIFICANT


def welch_pvalue(samples_a, samples_b) -> float:
    from scipy.stats import ttest_ind

    return float(ttest_ind(samples_a, samples_b, equal_var=False, alternative="greater").pvalue)
