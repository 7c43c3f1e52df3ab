"""Digital side of the link: ESD clamp, charge accumulation, hysteresis latch.

``flip_probability`` runs the whole chain from an injected tone to a latched
bit and reports how often the latch disagrees with the nominal bit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .errors import ParameterError
from .signal_core import (
    ModePair,
    SubtractorParams,
    TransferParams,
    Waveform,
    bypass_modes,
    check_frequency,
    inject_common_mode,
    recompose,
    subtractor_output,
    subtractor_response,
    transfer_array,
    apply_transfer,
)

# CAN-style static common mode of the clean pair, volts
COMMON_MODE_LEVEL = 2.5


@dataclass(frozen=True)
class ReceiverParams:
    """Thresholds and input-stage constants of a receiver.

    Defaults describe an nRF52833 GPIO at 3 V (V_H = 2.1 V, V_L = 0.9 V)
    latching a 500 kbit/s stream at mid-bit.
    """
    v_dd: float = 3.0
    v_h: float = 2.1
    v_l: float = 0.9
    clamp_min: float = 0.0
    clamp_max: float = 3.0
    accumulation_tau: float | None = None  # None -> 10% of bit_period
    offset_gain: float = 1.5
    bit_period: float = 2e-6
    sample_phase: float = 0.5

    def __post_init__(self):
        if self.accumulation_tau is None:
            object.__setattr__(self, "accumulation_tau", 0.1 * self.bit_period)
        if not self.clamp_min <= self.v_l < self.v_h <= self.clamp_max:
            raise ParameterError("need clamp_min <= v_l < v_h <= clamp_max")
        if not self.bit_period > 0:
            raise ParameterError("bit_period must be > 0")
        if not self.accumulation_tau > 0:
            raise ParameterError("accumulation_tau must be > 0")
        if not 0 <= self.sample_phase < 1:
            raise ParameterError("sample_phase must lie in [0, 1)")
        if self.offset_gain < 0:
            raise ParameterError("offset_gain must be >= 0")

    def nominal_level(self, bit: int) -> float:
        return self.v_dd if bit else 0.0

    def is_high(self, nominal: float) -> bool:
        return nominal >= (self.v_h + self.v_l) / 2


@dataclass(frozen=True, eq=False)
class BitTrace:
    bits: np.ndarray
    latch_times: np.ndarray

    def __post_init__(self):
        if len(self.bits) != len(self.latch_times):
            raise ParameterError("bits and latch_times differ in length")

    def tolist(self) -> list[int]:
        return [int(b) for b in self.bits]


def esd_clamp(w: Waveform, p: ReceiverParams) -> Waveform:
    return Waveform(np.clip(w.samples, p.clamp_min, p.clamp_max), w.sample_rate)


def _offset_trajectory(x, nominal, p: ReceiverParams, sample_rate, window=None):
    """Signed equivalent DC offset along the last axis of ``x``.

    The rectified deviation from ``nominal`` (the half the clamp let through)
    is averaged over the attack window; pi times that mean is the amplitude
    of a half-wave rectified sine. The offset approaches
    ``offset_gain * A_rect`` with a first-order rise, pointing toward the
    opposite threshold, and decays with the same time constant afterwards.
    """
    n = x.shape[-1]
    t = np.arange(n) / sample_rate
    t_start, t_end = window if window is not None else (0.0, n / sample_rate)
    high = p.is_high(nominal)
    rect = np.maximum(nominal - x, 0.0) if high else np.maximum(x - nominal, 0.0)
    active = (t >= t_start) & (t < t_end)
    if not active.any():
        return np.zeros_like(x)
    a_rect = math.pi * rect[..., active].mean(axis=-1, keepdims=True)
    asym = p.offset_gain * a_rect
    tau = p.accumulation_tau
    rise = 1.0 - np.exp(-np.clip(t - t_start, 0.0, None) / tau)
    peak = 1.0 - math.exp(-(t_end - t_start) / tau)
    fall = peak * np.exp(-np.clip(t - t_end, 0.0, None) / tau)
    shape = np.where(t < t_start, 0.0, np.where(t < t_end, rise, fall))
    sign = -1.0 if high else 1.0
    return sign * asym * shape


def accumulate_offset(w: Waveform, nominal: float, p: ReceiverParams,
                      window: tuple[float, float] | None = None) -> Waveform:
    """Add the buffer's accumulated net-charge offset to a clamped waveform.

    ``window`` is the (start, end) time of the attack in seconds; by default
    the whole waveform is under attack.
    """
    off = _offset_trajectory(w.samples, nominal, p, w.sample_rate, window)
    return Waveform(w.samples + off, w.sample_rate)


def latch_indices(n_samples: int, sample_rate: float, p: ReceiverParams) -> np.ndarray:
    n_bits = int(math.floor(n_samples / (p.bit_period * sample_rate) + 1e-9))
    times = (np.arange(n_bits) + p.sample_phase) * p.bit_period
    return np.minimum(np.floor(times * sample_rate + 1e-9).astype(np.int64), n_samples - 1)


def detect_bits(w: Waveform, p: ReceiverParams, initial_bit: int = 1) -> BitTrace:
    """Latch one bit per bit period with two-threshold hysteresis."""
    if w.duration < p.bit_period * (1 - 1e-9):
        raise ParameterError(
            f"waveform lasts {w.duration:g} s, shorter than one bit period {p.bit_period:g} s"
        )
    idx = latch_indices(len(w), w.sample_rate, p)
    bits = kernels.latch_hysteresis(w.samples[idx], p.v_h, p.v_l, int(initial_bit))
    return BitTrace(bits, (np.arange(idx.size) + p.sample_phase) * p.bit_period)


def _trial_seed(seed: int, trial: int) -> int:
    return int(np.random.SeedSequence([seed, trial]).generate_state(1, np.uint64)[0])


def _trial_phase(seed: int, trial: int) -> float:
    return float(np.random.default_rng([seed, trial, 1]).uniform(0.0, 2 * math.pi))


def attack_tone(amplitude_vpp: float, freq: float, n: int, sample_rate: float, phase):
    """Sinusoidal attack samples; ``phase`` may be a vector (one row each)."""
    t = np.arange(n) / sample_rate
    ph = np.asarray(phase, dtype=np.float64)
    return (amplitude_vpp / 2) * np.sin(2 * np.pi * freq * t + ph[..., None])


def run_chain(nominal_bit: int, attack_amplitude: float, attack_freq: float,
              sp: SubtractorParams, rp: ReceiverParams, seed: int, phase: float,
              transfer: TransferParams | None = None, sample_rate: float = 1e9):
    """One trial through the public operations, one step at a time.

    ``seed`` is the noise seed handed to ``subtractor_output`` as is.

    Returns the intermediate waveforms and the latched trace; mainly useful
    for inspection and for checking the batched path in ``flip_probability``.
    """
    n = int(round(rp.bit_period * sample_rate))
    nominal = rp.nominal_level(nominal_bit)
    v_dm = np.full(n, nominal / sp.g_dm)
    cm = np.full(n, COMMON_MODE_LEVEL)
    clean = recompose(ModePair(Waveform(v_dm, sample_rate), Waveform(cm, sample_rate)))
    attack = Waveform(attack_tone(attack_amplitude, attack_freq, n, sample_rate, [phase])[0], sample_rate)
    if transfer is not None:
        attack = apply_transfer(attack, transfer)
    attacked = inject_common_mode(clean, attack)
    modes = bypass_modes(clean, attacked)
    out = subtractor_output(modes, sp, attack_freq, seed)
    clamped = esd_clamp(out, rp)
    buffered = accumulate_offset(clamped, nominal, rp)
    trace = detect_bits(buffered, rp, initial_bit=nominal_bit)
    return {"subtractor": out, "clamped": clamped, "buffered": buffered, "trace": trace}


def flip_probability(nominal_bit: int, attack_amplitude: float, attack_freq: float,
                     sp: SubtractorParams, rp: ReceiverParams, trials: int, seed: int,
                     transfer: TransferParams | None = None, sample_rate: float = 1e9,
                     phase: float | None = None, chunk: int = 256) -> float:
    """Fraction of trials whose latched bit differs from ``nominal_bit``.

    ``attack_amplitude`` is peak-to-peak volts. Each trial gets its own noise
    seed and, unless ``phase`` is fixed, a random carrier phase, both derived
    from ``(seed, trial)``. For nominal 1 the result estimates u, for
    nominal 0 it estimates v.
    """
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    if nominal_bit not in (0, 1):
        raise ParameterError("nominal_bit must be 0 or 1")
    check_frequency(attack_freq, sample_rate)
    n = int(round(rp.bit_period * sample_rate))
    nominal = rp.nominal_level(nominal_bit)
    latch = latch_indices(n, sample_rate, rp)[0]
    flips = 0
    for lo in range(0, trials, chunk):
        ids = range(lo, min(lo + chunk, trials))
        ph = [phase if phase is not None else _trial_phase(seed, i) for i in ids]
        x = attack_tone(attack_amplitude, attack_freq, n, sample_rate, ph)
        if transfer is not None:
            x = transfer_array(x, sample_rate, transfer)
        # same arithmetic as inject_common_mode + bypass_modes
        v_cm = (COMMON_MODE_LEVEL + x) - COMMON_MODE_LEVEL
        v_dm = np.full(n, nominal / sp.g_dm)
        o = subtractor_response(v_dm, v_cm, sp, attack_freq)
        if sp.noise_sigma > 0:
            o = o + np.stack([
                np.random.default_rng(_trial_seed(seed, i)).normal(0.0, sp.noise_sigma, n)
                for i in ids
            ])
        c = np.clip(o, rp.clamp_min, rp.clamp_max)
        b = c + _offset_trajectory(c, nominal, rp, sample_rate)
        v = b[:, latch]
        if nominal_bit:
            flips += int(np.count_nonzero(v <= rp.v_l))
        else:
            flips += int(np.count_nonzero(v >= rp.v_h))
    return flips / trials
