"""Analog side of the link: differential pair, injection, subtractor, SINAD."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ParameterError, StructuralError

# attack content must stay below this fraction of Nyquist
NYQUIST_MARGIN = 0.8
SINAD_CAP_DB = 120.0


@dataclass(frozen=True, eq=False)
class Waveform:
    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=np.float64)
        if s.ndim != 1:
            raise StructuralError("waveform samples must be one-dimensional")
        if not self.sample_rate > 0:
            raise ParameterError(f"sample_rate must be positive, got {self.sample_rate}")
        if not np.all(np.isfinite(s)):
            raise ParameterError("waveform contains non-finite samples")
        s.flags.writeable = False
        object.__setattr__(self, "samples", s)

    def __len__(self):
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.samples.size) / self.sample_rate

    @classmethod
    def constant(cls, value: float, n: int, sample_rate: float) -> "Waveform":
        return cls(np.full(n, float(value)), sample_rate)

    @classmethod
    def tone(cls, amplitude: float, freq: float, n: int, sample_rate: float,
             phase: float = 0.0, offset: float = 0.0) -> "Waveform":
        t = np.arange(n) / sample_rate
        return cls(offset + amplitude * np.sin(2 * np.pi * freq * t + phase), sample_rate)

    def peak_to_peak(self) -> float:
        return float(self.samples.max() - self.samples.min())


def _require_nonempty(w: Waveform):
    if len(w) == 0:
        raise StructuralError("waveform is empty")


def _require_compatible(a: Waveform, b: Waveform):
    if len(a) != len(b):
        raise StructuralError(f"length mismatch: {len(a)} vs {len(b)}")
    if a.sample_rate != b.sample_rate:
        raise StructuralError(f"sample rate mismatch: {a.sample_rate} vs {b.sample_rate}")


def check_frequency(freq: float, sample_rate: float):
    """Reject attack frequencies that would alias at this sample rate."""
    if freq < 0:
        raise ParameterError(f"frequency must be non-negative, got {freq}")
    limit = NYQUIST_MARGIN * sample_rate / 2
    if freq >= limit:
        raise ParameterError(
            f"frequency {freq:g} Hz violates the sampling rule (< {limit:g} Hz at fs={sample_rate:g})"
        )


@dataclass(frozen=True, eq=False)
class DifferentialPair:
    d_plus: Waveform
    d_minus: Waveform
    # exact mode view when the pair was built from modes; keeps v_dm free of
    # cancellation error after common-mode additions
    modes: "ModePair | None" = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        _require_compatible(self.d_plus, self.d_minus)


@dataclass(frozen=True, eq=False)
class ModePair:
    v_dm: Waveform
    v_cm: Waveform

    def __post_init__(self):
        _require_compatible(self.v_dm, self.v_cm)


def decompose(pair: DifferentialPair) -> ModePair:
    if pair.modes is not None:
        return pair.modes
    fs = pair.d_plus.sample_rate
    p, m = pair.d_plus.samples, pair.d_minus.samples
    return ModePair(Waveform(p - m, fs), Waveform((p + m) / 2, fs))


def recompose(modes: ModePair) -> DifferentialPair:
    fs = modes.v_dm.sample_rate
    dm, cm = modes.v_dm.samples, modes.v_cm.samples
    return DifferentialPair(Waveform(cm + dm / 2, fs), Waveform(cm - dm / 2, fs), modes)


def inject_common_mode(pair: DifferentialPair, injected: Waveform) -> DifferentialPair:
    """Add the same signal to both wires, as a radiated field couples equally."""
    _require_compatible(pair.d_plus, injected)
    x = injected.samples
    fs = injected.sample_rate
    before = decompose(pair)
    modes = ModePair(before.v_dm, Waveform(before.v_cm.samples + x, fs))
    return DifferentialPair(Waveform(pair.d_plus.samples + x, fs),
                            Waveform(pair.d_minus.samples + x, fs), modes)


def bypass_modes(clean: DifferentialPair, attacked: DifferentialPair) -> ModePair:
    """Modes seen by the subtractor under attack.

    The static common mode is rejected in band, so only the injected part
    ``T(s)`` is kept as the common-mode input while the differential mode is
    taken from the attacked pair.
    """
    a, c = decompose(attacked), decompose(clean)
    fs = a.v_cm.sample_rate
    return ModePair(a.v_dm, Waveform(a.v_cm.samples - c.v_cm.samples, fs))


@dataclass(frozen=True)
class TransferParams:
    """Coupling from the attacker's antenna to the wires.

    The band selectivity is an order-``order`` Butterworth band-pass applied
    as a zero-phase magnitude response; ``bandpass_center=None`` disables it.
    """
    gain: float = 1.0
    delay: float = 0.0
    bandpass_center: float | None = None
    bandpass_width: float = 1e6
    order: int = 2

    def __post_init__(self):
        if self.gain < 0:
            raise ParameterError("transfer gain must be >= 0")
        if not self.bandpass_width > 0:
            raise ParameterError("bandpass_width must be > 0")
        if self.order < 1:
            raise ParameterError("filter order must be >= 1")

    def magnitude(self, freq) -> np.ndarray:
        f = np.abs(np.asarray(freq, dtype=np.float64))
        if self.bandpass_center is None:
            return np.full(f.shape, self.gain)
        fc, bw = self.bandpass_center, self.bandpass_width
        with np.errstate(divide="ignore", invalid="ignore"):
            x = (f ** 2 - fc ** 2) / (f * bw)
            h = 1.0 / np.sqrt(1.0 + x ** (2 * self.order))
        h = np.where(f == 0, 0.0, h)
        return self.gain * h


def apply_transfer(attack: Waveform, t: TransferParams) -> Waveform:
    """Gain, delay and band-limit ``attack``. The delay is applied circularly."""
    _require_nonempty(attack)
    if t.gain == 0:
        return Waveform(np.zeros(len(attack)), attack.sample_rate)
    return Waveform(transfer_array(attack.samples, attack.sample_rate, t), attack.sample_rate)


def transfer_array(x: np.ndarray, sample_rate: float, t: TransferParams) -> np.ndarray:
    """``apply_transfer`` along the last axis of a plain array."""
    if t.bandpass_center is None and t.delay == 0:
        return t.gain * x
    n = x.shape[-1]
    freqs = np.fft.rfftfreq(n, d=1.0 / sample_rate)
    h = t.magnitude(freqs).astype(np.complex128)
    if t.delay:
        h *= np.exp(-2j * np.pi * freqs * t.delay)
    return np.fft.irfft(np.fft.rfft(x, axis=-1) * h, n=n, axis=-1)


@dataclass(frozen=True)
class CommonModeCurve:
    """Common-mode gain versus frequency, in dB.

    Flat at ``inband_db`` up to ``corner_freq``, then rising by
    ``slope_db_per_decade`` until it saturates at ``max_db``. Each bump
    ``(freq, height_db, width_decades)`` adds a Gaussian (in log-frequency)
    resonance on top.
    """
    inband_db: float = -90.0
    corner_freq: float = 1e6
    slope_db_per_decade: float = 40.0
    max_db: float = 0.0
    bumps: tuple[tuple[float, float, float], ...] = ()

    def db(self, freq) -> np.ndarray:
        f = np.maximum(np.asarray(freq, dtype=np.float64), 0.0)
        with np.errstate(divide="ignore"):
            decades = np.log10(np.where(f > 0, f, 1.0) / self.corner_freq)
        base = self.inband_db + self.slope_db_per_decade * np.clip(decades, 0.0, None)
        base = np.minimum(base, self.max_db)
        lf = np.log10(np.where(f > 0, f, 1.0))
        for fb, height, width in self.bumps:
            bump = height * np.exp(-0.5 * ((lf - math.log10(fb)) / width) ** 2)
            base = base + np.where(f > 0, bump, 0.0)
        return base

    def gain(self, freq) -> np.ndarray:
        return 10.0 ** (self.db(freq) / 20.0)


@dataclass(frozen=True)
class SubtractorParams:
    g_dm: float = 1.0
    g_cm_curve: CommonModeCurve = field(default_factory=CommonModeCurve)
    # F(x) = g_cm(f) * sum(c_k * x**(k+2)): distortion rides on the bypass gain
    distortion_coeffs: tuple[float, ...] = ()
    noise_sigma: float = 0.0

    def __post_init__(self):
        if not self.g_dm > 0:
            raise ParameterError("g_dm must be > 0")
        if self.noise_sigma < 0:
            raise ParameterError("noise_sigma must be >= 0")

    @property
    def corner_freq(self) -> float:
        return self.g_cm_curve.corner_freq

    def g_cm(self, freq: float) -> float:
        return float(self.g_cm_curve.gain(freq))

    def distortion(self, v_cm: np.ndarray, freq: float) -> np.ndarray:
        if not self.distortion_coeffs:
            return np.zeros_like(v_cm)
        weight = self.g_cm(freq)
        out = np.zeros_like(v_cm)
        for k, c in enumerate(self.distortion_coeffs):
            out += c * v_cm ** (k + 2)
        return weight * out


def subtractor_response(v_dm: np.ndarray, v_cm: np.ndarray, p: SubtractorParams,
                        attack_freq: float) -> np.ndarray:
    """Deterministic part of the subtractor output; works on any array shape."""
    return p.g_dm * v_dm + p.g_cm(attack_freq) * v_cm + p.distortion(v_cm, attack_freq)


def subtractor_output(modes: ModePair, p: SubtractorParams, attack_freq: float,
                      seed: int) -> Waveform:
    """Amplified modes plus distortion plus seeded white Gaussian noise."""
    _require_nonempty(modes.v_dm)
    fs = modes.v_dm.sample_rate
    check_frequency(attack_freq, fs)
    o = subtractor_response(modes.v_dm.samples, modes.v_cm.samples, p, attack_freq)
    if p.noise_sigma > 0:
        o = o + np.random.default_rng(seed).normal(0.0, p.noise_sigma, o.size)
    return Waveform(o, fs)


def sinad(w: Waveform, fundamental: float) -> float:
    """Signal to noise-and-distortion ratio in dB.

    Uses a periodic flat-top window. Its main lobe spans ±4 bins, so the
    fundamental and DC are each taken as a ±4-bin zone; everything else
    counts as noise plus distortion. Results are capped at 120 dB.
    """
    _require_nonempty(w)
    fs = w.sample_rate
    if not 0 < fundamental < fs / 2:
        raise ParameterError(f"fundamental {fundamental:g} Hz must lie in (0, fs/2 = {fs / 2:g})")
    n = len(w)
    if n < 2 * fs / fundamental:
        raise ParameterError("waveform must span at least two periods of the fundamental")
    from scipy.signal import get_window

    x = w.samples - w.samples.mean()
    spec = np.abs(np.fft.rfft(x * get_window("flattop", n, fftbins=True))) ** 2
    half = 4
    k0 = int(round(fundamental * n / fs))
    if k0 <= 2 * half:
        raise ParameterError("fundamental too close to DC for this record length")
    sig = spec[max(k0 - half, 0):k0 + half + 1].sum()
    mask = np.ones(spec.size, dtype=bool)
    mask[:half + 1] = False
    mask[max(k0 - half, 0):k0 + half + 1] = False
    resid = spec[mask].sum()
    if sig <= 0:
        return -SINAD_CAP_DB
    if resid <= sig * 1e-12:
        return SINAD_CAP_DB
    return float(min(10 * math.log10(sig / resid), SINAD_CAP_DB))
