import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from scipy.stats import norm

from diffinject.errors import ParameterError
from diffinject.receiver import (
    ReceiverParams, _trial_phase, _trial_seed, accumulate_offset, detect_bits, esd_clamp,
    flip_probability, run_chain,
)
from diffinject.signal_core import CommonModeCurve, SubtractorParams, Waveform

FS = 1e9
RP = ReceiverParams()
RAILS_33 = ReceiverParams(clamp_max=3.3)
# pin-level injection: the tone reaches the buffer with unit gain
DIRECT = SubtractorParams(g_cm_curve=CommonModeCurve(inband_db=0.0, max_db=0.0))


def test_defaults_are_datasheet_thresholds():
    assert (RP.v_dd, RP.v_h, RP.v_l) == (3.0, 2.1, 0.9)
    assert RP.accumulation_tau == pytest.approx(0.1 * RP.bit_period)
    assert RP.sample_phase == 0.5


@pytest.mark.parametrize("kw", [
    dict(v_h=0.8, v_l=0.9), dict(clamp_max=2.0), dict(bit_period=0.0),
    dict(accumulation_tau=-1.0), dict(sample_phase=1.0), dict(offset_gain=-0.1),
])
def test_invalid_params(kw):
    with pytest.raises(ParameterError):
        ReceiverParams(**kw)


def test_clamp_examples():
    w = Waveform(np.array([5.0, -1.0, 1.2]), FS)
    assert esd_clamp(w, RAILS_33).samples.tolist() == [3.3, 0.0, 1.2]
    big = Waveform.tone(4.0, 10e6, 1000, FS, offset=3.0)
    out = esd_clamp(big, RAILS_33).samples
    assert out.min() == 0.0 and out.max() == 3.3


volts = arrays(np.float64, 32, elements=st.floats(-10, 10))


@given(volts)
def test_clamp_idempotent(x):
    w = esd_clamp(Waveform(x, FS), RP)
    assert np.array_equal(esd_clamp(w, RP).samples, w.samples)


@given(volts, arrays(np.float64, 32, elements=st.floats(0, 5)))
def test_clamp_monotone(x, dx):
    a = esd_clamp(Waveform(x, FS), RP).samples
    b = esd_clamp(Waveform(x + dx, FS), RP).samples
    assert np.all(b >= a)


# -- accumulation ----------------------------------------------------------

def _attacked_high(amplitude, n=2000, f=40e6):
    """Nominal-high line, clamped, with a tone of the given peak amplitude."""
    return esd_clamp(Waveform.tone(amplitude, f, n, FS, offset=RP.v_dd), RP)


def test_no_oscillation_no_offset():
    w = Waveform.constant(3.0, 2000, FS)
    assert np.array_equal(accumulate_offset(w, 3.0, RP).samples, w.samples)


def test_offset_points_toward_low_threshold():
    w = _attacked_high(1.0)
    off = accumulate_offset(w, 3.0, RP).samples - w.samples
    assert np.all(off <= 0)
    low = esd_clamp(Waveform.tone(1.0, 40e6, 2000, FS, offset=0.0), RP)
    assert np.all(accumulate_offset(low, 0.0, RP).samples - low.samples >= 0)


def test_first_order_step_response():
    amp = 1.0
    w = _attacked_high(amp)
    off = accumulate_offset(w, 3.0, RP).samples - w.samples
    # clamp removes the upper half; a half-wave rectified sine of peak A has
    # mean A/pi, so the extracted amplitude is A and the asymptote 1.5 A
    asym = -RP.offset_gain * amp
    k_tau = int(round(RP.accumulation_tau * FS))
    assert off[k_tau] / asym == pytest.approx(1 - math.exp(-1), abs=0.01)
    k5 = 5 * k_tau
    slope = abs(off[k5 + 1] - off[k5]) * FS
    assert slope < 0.01 * abs(asym) / RP.accumulation_tau


def test_offset_decays_after_window():
    w = _attacked_high(1.0)
    window = (0.0, 1e-6)
    off = accumulate_offset(w, 3.0, RP, window=window).samples - w.samples
    after = off[int(1e-6 * FS):]
    assert np.all(np.diff(np.abs(after)) <= 1e-12)
    assert abs(off[-1]) < abs(off[int(1e-6 * FS) - 1])


# -- detection ---------------------------------------------------------------

def test_detect_constant_high():
    assert detect_bits(Waveform.constant(3.0, 8000, FS), RP).tolist() == [1, 1, 1, 1]


def test_detect_between_thresholds_retains():
    assert detect_bits(Waveform.constant(1.5, 6000, FS), RP, initial_bit=1).tolist() == [1, 1, 1]
    assert detect_bits(Waveform.constant(1.5, 6000, FS), RP, initial_bit=0).tolist() == [0, 0, 0]


def test_detect_step():
    x = np.concatenate([np.full(4000, 3.0), np.full(4000, 0.5)])
    trace = detect_bits(Waveform(x, FS), RP)
    assert trace.tolist() == [1, 1, 0, 0]
    assert np.allclose(np.diff(trace.latch_times), RP.bit_period)


def test_detect_too_short():
    with pytest.raises(ParameterError):
        detect_bits(Waveform.constant(3.0, 100, FS), RP)


def test_detect_only_reads_latch_instants(rng):
    x = rng.uniform(0, 3, 8000)
    y = rng.uniform(0, 3, 8000)
    idx = (np.arange(4) * 2000 + 1000)
    y[idx] = x[idx]
    a = detect_bits(Waveform(x, FS), RP).tolist()
    b = detect_bits(Waveform(y, FS), RP).tolist()
    assert a == b


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, 6, elements=st.floats(0, 3)), st.floats(1.0, 2.0), st.floats(0, 0.9),
       st.integers(0, 1))
def test_raising_vh_never_creates_ones(levels, vh, bump, init):
    x = np.repeat(levels, 100)
    lo = ReceiverParams(v_h=vh, v_l=0.9, bit_period=100 / FS)
    hi = ReceiverParams(v_h=min(vh + bump, 3.0), v_l=0.9, bit_period=100 / FS)
    a = detect_bits(Waveform(x, FS), lo, init).bits
    b = detect_bits(Waveform(x, FS), hi, init).bits
    assert np.all(b <= a)


# -- flip probability --------------------------------------------------------

def test_zero_amplitude_never_flips():
    sp = SubtractorParams(g_cm_curve=DIRECT.g_cm_curve, noise_sigma=0.05)
    assert 6 * sp.noise_sigma < RP.v_dd - RP.v_h and 6 * sp.noise_sigma < RP.v_l
    for bit in (0, 1):
        assert flip_probability(bit, 0.0, 40e6, sp, RP, 500, seed=1) == 0.0


def test_saturating_offset_always_flips():
    for bit in (0, 1):
        assert flip_probability(bit, 5.0, 40e6, DIRECT, RP, 200, seed=2) == 1.0


def test_monotone_in_amplitude():
    sp = SubtractorParams(g_cm_curve=DIRECT.g_cm_curve, noise_sigma=0.05)
    amps = np.linspace(0.0, 4.0, 21)
    for bit in (0, 1):
        p = [flip_probability(bit, a, 40e6, sp, RP, 400, seed=5) for a in amps]
        assert all(b >= a for a, b in zip(p, p[1:])), p


def _expected_rectified_mean(amplitude, sigma, n, f):
    """E[mean(max(-(A sin + noise), 0))] over the bit, by the Gaussian formula."""
    theta = 2 * np.pi * f * np.arange(n) / FS
    m = -amplitude * np.sin(theta)
    return float(np.mean(m * norm.cdf(m / sigma) + sigma * norm.pdf(m / sigma)))


def test_gaussian_tail_oracle():
    sigma, vpp, f = 0.05, 2.7333, 40e6
    sp = SubtractorParams(g_cm_curve=DIRECT.g_cm_curve, noise_sigma=sigma)
    n = int(RP.bit_period * FS)
    # phase 0 puts the latch instant on a zero crossing, so the latched level
    # is v_dd + offset + noise; by mid-bit the offset has risen to 1 - e^-5
    rise = 1 - math.exp(-RP.sample_phase * RP.bit_period / RP.accumulation_tau)
    offset = -RP.offset_gain * math.pi * _expected_rectified_mean(vpp / 2, sigma, n, f) * rise
    d = RP.v_dd + offset - RP.v_l
    expected = norm.cdf(-d / sigma)
    trials = 20000
    got = flip_probability(1, vpp, f, sp, RP, trials, seed=9, phase=0.0)
    se = math.sqrt(expected * (1 - expected) / trials)
    assert 0.05 < expected < 0.5
    assert abs(got - expected) < 3 * se, (got, expected, se)


def test_batched_path_matches_step_by_step():
    sp = SubtractorParams(g_cm_curve=DIRECT.g_cm_curve, noise_sigma=0.05)
    seed, trials = 17, 40
    for bit in (0, 1):
        flips = 0
        for i in range(trials):
            out = run_chain(bit, 2.8, 40e6, sp, RP, _trial_seed(seed, i), _trial_phase(seed, i))
            flips += out["trace"].tolist()[0] != bit
        assert flip_probability(bit, 2.8, 40e6, sp, RP, trials, seed, chunk=7) == flips / trials


def test_flip_probability_reproducible():
    sp = SubtractorParams(g_cm_curve=DIRECT.g_cm_curve, noise_sigma=0.05)
    a = flip_probability(1, 2.7, 40e6, sp, RP, 300, seed=3)
    assert a == flip_probability(1, 2.7, 40e6, sp, RP, 300, seed=3)


def test_flip_probability_errors():
    with pytest.raises(ParameterError):
        flip_probability(1, 1.0, 450e6, DIRECT, RP, 10, seed=0)
    with pytest.raises(ParameterError):
        flip_probability(1, 1.0, 40e6, DIRECT, RP, 0, seed=0)
    with pytest.raises(ParameterError):
        flip_probability(2, 1.0, 40e6, DIRECT, RP, 10, seed=0)
