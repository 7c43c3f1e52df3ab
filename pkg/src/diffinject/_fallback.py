"""Pure numpy implementations of the hot kernels.

Every function here has a twin in ``_kernels.pyx`` and the two must agree
bit for bit; ``tests/test_kernels.py`` holds them to that.
"""
import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
STREAM_MULT = 0xD1B54A32D192ED03
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(GOLDEN)
_INV53 = 1.0 / (1 << 53)

# trials per vectorised chunk; bounds peak memory at a few tens of MB
CHUNK = 1 << 20


def mix64(z):
    """splitmix64 finaliser over a uint64 array (wrapping arithmetic)."""
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def stream_base(seed, stream):
    x = ((int(seed) & MASK64) ^ ((int(stream) * STREAM_MULT) & MASK64)) & MASK64
    return int(mix64(np.array([x], dtype=np.uint64))[0])


def trial_keys(base, trials):
    trials = np.asarray(trials, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return mix64(np.uint64(base) + (trials + np.uint64(1)) * _GOLDEN)


def _unit_from_keys(keys, j):
    with np.errstate(over="ignore"):
        x = mix64(keys + np.uint64((int(j) + 1) * GOLDEN & MASK64))
    return (x >> np.uint64(11)).astype(np.float64) * _INV53


def unit_draws(base, trials, j):
    """Uniform [0, 1) draw number ``j`` for each trial index in ``trials``."""
    return _unit_from_keys(trial_keys(base, trials), j)


def message_trials(base, start, count, positions, line, intended, g, u, v):
    """Run ``count`` message trials starting at trial index ``start``.

    Only bits listed in ``positions`` are attacked; bit ``i`` consumes draws
    ``2i`` (guess) and ``2i + 1`` (flip). Returns the number of successful
    trials and a histogram of the first failing bit index.
    """
    positions = np.asarray(positions, dtype=np.int64)
    line = np.asarray(line, dtype=np.uint8)
    intended = np.asarray(intended, dtype=np.uint8)
    g = np.asarray(g, dtype=np.float64)
    hist = np.zeros(len(line), dtype=np.int64)
    successes = 0
    for lo in range(start, start + count, CHUNK):
        hi = min(lo + CHUNK, start + count)
        keys = trial_keys(base, np.arange(lo, hi, dtype=np.uint64))
        for i in positions:
            if keys.size == 0:
                break
            a = line[i]
            want = intended[i]
            guess = _unit_from_keys(keys, 2 * i) < g[i]
            radiate = guess != bool(want)
            p = u if a == 1 else v
            flipped = radiate & (_unit_from_keys(keys, 2 * i + 1) < p)
            final = np.where(flipped, 1 - a, a)
            ok = final == want
            hist[i] += int(ok.size - np.count_nonzero(ok))
            keys = keys[ok]
        successes += int(keys.size)
    return successes, hist


def latch_hysteresis(values, v_h, v_l, initial):
    values = np.asarray(values, dtype=np.float64)
    out = np.empty(values.size, dtype=np.uint8)
    state = int(initial)
    for k, x in enumerate(values):
        if x >= v_h:
            state = 1
        elif x <= v_l:
            state = 0
        out[k] = state
    return out
