import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from diffinject import campaign as cp
from diffinject.attacker import FlipPair
from diffinject.can_codec import FIG8_FRAME, encode_frame, frame_to_message_spec
from diffinject.errors import ParameterError

P = FlipPair(0.09, 0.83)


def within_3sigma(res, p):
    se = math.sqrt(max(p * (1 - p), 1e-12) / res.trials)
    return abs(res.rate - p) <= 3 * se


def cfg(trials=100_000, seed=1, pair=P, g=1.0, mode=cp.INDEPENDENT):
    return cp.CampaignConfig(trials, seed, pair, g, mode)


def test_config_validation():
    with pytest.raises(ParameterError):
        cfg(trials=0)
    with pytest.raises(ParameterError):
        cfg(g=1.5)
    with pytest.raises(ParameterError):
        cfg(mode="nope")
    with pytest.raises(ParameterError):
        cp.MessageSpec([], [])
    with pytest.raises(ParameterError):
        cp.MessageSpec([0, 1], [1])


def test_bit_examples():
    assert cp.simulate_bit(1, 1, cfg(g=1.0)).rate == 1.0
    assert within_3sigma(cp.simulate_bit(1, 0, cfg(g=0.0)), 0.83)
    assert within_3sigma(cp.simulate_bit(0, 1, cfg(g=1.0, pair=FlipPair(0.74, 0.0))), 0.74)


def test_result_fields():
    res = cp.simulate_bit(1, 0, cfg(trials=1000, g=0.0))
    lo, hi = res.ci95
    assert 0 <= lo <= res.rate <= hi <= 1
    assert res.rate == res.successes / res.trials
    assert sum(res.per_bit_failures) == res.trials - res.successes


def test_count_dominant_groups():
    assert cp.count_dominant_groups([1, 1, 1]) == (0, 0)
    assert cp.count_dominant_groups([0, 0, 1, 0]) == (3, 2)
    with pytest.raises(ParameterError):
        cp.count_dominant_groups([])


def test_bounds_examples():
    lo, hi = cp.message_bounds(encode_frame(FIG8_FRAME).bits, 0.74)
    assert lo == pytest.approx(0.74 ** 29) and hi == pytest.approx(0.74 ** 9)
    assert cp.message_bounds([1, 1, 1], 0.3) == (1.0, 1.0)
    assert cp.message_bounds([1, 0, 1], 0.3) == (0.3, 0.3)


@given(st.lists(st.integers(0, 1), min_size=1, max_size=60), st.floats(0.01, 0.99))
def test_bounds_ordered(bits, u):
    lo, hi = cp.message_bounds(bits, u)
    assert lo <= hi
    runs_are_single = all(not (a == b == 0) for a, b in zip(bits, bits[1:]))
    assert (lo == hi) == runs_are_single


def test_message_already_on_line():
    spec = cp.MessageSpec([1, 0, 1, 1], [1, 0, 1, 1])
    assert cp.simulate_message(spec, cfg(trials=5000, g=(1.0, 0.0, 1.0, 1.0))).rate == 1.0


def test_grouped_fig8():
    spec = frame_to_message_spec(encode_frame(FIG8_FRAME))
    res = cp.simulate_message(spec, cfg(pair=FlipPair(0.74, 0.0), mode=cp.GROUPED))
    assert within_3sigma(res, 0.74 ** 9)


def test_grouped_at_least_independent(rng):
    for _ in range(5):
        bits = rng.integers(0, 2, 20)
        spec = cp.MessageSpec(bits, np.ones(20, int))
        c = dict(trials=20_000, seed=3, pair=FlipPair(0.6, 0.1), g=1.0)
        ind = cp.simulate_message(spec, cfg(mode=cp.INDEPENDENT, **c))
        grp = cp.simulate_message(spec, cfg(mode=cp.GROUPED, **c))
        se = math.sqrt(ind.stderr ** 2 + grp.stderr ** 2)
        assert grp.rate >= ind.rate - 3 * se


def test_independent_matches_case_products(rng):
    for _ in range(5):
        n = 8
        spec = cp.MessageSpec(rng.integers(0, 2, n), rng.integers(0, 2, n))
        g = tuple(rng.uniform(size=n))
        pair = FlipPair(*rng.uniform(0.5, 1.0, 2))
        res = cp.simulate_message(spec, cfg(trials=50_000, seed=int(rng.integers(1 << 30)), pair=pair, g=g))
        assert within_3sigma(res, cp.analytic_rate(spec, g, pair))


def test_parallel_equals_serial():
    spec = frame_to_message_spec(encode_frame(FIG8_FRAME))
    c = cfg(trials=3 * cp.BLOCK + 123, seed=99, pair=FlipPair(0.9, 0.0), mode=cp.GROUPED)
    a = cp.simulate_message(spec, c, workers=1)
    b = cp.simulate_message(spec, c, workers=4)
    assert a == b
    assert a.to_dict() == b.to_dict()


def test_seed_changes_result():
    spec = cp.MessageSpec([0, 0, 1], [1, 1, 1])
    a = cp.simulate_message(spec, cfg(trials=10_000, seed=1, pair=FlipPair(0.5, 0.0)))
    b = cp.simulate_message(spec, cfg(trials=10_000, seed=2, pair=FlipPair(0.5, 0.0)))
    assert a.successes != b.successes


def test_wilson_coverage():
    spec = cp.MessageSpec([0, 0, 1, 0], [1, 1, 1, 0])
    pair = FlipPair(0.3, 0.6)
    for g in (1.0, 0.5):
        truth = cp.analytic_rate(spec, g, pair)
        hits = 0
        for s in range(200):
            lo, hi = cp.simulate_message(spec, cfg(trials=400, seed=s, pair=pair, g=g)).ci95
            hits += lo <= truth <= hi
        assert hits >= 190


def test_first_failure_histogram():
    spec = cp.MessageSpec([0, 0, 0], [1, 1, 1])
    res = cp.simulate_message(spec, cfg(trials=100_000, pair=FlipPair(0.5, 0.0)))
    h = np.array(res.per_bit_failures) / res.trials
    assert np.allclose(h, [0.5, 0.25, 0.125], atol=0.006)


def test_compare_examples(rng):
    a = rng.uniform(size=20)
    assert cp.compare_pairs(a, a) == cp.NOT_SIGNIFICANT
    x = rng.binomial(1, 0.87, 100).astype(float)
    y = rng.binomial(1, 0.50, 100).astype(float)
    assert cp.compare_pairs(x, y) == cp.A_BETTER
    assert cp.compare_pairs(np.ones(5), np.ones(5)) == cp.NOT_SIGNIFICANT
    with pytest.raises(ParameterError):
        cp.compare_pairs([1.0], [1.0, 2.0])
    with pytest.raises(ParameterError):
        cp.compare_pairs([1.0, np.nan], [1.0, 2.0])


def test_near_optimal_not_separable():
    a = cp.success_rate_samples(FlipPair(0.09, 0.83), 0.5, 100, 100, master_seed=4)
    b = cp.success_rate_samples(FlipPair(0.092, 0.82), 0.5, 100, 100, master_seed=4)
    c = cp.success_rate_samples(FlipPair(0.09, 0.50), 0.5, 100, 100, master_seed=4)
    assert cp.compare_pairs(a, b) == cp.NOT_SIGNIFICANT
    assert cp.compare_pairs(a, c) == cp.A_BETTER
    # pooled over both line states: (0.955 + 0.415) / 2
    assert abs(a.mean() - 0.685) < 0.01
