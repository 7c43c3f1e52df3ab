import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from diffinject.attacker import (
    SEND_NOTHING, FeasibleSet, FlipPair, GuessModel, decide, draw_guess, draw_guesses,
    expected_p0, expected_p1, objective, optimal_pair, success_prob_inject0,
    success_prob_inject1,
)
from diffinject.errors import ParameterError

prob = st.floats(0, 1)
pairs = st.builds(FlipPair, prob, prob)
bit = st.integers(0, 1)


def test_pair_validation():
    with pytest.raises(ParameterError):
        FlipPair(1.2, 0.1)
    with pytest.raises(ParameterError):
        GuessModel(-0.1)


def test_send_nothing_always_in_set():
    fs = FeasibleSet([FlipPair(0.1, 0.2)])
    assert SEND_NOTHING in fs.pairs and len(fs) == 2
    assert len(FeasibleSet([SEND_NOTHING])) == 1


def test_degenerate_guesses():
    assert all(draw_guess(GuessModel(1.0), s) == 1 for s in range(50))
    assert all(draw_guess(GuessModel(0.0), s) == 0 for s in range(50))


def test_guess_mean():
    g = draw_guesses(GuessModel(0.5), seed=123, n=100_000)
    assert 0.495 <= g.mean() <= 0.505
    assert draw_guess(GuessModel(0.5), 7) == draw_guess(GuessModel(0.5), 7)


def test_decide_cases():
    p = FlipPair(0.09, 0.83)
    assert decide(1, 1, p).silent
    assert decide(1, 0, p).pair == p
    assert decide(0, 0, p).silent
    assert decide(0, 1, p).pair == p
    assert str(decide(1, 1, p)) == "Silent"


def test_inject1_examples():
    p = FlipPair(0.09, 0.83)
    assert success_prob_inject1(1, 1, p) == 1
    assert success_prob_inject1(0, 1, p) == 0
    assert success_prob_inject1(1, 0, p) == pytest.approx(0.91)
    assert success_prob_inject1(0, 0, p) == pytest.approx(0.83)


def test_inject0_examples():
    assert success_prob_inject0(0, 0, FlipPair(0.3, 0.3)) == 1
    assert success_prob_inject0(1, 1, FlipPair(0.74, 0.0)) == pytest.approx(0.74)
    assert success_prob_inject0(0, 1, FlipPair(0.0, 0.83)) == pytest.approx(0.17)


def test_expected_p1_examples():
    assert expected_p1(1.0, FlipPair(0.37, 0.2), 1) == 1
    assert expected_p1(0.5, FlipPair(0.09, 0.83), 1) == pytest.approx(0.955)
    assert expected_p1(0.5, FlipPair(0.09, 0.83), 0) == pytest.approx(0.415)


@given(pairs, bit, bit)
def test_probabilities_bounded(p, a, g):
    for f in (success_prob_inject1, success_prob_inject0):
        assert 0 <= f(a, g, p) <= 1


@given(st.builds(FlipPair, st.floats(0.001, 0.999), st.floats(0.001, 0.999)), bit)
def test_correct_guess_maximises_p1(p, a):
    assert success_prob_inject1(a, a, p) >= success_prob_inject1(a, 1 - a, p)


@given(pairs, prob, bit)
def test_expectations_are_guess_averages(p, g, a):
    e1 = g * success_prob_inject1(a, 1, p) + (1 - g) * success_prob_inject1(a, 0, p)
    e0 = g * success_prob_inject0(a, 1, p) + (1 - g) * success_prob_inject0(a, 0, p)
    assert expected_p1(g, p, a) == pytest.approx(e1, abs=1e-12)
    assert expected_p0(g, p, a) == pytest.approx(e0, abs=1e-12)


@given(pairs, prob, prob)
def test_expected_p1_affine(p, g1, g2):
    slope = {1: p.u, 0: -p.v}
    for a in (0, 1):
        lhs = expected_p1(g2, p, a) - expected_p1(g1, p, a)
        assert lhs == pytest.approx(slope[a] * (g2 - g1), abs=1e-12)


def test_monte_carlo_expectation():
    p, g, n = FlipPair(0.2, 0.6), 0.3, 100_000
    gs = draw_guesses(GuessModel(g), seed=5, n=n)
    for a in (0, 1):
        mean = np.mean([success_prob_inject1(a, int(x), p) for x in gs])
        var = (p.u if a else p.v) ** 2 * g * (1 - g)
        assert abs(mean - expected_p1(g, p, a)) < 3 * np.sqrt(var / n) + 1e-12


def test_optimizer_examples():
    fs = FeasibleSet([FlipPair(0.09, 0.83, (40e6, 4.0))])
    assert optimal_pair(fs, 0.5, 1).u == 0.09
    assert optimal_pair(fs, 0.95, 1).is_send_nothing
    crossover = 0.83 / 0.92
    assert not optimal_pair(fs, crossover - 1e-6, 1).is_send_nothing
    assert optimal_pair(fs, crossover + 1e-6, 1).is_send_nothing


def test_optimizer_g_one_minimises_u():
    fs = FeasibleSet([FlipPair(0.2, 0.9), FlipPair(0.1, 0.1)])
    assert optimal_pair(fs, 1.0, 1).is_send_nothing
    assert optimal_pair([FlipPair(0.2, 0.9), FlipPair(0.1, 0.1)], 1.0, 1) == SEND_NOTHING


def test_tie_breaks():
    a = FlipPair(0.1, 0.5, (2e6, 1.0))
    b = FlipPair(0.1, 0.5, (1e6, 1.0))
    assert optimal_pair([a, b], 0.5, 1) == b
    # equal objective 0.5 at g=0.5: u=0 SendNothing vs (0.2, 0.2): smaller u wins
    assert optimal_pair([FlipPair(0.2, 0.2)], 0.5, 1).is_send_nothing
    # for target 0 the larger u wins the tie
    assert optimal_pair([FlipPair(0.2, 0.2)], 0.5, 0) == FlipPair(0.2, 0.2)
    # measured (0, 0) ties with SendNothing; SendNothing goes first
    assert optimal_pair([FlipPair(0.0, 0.0, (1e6, 1.0))], 0.7, 1).meta is None


@settings(max_examples=50, deadline=None)
@given(st.lists(pairs, min_size=1, max_size=200), prob, bit)
def test_optimizer_is_argmax(ps, g, target):
    fs = FeasibleSet(ps)
    best = optimal_pair(fs, g, target)
    assert best in fs.pairs
    assert all(objective(best, g, target) >= objective(p, g, target) for p in fs)


def test_optimizer_exhaustive_large(rng):
    ps = [FlipPair(float(u), float(v)) for u, v in rng.uniform(size=(10_000, 2))]
    for g in (0.1, 0.5, 0.9):
        for target in (0, 1):
            best = optimal_pair(ps, g, target)
            scores = [objective(p, g, target) for p in ps] + [objective(SEND_NOTHING, g, target)]
            assert objective(best, g, target) == max(scores)


@given(st.lists(pairs, min_size=1, max_size=50), prob)
def test_weight_symmetry(ps, g):
    # injecting 1 with (u, v) at weight g scores the same as injecting 0
    # with (v, u) at weight 1 - g, so the argmax mirrors
    mirror = {FlipPair(p.v, p.u): p for p in ps}
    for p in ps:
        assert objective(p, g, 1) == pytest.approx(objective(FlipPair(p.v, p.u), 1 - g, 0), abs=1e-12)
    best = optimal_pair(ps, g, 1)
    best_m = optimal_pair(list(mirror), 1 - g, 0)
    assert objective(best, g, 1) == pytest.approx(objective(best_m, 1 - g, 0), abs=1e-12)
