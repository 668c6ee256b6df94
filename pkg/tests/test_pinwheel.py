"""Pinwheel rounding: sqrt_upper, the frequency forest, and the schedulers."""

import itertools
from collections import Counter
from fractions import Fraction as F
from math import isqrt

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bgt import (
    RateVector,
    ResidueSchedule,
    ScheduleError,
    density,
    density_34_frequencies,
    evaluate_cyclic,
    gen_integer_frequencies,
    gen_planted_head,
    main_algorithm,
    next_cuts_stream,
    schedule_powers_of_two,
    sqrt_upper,
    two_approx,
)

ONE_PLUS = F(1 << 30 | 1, 1 << 30)  # relative slack guaranteed by sqrt_upper


@given(st.fractions(min_value=F(1, 10**6), max_value=10**6))
def test_sqrt_upper_brackets_the_root(x):
    s = sqrt_upper(x)
    assert s * s >= x
    assert (s / ONE_PLUS) ** 2 <= x


def test_sqrt_upper_is_a_strict_upper_bound_near_squares():
    s = sqrt_upper(F(9, 4))
    assert F(3, 2) <= s <= F(3, 2) * ONE_PLUS
    assert sqrt_upper(4) >= 2


def test_density():
    assert density([2, 4, 4]) == 1
    assert density([3, 7, 7]) == F(13, 21)


def test_allocator_frozen_trace():
    sched = schedule_powers_of_two([2, 4, 8, 8])
    assert sched.pairs == ((1, 2), (2, 4), (4, 8), (8, 8))
    assert list(itertools.islice(next_cuts_stream(sched), 8)) == [1, 2, 1, 3, 1, 2, 1, 4]
    # re-validating without the certificate exercises the CRT disjointness check
    ResidueSchedule(sched.pairs)


def test_stream_detects_collisions_behind_a_false_certificate():
    bad = ResidueSchedule(((1, 2), (1, 2)), certified_disjoint=True)
    stream = next_cuts_stream(bad)
    next(stream)
    with pytest.raises(ScheduleError):
        next(stream)


def test_main_uniform16_frozen():
    rates = RateVector([F(1, 16)] * 16)
    sched, diag = main_algorithm(rates)
    qs = Counter(q for _, q in sched.pairs)
    assert qs == {28: 14, 16: 2}
    assert sched.pairs[:4] == ((1, 28), (5, 28), (9, 28), (13, 28))
    assert diag.final_density == F(5, 8)
    assert diag.obs1_count == 0
    assert diag.obs2_count == 2
    assert diag.realized_max == F(7, 4)
    assert evaluate_cyclic(rates, sched).global_max == F(7, 4)
    assert diag.realized_max <= diag.bound


def test_main_two_equal_bamboos():
    rates = RateVector([F(1, 2), F(1, 2)])
    sched, diag = main_algorithm(rates)
    assert sched.pairs == ((1, 4), (3, 4))
    assert diag.realized_max == 2


def test_main_dominant_head():
    rates = RateVector([F(3, 4), F(1, 8), F(1, 8)])
    sched, diag = main_algorithm(rates)
    assert tuple(q for _, q in sched.pairs) == (4, 16, 16)
    assert diag.realized_max == 3
    assert diag.realized_max <= diag.bound


def test_main_random_planted_instances_meet_certified_bound():
    for seed in range(20):
        rates = gen_planted_head(6 + seed, F(1, 4), seed)
        sched, diag = main_algorithm(rates)
        rep = evaluate_cyclic(rates, sched)
        assert rep.global_max == diag.realized_max
        assert rep.global_max <= diag.bound


def test_two_approx_frozen():
    rates = RateVector([F(1, 2), F(1, 4), F(1, 4)])
    sched = two_approx(rates)
    assert sched.pairs == ((1, 4), (3, 8), (7, 8))
    rep = evaluate_cyclic(rates, sched)
    assert rep.global_max == 2  # == 2 * H


def test_density_34_frequencies_frozen():
    rates = RateVector([F(1, 2), F(1, 4), F(1, 4)])
    freqs = density_34_frequencies(rates)
    assert freqs == [3, 7, 7]
    assert density(freqs) == F(13, 21) <= F(3, 4)


@settings(deadline=None)
@given(st.integers(0, 2**32))
def test_density_34_random_rates_stay_under_three_quarters(seed):
    rates = gen_planted_head(40, F(1, 8), seed)
    freqs = density_34_frequencies(rates)
    assert density(freqs) <= F(3, 4)
    assert all(F(1, f) <= r for f, r in zip(freqs, rates.rates))


def test_gen_integer_frequencies_margin_and_determinism():
    for f1 in (64, 256, 1024):
        freqs = gen_integer_frequencies(f1, seed=7)
        assert min(freqs) == f1 == freqs[0]
        assert density(freqs) <= 1 - F(3, isqrt(f1))
    assert gen_integer_frequencies(64, seed=7) == gen_integer_frequencies(64, seed=7)
    assert gen_integer_frequencies(64, seed=7) != gen_integer_frequencies(64, seed=8)


def test_gen_integer_frequencies_rejects_tiny_head():
    with pytest.raises(ValueError):
        gen_integer_frequencies(9, seed=0)
