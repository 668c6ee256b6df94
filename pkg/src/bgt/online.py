"""Greedy cutting strategies and the adversarial families that expose them.

Both strategies decide at the end of each round, after all bamboos have
grown.  Tie rules are fixed so traces are reproducible: Reduce-Max prefers
the larger growth rate and then the lower index; Reduce-Fastest prefers the
lower index (rates are sorted, so that is also the largest-rate choice).
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from .core import RateVector, SimulationReport, frac, simulate_discrete


def reduce_max(rates: RateVector, horizon: int) -> tuple[list[int], SimulationReport]:
    """Cut the currently tallest bamboo each round.

    Returns the realized cut sequence and its exact report (initial and tail
    gaps included).
    """
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    h = rates.rates
    n = rates.n
    ages = [0] * n
    schedule = []
    for _ in range(horizon):
        best = 0
        best_key = ((ages[0] + 1) * h[0], h[0], 0)
        for i in range(1, n):
            key = ((ages[i] + 1) * h[i], h[i], -i)
            if key > best_key:
                best_key = key
                best = i
        for i in range(n):
            ages[i] += 1
        ages[best] = 0
        schedule.append(best + 1)
    return schedule, simulate_discrete(rates, schedule)


def reduce_fastest(
    rates: RateVector, x, horizon: int
) -> tuple[list[int], SimulationReport]:
    """Cut the largest-rate bamboo among those of height >= x*H; idle if none.

    Idle rounds are recorded as index 0 in the returned sequence.
    """
    x = frac(x)
    if x <= 0:
        raise ValueError(f"threshold factor x must be positive, got {x}")
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    h = rates.rates
    n = rates.n
    threshold = x * rates.H
    ages = [0] * n
    schedule = []
    for _ in range(horizon):
        cut = 0
        # rates are sorted non-increasing, so the first bamboo over the
        # threshold is the largest-rate (lowest-index) eligible one
        for i in range(n):
            if (ages[i] + 1) * h[i] >= threshold:
                cut = i + 1
                break
        for i in range(n):
            ages[i] += 1
        if cut:
            ages[cut - 1] = 0
        schedule.append(cut)
    return schedule, simulate_discrete(rates, schedule)


def diverging_bamboo(rates: RateVector, schedule: Sequence[int]) -> int | None:
    """Detect non-convergence in a finite trace.

    Returns the lowest index whose height at the horizon exceeds 4*H while
    still growing (it was not cut since), or None.  Used to certify the
    "grows to infinity" behaviour of Reduce-Fastest with x < 1.
    """
    n = rates.n
    last = [0] * (n + 1)
    for r, c in enumerate(schedule, start=1):
        if c:
            last[c] = r
    horizon = len(schedule)
    bound = 4 * rates.H
    for i in range(1, n + 1):
        if (horizon - last[i]) * rates.rate(i) > bound:
            return i
    return None


def gen_reduce_max_12_7_family(k: int) -> RateVector:
    """Adversarial family for Reduce-Max: one fast bamboo plus a slow crowd.

    With i = 7k+3, the rates are h_1 = 3k/i and i copies of 1/(2i).  Their
    sum is 3k/i + 1/2 < 1 on purpose; the family is compared against
    schedules of height <= 1, and under Reduce-Max b_1 climbs to exactly
    4*h_1 = 12/7 - 36/(7i) shortly after round 18k.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    i = 7 * k + 3
    return RateVector([Fraction(3 * k, i)] + [Fraction(1, 2 * i)] * i)


def gen_reduce_fastest_lb(x, eps) -> RateVector:
    """Two-bamboo lower-bound instance for Reduce-Fastest(x), per regime.

    x < 1: rates (x, eps) — the slow bamboo is never preferred and diverges.
    1 <= x < 2: rates (x/2 - eps, eps) — b_1's cuts are spaced out while b_2
        stays just under the threshold.
    x >= 2: rates (1 - eps, eps) — b_1 is cut every 3 rounds.
    """
    x = frac(x)
    eps = frac(eps)
    if x <= 0:
        raise ValueError(f"x must be positive, got {x}")
    if x < 1:
        hi = min(x, 1 - x)
        if not 0 < eps < hi:
            raise ValueError(f"for x={x} need 0 < eps < {hi}, got {eps}")
        return RateVector((x, eps))
    if x < 2:
        # eps <= x/4 keeps the instance sorted (h_1 >= h_2)
        if not 0 < eps <= x / 4:
            raise ValueError(f"for x={x} need 0 < eps <= {x / 4}, got {eps}")
        return RateVector((x / 2 - eps, eps))
    if not 0 < eps <= Fraction(1, 2):
        raise ValueError(f"for x={x} need 0 < eps <= 1/2, got {eps}")
    return RateVector((1 - eps, eps))
