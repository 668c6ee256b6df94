"""Brute-force ground truth for small instances.

Exact OPT for discrete instances via configuration-graph search, and exact
Pinwheel feasibility for small frequency sets.  Both questions reduce to the
same integer game: post-cut age vectors are states, one round advances every
age by 1 and zeroes the cut coordinate, and a height cap M translates into
per-bamboo age limits A_i = floor(M / h_i) that the *grown* vector must
respect (the grown height is attained at the cut instant, so the coordinate
about to be cut counts too).  An infinite schedule exists iff the initial
all-zero state survives iterative removal of dead ends.
"""

from __future__ import annotations

from collections import deque
from fractions import Fraction
from typing import Sequence

from .core import ListSchedule, RateVector, frac

DEFAULT_STATE_BUDGET = 10 ** 6


class BudgetExceededError(RuntimeError):
    """Raised when the configuration graph outgrows the state budget."""

    def __init__(self, budget: int, explored: int):
        super().__init__(f"state budget {budget} exceeded after {explored} states")
        self.budget = budget
        self.explored = explored


def _build_graph(limits: Sequence[int], state_budget: int):
    """Reachable configuration graph under per-bamboo grown-age limits.

    Returns (order, succs) where order[k] is the k-th discovered state and
    succs[k] is the list of successor state ids (one per cut choice), or
    None when the grown vector violates some limit (a dead end).
    """
    n = len(limits)
    start = (0,) * n
    index = {start: 0}
    order = [start]
    succs: list[list[int] | None] = []
    head = 0
    while head < len(order):
        s = order[head]
        head += 1
        if any(s[i] + 1 > limits[i] for i in range(n)):
            succs.append(None)
            continue
        grown = tuple(a + 1 for a in s)
        row = []
        for c in range(n):
            t = grown[:c] + (0,) + grown[c + 1:]
            k = index.get(t)
            if k is None:
                k = len(order)
                if k >= state_budget:
                    raise BudgetExceededError(state_budget, k)
                index[t] = k
                order.append(t)
            row.append(k)
        succs.append(row)
    return order, succs


def _peel(succs: list[list[int] | None]) -> list[bool]:
    """killed[k] = True iff state k cannot start an infinite schedule."""
    m = len(succs)
    alive_out = [len(row) if row else 0 for row in succs]
    preds: list[list[int]] = [[] for _ in range(m)]
    for u, row in enumerate(succs):
        if row:
            for v in row:
                preds[v].append(u)
    killed = [c == 0 for c in alive_out]
    queue = deque(u for u in range(m) if killed[u])
    while queue:
        v = queue.popleft()
        for u in preds[v]:
            if not killed[u]:
                alive_out[u] -= 1
                if alive_out[u] == 0:
                    killed[u] = True
                    queue.append(u)
    return killed


def _ages_feasible(limits: Sequence[int], state_budget: int) -> bool:
    if any(f < 1 for f in limits):
        return False
    _, succs = _build_graph(limits, state_budget)
    return not _peel(succs)[0]


def _ages_witness(limits: Sequence[int], state_budget: int):
    """Deterministic (preamble, period) witness, or None if infeasible.

    Walks from the initial state always cutting the smallest index whose
    successor survives peeling; the first revisited state closes the cycle.
    """
    if any(f < 1 for f in limits):
        return None
    _, succs = _build_graph(limits, state_budget)
    killed = _peel(succs)
    if killed[0]:
        return None
    n = len(limits)
    seq: list[int] = []
    seen = {0: 0}
    cur = 0
    while True:
        row = succs[cur]
        assert row is not None
        for c in range(n):
            if not killed[row[c]]:
                cur = row[c]
                seq.append(c + 1)
                break
        else:  # pragma: no cover - peeling guarantees a live successor
            raise AssertionError("alive state with no alive successor")
        pos = seen.get(cur)
        if pos is not None:
            return seq[:pos], seq[pos:]
        seen[cur] = len(seq)


def _limits_for_cap(rates: RateVector, cap: Fraction) -> list[int]:
    # (a+1) * h_i <= cap  <=>  a+1 <= floor(cap / h_i)
    return [(cap / h).numerator // (cap / h).denominator for h in rates.rates]


def feasible_under_cap(
    rates: RateVector, cap, state_budget: int = DEFAULT_STATE_BUDGET
) -> bool:
    """True iff some infinite schedule keeps every height <= cap."""
    cap = frac(cap)
    if cap <= 0:
        return False
    return _ages_feasible(_limits_for_cap(rates, cap), state_budget)


def opt_candidates(rates: RateVector) -> list[Fraction]:
    """Sorted candidate values for OPT: products k*h_i up to just past 2H.

    Any schedule's supremum is gap*rate for an integer gap, and OPT <= 2H,
    so OPT is among these products.
    """
    two_h = 2 * rates.H
    cands = set()
    for h in rates.rates:
        kmax = -((-two_h.numerator * h.denominator) // (two_h.denominator * h.numerator)) + 1
        for k in range(1, kmax + 1):
            c = k * h
            if c >= rates.H:  # OPT >= H, smaller caps can never be feasible
                cands.add(c)
    cands.add(two_h + rates.rates[0])  # guaranteed-feasible ceiling
    return sorted(cands)


def optimal_height(
    rates: RateVector, state_budget: int = DEFAULT_STATE_BUDGET
) -> tuple[Fraction, ListSchedule]:
    """Exact OPT and a witness cyclic schedule attaining it.

    Binary search over the sorted candidate heights (feasibility is monotone
    in the cap: a larger cap only loosens every age limit).  The witness is
    extracted from the surviving configuration graph at the optimal cap; its
    evaluate_cyclic global_max equals the returned OPT exactly.
    """
    cands = opt_candidates(rates)
    lo, hi = 0, len(cands) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if feasible_under_cap(rates, cands[mid], state_budget):
            hi = mid
        else:
            lo = mid + 1
    opt = cands[lo]
    witness = _ages_witness(_limits_for_cap(rates, opt), state_budget)
    assert witness is not None
    preamble, period = witness
    return opt, ListSchedule(tuple(preamble), tuple(period), rates.n)


def pinwheel_feasible(
    freqs: Sequence[int], state_budget: int = DEFAULT_STATE_BUDGET
) -> bool:
    """Exact Pinwheel feasibility: can every window of f_i slots contain i?

    Equivalent to feasible_under_cap on rates (1/f_1, ..., 1/f_n) with cap 1,
    run directly on integer ages.  Frequency 1 means "every slot".
    """
    freqs = [int(f) for f in freqs]
    if any(f < 1 for f in freqs):
        raise ValueError(f"frequencies must be positive integers: {freqs}")
    return _ages_feasible(freqs, state_budget)


def pinwheel_witness(
    freqs: Sequence[int], state_budget: int = DEFAULT_STATE_BUDGET
):
    """(preamble, period) witness slot assignment for a feasible Pinwheel
    instance, or None if infeasible.  The witness never idles: cutting
    something is always at least as good."""
    freqs = [int(f) for f in freqs]
    if any(f < 1 for f in freqs):
        raise ValueError(f"frequencies must be positive integers: {freqs}")
    return _ages_witness(freqs, state_budget)
