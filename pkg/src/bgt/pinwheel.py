"""Pinwheel density machinery and the frequency-reduction scheduler.

The centerpiece is main_algorithm: starting from target frequencies
f''_i = (1+delta)H/h_i with delta an exact rational upper stand-in for
3*sqrt(h_1/H), it rounds every frequency down onto the grid 2^k*(1+j/C),
merges equal frequencies (two 2f -> one f; C+j copies of 2^min*(1+j/C) ->
one power of two), pushes stragglers into the next lower group, and finally
assigns the surviving powers of two pairwise-disjoint residue classes by
dyadic (buddy) allocation.  Expansion trees remember every merge so the
schedule can be unfolded back to the original bamboos as (p_i, q_i) pairs
with h_i * q_i <= (1+delta)H.
"""

from __future__ import annotations

import heapq
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from math import isqrt
from typing import Iterator, Sequence

from .core import RateVector, ResidueSchedule, ScheduleError


def density(freqs: Sequence[int]) -> Fraction:
    """Sum of reciprocals; the necessary-feasibility measure."""
    if not freqs:
        raise ValueError("need at least one frequency")
    total = Fraction(0)
    for f in freqs:
        if f < 1:
            raise ValueError(f"frequencies must be >= 1, got {f}")
        total += Fraction(1, f)
    return total


def sqrt_upper(x: Fraction) -> Fraction:
    """A rational s with sqrt(x) <= s <= sqrt(x) * (1 + 2^-30).

    sqrt(num/den) = sqrt(num*den)/den, and isqrt gives the floor of
    2^60 * sqrt(num*den); adding one unit makes it an upper bound with
    relative error below 2^-59.
    """
    if x < 0:
        raise ValueError("square root of a negative rational")
    if x == 0:
        return Fraction(0)
    u = isqrt((x.numerator * x.denominator) << 120)
    return Fraction(u + 1, x.denominator << 60)


# ---------------------------------------------------------------------------
# Expansion-tree nodes
# ---------------------------------------------------------------------------


@dataclass(slots=True)
class Leaf:
    """An original bamboo holding its current (possibly reduced) frequency."""

    index: int
    freq: int


@dataclass(slots=True)
class Pair:
    """Observation-1 node: two equal frequencies 2f merged into one f."""

    left: "Node"
    right: "Node"
    freq: int


@dataclass(slots=True)
class Combine:
    """Observation-2 node: m equal frequencies m*f merged into one f."""

    children: list["Node"]
    freq: int


Node = Leaf | Pair | Combine


def _node_leaves(node: Node):
    stack = [node]
    while stack:
        nd = stack.pop()
        if isinstance(nd, Leaf):
            yield nd
        elif isinstance(nd, Pair):
            stack.append(nd.left)
            stack.append(nd.right)
        else:
            stack.extend(nd.children)


@dataclass
class FrequencyForest:
    """Working state of the reduction: grid buckets plus finished powers of two.

    An entry in bucket (k, j) has frequency 2^k + j*2^(k-q) = 2^k*(1+j/C);
    group j = 0 is kept directly in `powers` (already a power of two).
    """

    min_layer: int
    max_layer: int
    q: int
    C: int
    buckets: dict[tuple[int, int], list[Node]] = field(default_factory=dict)
    powers: list[Node] = field(default_factory=list)
    obs1_count: int = 0
    obs2_count: int = 0

    def grid_freq(self, k: int, j: int) -> int:
        return (1 << k) + (j << (k - self.q))

    def density(self) -> Fraction:
        total = Fraction(0)
        for nodes in self.buckets.values():
            for nd in nodes:
                total += Fraction(1, nd.freq)
        for nd in self.powers:
            total += Fraction(1, nd.freq)
        return total


def observation1_merge(forest: FrequencyForest, layer: int, group: int) -> None:
    """Pair two equal frequencies 2f into one node of frequency f.

    The result lives one layer down in the same group; density is preserved
    exactly (asserted on every application).
    """
    nodes = forest.buckets.get((layer, group))
    if not nodes or len(nodes) < 2:
        raise ValueError(f"layer {layer} group {group}: need two equal entries to pair")
    if layer - 1 < forest.min_layer:
        raise ValueError(f"layer {layer}: pair result would drop off the grid")
    f = forest.grid_freq(layer, group)
    a, b = nodes[0], nodes[1]
    del nodes[:2]
    assert a.freq == f and b.freq == f, "bucketed node with inconsistent frequency"
    merged = Pair(a, b, f // 2)
    # exact density preservation: 1/(2f') + 1/(2f') == 1/f'
    assert Fraction(1, a.freq) + Fraction(1, b.freq) == Fraction(1, merged.freq)
    forest.buckets.setdefault((layer - 1, group), []).append(merged)
    forest.obs1_count += 1


def observation2_merge(forest: FrequencyForest, layer: int, group: int) -> None:
    """Combine m = C+group equal lowest-layer frequencies into one power of two.

    2^min*(1+j/C) divided by C+j is 2^(min-q); density is preserved exactly
    (asserted on every application).
    """
    if layer != forest.min_layer:
        raise ValueError("bundle merges are only defined in the lowest layer")
    m = forest.C + group
    nodes = forest.buckets.get((layer, group))
    if not nodes or len(nodes) < m:
        have = len(nodes) if nodes else 0
        raise ValueError(f"layer {layer} group {group}: need {m} equal entries, have {have}")
    f = forest.grid_freq(layer, group)
    taken = nodes[:m]
    del nodes[:m]
    assert all(nd.freq == f for nd in taken)
    merged = Combine(taken, f // m)
    assert merged.freq * m == f and merged.freq == 1 << (forest.min_layer - forest.q)
    assert sum(Fraction(1, nd.freq) for nd in taken) == Fraction(1, merged.freq)
    forest.powers.append(merged)
    forest.obs2_count += 1


def _push_down(forest: FrequencyForest, layer: int, group: int, node: Node) -> None:
    """Reduce a node's frequency to the next lower group (cutting it more often)."""
    node.freq = forest.grid_freq(layer, group - 1)
    if group - 1 == 0:
        forest.powers.append(node)
    else:
        forest.buckets.setdefault((layer, group - 1), []).append(node)


# ---------------------------------------------------------------------------
# Dyadic residue allocation (powers of two)
# ---------------------------------------------------------------------------


def _allocate_dyadic(freqs: Sequence[int]) -> list[int]:
    """0-based offsets a_i with the classes (a_i mod f_i) pairwise disjoint.

    Frequencies must be powers of two with total density <= 1.  Processing
    frequencies in increasing order and always splitting the *largest* free
    class with modulus <= f keeps the free moduli pairwise distinct; if no
    such class existed, the free density would be below 1/f while at least
    1/f of the budget remains unassigned — impossible.  So the inner
    assertion can only fire if the density precondition was violated.
    """
    order = sorted(range(len(freqs)), key=lambda i: (freqs[i], i))
    free: dict[int, int] = {1: 0}  # modulus -> the single free offset
    out = [0] * len(freqs)
    for i in order:
        f = freqs[i]
        m = 0
        for mm in free:
            if m < mm <= f:
                m = mm
        assert m, "dyadic allocation starved: density must have exceeded 1"
        a = free.pop(m)
        while m < f:
            assert 2 * m not in free, "free moduli must stay pairwise distinct"
            free[2 * m] = a + m
            m *= 2
        out[i] = a
    return out


def schedule_powers_of_two(freqs: Sequence[int]) -> ResidueSchedule:
    """Disjoint residue classes (p_i mod f_i) for power-of-two frequencies.

    Errors on non-powers of two or density > 1.  The result is marked
    certified_disjoint: the allocator's trie invariant guarantees it.
    """
    freqs = [int(f) for f in freqs]
    for f in freqs:
        if f < 1 or f & (f - 1):
            raise ValueError(f"not a power of two: {f}")
    dens = density(freqs)
    if dens > 1:
        raise ValueError(f"density {dens} > 1: no disjoint assignment exists")
    offsets = _allocate_dyadic(freqs)
    return ResidueSchedule(
        tuple((a + 1, f) for a, f in zip(offsets, freqs)), certified_disjoint=True
    )


# ---------------------------------------------------------------------------
# The main (1 + delta)-approximation pipeline
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MainDiagnostics:
    """Instrumentation of one main_algorithm run; every bound is exact."""

    delta: Fraction                      # rational upper stand-in for 3*sqrt(h1/H)
    bound: Fraction                      # (1+delta)*H, the certified guarantee
    density_after_rounding: Fraction
    density_bound_after_rounding: Fraction   # (1+1/C)/(1+delta)
    final_density: Fraction
    min_layer: int
    max_layer: int
    C: int
    K: int                               # 2^min / C^2, always 1 or 2
    obs1_count: int
    obs2_count: int
    realized_max: Fraction


def main_algorithm(rates: RateVector) -> tuple[ResidueSchedule, MainDiagnostics]:
    """Cyclic schedule with every height <= (1+delta)*H, delta ~ 3*sqrt(h1/H).

    Steps: (1) target frequencies f''_i = (1+delta)H/h_i and grid parameters
    min/max/C; (2) round each f''_i down to the grid; (3) pair equal entries
    layer by layer; (4) bundle lowest-layer groups into powers of two;
    (5) push leftovers group-by-group downward, re-merging opportunistically;
    (6) dyadic residue allocation, unfolded through the expansion trees.
    """
    h = rates.rates
    n = rates.n
    H = rates.H
    delta = 3 * sqrt_upper(h[0] / H)
    bound = (1 + delta) * H
    if n == 1:
        sched = ResidueSchedule(((1, 1),), certified_disjoint=True)
        diag = MainDiagnostics(
            delta, bound, Fraction(1), Fraction(1), Fraction(1),
            0, 0, 1, 1, 0, 0, h[0],
        )
        return sched, diag

    a_num, a_den = bound.numerator, bound.denominator  # f''_i = bound / h_i
    f1 = bound / h[0]
    assert f1 >= 4, "the delta formula guarantees f''_1 >= 4"
    min_layer = (f1.numerator // f1.denominator).bit_length() - 1
    fn = bound / h[-1]
    max_layer = (fn.numerator // fn.denominator).bit_length() - 1
    q = min_layer // 2
    C = 1 << q
    forest = FrequencyForest(min_layer, max_layer, q, C)

    # step 2: round down to the largest grid value <= f''_i
    for idx, hi in enumerate(h, start=1):
        P = a_num * hi.denominator
        Q = a_den * hi.numerator
        k = (P // Q).bit_length() - 1
        j = (P << q) // (Q << k) - C          # floor(f'' * C / 2^k) - C
        assert 0 <= j < C and k >= min_layer
        leaf = Leaf(idx, (1 << k) + (j << (k - q)))
        if j == 0:
            forest.powers.append(leaf)
        else:
            forest.buckets.setdefault((k, j), []).append(leaf)

    dens2 = forest.density()
    dens2_bound = (1 + Fraction(1, C)) / (1 + delta)
    assert dens2 <= dens2_bound, "rounded density exceeded (1+1/C)/(1+delta)"

    # step 3: pair equal frequencies, top layer down to min+1
    for k in range(max_layer, min_layer, -1):
        for j in range(1, C):
            nodes = forest.buckets.get((k, j))
            while nodes and len(nodes) >= 2:
                observation1_merge(forest, k, j)

    # step 4: bundle lowest-layer groups down to at most C+j-1 entries each
    for j in range(1, C):
        nodes = forest.buckets.get((min_layer, j))
        while nodes and len(nodes) >= C + j:
            observation2_merge(forest, min_layer, j)

    # step 5: push leftovers to the next lower group, re-merging as we go
    for k in range(max_layer, min_layer, -1):
        for j in range(C - 1, 0, -1):
            nodes = forest.buckets.get((k, j))
            if not nodes:
                continue
            while len(nodes) >= 2:
                observation1_merge(forest, k, j)
            if nodes:
                _push_down(forest, k, j, nodes.pop())
    for j in range(C - 1, 0, -1):
        nodes = forest.buckets.get((min_layer, j))
        if not nodes:
            continue
        while len(nodes) >= C + j:
            observation2_merge(forest, min_layer, j)
        while nodes:
            _push_down(forest, min_layer, j, nodes.pop(0))

    assert not any(forest.buckets.values()), "grid must be empty after push-downs"
    final_density = forest.density()
    assert final_density <= 1, "final powers-of-two density above 1 — this is a bug"

    # step 6: allocate residues to the roots and unfold the expansion trees
    offsets = _allocate_dyadic([nd.freq for nd in forest.powers])
    pairs: list[tuple[int, int] | None] = [None] * (n + 1)
    stack = [(nd, a, nd.freq) for nd, a in zip(forest.powers, offsets)]
    while stack:
        nd, a, m = stack.pop()
        if isinstance(nd, Leaf):
            pairs[nd.index] = (a + 1, m)
        elif isinstance(nd, Pair):
            stack.append((nd.left, a, 2 * m))
            stack.append((nd.right, a + m, 2 * m))
        else:
            mm = m * len(nd.children)
            stack.extend(
                (ch, a + t * m, mm) for t, ch in enumerate(nd.children)
            )
    assert all(pq is not None for pq in pairs[1:])

    realized = Fraction(0)
    for i in range(1, n + 1):
        p_i, q_i = pairs[i]
        hi = h[i - 1]
        # the per-bamboo guarantee: q_i never exceeds the target frequency
        assert q_i * hi.numerator * a_den <= a_num * hi.denominator
        height = hi * max(p_i, q_i)
        if height > realized:
            realized = height
    assert realized <= bound

    sched = ResidueSchedule(tuple(pairs[1:]), certified_disjoint=True)
    K = (1 << min_layer) // (C * C)
    assert K in (1, 2)
    diag = MainDiagnostics(
        delta, bound, dens2, dens2_bound, final_density,
        min_layer, max_layer, C, K,
        forest.obs1_count, forest.obs2_count, realized,
    )
    return sched, diag


def two_approx(rates: RateVector) -> ResidueSchedule:
    """2-approximation: round 2H/h_i down to a power of two, allocate residues.

    f_i >= H/h_i keeps the density at most sum(h_i/H) = 1, and
    h_i * f_i <= 2H bounds every height.
    """
    H2 = 2 * rates.H
    freqs = []
    for hi in rates.rates:
        w = (H2.numerator * hi.denominator) // (H2.denominator * hi.numerator)
        freqs.append(1 << (w.bit_length() - 1))
    return schedule_powers_of_two(freqs)


def density_34_frequencies(rates: RateVector) -> list[int]:
    """Frequencies floor((1+delta)H/h_i) with delta = 1/3 + h_1/H.

    Their density is provably below 3/4 (verified exactly); no schedule is
    constructed here — scheduling arbitrary density-3/4 instances is out of
    scope.
    """
    delta = Fraction(1, 3) + rates.rates[0] / rates.H
    A = (1 + delta) * rates.H
    freqs = []
    for i, hi in enumerate(rates.rates, start=1):
        if A < 2 * hi:
            raise ValueError(
                f"precondition violated: (1+delta)H/h_{i} = {A / hi} < 2"
            )
        freqs.append((A.numerator * hi.denominator) // (A.denominator * hi.numerator))
    dens = density(freqs)
    assert dens < Fraction(3, 4), "density bound is a theorem under the precondition"
    return freqs


def gen_integer_frequencies(
    f1: int, seed: int, *, n: int | None = None, spread: int = 1000
) -> list[int]:
    """Random integer request periods with smallest period f1 and density
    safely below the Main Algorithm feasibility margin 1 - 3/sqrt(f1).

    Draws n-1 periods log-uniformly in [f1, f1*spread]; if their combined
    density overshoots the budget, all draws are scaled up by one common
    integer factor (keeps them integral and >= f1).
    """
    if f1 < 16:
        raise ValueError(f"f1 must be >= 16 (need 3/sqrt(f1) < 1 with room), got {f1}")
    rng = random.Random(seed)
    if n is None:
        n = int(math.exp(rng.uniform(math.log(8), math.log(512))))
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    target = 1 - sqrt_upper(Fraction(9, f1))
    room = target - Fraction(1, f1)
    lo, hi = math.log(f1), math.log(f1 * spread)
    draws = [int(math.exp(rng.uniform(lo, hi))) for _ in range(n - 1)]
    dens = sum((Fraction(1, f) for f in draws), Fraction(0))
    if dens > room:
        ratio = dens / room
        c = -(-ratio.numerator // ratio.denominator)
        draws = [f * c for f in draws]
    freqs = sorted([f1] + draws)
    assert density(freqs) <= target
    return freqs


def next_cuts_stream(schedule: ResidueSchedule) -> Iterator[int]:
    """Yield the schedule round by round (0 = idle) via a priority queue.

    O(log n) per round; the stream is infinite and single-consumer.
    """
    heap = [(p, i, q) for i, (p, q) in enumerate(schedule.pairs, start=1)]
    heapq.heapify(heap)
    r = 1
    while True:
        if heap and heap[0][0] == r:
            t, i, qq = heap[0]
            heapq.heapreplace(heap, (t + qq, i, qq))
            yield i
        else:
            if heap and heap[0][0] < r:
                raise ScheduleError(
                    f"two bamboos scheduled in round {heap[0][0]}: residue collision"
                )
            yield 0
        r += 1
