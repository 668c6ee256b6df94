"""Continuous trimming on a metric space: a patrolling robot with unit speed.

A MetricInstance is n points with symmetric positive travel times obeying the
triangle inequality and growth rates normalized to sum to 1.  The three
patrol strategies trade generality for height guarantees:

* algorithm1 repeats an Euler tour of the global MST (gap <= 2*MST each);
* algorithm2 partitions points into rate classes [2^(i-1), 2^i) * h_min and
  round-robins them, walking each class's Euler tour for distance >= D per
  visit (gap <= 3s*(D + 2*MST(V_i)) for class i);
* algorithm3 is the same with classes anchored at n^-2 instead of h_min,
  sweeping the negligible-rate points (V_0) one per outer iteration
  (class gap <= (3s+1)(D + 2*MST(V_i)), V_0 gap <= (3Ds+D)*|V_0|).

Also here: exact MST/Euler-tour machinery, the diameter and MST lower
bounds, the discrete-to-continuous reduction, and the adversarial instance
generators (spiral, two clusters) plus a random-metric generator.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Sequence

import numpy as np

from .core import InstanceFormatError, RateVector, ResidueSchedule, frac
from .pinwheel import two_approx

_INT64_LIMIT = 1 << 61  # headroom so a sum of two scaled entries cannot overflow


def _validate_triangle(travel, n: int) -> None:
    scale = 1
    for row in travel:
        for x in row:
            scale = lcm(scale, x.denominator)
            if scale > _INT64_LIMIT:
                break
        if scale > _INT64_LIMIT:
            break
    use_ints = scale <= _INT64_LIMIT
    if use_ints:
        top = max(x.numerator * (scale // x.denominator) for row in travel for x in row)
        use_ints = top <= _INT64_LIMIT
    if use_ints:
        m = np.array(
            [[x.numerator * (scale // x.denominator) for x in row] for row in travel],
            dtype=np.int64,
        )
        for k in range(n):
            bad = m > m[:, k][:, None] + m[k][None, :]
            if bad.any():
                i, j = map(int, np.argwhere(bad)[0])
                raise InstanceFormatError(
                    "travel",
                    f"triangle inequality violated: t[{i}][{j}] > t[{i}][{k}] + t[{k}][{j}]",
                )
        return
    for k in range(n):
        row_k = travel[k]
        for i in range(n):
            tik = travel[i][k]
            row_i = travel[i]
            for j in range(n):
                if row_i[j] > tik + row_k[j]:
                    raise InstanceFormatError(
                        "travel",
                        f"triangle inequality violated: t[{i}][{j}] > t[{i}][{k}] + t[{k}][{j}]",
                    )


@dataclass(frozen=True)
class MetricInstance:
    """n points, exact pairwise travel times, rates summing to 1 (start = b_1)."""

    rates: RateVector
    travel: tuple[tuple[Fraction, ...], ...]
    start: int = 1

    def __post_init__(self):
        if not isinstance(self.rates, RateVector):
            object.__setattr__(self, "rates", RateVector(list(self.rates)))
        n = self.rates.n
        if n < 2:
            raise InstanceFormatError("rates", "a metric instance needs at least 2 points")
        if self.rates.H != 1:
            raise InstanceFormatError(
                "rates",
                f"rates must sum to 1 (got {self.rates.H}); use MetricInstance.normalized",
            )
        travel = tuple(tuple(frac(x) for x in row) for row in self.travel)
        object.__setattr__(self, "travel", travel)
        if len(travel) != n or any(len(row) != n for row in travel):
            raise InstanceFormatError("travel", f"must be an {n}x{n} matrix (one row per rate)")
        diameter = Fraction(0)
        for i in range(n):
            if travel[i][i] != 0:
                raise InstanceFormatError("travel", f"nonzero diagonal entry t[{i}][{i}]")
            for j in range(i + 1, n):
                if travel[i][j] != travel[j][i]:
                    raise InstanceFormatError("travel", f"asymmetric: t[{i}][{j}] != t[{j}][{i}]")
                if travel[i][j] <= 0:
                    raise InstanceFormatError("travel", f"nonpositive distance t[{i}][{j}]")
                if travel[i][j] > diameter:
                    diameter = travel[i][j]
        _validate_triangle(travel, n)
        if not isinstance(self.start, int) or not 1 <= self.start <= n:
            raise InstanceFormatError("start", f"start must be a point index in 1..{n}")
        object.__setattr__(self, "_diameter", diameter)

    @property
    def n(self) -> int:
        return self.rates.n

    @property
    def diameter(self) -> Fraction:
        return self._diameter

    @classmethod
    def normalized(cls, rates, travel, start: int = 1) -> "MetricInstance":
        """Build an instance scaling the given rates so they sum to 1."""
        rv = rates if isinstance(rates, RateVector) else RateVector([frac(x) for x in rates])
        return cls(RateVector([h / rv.H for h in rv.rates]), travel, start)


# ---------------------------------------------------------------------------
# MST and Euler tours
# ---------------------------------------------------------------------------


def mst(vertices: Sequence[int], travel) -> tuple[list[tuple[int, int]], Fraction]:
    """Prim's MST over a vertex subset (1-based ids) of a dense metric.

    Deterministic: among equal-weight candidate edges the one with the
    smaller tree endpoint, then smaller outside endpoint, wins.
    """
    verts = sorted({int(v) for v in vertices})
    if not verts:
        raise ValueError("need at least one point")
    if len(verts) == 1:
        return [], Fraction(0)
    root = verts[0]
    best = {v: (travel[root - 1][v - 1], root) for v in verts[1:]}
    remaining = set(verts[1:])
    edges: list[tuple[int, int]] = []
    total = Fraction(0)
    while remaining:
        w, u, v = min((best[x][0], best[x][1], x) for x in remaining)
        remaining.discard(v)
        del best[v]
        edges.append((u, v) if u < v else (v, u))
        total += w
        for x in remaining:
            d = travel[v - 1][x - 1]
            bw, bu = best[x]
            if d < bw or (d == bw and v < bu):
                best[x] = (d, v)
    return edges, total


def euler_tour(edges: Sequence[tuple[int, int]], root: int) -> list[int]:
    """Closed DFS walk of a tree from `root`: every edge exactly twice.

    Returns the vertex sequence [root, ..., root] with 2*len(edges)+1 entries;
    consecutive entries are always tree-edge endpoints.
    """
    if not edges:
        return [root]
    adj: dict[int, list[int]] = {}
    for u, v in edges:
        adj.setdefault(u, []).append(v)
        adj.setdefault(v, []).append(u)
    if root not in adj:
        raise ValueError(f"root {root} is not an endpoint of any edge")
    for nbrs in adj.values():
        nbrs.sort()
    iters = {v: iter(nbrs) for v, nbrs in adj.items()}
    tour = [root]
    visited = {root}
    stack = [root]
    while stack:
        v = stack[-1]
        nxt = None
        for u in iters[v]:
            if u not in visited:
                nxt = u
                break
        if nxt is None:
            stack.pop()
            if stack:
                tour.append(stack[-1])
        else:
            visited.add(nxt)
            tour.append(nxt)
            stack.append(nxt)
    return tour


@dataclass
class ClassTour:
    """One rate class's patrol state: its MST, cyclic Euler tour, cursor."""

    members: tuple[int, ...]
    mst_edges: tuple[tuple[int, int], ...]
    mst_weight: Fraction
    tour: tuple[int, ...]  # cyclic vertex sequence; the closing edge wraps around
    cursor: int            # tour index of the last visited position


@dataclass
class TourState:
    """Patrol state across all classes plus the negligible-rate rotation."""

    classes: list[ClassTour]
    v0: tuple[int, ...]
    v0_next: int = 0


def _class_tour(instance: MetricInstance, members: Sequence[int]) -> ClassTour:
    members = sorted(members)
    edges, weight = mst(members, instance.travel)
    if len(members) == 1:
        tour: tuple[int, ...] = (members[0],)
    else:
        closed = euler_tour(edges, members[0])
        tour = tuple(closed[:-1])
    srow = instance.travel[instance.start - 1]
    cursor = min(range(len(tour)), key=lambda k: (srow[tour[k] - 1], k))
    return ClassTour(tuple(members), tuple(edges), weight, tour, cursor)


def _patrol(
    instance: MetricInstance,
    state: TourState,
    *,
    horizon: Fraction | None = None,
    cycles: int | None = None,
) -> list[tuple[int, Fraction]]:
    """Round-robin the classes (ascending), one V_0 point per outer iteration.

    Each class visit resumes its tour at the cursor and walks tour edges
    until the distance covered inside the class reaches the diameter D,
    stopping at the vertex where that happens; single-point classes are
    simply visited.  Runs until the walk time reaches `horizon` or for
    exactly `cycles` outer iterations.
    """
    if (horizon is None) == (cycles is None):
        raise ValueError("give exactly one of horizon or cycles")
    travel = instance.travel
    D = instance.diameter
    t = Fraction(0)
    pos = instance.start
    walk: list[tuple[int, Fraction]] = []
    done = 0
    while (t < horizon) if cycles is None else (done < cycles):
        for ct in state.classes:
            target = ct.tour[ct.cursor]
            if target != pos:
                t += travel[pos - 1][target - 1]
                pos = target
                walk.append((pos, t))
            if len(ct.tour) > 1:
                covered = Fraction(0)
                while covered < D:
                    ct.cursor = (ct.cursor + 1) % len(ct.tour)
                    nxt = ct.tour[ct.cursor]
                    step = travel[pos - 1][nxt - 1]
                    covered += step
                    t += step
                    pos = nxt
                    walk.append((pos, t))
        if state.v0:
            target = state.v0[state.v0_next % len(state.v0)]
            state.v0_next += 1
            if target != pos:
                t += travel[pos - 1][target - 1]
                pos = target
                walk.append((pos, t))
        done += 1
    return walk


# ---------------------------------------------------------------------------
# The three patrol algorithms
# ---------------------------------------------------------------------------


def algorithm1(instance: MetricInstance, horizon_time) -> list[tuple[int, Fraction]]:
    """Repeat an Euler tour of the global MST until `horizon_time`.

    Every point recurs within one tour length, so each gap is at most
    2*MST(V) and every height at most 2*MST(V)*h_max.
    """
    horizon = frac(horizon_time)
    if horizon <= 0:
        raise ValueError("horizon_time must be positive")
    edges, _ = mst(range(1, instance.n + 1), instance.travel)
    closed = euler_tour(edges, instance.start)
    travel = instance.travel
    t = Fraction(0)
    pos = instance.start
    walk: list[tuple[int, Fraction]] = []
    while t < horizon:
        for v in closed[1:]:
            t += travel[pos - 1][v - 1]
            pos = v
            walk.append((v, t))
    return walk


def algorithm2_classes(instance: MetricInstance) -> list[list[int]]:
    """Rate classes for algorithm2: class i holds [2^(i-1), 2^i) * h_min.

    Returns s = floor(log2(h_max/h_min)) + 1 lists (some possibly empty),
    lowest rates first.
    """
    rs = instance.rates
    hmin = rs.rates[-1]
    ratio = rs.rates[0] / hmin
    s = (ratio.numerator // ratio.denominator).bit_length()
    classes: list[list[int]] = [[] for _ in range(s)]
    for i in range(1, rs.n + 1):
        q = rs.rate(i) / hmin
        classes[(q.numerator // q.denominator).bit_length() - 1].append(i)
    return classes


def algorithm2(instance: MetricInstance, horizon_time) -> list[tuple[int, Fraction]]:
    """Class round-robin patrol with D-length tour visits.

    With s = floor(log2(h_max/h_min)) + 1 classes, a class-i point's gap is
    at most 3s*(D + 2*MST(V_i)).  Equal-rate instances fall back to
    algorithm1 (a single class needs no round-robin).
    """
    horizon = frac(horizon_time)
    if horizon <= 0:
        raise ValueError("horizon_time must be positive")
    rs = instance.rates
    if rs.rates[0] == rs.rates[-1]:
        return algorithm1(instance, horizon)
    tours = [_class_tour(instance, c) for c in algorithm2_classes(instance) if c]
    return _patrol(instance, TourState(tours, ()), horizon=horizon)


def algorithm3_classes(instance: MetricInstance) -> tuple[list[int], list[list[int]]]:
    """(V_0, classes) for algorithm3: V_0 holds rates <= n^-2; class i holds
    (2^(i-1), 2^i] * n^-2 for i = 1..ceil(2*log2 n)."""
    n = instance.n
    thr = Fraction(1, n * n)
    s = (n * n - 1).bit_length()
    v0: list[int] = []
    classes: list[list[int]] = [[] for _ in range(s)]
    for i in range(1, n + 1):
        h = instance.rates.rate(i)
        if h <= thr:
            v0.append(i)
        else:
            q = h / thr
            k = (-(-q.numerator // q.denominator) - 1).bit_length()  # ceil(log2 q)
            classes[k - 1].append(i)
    return v0, classes


def algorithm3(instance: MetricInstance, horizon_time) -> list[tuple[int, Fraction]]:
    """algorithm2's round-robin re-anchored at n^-2, with one negligible-rate
    (V_0) point visited per outer iteration.

    Class-i gaps are at most (3s+1)(D + 2*MST(V_i)) for s = ceil(2*log2 n);
    V_0 gaps at most (3Ds + D)*|V_0|.
    """
    horizon = frac(horizon_time)
    if horizon <= 0:
        raise ValueError("horizon_time must be positive")
    v0, classes = algorithm3_classes(instance)
    tours = [_class_tour(instance, c) for c in classes if c]
    return _patrol(instance, TourState(tours, tuple(v0)), horizon=horizon)


def certificate_bound(instance: MetricInstance, algo: int) -> Fraction:
    """The exact height guarantee each patrol algorithm certifies.

    algorithm1: 2*MST(V)*h_max.  algorithm2: max over nonempty classes of
    3s*(D + 2*MST(V_i))*h_max(V_i) (algorithm1's bound when all rates are
    equal, matching the delegation).  algorithm3: max over classes of
    (3s+1)*(D + 2*MST(V_i))*h_max(V_i) and (3Ds+D)*|V_0|*h_max(V_0).
    """
    rs = instance.rates
    D = instance.diameter
    if algo == 1 or (algo == 2 and rs.rates[0] == rs.rates[-1]):
        _, w = mst(range(1, instance.n + 1), instance.travel)
        return 2 * w * rs.rates[0]
    if algo == 2:
        classes = algorithm2_classes(instance)
        s = len(classes)
        best = Fraction(0)
        for cls in classes:
            if not cls:
                continue
            _, w = mst(cls, instance.travel)
            hmax = max(rs.rate(i) for i in cls)
            best = max(best, 3 * s * (D + 2 * w) * hmax)
        return best
    if algo != 3:
        raise ValueError(f"algo must be 1, 2 or 3, got {algo}")
    v0, classes = algorithm3_classes(instance)
    s = len(classes)
    best = Fraction(0)
    for cls in classes:
        if not cls:
            continue
        _, w = mst(cls, instance.travel)
        hmax = max(rs.rate(i) for i in cls)
        best = max(best, (3 * s + 1) * (D + 2 * w) * hmax)
    if v0:
        hmax0 = max(rs.rate(i) for i in v0)
        best = max(best, (3 * D * s + D) * len(v0) * hmax0)
    return best


# ---------------------------------------------------------------------------
# Lower bounds and the discrete reduction
# ---------------------------------------------------------------------------


def lower_bound_diameter(instance: MetricInstance) -> Fraction:
    """Every patrol's supremum is at least D * h_max.

    Between consecutive visits of the point farthest from b_1's best spot the
    robot must cross at least the radius twice, and the radius is >= D/2.
    """
    return instance.diameter * instance.rates.rates[0]


def lower_bound_mst(instance: MetricInstance) -> tuple[Fraction, tuple[int, ...]]:
    """max over thresholds h of h * MST({points with rate >= h}), with the
    maximizing set.

    Any window shorter than MST(V') leaves some point of V' unvisited (a
    walk touching all of V' yields a spanning tree no heavier than its
    length), so some height reaches h_min(V') * MST(V') infinitely often.
    """
    rs = instance.rates
    best = Fraction(0)
    best_set: tuple[int, ...] = (1,)
    for h in sorted(set(rs.rates), reverse=True):
        members = [i for i in range(1, rs.n + 1) if rs.rate(i) >= h]
        _, weight = mst(members, instance.travel)
        if h * weight > best:
            best = h * weight
            best_set = tuple(members)
    return best, best_set


def discrete_as_continuous(rates: RateVector) -> tuple[ResidueSchedule, dict]:
    """Drive the discrete 2-approximation on any metric: one leg per round.

    Bamboo i is cut every q_i rounds, each round costs at most one diameter
    of travel, so its height stays within (h_i * q_i) * D <= 2H * D; against
    the D*h_max lower bound that is a 2H/h_max approximation factor.
    """
    sched = two_approx(rates)
    per = []
    worst = Fraction(0)
    for i, (p, q) in enumerate(sched.pairs, start=1):
        coeff = rates.rate(i) * q
        worst = max(worst, coeff)
        per.append({"index": i, "frequency": q, "coefficient": coeff})
    assert worst <= 2 * rates.H
    report = {
        "per_bamboo": per,
        "max_coefficient": worst,
        "ratio_bound": 2 * rates.H / rates.rates[0],
    }
    return sched, report


# ---------------------------------------------------------------------------
# Instance generators
# ---------------------------------------------------------------------------


def gen_spiral(n: int) -> MetricInstance:
    """Archimedean-spiral instance where greedy class patrols are tight.

    n = 8^g points from radius 1/2 outward with arc spacing d_1 = n^(-2/3)
    and ring separation d_2 = n^(-1/3).  Groups along the spiral (inner to
    outer): G_g, ..., G_1 with |G_i| = n/2^i and rate (3-eps)*2^i/(n*log2 n),
    then n^(2/3) filler points of rate n^(-4/3); eps = 3*n^(-2/3) makes the
    rates sum to exactly 1.  Euclidean distances are snapped up to multiples
    of 2^-40, then closed under shortest paths so the triangle inequality
    holds exactly.
    """
    if n < 8:
        raise ValueError("spiral instances need n >= 8")
    g = round(math.log2(n) / 3)
    if 8**g != n:
        raise ValueError(f"n must be a power of 8, got {n}")
    d1 = Fraction(1, 4**g)
    d2 = Fraction(1, 2**g)
    b = float(d2) / (2 * math.pi)
    pts: list[tuple[float, float]] = []
    theta = 0.0
    for _ in range(n):
        r = 0.5 + b * theta
        pts.append((r * math.cos(theta), r * math.sin(theta)))
        theta += float(d1) / r
    scale = 1 << 40
    m = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        xi, yi = pts[i]
        for j in range(i + 1, n):
            v = math.ceil(math.hypot(xi - pts[j][0], yi - pts[j][1]) * scale)
            m[i, j] = v
            m[j, i] = v
    for k in range(n):
        np.minimum(m, m[:, k][:, None] + m[k][None, :], out=m)
    travel = tuple(
        tuple(Fraction(int(m[i, j]), scale) for j in range(n)) for i in range(n)
    )
    log_n = 3 * g
    eps = Fraction(3, 4**g)
    rates: list[Fraction] = []
    for i in range(g, 0, -1):
        rates.extend([(3 - eps) * 2**i / (n * log_n)] * (n // 2**i))
    rates.extend([Fraction(1, 16**g)] * (4**g))
    assert len(rates) == n and sum(rates) == 1
    return MetricInstance(rates=RateVector(rates), travel=travel, start=1)


def spiral_arc_spacing(n: int) -> Fraction:
    """d_1 = n^(-2/3) for a spiral of n = 8^g points (exact)."""
    g = round(math.log2(n) / 3)
    if 8**g != n:
        raise ValueError(f"n must be a power of 8, got {n}")
    return Fraction(1, 4**g)


def gen_two_cluster(n: int, diameter) -> MetricInstance:
    """Two far-apart clusters of n/2 points with mirrored rate ladders.

    Each cluster carries rates 1/4, 1/8, ..., 1/n plus padding points
    sharing the residual 1/n equally, so both halves sum to 1/2.  Points
    within a cluster sit at distance D/(2n); across clusters at D.  A sweep
    schedule (one cluster, hop, the other, hop back) stays within O(D),
    while per-class patrols pay a log n factor crossing between the mirrored
    equal-rate pairs.
    """
    D = frac(diameter)
    if D <= 0:
        raise ValueError("diameter must be positive")
    if n < 4 or n & (n - 1):
        raise ValueError(f"n must be a power of two, n >= 4, got {n}")
    half = n // 2
    log_n = n.bit_length() - 1
    ladder = [Fraction(1, 2**k) for k in range(2, log_n + 1)]
    pad = half - len(ladder)
    cluster = list(ladder)
    if pad:
        residual = Fraction(1, 2) - sum(ladder)
        cluster.extend([residual / pad] * pad)
    assert sum(cluster) == Fraction(1, 2) and len(cluster) == half
    rates: list[Fraction] = []
    membership: list[int] = []
    for rate in cluster:
        rates.extend([rate, rate])
        membership.extend([0, 1])
    intra = D / (2 * n)
    travel = tuple(
        tuple(
            Fraction(0)
            if i == j
            else (intra if membership[i] == membership[j] else D)
            for j in range(n)
        )
        for i in range(n)
    )
    return MetricInstance(rates=RateVector(rates), travel=travel, start=1)


def two_cluster_sweep(instance: MetricInstance, cycles: int = 3) -> list[tuple[int, Fraction]]:
    """Near-optimal handcrafted patrol for two-cluster instances.

    Sweeps the start's cluster in index order, hops across, sweeps the other,
    and repeats; one cycle costs less than 3D, so every height stays O(D).
    """
    D = instance.diameter
    srow = instance.travel[instance.start - 1]
    home = [v for v in range(1, instance.n + 1) if srow[v - 1] < D / 2]
    away = [v for v in range(1, instance.n + 1) if srow[v - 1] >= D / 2 and v != instance.start]
    if not away:
        raise ValueError("no far cluster: not a two-cluster instance")
    travel = instance.travel
    t = Fraction(0)
    pos = instance.start
    walk: list[tuple[int, Fraction]] = []
    for _ in range(cycles):
        for v in home + away:
            if v == pos:
                continue
            t += travel[pos - 1][v - 1]
            pos = v
            walk.append((v, t))
    return walk


def gen_random_metric(n: int, seed: int, *, denominator: int = 1 << 20) -> MetricInstance:
    """Random valid metric: distances in [1/2, 1] (triangle-safe), random
    integer-weight rates normalized to 1, start at the fastest point."""
    if n < 2:
        raise ValueError("need n >= 2")
    rng = random.Random(seed)
    half = denominator // 2
    travel = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            d = Fraction(rng.randint(half, denominator), denominator)
            travel[i][j] = d
            travel[j][i] = d
    weights = sorted((rng.randint(1, 1 << 16) for _ in range(n)), reverse=True)
    total = sum(weights)
    rates = RateVector([Fraction(w, total) for w in weights])
    return MetricInstance(rates=rates, travel=tuple(tuple(row) for row in travel), start=1)
