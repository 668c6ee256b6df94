"""Exact-rational instances, cyclic schedules, and simulation engines.

Everything that touches a height is a `fractions.Fraction`; there is no
floating point anywhere in height accounting, so approximation guarantees
can be checked as hard inequalities.

Conventions used throughout the package:

* bamboo indices are 1-based,
* rounds are 1-based; the first cut lands at the end of round 1,
* a cut index of 0 in a discrete schedule means "idle round" (no cut),
* a bamboo cut at round r and again at round r' attains height
  (r' - r) * h just before the second cut.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import IO, Iterable, Sequence


class InstanceFormatError(ValueError):
    """Malformed instance/schedule input; `field` names the offending field."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class ScheduleError(ValueError):
    """A schedule violates its structural invariants (collision, bad index...)."""


def frac(value) -> Fraction:
    """Convert a value to an exact Fraction.

    Accepts Fraction, int, and strings such as "7/15" or "0.25".  Floats are
    rejected on purpose: they would smuggle binary rounding into exact
    height accounting.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    raise TypeError(f"refusing inexact conversion to Fraction: {value!r}")


@dataclass(frozen=True)
class RateVector:
    """Growth rates h_1 >= h_2 >= ... >= h_n > 0 with their cached sum H."""

    rates: tuple[Fraction, ...]
    H: Fraction

    def __init__(self, rates: Iterable):
        rates = tuple(frac(r) for r in rates)
        if not rates:
            raise InstanceFormatError("rates", "at least one growth rate required")
        for k, r in enumerate(rates):
            if r <= 0:
                raise InstanceFormatError("rates", f"rate #{k + 1} is {r}; must be positive")
        for k in range(len(rates) - 1):
            if rates[k] < rates[k + 1]:
                raise InstanceFormatError(
                    "rates",
                    f"rates must be non-increasing; rate #{k + 1} = {rates[k]}"
                    f" < rate #{k + 2} = {rates[k + 1]}",
                )
        object.__setattr__(self, "rates", rates)
        object.__setattr__(self, "H", sum(rates, Fraction(0)))

    @classmethod
    def sorted_from(cls, values: Iterable) -> "RateVector":
        """Build a RateVector from rates in any order."""
        return cls(sorted((frac(v) for v in values), reverse=True))

    @property
    def n(self) -> int:
        return len(self.rates)

    def rate(self, i: int) -> Fraction:
        """1-based rate accessor."""
        return self.rates[i - 1]

    def scaled(self, c) -> "RateVector":
        c = frac(c)
        return RateVector(tuple(r * c for r in self.rates))

    def normalized(self) -> "RateVector":
        """Rescale so the rates sum to exactly 1."""
        return self.scaled(1 / self.H)


@dataclass(frozen=True)
class ResidueSchedule:
    """Cyclic schedule as per-bamboo (offset, period) pairs.

    Bamboo i is cut at rounds p_i + k*q_i for all k >= 0 (1-based rounds).
    `certified_disjoint` marks schedules whose residue classes are disjoint
    by construction (the dyadic allocator asserts this locally); validation
    then skips the hyperperiod expansion.
    """

    pairs: tuple[tuple[int, int], ...]
    certified_disjoint: bool = False

    def __post_init__(self):
        pairs = tuple((int(p), int(q)) for p, q in self.pairs)
        object.__setattr__(self, "pairs", pairs)
        for i, (p, q) in enumerate(pairs, start=1):
            if p < 1 or q < 1:
                raise ScheduleError(f"bamboo {i}: offset/period ({p},{q}) must be >= 1")

    @property
    def n(self) -> int:
        return len(self.pairs)


@dataclass(frozen=True)
class ListSchedule:
    """Cyclic schedule as an explicit (preamble, period) list of cut indices."""

    preamble: tuple[int, ...]
    period: tuple[int, ...]
    n: int = 0  # 0 = infer from the largest index present

    def __post_init__(self):
        object.__setattr__(self, "preamble", tuple(int(i) for i in self.preamble))
        object.__setattr__(self, "period", tuple(int(i) for i in self.period))
        if not self.period:
            raise ScheduleError("period must be nonempty")
        if self.n == 0:
            object.__setattr__(self, "n", max(self.preamble + self.period))
        for i in self.preamble + self.period:
            if i < 0 or i > self.n:
                raise ScheduleError(f"cut index {i} out of range 0..{self.n}")


CyclicSchedule = ResidueSchedule | ListSchedule

# Expansion budget for collision checking of uncertified residue schedules.
RESIDUE_EXPANSION_CAP = 2 ** 20
# Pairwise-congruence fallback is quadratic; keep it for small n only.
_CRT_FALLBACK_LIMIT = 2048


def validate_residue(schedule: ResidueSchedule, cap: int = RESIDUE_EXPANSION_CAP) -> None:
    """Check that no two bamboos are ever cut in the same round.

    Two residue classes p mod q and p' mod q' share a round iff
    p = p' (mod gcd(q, q')), so either a hyperperiod expansion (<= `cap`
    rounds) or the pairwise congruence test gives an exact answer.  Certified
    schedules (built by the dyadic allocator) are trusted.
    """
    if schedule.certified_disjoint:
        return
    hyper = 1
    for _, q in schedule.pairs:
        hyper = hyper // gcd(hyper, q) * q
        if hyper > cap:
            hyper = 0
            break
    if hyper:
        taken = bytearray(hyper)
        for i, (p, q) in enumerate(schedule.pairs, start=1):
            for r in range((p - 1) % q, hyper, q):
                if taken[r]:
                    raise ScheduleError(
                        f"collision: bamboo {i} shares round {r + 1} (mod {hyper}) "
                        f"with an earlier bamboo"
                    )
                taken[r] = 1
        return
    if schedule.n > _CRT_FALLBACK_LIMIT:
        raise ScheduleError(
            f"cannot validate disjointness: hyperperiod exceeds {cap} and "
            f"n = {schedule.n} is too large for the pairwise test"
        )
    pairs = schedule.pairs
    for i in range(len(pairs)):
        p_i, q_i = pairs[i]
        for j in range(i + 1, len(pairs)):
            p_j, q_j = pairs[j]
            if (p_i - p_j) % gcd(q_i, q_j) == 0:
                raise ScheduleError(f"collision: bamboos {i + 1} and {j + 1} share rounds")


def validate_list(schedule: ListSchedule) -> None:
    """Every bamboo 1..n must appear at least once in the period."""
    missing = set(range(1, schedule.n + 1)) - set(schedule.period)
    if missing:
        raise ScheduleError(f"period never cuts bamboo(s) {sorted(missing)}")


@dataclass(frozen=True)
class SimulationReport:
    """Exact per-bamboo height suprema for a schedule or walk."""

    per_bamboo_max: tuple[Fraction, ...]
    global_max: Fraction
    argmax_bamboo: int                      # lowest 1-based index attaining global_max
    steady_state_max: Fraction              # supremum after the preamble / first period
    horizon: Fraction | int | None          # rounds or time simulated; None = analytic
    argmax_round: Fraction | int | None = None

    def __post_init__(self):
        assert self.global_max == max(self.per_bamboo_max)
        assert self.steady_state_max <= self.global_max


def simulate_discrete(
    rates: RateVector,
    schedule: Sequence[int],
    *,
    include_tail: bool = True,
    steady_after: int = 0,
) -> SimulationReport:
    """Replay an explicit finite cut sequence and report exact height maxima.

    Per-bamboo maximum is h_i times the largest gap between consecutive cuts
    of i, counting the initial gap from round 0.  The tail gap from the last
    cut to the horizon is counted unless include_tail=False (a bamboo never
    cut within the horizon always contributes its full-window height: that
    height really was attained).  Heights attained at rounds > steady_after
    feed steady_state_max.
    """
    if not schedule:
        raise ValueError("schedule must be nonempty")
    n = rates.n
    last = [0] * (n + 1)
    best_gap = [0] * (n + 1)
    best_at = [0] * (n + 1)
    steady_gap = [0] * (n + 1)
    r = 0
    for r, c in enumerate(schedule, start=1):
        c = int(c)
        if c == 0:
            continue
        if not 1 <= c <= n:
            raise ScheduleError(f"cut index {c} out of range 1..{n} at round {r}")
        gap = r - last[c]
        if gap > best_gap[c]:
            best_gap[c] = gap
            best_at[c] = r
        if r > steady_after and gap > steady_gap[c]:
            steady_gap[c] = gap
        last[c] = r
    horizon = r
    for i in range(1, n + 1):
        if last[i] and not include_tail:
            continue
        gap = horizon - last[i]
        if gap > best_gap[i]:
            best_gap[i] = gap
            best_at[i] = horizon
        if horizon > steady_after and gap > steady_gap[i]:
            steady_gap[i] = gap
    per = tuple(rates.rate(i) * best_gap[i] for i in range(1, n + 1))
    gmax = max(per)
    arg = per.index(gmax) + 1
    steady = max(
        (rates.rate(i) * steady_gap[i] for i in range(1, n + 1)),
        default=Fraction(0),
    )
    return SimulationReport(per, gmax, arg, steady, horizon, best_at[arg])


def _evaluate_residue(rates: RateVector, schedule: ResidueSchedule) -> SimulationReport:
    per = []
    steady = Fraction(0)
    for i, (p, q) in enumerate(schedule.pairs, start=1):
        h = rates.rate(i)
        per.append(h * max(p, q))
        if h * q > steady:
            steady = h * q
    per = tuple(per)
    gmax = max(per)
    arg = per.index(gmax) + 1
    p, q = schedule.pairs[arg - 1]
    at = p if p >= q else p + q
    return SimulationReport(per, gmax, arg, steady, None, at)


def _evaluate_list(rates: RateVector, schedule: ListSchedule) -> SimulationReport:
    pre, period = schedule.preamble, schedule.period
    # Global supremum: everything (initial gaps, preamble, transition, cyclic
    # gaps) shows up in the first preamble + 2 periods.
    sim = simulate_discrete(rates, pre + period + period, include_tail=False)
    # Steady state: only the cyclic gaps within the period matter.
    P = len(period)
    positions: dict[int, list[int]] = {}
    for t, c in enumerate(period, start=1):
        if c:
            positions.setdefault(c, []).append(t)
    steady = Fraction(0)
    for i, pos in positions.items():
        wrap = P - pos[-1] + pos[0]
        gap = max(max(b - a for a, b in zip(pos, pos[1:])), wrap) if len(pos) > 1 else P
        if rates.rate(i) * gap > steady:
            steady = rates.rate(i) * gap
    return SimulationReport(
        sim.per_bamboo_max, sim.global_max, sim.argmax_bamboo, steady, None, sim.argmax_round
    )


def evaluate_cyclic(
    rates: RateVector, schedule: CyclicSchedule, *, validate: bool = True
) -> SimulationReport:
    """Exact supremum report for an infinite cyclic schedule, without
    unbounded simulation.

    ResidueForm: per-bamboo supremum is h_i * max(p_i, q_i).
    ListForm: maximum cyclic gap in one period plus the first-occurrence gap,
    obtained from an explicit preamble + 2 periods expansion.
    """
    if isinstance(schedule, ResidueSchedule):
        if schedule.n != rates.n:
            raise ScheduleError(f"schedule covers {schedule.n} bamboos, instance has {rates.n}")
        if validate:
            validate_residue(schedule)
        return _evaluate_residue(rates, schedule)
    if isinstance(schedule, ListSchedule):
        if schedule.n > rates.n:
            raise ScheduleError(f"schedule names bamboo {schedule.n}, instance has {rates.n}")
        if validate:
            if schedule.n != rates.n:
                raise ScheduleError(
                    f"period must cut every bamboo 1..{rates.n} (covers only {schedule.n})"
                )
            validate_list(schedule)
        return _evaluate_list(rates, schedule)
    raise TypeError(f"not a cyclic schedule: {schedule!r}")


def simulate_walk(
    instance,
    walk: Sequence[tuple[int, Fraction]],
    *,
    strict: bool = False,
    include_tail: bool = True,
    steady_after: Fraction = Fraction(0),
    horizon: Fraction | None = None,
) -> SimulationReport:
    """Replay a continuous walk (point, arrival time) and report exact maxima.

    The robot starts at `instance.start` at time 0; all bamboos have height 0
    then.  Arrival times must be strictly increasing and each leg must take
    at least the travel time between its endpoints (shortcuts via the
    triangle inequality make faster-than-direct arrivals impossible).  With
    strict=True each leg must take exactly the travel time.
    """
    if not walk and horizon is None:
        raise ValueError("empty walk needs an explicit horizon")
    rates: RateVector = instance.rates
    travel = instance.travel
    n = rates.n
    prev_v, prev_t = instance.start, Fraction(0)
    last = [Fraction(0)] * (n + 1)
    best_gap = [Fraction(0)] * (n + 1)
    best_at = [Fraction(0)] * (n + 1)
    steady_gap = [Fraction(0)] * (n + 1)
    for k, (v, t) in enumerate(walk):
        v = int(v)
        t = frac(t)
        if not 1 <= v <= n:
            raise ScheduleError(f"walk entry {k}: point {v} out of range 1..{n}")
        dt = t - prev_t
        if dt <= 0:
            raise ScheduleError(f"walk entry {k}: arrival times must be strictly increasing")
        d = travel[prev_v - 1][v - 1]
        if dt < d:
            raise ScheduleError(
                f"walk entry {k}: leg {prev_v}->{v} takes {dt}, below travel time {d}"
            )
        if strict and dt != d:
            raise ScheduleError(
                f"walk entry {k}: leg {prev_v}->{v} takes {dt} != travel time {d} (strict mode)"
            )
        gap = t - last[v]
        if gap > best_gap[v]:
            best_gap[v] = gap
            best_at[v] = t
        if t > steady_after and gap > steady_gap[v]:
            steady_gap[v] = gap
        last[v] = t
        prev_v, prev_t = v, t
    end = prev_t if horizon is None else frac(horizon)
    if end < prev_t:
        raise ValueError(f"horizon {end} precedes the last walk time {prev_t}")
    for i in range(1, n + 1):
        if last[i] and not include_tail:
            continue
        gap = end - last[i]
        if gap > best_gap[i]:
            best_gap[i] = gap
            best_at[i] = end
        if end > steady_after and gap > steady_gap[i]:
            steady_gap[i] = gap
    per = tuple(rates.rate(i) * best_gap[i] for i in range(1, n + 1))
    gmax = max(per)
    arg = per.index(gmax) + 1
    steady = max(
        (rates.rate(i) * steady_gap[i] for i in range(1, n + 1)), default=Fraction(0)
    )
    return SimulationReport(per, gmax, arg, steady, end, best_at[arg])


def lower_bound_H(rates: RateVector) -> Fraction:
    """H = sum of growth rates: the universal lower bound on any schedule."""
    return rates.H


def cap_refutation_horizon(rates: RateVector, cap) -> int:
    """Rounds within which *any* schedule must push some height above `cap`.

    Total height grows by H per round and a single cut removes at most `cap`
    while all heights stay <= cap, so the total after T rounds is at least
    T*(H - cap); it is also at most n*cap.  Hence no schedule survives past
    floor(n*cap / (H - cap)) + 1 rounds with all heights <= cap < H.
    """
    cap = frac(cap)
    if cap >= rates.H:
        raise ValueError(f"cap {cap} >= H = {rates.H}: nothing to refute")
    if cap <= 0:
        return 1
    bound = (rates.n * cap) / (rates.H - cap)
    return bound.numerator // bound.denominator + 1


def gen_planted_head(n: int, head_ratio, seed: int) -> RateVector:
    """Random instance with a planted head fraction h_1/H = head_ratio.

    h_1 = 1; the other n-1 rates are random integer weights (within a factor
    of 4 of each other) rescaled to sum to 1/head_ratio - 1 exactly.  Needs n
    large enough that every tail rate stays <= 1; n >= 4/head_ratio is
    always enough.
    """
    ratio = frac(head_ratio)
    if not 0 < ratio <= 1:
        raise ValueError(f"head_ratio must be in (0, 1], got {ratio}")
    if ratio == 1:
        if n != 1:
            raise ValueError("head_ratio 1 forces n = 1")
        return RateVector([Fraction(1)])
    if n < 2:
        raise ValueError(f"need n >= 2 for head_ratio {ratio}")
    rng = random.Random(seed)
    weights = [rng.randint(1 << 10, 1 << 12) for _ in range(n - 1)]
    scale = (1 / ratio - 1) / sum(weights)
    tail = sorted((w * scale for w in weights), reverse=True)
    if tail[0] > 1:
        raise ValueError(f"n={n} too small for head_ratio={ratio}")
    return RateVector([Fraction(1)] + tail)


# ---------------------------------------------------------------------------
# File formats (shared by the CLI)
# ---------------------------------------------------------------------------


def _parse_rational_field(field: str, value) -> Fraction:
    try:
        return frac(value)
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        raise InstanceFormatError(field, f"not a rational number: {value!r} ({exc})")


def load_instance(source: IO[str] | str):
    """Load an instance JSON document (open file object, or the JSON text).

    Returns a RateVector, or a MetricInstance when a "travel" matrix is
    present.  Rational values may be strings ("7/15"), integers, or decimal
    literals (parsed exactly: 0.1 loads as 1/10, not as the nearest float).
    """
    if isinstance(source, str):
        doc = json.loads(source, parse_float=Fraction)
    else:
        doc = json.load(source, parse_float=Fraction)
    if not isinstance(doc, dict):
        raise InstanceFormatError("document", "instance file must be a JSON object")
    if "rates" not in doc:
        raise InstanceFormatError("rates", "missing")
    raw = doc["rates"]
    if not isinstance(raw, list):
        raise InstanceFormatError("rates", "must be a list")
    rates = RateVector([_parse_rational_field(f"rates[{k}]", v) for k, v in enumerate(raw)])
    if "travel" not in doc:
        return rates
    raw_t = doc["travel"]
    if not isinstance(raw_t, list) or any(not isinstance(row, list) for row in raw_t):
        raise InstanceFormatError("travel", "must be a square matrix (list of lists)")
    travel = tuple(
        tuple(_parse_rational_field(f"travel[{i}][{j}]", v) for j, v in enumerate(row))
        for i, row in enumerate(raw_t)
    )
    start = doc.get("start", 1)
    if not isinstance(start, int):
        raise InstanceFormatError("start", f"must be an integer index, got {start!r}")
    from .continuous import MetricInstance  # local import: continuous builds on core

    return MetricInstance(rates=rates, travel=travel, start=start)


def instance_to_dict(obj) -> dict:
    if isinstance(obj, RateVector):
        return {"rates": [str(r) for r in obj.rates]}
    return {
        "rates": [str(r) for r in obj.rates.rates],
        "travel": [[str(x) for x in row] for row in obj.travel],
        "start": obj.start,
    }


def save_instance(obj, fp: IO[str]) -> None:
    json.dump(instance_to_dict(obj), fp, indent=2, sort_keys=True)
    fp.write("\n")


def load_schedule(source: IO[str] | str) -> CyclicSchedule:
    """Load a schedule JSON document ({"residue": ...} or {"preamble"/"period"})."""
    doc = json.loads(source) if isinstance(source, str) else json.load(source)
    if not isinstance(doc, dict):
        raise InstanceFormatError("document", "schedule file must be a JSON object")
    if "residue" in doc:
        pairs = doc["residue"]
        if not isinstance(pairs, list) or any(
            not isinstance(pq, list) or len(pq) != 2 for pq in pairs
        ):
            raise InstanceFormatError("residue", "must be a list of [offset, period] pairs")
        try:
            return ResidueSchedule(tuple((int(p), int(q)) for p, q in pairs))
        except ScheduleError as exc:
            raise InstanceFormatError("residue", str(exc))
    if "period" in doc:
        try:
            return ListSchedule(
                tuple(doc.get("preamble", [])), tuple(doc["period"]), int(doc.get("n", 0))
            )
        except ScheduleError as exc:
            raise InstanceFormatError("period", str(exc))
    raise InstanceFormatError("document", 'schedule needs a "residue" or "period" field')


def schedule_to_dict(schedule: CyclicSchedule) -> dict:
    if isinstance(schedule, ResidueSchedule):
        return {"residue": [[p, q] for p, q in schedule.pairs]}
    return {
        "preamble": list(schedule.preamble),
        "period": list(schedule.period),
        "n": schedule.n,
    }


def save_schedule(schedule: CyclicSchedule, fp: IO[str]) -> None:
    json.dump(schedule_to_dict(schedule), fp, indent=2, sort_keys=True)
    fp.write("\n")
