"""Hardware-counter tables per task and ratio-based comparison between two runs."""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field
from typing import IO, Iterable

from .errors import BadHeader, BadRow, MissingTimePercent, NegativeValue, NoSharedCounters

CSV_HEADER = ("label", "counter", "value")
TIME_PERCENT = "TIME_PERCENT"
DEFAULT_TOLERANCE = 0.10


@dataclass(frozen=True)
class CounterSet:
    label: str
    counters: dict[str, float] = field(default_factory=dict)
    time_percent: float | None = None

    def __post_init__(self) -> None:
        for name, value in self.counters.items():
            if not value >= 0:
                raise ValueError(f"counter {name} must be non-negative, got {value}")

    @property
    def task(self) -> str:
        """Task part of a ``run/task`` label."""
        return self.label.rsplit("/", 1)[-1]


class Verdict(enum.Enum):
    HIGHER = "higher"
    LOWER = "lower"
    UNCHANGED = "unchanged"


@dataclass(frozen=True)
class CounterObservation:
    counter: str
    ratio: float
    verdict: Verdict
    baseline_value: float = 0.0
    other_value: float = 0.0


def parse_counters(stream: IO[str] | str, *, source: str = "<stream>") -> list[CounterSet]:
    """Read ``label,counter,value`` rows into one CounterSet per label (first-seen order).

    A ``TIME_PERCENT`` counter row sets the task's share of run time instead of a counter.
    """
    handle = io.StringIO(stream) if isinstance(stream, str) else stream
    reader = csv.reader(handle)
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
        raise BadHeader(",".join(CSV_HEADER), ",".join(header or []), source)
    counters: dict[str, dict[str, float]] = {}
    times: dict[str, float] = {}
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 3:
            raise BadRow(line, f"expected 3 fields, got {len(row)}", source)
        label, name, raw = (c.strip() for c in row)
        if not label or not name:
            raise BadRow(line, "empty label or counter name", source)
        try:
            value = float(raw)
        except ValueError:
            raise BadRow(line, f"not a number: {raw!r}", source) from None
        if not math.isfinite(value):
            raise BadRow(line, f"counter value must be finite, got {raw!r}", source)
        if value < 0:
            raise NegativeValue(line, raw, source)
        bucket = counters.setdefault(label, {})
        if name == TIME_PERCENT:
            if value > 100:
                raise BadRow(line, f"TIME_PERCENT {value} exceeds 100", source)
            times[label] = value
        elif name in bucket:
            raise BadRow(line, f"duplicate counter {name} for {label}", source)
        else:
            bucket[name] = value
    return [CounterSet(label, values, times.get(label)) for label, values in counters.items()]


def _verdict(a: float, b: float, tolerance: float) -> Verdict:
    # Compare the raw values, not the rounded ratio, so swapping the operands
    # swaps higher/lower exactly.
    if a <= (1 + tolerance) * b and b <= (1 + tolerance) * a:
        return Verdict.UNCHANGED
    return Verdict.HIGHER if a > b else Verdict.LOWER


def compare_counters(
    baseline: CounterSet, other: CounterSet, tolerance: float = DEFAULT_TOLERANCE
) -> list[CounterObservation]:
    """Ratio baseline/other for every shared counter, in the baseline's counter order."""
    if tolerance < 0:
        raise ValueError("tolerance must be >= 0")
    shared = [name for name in baseline.counters if name in other.counters]
    if not shared:
        raise NoSharedCounters(f"{baseline.label!r} and {other.label!r} share no counters")
    out = []
    for name in shared:
        a, b = baseline.counters[name], other.counters[name]
        if b == 0:
            ratio = 1.0 if a == 0 else math.inf
        else:
            ratio = a / b
        out.append(CounterObservation(name, ratio, _verdict(a, b, tolerance), a, b))
    return out


def task_time_share(sets: Iterable[CounterSet]) -> tuple[dict[str, float], float]:
    """Each task's share of run time and the group total."""
    shares: dict[str, float] = {}
    for s in sets:
        if s.time_percent is None:
            raise MissingTimePercent(s.label)
        shares[s.label] = s.time_percent
    return shares, math.fsum(shares.values())


def pair_counter_sets(
    baseline: list[CounterSet], other: list[CounterSet]
) -> tuple[list[tuple[CounterSet, CounterSet]], list[CounterSet]]:
    """Match sets from two runs: one-to-one when each side has a single set, else by task name.

    Returns the pairs and the sets that found no partner.
    """
    if len(baseline) == 1 and len(other) == 1:
        return [(baseline[0], other[0])], []
    by_task = {s.task: s for s in other}
    pairs, unmatched = [], []
    used = set()
    for s in baseline:
        partner = by_task.get(s.task)
        if partner is None:
            unmatched.append(s)
        else:
            pairs.append((s, partner))
            used.add(partner.task)
    unmatched.extend(s for s in other if s.task not in used)
    return pairs, unmatched
