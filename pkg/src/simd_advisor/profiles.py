"""Flat profile ingestion (perf report text, normalized CSV) and category breakdown."""

from __future__ import annotations

import csv
import io
import logging
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import IO, Iterable

from .errors import BadHeader, BadRow, ConfigError, InputError, NoSamples

log = logging.getLogger(__name__)

CSV_HEADER = ("symbol", "module", "percent")
CATEGORIES = ("application", "scientific_libraries", "runtime", "other")
# Producers round each line independently, so totals can exceed 100 slightly.
PERCENT_SUM_SLACK = 0.5

_PERF_LINE = re.compile(
    r"^\s*(?P<pct>\d+(?:\.\d+)?)%\s+(?P<command>\S+)\s+(?P<module>\S+)\s+"
    r"(?:\[(?P<marker>[^\]]+)\]\s+)?(?P<symbol>\S.*?)\s*$"
)


@dataclass(frozen=True)
class ProfileSample:
    symbol: str
    module: str
    percent: float

    def __post_init__(self) -> None:
        if not self.symbol:
            raise ValueError("ProfileSample.symbol must be non-empty")
        if not (0.0 <= self.percent <= 100.0) or math.isnan(self.percent):
            raise ValueError(f"percent must be within 0..100, got {self.percent}")


@dataclass(frozen=True)
class Profile:
    samples: tuple[ProfileSample, ...] = ()
    source_label: str = ""

    def __post_init__(self) -> None:
        if not isinstance(self.samples, tuple):
            object.__setattr__(self, "samples", tuple(self.samples))
        if self.total_percent > 100.0 + PERCENT_SUM_SLACK:
            raise ValueError(f"profile percentages sum to {self.total_percent:.3f} > 100")

    @property
    def total_percent(self) -> float:
        return math.fsum(s.percent for s in self.samples)


def _note(diagnostics: list[str] | None, message: str) -> None:
    log.warning(message)
    if diagnostics is not None:
        diagnostics.append(message)


def _make_profile(samples: list[ProfileSample], source: str) -> Profile:
    try:
        return Profile(tuple(samples), source)
    except ValueError as exc:
        raise InputError(f"{source}: {exc}") from None


def parse_profile_csv(
    stream: IO[str] | str,
    *,
    strict: bool = True,
    source: str = "<stream>",
    diagnostics: list[str] | None = None,
) -> Profile:
    """Parse a ``symbol,module,percent`` CSV. Bad rows raise, or are skipped when not strict."""
    handle = io.StringIO(stream) if isinstance(stream, str) else stream
    reader = csv.reader(handle)
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
        raise BadHeader(",".join(CSV_HEADER), ",".join(header or []), source)
    samples = []
    for row in reader:
        lineno = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        try:
            if len(row) != 3:
                raise ValueError(f"expected 3 fields, got {len(row)}")
            symbol, module, pct = (c.strip() for c in row)
            samples.append(ProfileSample(symbol, module, float(pct)))
        except ValueError as exc:
            if strict:
                raise BadRow(lineno, str(exc), source) from None
            _note(diagnostics, f"{source}:{lineno}: skipped bad row: {exc}")
    return _make_profile(samples, source)


def parse_perf_report(
    stream: IO[str] | str,
    *,
    strict: bool = True,
    source: str = "<stream>",
    diagnostics: list[str] | None = None,
) -> Profile:
    """Parse ``perf report --stdio`` flat output.

    Each sample line looks like ``  12.34%  dcapp  dcapp  [.] Walker::doSweep``; the
    ``[.]``/``[k]`` marker is optional. Lines that do not match are skipped with a
    warning. Strict mode raises NoSamples when nothing matched.
    """
    text = stream if isinstance(stream, str) else stream.read()
    samples = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        m = _PERF_LINE.match(line)
        if m is None:
            _note(diagnostics, f"{source}:{lineno}: skipped unrecognized line")
            continue
        try:
            samples.append(ProfileSample(m["symbol"], m["module"], float(m["pct"])))
        except ValueError as exc:
            _note(diagnostics, f"{source}:{lineno}: skipped line: {exc}")
    if not samples and strict:
        raise NoSamples(source)
    return _make_profile(samples, source)


def parse_profile(
    stream: IO[str] | str,
    *,
    strict: bool = True,
    source: str = "<stream>",
    diagnostics: list[str] | None = None,
) -> Profile:
    """Dispatch on content: the CSV header selects the CSV parser, anything else is perf text."""
    text = stream if isinstance(stream, str) else stream.read()
    first = next((ln for ln in text.splitlines() if ln.strip()), "")
    if tuple(c.strip() for c in first.split(",")) == CSV_HEADER:
        return parse_profile_csv(text, strict=strict, source=source, diagnostics=diagnostics)
    return parse_perf_report(text, strict=strict, source=source, diagnostics=diagnostics)


# ---------------------------------------------------------------------------
# Category rules


def _glob_regex(pattern: str) -> re.Pattern[str]:
    return re.compile(".*".join(re.escape(part) for part in pattern.split("*")), re.DOTALL)


@dataclass(frozen=True)
class CategoryRule:
    """Anchored glob over ``module:symbol``; ``*`` is the only wildcard."""

    pattern: str
    category: str
    _regex: re.Pattern[str] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.category not in CATEGORIES:
            raise ValueError(f"unknown category {self.category!r}; expected one of {', '.join(CATEGORIES)}")
        if not self.pattern:
            raise ValueError("empty category pattern")
        object.__setattr__(self, "_regex", _glob_regex(self.pattern))

    def matches(self, sample: ProfileSample) -> bool:
        return self._regex.fullmatch(f"{sample.module}:{sample.symbol}") is not None


def parse_category_rules(stream: IO[str] | str, *, source: str = "<rules>") -> list[CategoryRule]:
    text = stream if isinstance(stream, str) else stream.read()
    rules = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        pattern, sep, category = line.rpartition(",")
        if not sep:
            raise ConfigError(f"{source}:{lineno}: expected 'pattern,category'")
        try:
            rules.append(CategoryRule(pattern.strip(), category.strip()))
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: {exc}") from None
    return rules


def default_category_rules() -> list[CategoryRule]:
    text = resources.files("simd_advisor").joinpath("data/categories.rules").read_text(encoding="utf-8")
    return parse_category_rules(text, source="categories.rules")


def categorize(sample: ProfileSample, rules: Iterable[CategoryRule]) -> str:
    for rule in rules:
        if rule.matches(sample):
            return rule.category
    return "other"


@dataclass(frozen=True)
class Breakdown:
    totals: dict[str, float]
    below_threshold_percent: float
    threshold_percent: float = 1.0

    @property
    def other_activities(self) -> float:
        """The reported "other activities" line: unmatched hot samples plus the sub-threshold mass."""
        return self.totals["other"] + self.below_threshold_percent

    @property
    def total_percent(self) -> float:
        return math.fsum(self.totals.values()) + self.below_threshold_percent

    def __getitem__(self, category: str) -> float:
        return self.totals[category]


def breakdown(p: Profile, rules: Iterable[CategoryRule], threshold_percent: float = 1.0) -> Breakdown:
    """Split profile time into the four categories.

    Samples strictly above ``threshold_percent`` go to the first matching rule's
    category (``other`` when nothing matches); the rest is pooled into
    ``below_threshold_percent``.
    """
    if threshold_percent < 0:
        raise ValueError("threshold_percent must be >= 0")
    rules = list(rules)
    buckets: dict[str, list[float]] = {c: [] for c in CATEGORIES}
    below: list[float] = []
    for s in p.samples:
        if s.percent > threshold_percent:
            buckets[categorize(s, rules)].append(s.percent)
        else:
            below.append(s.percent)
    return Breakdown(
        totals={c: math.fsum(v) for c, v in buckets.items()},
        below_threshold_percent=math.fsum(below),
        threshold_percent=threshold_percent,
    )
