"""Join remarks with hotness into loop sites and keep the hot ones."""

from __future__ import annotations

import enum
import logging
import re
from dataclasses import dataclass, replace
from itertools import groupby
from typing import Iterable, Sequence

from .profiles import Profile, ProfileSample
from .remarks import Remark, SourceLoc

log = logging.getLogger(__name__)


class HotnessSource(enum.Enum):
    EMBEDDED = "embedded"
    PROFILE = "profile"
    NONE = "none"


@dataclass(frozen=True)
class LoopSite:
    loc: SourceLoc
    function: str
    remarks: tuple[Remark, ...]
    hotness_percent: float | None = None
    hotness_source: HotnessSource = HotnessSource.NONE

    def __post_init__(self) -> None:
        if not isinstance(self.remarks, tuple):
            object.__setattr__(self, "remarks", tuple(self.remarks))
        if not self.remarks:
            raise ValueError("a LoopSite needs at least one remark")
        key = (self.loc.file, self.loc.line)
        for r in self.remarks:
            if r.loc is None or (r.loc.file, r.loc.line) != key:
                raise ValueError(f"remark {r.name} is not located at {self.loc.file}:{self.loc.line}")

    @property
    def key(self) -> tuple[str, int]:
        return (self.loc.file, self.loc.line)

    @property
    def max_embedded_hotness(self) -> int | None:
        values = [r.hotness for r in self.remarks if r.hotness is not None]
        return max(values) if values else None


def group_by_loc(remarks: Iterable[Remark]) -> tuple[list[LoopSite], list[Remark]]:
    """Group located remarks by (file, line); return (sites, unlocated residue).

    Sites are ordered by (file, line). Within a site remarks keep input order, and
    the site takes its column and function from the first remark.
    """
    located: list[Remark] = []
    unlocated: list[Remark] = []
    for r in remarks:
        (unlocated if r.loc is None else located).append(r)
    # sorted() is stable, so input order survives inside each group.
    located.sort(key=lambda r: (r.loc.file, r.loc.line))  # type: ignore[union-attr]
    sites = []
    for _, group in groupby(located, key=lambda r: (r.loc.file, r.loc.line)):  # type: ignore[union-attr]
        members = tuple(group)
        sites.append(LoopSite(loc=members[0].loc, function=members[0].function, remarks=members))  # type: ignore[arg-type]
    return sites, unlocated


# ---------------------------------------------------------------------------
# Symbol matching

_MANGLED_NAME = re.compile(r"(\d+)")


def _demangled_last_component(symbol: str) -> str | None:
    """Best-effort last source name of an Itanium-mangled symbol (``_ZN3foo3barEv`` -> ``bar``)."""
    s = symbol
    if not s.startswith("_Z"):
        return None
    i = 2
    nested = s.startswith("N", i)
    if nested:
        i += 1
        while i < len(s) and s[i] in "rVKRO":
            i += 1
    last = None
    while i < len(s):
        if s.startswith("St", i):
            i += 2
            continue
        m = _MANGLED_NAME.match(s, i)
        if not m:
            break
        n = int(m.group(1))
        start = m.end()
        if n == 0 or start + n > len(s):
            return None
        last = s[start : start + n]
        i = start + n
        if not nested:
            break
        if i < len(s) and s[i] == "I":
            i = _skip_template_args(s, i)
            if i < 0:
                return last
    return last


def _skip_template_args(s: str, i: int) -> int:
    """Index just past the ``I ... E`` block starting at ``s[i]``, or -1 if unbalanced."""
    depth = 0
    while i < len(s):
        ch = s[i]
        if ch.isdigit():
            m = _MANGLED_NAME.match(s, i)
            i = m.end() + int(m.group(1))  # type: ignore[union-attr]
            continue
        if ch in "INL":
            depth += 1
        elif ch == "E":
            depth -= 1
            if depth == 0:
                return i + 1
        i += 1
    return -1


def _strip_brackets(text: str, open_ch: str, close_ch: str) -> str:
    out = []
    depth = 0
    for ch in text:
        if ch == open_ch:
            depth += 1
        elif ch == close_ch and depth:
            depth -= 1
        elif depth == 0:
            out.append(ch)
    return "".join(out)


def unqualified_name(symbol: str) -> str:
    """Trailing identifier of a function symbol, ignoring namespaces, templates and parameters."""
    symbol = symbol.strip()
    demangled = _demangled_last_component(symbol)
    if demangled:
        return demangled
    head = _strip_brackets(symbol, "<", ">").split("(", 1)[0]
    parts = head.split()
    head = parts[-1] if parts else head
    head = head.split("@", 1)[0]
    return head.rsplit("::", 1)[-1].strip() or symbol


def match_profile_sample(function: str, samples: Sequence[ProfileSample]) -> ProfileSample | None:
    """Find the profile sample for ``function``: exact symbol match, then unqualified-name match.

    More than one candidate at either stage is treated as ambiguous and yields None.
    """
    if not function:
        return None
    exact = [s for s in samples if s.symbol == function]
    if len(exact) == 1:
        return exact[0]
    if len(exact) > 1:
        log.warning("ambiguous profile match for %s: %d samples share the symbol", function, len(exact))
        return None
    name = unqualified_name(function)
    candidates = [s for s in samples if unqualified_name(s.symbol) == name]
    if len(candidates) > 1:
        log.warning(
            "ambiguous profile match for %s: %s", function, ", ".join(sorted({s.symbol for s in candidates}))
        )
        return None
    return candidates[0] if candidates else None


def attach_hotness(sites: Sequence[LoopSite], p: Profile | None = None) -> list[LoopSite]:
    """Return copies of ``sites`` with hotness filled in.

    A profile sample for the site's function wins. Otherwise producer-embedded
    hotness is used, normalised to a percentage of the summed per-site maxima.
    """
    embedded = [s.max_embedded_hotness for s in sites]
    embedded_total = sum(h for h in embedded if h is not None)
    samples = p.samples if p is not None else ()
    out = []
    for site, site_max in zip(sites, embedded):
        sample = match_profile_sample(site.function, samples) if samples else None
        if sample is not None:
            out.append(replace(site, hotness_percent=sample.percent, hotness_source=HotnessSource.PROFILE))
        elif site_max is not None:
            pct = 100.0 * site_max / embedded_total if embedded_total else 0.0
            out.append(replace(site, hotness_percent=pct, hotness_source=HotnessSource.EMBEDDED))
        else:
            out.append(replace(site, hotness_percent=None, hotness_source=HotnessSource.NONE))
    return out


def filter_hot(sites: Iterable[LoopSite], threshold_percent: float, keep_unknown: bool = False) -> list[LoopSite]:
    """Keep sites hotter than ``threshold_percent``; unknown-hotness sites only if ``keep_unknown``."""
    if threshold_percent < 0:
        raise ValueError("threshold_percent must be >= 0")
    return [
        s
        for s in sites
        if (s.hotness_percent is None and keep_unknown)
        or (s.hotness_percent is not None and s.hotness_percent > threshold_percent)
    ]
