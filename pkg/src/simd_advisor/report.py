"""Ranking, run comparison, and text / JSON rendering of advice reports."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from importlib import resources
from typing import IO, Any, Iterable

from . import __version__
from .advisor import AdviceEntry, BlockerCategory, Remedy, RemedyKind
from .correlate import HotnessSource, LoopSite
from .errors import BadHeader, BadRow, InputError, NoSharedMetric
from .remarks import Remark, RemarkArg, RemarkKind, SourceLoc, remark_message

SCHEMA_VERSION = 1
RUNS_HEADER = ("label", "wall_seconds", "gflops")


def _rank_key(e: AdviceEntry) -> tuple:
    hot = e.site.hotness_percent
    return (hot is None, -hot if hot is not None else 0.0, e.site.loc.file, e.site.loc.line)


def rank(entries: Iterable[AdviceEntry]) -> list[AdviceEntry]:
    """Hottest first, unknown hotness last, ties by (file, line). Stable; returns a new list."""
    return sorted(entries, key=_rank_key)


@dataclass(frozen=True)
class ReportMetadata:
    tool_version: str = __version__
    inputs: tuple[str, ...] = ()
    threshold_percent: float = 1.0
    keep_unknown: bool = True
    arch: str | None = None
    element_bits: int | None = None
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self) -> None:
        if not isinstance(self.inputs, tuple):
            object.__setattr__(self, "inputs", tuple(self.inputs))


@dataclass(frozen=True)
class AdviceReport:
    entries: tuple[AdviceEntry, ...] = ()
    unlocated_remarks: tuple[Remark, ...] = ()
    metadata: ReportMetadata = field(default_factory=ReportMetadata)

    def __post_init__(self) -> None:
        for name in ("entries", "unlocated_remarks"):
            value = getattr(self, name)
            if not isinstance(value, tuple):
                object.__setattr__(self, name, tuple(value))
        keys = [_rank_key(e) for e in self.entries]
        if keys != sorted(keys):
            raise ValueError("report entries must be in rank() order")

    @property
    def findings(self) -> list[AdviceEntry]:
        return [e for e in self.entries if e.is_finding]


def make_report(
    entries: Iterable[AdviceEntry], unlocated: Iterable[Remark] = (), metadata: ReportMetadata | None = None
) -> AdviceReport:
    return AdviceReport(tuple(rank(entries)), tuple(unlocated), metadata or ReportMetadata())


# ---------------------------------------------------------------------------
# Run comparison


@dataclass(frozen=True)
class RunSummary:
    label: str
    wall_seconds: float | None = None
    gflops: float | None = None

    def __post_init__(self) -> None:
        if self.wall_seconds is None and self.gflops is None:
            raise ValueError(f"run {self.label!r} needs wall_seconds or gflops")
        for name in ("wall_seconds", "gflops"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ValueError(f"{name} must be positive, got {value}")


@dataclass(frozen=True)
class RunComparison:
    baseline_label: str
    other_label: str
    time_speedup: float | None = None
    gflops_ratio: float | None = None


def compare_runs(baseline: RunSummary, other: RunSummary) -> RunComparison:
    """Time speedup is baseline/other seconds; the GFlops ratio is other/baseline."""
    speedup = ratio = None
    if baseline.wall_seconds is not None and other.wall_seconds is not None:
        speedup = baseline.wall_seconds / other.wall_seconds
    if baseline.gflops is not None and other.gflops is not None:
        ratio = other.gflops / baseline.gflops
    if speedup is None and ratio is None:
        raise NoSharedMetric(f"runs {baseline.label!r} and {other.label!r} share no metric")
    return RunComparison(baseline.label, other.label, speedup, ratio)


def parse_runs(stream: IO[str] | str, *, source: str = "<stream>") -> list[RunSummary]:
    """Read ``label,wall_seconds,gflops`` rows; empty cells mean the metric is absent."""
    handle = io.StringIO(stream) if isinstance(stream, str) else stream
    reader = csv.reader(handle)
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != RUNS_HEADER:
        raise BadHeader(",".join(RUNS_HEADER), ",".join(header or []), source)
    runs = []
    for row in reader:
        if not row or all(not c.strip() for c in row):
            continue
        try:
            if len(row) != 3:
                raise ValueError(f"expected 3 fields, got {len(row)}")
            label, secs, gflops = (c.strip() for c in row)
            runs.append(
                RunSummary(label, float(secs) if secs else None, float(gflops) if gflops else None)
            )
        except ValueError as exc:
            raise BadRow(reader.line_num, str(exc), source) from None
    return runs


# ---------------------------------------------------------------------------
# Text rendering

_KIND_HEADINGS = (
    (RemedyKind.DIRECTIVE, "directives"),
    (RemedyKind.FLAG, "compiler flags"),
    (RemedyKind.TRANSFORMATION, "loop transformations"),
    (RemedyKind.CAUTION, "cautions"),
)


def _fmt_hotness(site: LoopSite) -> str:
    if site.hotness_percent is None:
        return "hotness unknown"
    return f"{site.hotness_percent:.2f}% ({site.hotness_source.value})"


def _remark_line(r: Remark) -> str:
    where = f" in {r.function}" if r.function else ""
    return f"[{r.kind.value}] {r.pass_name}/{r.name}{where}: {remark_message(r)}"


def render_text(report: AdviceReport) -> str:
    """Human-readable report. The layout may change between versions; use JSON for automation."""
    md = report.metadata
    out = [
        "SIMD advisor report",
        f"  tool {md.tool_version}, schema {md.schema_version}",
        f"  inputs: {', '.join(md.inputs) if md.inputs else '(none)'}",
        f"  hotness threshold: {md.threshold_percent:g}%"
        + (" (loops with unknown hotness kept)" if md.keep_unknown else ""),
    ]
    if md.arch:
        out.append(f"  benefit model: {md.arch}, {md.element_bits}-bit elements (heuristic upper bound)")
    out.append("")
    if not report.entries:
        out.append("no advice entries")
    else:
        out.append(f"{len(report.entries)} advice entries, {len(report.findings)} not vectorized")
    for i, e in enumerate(report.entries, start=1):
        site = e.site
        out.append("")
        out.append(f"#{i} {site.loc}  {site.function or '(unknown function)'}")
        out.append(f"    hotness: {_fmt_hotness(site)}")
        if e.already_vectorized:
            out.append("    status: already vectorized, nothing to do")
            continue
        out.append(f"    blockers: {', '.join(c.value for c in e.categories) or 'none'}")
        if e.benefit_estimate is not None:
            out.append(f"    estimated benefit: up to {e.benefit_estimate:.1f}x (heuristic upper bound)")
        out.append("    remarks:")
        for r in site.remarks:
            out.append(f"      {_remark_line(r)}")
        for kind, heading in _KIND_HEADINGS:
            group = [r for r in e.remedies if r.kind is kind]
            if not group:
                continue
            out.append(f"    {heading}:")
            for remedy in group:
                out.append(f"      - {remedy.text}")
                if remedy.rationale:
                    out.append(f"        {remedy.rationale}")
                if remedy.correctness_note:
                    out.append(f"        CAUTION: {remedy.correctness_note}")
    if report.unlocated_remarks:
        out.append("")
        out.append(f"unlocated remarks ({len(report.unlocated_remarks)}), not tied to any loop:")
        for r in report.unlocated_remarks:
            out.append(f"  {_remark_line(r)}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Structured (JSON) rendering


def _loc_json(loc: SourceLoc | None) -> dict | None:
    return None if loc is None else {"file": loc.file, "line": loc.line, "column": loc.column}


def _remark_json(r: Remark) -> dict:
    return {
        "kind": r.kind.value,
        "pass": r.pass_name,
        "name": r.name,
        "function": r.function,
        "location": _loc_json(r.loc),
        "hotness": r.hotness,
        "args": [{"key": a.key, "value": a.value, "location": _loc_json(a.loc)} for a in r.args],
        "message": remark_message(r),
    }


def _remedy_json(r: Remedy) -> dict:
    return {
        "kind": r.kind.value,
        "text": r.text,
        "rationale": r.rationale,
        "correctness_note": r.correctness_note,
    }


def _entry_json(e: AdviceEntry) -> dict:
    site = e.site
    return {
        "location": _loc_json(site.loc),
        "function": site.function,
        "hotness_percent": site.hotness_percent,
        "hotness_source": site.hotness_source.value,
        "categories": [c.value for c in e.categories],
        "already_vectorized": e.already_vectorized,
        "benefit_estimate": e.benefit_estimate,
        "remedies": [_remedy_json(r) for r in e.remedies],
        "remarks": [_remark_json(r) for r in site.remarks],
    }


def report_to_json(report: AdviceReport) -> dict[str, Any]:
    md = report.metadata
    return {
        "metadata": {
            "schema_version": md.schema_version,
            "tool_version": md.tool_version,
            "inputs": list(md.inputs),
            "threshold_percent": md.threshold_percent,
            "keep_unknown": md.keep_unknown,
            "arch": md.arch,
            "element_bits": md.element_bits,
        },
        "entries": [_entry_json(e) for e in report.entries],
        "unlocated": [_remark_json(r) for r in report.unlocated_remarks],
    }


def render_structured(report: AdviceReport) -> str:
    return json.dumps(report_to_json(report), indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def _loc_from(raw: dict | None) -> SourceLoc | None:
    return None if raw is None else SourceLoc(raw["file"], raw["line"], raw["column"])


def _remark_from(raw: dict) -> Remark:
    return Remark(
        kind=RemarkKind(raw["kind"]),
        pass_name=raw["pass"],
        name=raw["name"],
        function=raw["function"],
        loc=_loc_from(raw["location"]),
        hotness=raw["hotness"],
        args=tuple(RemarkArg(a["key"], a["value"], _loc_from(a["location"])) for a in raw["args"]),
    )


def _entry_from(raw: dict) -> AdviceEntry:
    site = LoopSite(
        loc=_loc_from(raw["location"]),  # type: ignore[arg-type]
        function=raw["function"],
        remarks=tuple(_remark_from(r) for r in raw["remarks"]),
        hotness_percent=raw["hotness_percent"],
        hotness_source=HotnessSource(raw["hotness_source"]),
    )
    return AdviceEntry(
        site=site,
        categories=tuple(BlockerCategory(c) for c in raw["categories"]),
        remedies=tuple(
            Remedy(RemedyKind(r["kind"]), r["text"], r["rationale"], r["correctness_note"]) for r in raw["remedies"]
        ),
        benefit_estimate=raw["benefit_estimate"],
        already_vectorized=raw["already_vectorized"],
    )


def parse_structured(text: str) -> AdviceReport:
    """Inverse of render_structured."""
    try:
        data = json.loads(text)
        md = data["metadata"]
        if md["schema_version"] != SCHEMA_VERSION:
            raise InputError(f"unsupported schema_version {md['schema_version']}")
        metadata = ReportMetadata(
            tool_version=md["tool_version"],
            inputs=tuple(md["inputs"]),
            threshold_percent=md["threshold_percent"],
            keep_unknown=md["keep_unknown"],
            arch=md["arch"],
            element_bits=md["element_bits"],
            schema_version=md["schema_version"],
        )
        return AdviceReport(
            entries=tuple(_entry_from(e) for e in data["entries"]),
            unlocated_remarks=tuple(_remark_from(r) for r in data["unlocated"]),
            metadata=metadata,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"not a valid structured report: {exc!r}") from exc


def load_schema() -> dict[str, Any]:
    text = resources.files("simd_advisor").joinpath("data/report.schema.json").read_text(encoding="utf-8")
    return json.loads(text)
