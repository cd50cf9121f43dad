"""Triage compiler vectorization remarks against profiles and suggest remedies."""

__version__ = "0.1.0"

from .advisor import (  # noqa: E402
    ARCHES,
    AdviceEntry,
    ArchModel,
    BenefitModel,
    BlockerCategory,
    Remedy,
    RemedyKind,
    RuleTable,
    advise,
    classify,
    classify_message,
    estimate_benefit,
    remedies,
)
from .correlate import HotnessSource, LoopSite, attach_hotness, filter_hot, group_by_loc  # noqa: E402
from .counters import CounterObservation, CounterSet, compare_counters, parse_counters, task_time_share  # noqa: E402
from .profiles import (  # noqa: E402
    Breakdown,
    CategoryRule,
    Profile,
    ProfileSample,
    breakdown,
    parse_perf_report,
    parse_profile_csv,
)
from .remarks import Remark, RemarkArg, RemarkKind, SourceLoc, parse_remark_stream, remark_message  # noqa: E402
from .report import (  # noqa: E402
    AdviceReport,
    RunComparison,
    RunSummary,
    compare_runs,
    rank,
    render_structured,
    render_text,
)

__all__ = [
    "ARCHES",
    "AdviceEntry",
    "AdviceReport",
    "ArchModel",
    "BenefitModel",
    "BlockerCategory",
    "Breakdown",
    "CategoryRule",
    "CounterObservation",
    "CounterSet",
    "HotnessSource",
    "LoopSite",
    "Profile",
    "ProfileSample",
    "Remark",
    "RemarkArg",
    "RemarkKind",
    "Remedy",
    "RemedyKind",
    "RuleTable",
    "RunComparison",
    "RunSummary",
    "SourceLoc",
    "advise",
    "attach_hotness",
    "breakdown",
    "classify",
    "classify_message",
    "compare_counters",
    "compare_runs",
    "estimate_benefit",
    "filter_hot",
    "group_by_loc",
    "parse_counters",
    "parse_perf_report",
    "parse_profile_csv",
    "parse_remark_stream",
    "rank",
    "remark_message",
    "remedies",
    "render_structured",
    "render_text",
    "task_time_share",
]
