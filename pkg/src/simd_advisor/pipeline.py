"""End-to-end advise pipeline: remarks + optional profile -> ranked report."""

from __future__ import annotations

from typing import Iterable

from .advisor import DEFAULT_TABLE, BenefitModel, RuleTable, advise
from .correlate import attach_hotness, filter_hot, group_by_loc
from .profiles import Profile
from .remarks import Remark
from .report import AdviceReport, ReportMetadata, make_report


def build_report(
    remarks: Iterable[Remark],
    profile: Profile | None = None,
    *,
    threshold_percent: float = 1.0,
    keep_unknown: bool = True,
    table: RuleTable = DEFAULT_TABLE,
    benefit: BenefitModel | None = None,
    inputs: Iterable[str] = (),
) -> AdviceReport:
    """Group, attach hotness, filter, classify and rank.

    Sites that carry neither a blocker nor a vectorizer success (for example
    only inlining remarks) say nothing about vectorization and are left out.
    """
    sites, unlocated = group_by_loc(remarks)
    hot = filter_hot(attach_hotness(sites, profile), threshold_percent, keep_unknown)
    entries = [advise(site, table, benefit) for site in hot]
    entries = [e for e in entries if e.categories or e.already_vectorized]
    metadata = ReportMetadata(
        inputs=tuple(inputs),
        threshold_percent=threshold_percent,
        keep_unknown=keep_unknown,
        arch=benefit.arch.name if benefit else None,
        element_bits=benefit.element_bits if benefit else None,
    )
    return make_report(entries, unlocated, metadata)
