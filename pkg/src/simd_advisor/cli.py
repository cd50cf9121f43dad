"""Command-line front end.

Exit codes:
    0  success
    1  usage error (bad flags, missing files)
    2  input could not be parsed
    3  ``advise --fail-on-findings`` found a hot loop that was not vectorized
"""

from __future__ import annotations

import argparse
import contextlib
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import IO, Sequence

from . import __version__
from .advisor import ARCHES, ELEMENT_BITS, BenefitModel, BlockerCategory
from .config import AdvisorConfig, load_config, rules_path_from_env
from .counters import CounterSet, compare_counters, pair_counter_sets, parse_counters, task_time_share
from .errors import AdvisorError, InputError, MissingTimePercent
from .pipeline import build_report
from .profiles import (
    CATEGORIES,
    Profile,
    breakdown,
    default_category_rules,
    parse_category_rules,
    parse_profile,
)
from .remarks import expand_remark_paths, load_remark_files
from .report import compare_runs, parse_runs, render_structured, render_text

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_FINDINGS = 3

log = logging.getLogger("simd_advisor")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(f"{self.prog}: {message}")


def _percent(text: str) -> float:
    value = float(text)
    if not 0 <= value <= 100:
        raise argparse.ArgumentTypeError(f"expected a percentage in [0, 100], got {text}")
    return value


def _non_negative(text: str) -> float:
    value = float(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative number, got {text}")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def build_parser() -> _Parser:
    parser = _Parser(
        prog="simd-advisor",
        description="Find hot loops the compiler failed to vectorize and suggest fixes.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    adv = sub.add_parser("advise", help="rank hot non-vectorized loops and suggest remedies")
    adv.add_argument("--remarks", nargs="+", required=True, metavar="PATH",
                     help="remark files (*.opt.yaml), directories to scan, or - for stdin")
    adv.add_argument("--profile", metavar="PATH", help="perf report text or symbol,module,percent CSV")
    adv.add_argument("--threshold", type=_percent, default=1.0, metavar="PCT",
                     help="keep loops hotter than this percentage (default: 1.0)")
    adv.add_argument("--keep-unknown", action=argparse.BooleanOptionalAction, default=True,
                     help="keep loops without hotness data (default: yes)")
    adv.add_argument("--format", choices=("text", "structured"), default="text")
    adv.add_argument("--arch", choices=sorted(ARCHES), default="sve512",
                     help="target for the benefit estimate (default: sve512)")
    adv.add_argument("--element-bits", type=int, choices=ELEMENT_BITS, default=64,
                     help="element width for the benefit estimate (default: 64)")
    adv.add_argument("--top", type=_positive_int, metavar="N", help="show only the N hottest loops")
    adv.add_argument("--fail-on-findings", action="store_true",
                     help=f"exit {EXIT_FINDINGS} if any hot loop was not vectorized")
    _add_rule_options(adv)
    adv.add_argument("--lenient", action="store_true", help="skip malformed input records instead of failing")

    brk = sub.add_parser("breakdown", help="split profile time into application / libraries / runtime / other")
    brk.add_argument("--profile", required=True, metavar="PATH")
    brk.add_argument("--rules", metavar="PATH", help="category rule file (pattern,category lines)")
    brk.add_argument("--threshold", type=_percent, default=1.0, metavar="PCT")
    brk.add_argument("--lenient", action="store_true")

    cnt = sub.add_parser("counters", help="compare hardware counters of two runs")
    cnt.add_argument("--baseline", required=True, metavar="PATH")
    cnt.add_argument("--other", required=True, metavar="PATH")
    cnt.add_argument("--tolerance", type=_non_negative, metavar="FRAC",
                     help="relative band reported as unchanged (default: 0.10)")
    cnt.add_argument("--config", metavar="PATH")

    cmp_ = sub.add_parser("compare", help="speedup and GFlops ratio between two runs")
    cmp_.add_argument("--baseline", required=True, metavar="PATH")
    cmp_.add_argument("--other", required=True, metavar="PATH")

    cls = sub.add_parser("classify", help="classify one remark message")
    cls.add_argument("--message", required=True)
    cls.add_argument("--remedies", action="store_true", help="also print the remedies")
    _add_rule_options(cls)
    return parser


def _add_rule_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rules", metavar="PATH",
                   help="classification rule table (YAML); defaults to $SIMD_ADVISOR_RULES")
    p.add_argument("--config", metavar="PATH", help="config file (YAML) with discounts and overrides")


# ---------------------------------------------------------------------------


def _check_paths(args: argparse.Namespace) -> None:
    paths: list[str] = []
    for name in ("profile", "baseline", "other", "config"):
        value = getattr(args, name, None)
        if value:
            paths.append(value)
    rules = getattr(args, "rules", None)
    if rules:
        paths.append(rules)
    paths.extend(getattr(args, "remarks", None) or [])
    for p in paths:
        if p != "-" and not Path(p).exists():
            raise UsageError(f"no such file or directory: {p}")
    if getattr(args, "remarks", None) and not expand_remark_paths(args.remarks):
        raise UsageError("no remark files found")
    if sum(1 for p in paths if p == "-") > 1:
        raise UsageError("only one input can be read from stdin")


def _read(path: str, stdin: IO[str]) -> str:
    if path == "-":
        return stdin.read()
    return Path(path).read_text(encoding="utf-8")


def _source(path: str) -> str:
    return "<stdin>" if path == "-" else path


def _load_config(args: argparse.Namespace, *, with_rules: bool) -> AdvisorConfig:
    cfg = AdvisorConfig()
    if with_rules:
        rules = args.rules or rules_path_from_env()
        if rules:
            if not Path(rules).exists():
                raise UsageError(f"rule file not found: {rules}")
            cfg = load_config(rules, cfg)
    if getattr(args, "config", None):
        cfg = load_config(args.config, cfg)
    return cfg


def _cmd_advise(args: argparse.Namespace, stdin: IO[str], out: IO[str]) -> int:
    cfg = _load_config(args, with_rules=True)
    strict = not args.lenient
    remarks = load_remark_files(args.remarks, strict=strict, stdin=stdin)
    profile: Profile | None = None
    if args.profile:
        profile = parse_profile(_read(args.profile, stdin), strict=strict, source=_source(args.profile))
    benefit = BenefitModel(
        ARCHES[args.arch],
        args.element_bits,
        bounds_discount=cfg.bounds_discount,
        reduction_discount=cfg.reduction_discount,
    )
    inputs = expand_remark_paths(args.remarks) + ([args.profile] if args.profile else [])
    report = build_report(
        remarks,
        profile,
        threshold_percent=args.threshold,
        keep_unknown=args.keep_unknown,
        table=cfg.table,
        benefit=benefit,
        inputs=inputs,
    )
    has_findings = bool(report.findings)
    if args.top is not None:
        report = replace(report, entries=report.entries[: args.top])
    out.write(render_structured(report) if args.format == "structured" else render_text(report))
    return EXIT_FINDINGS if args.fail_on_findings and has_findings else EXIT_OK


def _cmd_breakdown(args: argparse.Namespace, stdin: IO[str], out: IO[str]) -> int:
    profile = parse_profile(_read(args.profile, stdin), strict=not args.lenient, source=_source(args.profile))
    if args.rules:
        rules = parse_category_rules(_read(args.rules, stdin), source=args.rules)
    else:
        rules = default_category_rules()
    b = breakdown(profile, rules, args.threshold)
    labels = {
        "application": "application",
        "scientific_libraries": "scientific libraries",
        "runtime": "runtime",
    }
    out.write(f"time breakdown of {_source(args.profile)} (samples above {args.threshold:g}%)\n")
    for cat in CATEGORIES[:-1]:
        out.write(f"  {labels[cat]:<22} {b[cat]:7.2f}%\n")
    out.write(
        f"  {'other activities':<22} {b.other_activities:7.2f}%"
        f"  (includes {b.below_threshold_percent:.2f}% in samples at or below {args.threshold:g}%)\n"
    )
    out.write(f"  {'total':<22} {b.total_percent:7.2f}%\n")
    return EXIT_OK


def _fmt_ratio(ratio: float) -> str:
    return "inf" if ratio == float("inf") else f"{ratio:.2f}x"


def _write_time_share(out: IO[str], name: str, sets: list[CounterSet]) -> None:
    try:
        shares, total = task_time_share(sets)
    except MissingTimePercent:
        return
    parts = ", ".join(f"{label} {pct:.2f}%" for label, pct in shares.items())
    out.write(f"  {name}: {parts}; total {total:.2f}%\n")


def _cmd_counters(args: argparse.Namespace, stdin: IO[str], out: IO[str]) -> int:
    cfg = _load_config(args, with_rules=False)
    tolerance = args.tolerance if args.tolerance is not None else cfg.tolerance
    base = parse_counters(_read(args.baseline, stdin), source=_source(args.baseline))
    other = parse_counters(_read(args.other, stdin), source=_source(args.other))
    pairs, unmatched = pair_counter_sets(base, other)
    if not pairs:
        raise InputError("no counter sets could be paired between the two files")
    for b, o in pairs:
        out.write(f"{b.label} vs {o.label} (ratio = {b.label} / {o.label}, unchanged within ±{tolerance:.0%})\n")
        for obs in compare_counters(b, o, tolerance):
            out.write(f"  {obs.counter:<12} {_fmt_ratio(obs.ratio):>10}  {obs.verdict.value}\n")
    for s in unmatched:
        log.warning("counter set %s has no partner in the other file", s.label)
    if any(s.time_percent is not None for s in base + other):
        out.write("time share:\n")
        _write_time_share(out, "baseline", base)
        _write_time_share(out, "other", other)
    return EXIT_OK


def _cmd_compare(args: argparse.Namespace, stdin: IO[str], out: IO[str]) -> int:
    base = parse_runs(_read(args.baseline, stdin), source=_source(args.baseline))
    other = parse_runs(_read(args.other, stdin), source=_source(args.other))
    if not base or len(base) != len(other):
        raise InputError(f"expected the same non-zero number of runs in both files, got {len(base)} and {len(other)}")
    for b, o in zip(base, other):
        c = compare_runs(b, o)
        speed = f"{c.time_speedup:.2f}x" if c.time_speedup is not None else "n/a"
        flops = f"{c.gflops_ratio:.2f}x" if c.gflops_ratio is not None else "n/a"
        out.write(
            f"{c.baseline_label} -> {c.other_label}: time speedup {speed} (baseline/other seconds), "
            f"GFlops ratio {flops} (other/baseline)\n"
        )
    return EXIT_OK


def _cmd_classify(args: argparse.Namespace, stdin: IO[str], out: IO[str]) -> int:
    cfg = _load_config(args, with_rules=True)
    category = cfg.table.classify_message(args.message)
    out.write(f"{category.value}\n")
    if args.remedies and category is not BlockerCategory.VECTORIZED:
        for r in cfg.table.remedies(category):
            out.write(f"  [{r.kind.value}] {r.text}\n")
            if r.correctness_note:
                out.write(f"    CAUTION: {r.correctness_note}\n")
    return EXIT_OK


_COMMANDS = {
    "advise": _cmd_advise,
    "breakdown": _cmd_breakdown,
    "counters": _cmd_counters,
    "compare": _cmd_compare,
    "classify": _cmd_classify,
}


def run(
    argv: Sequence[str],
    stdin: IO[str] | None = None,
    stdout: IO[str] | None = None,
    stderr: IO[str] | None = None,
) -> int:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()

    handler = logging.StreamHandler(stderr)
    handler.setFormatter(logging.Formatter("warning: %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.WARNING)
    log.propagate = False
    try:
        try:
            with contextlib.redirect_stdout(stdout), contextlib.redirect_stderr(stderr):
                args = parser.parse_args(list(argv))
            if args.command is None:
                raise UsageError("a command is required")
            _check_paths(args)
            return _COMMANDS[args.command](args, stdin, stdout)
        except SystemExit as exc:  # --help / --version
            return exc.code if isinstance(exc.code, int) else EXIT_OK
        except UsageError as exc:
            stderr.write(parser.format_usage())
            stderr.write(f"error: {exc}\n")
            return EXIT_USAGE
        except (InputError, OSError, UnicodeDecodeError) as exc:
            stderr.write(f"error: {exc}\n")
            return EXIT_INPUT
        except AdvisorError as exc:
            stderr.write(f"error: {exc}\n")
            return EXIT_INPUT
    finally:
        log.removeHandler(handler)


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
