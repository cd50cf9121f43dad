import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from simd_advisor.errors import BadHeader, BadRow, ConfigError, InputError, NoSamples
from simd_advisor.profiles import (
    CATEGORIES,
    CategoryRule,
    Profile,
    ProfileSample,
    breakdown,
    categorize,
    default_category_rules,
    parse_category_rules,
    parse_perf_report,
    parse_profile,
    parse_profile_csv,
)
from strategies import profiles

HEADER = "symbol,module,percent\n"
DEFAULT_RULES = default_category_rules()


def test_csv_header_only():
    assert parse_profile_csv(HEADER).samples == ()


def test_csv_single_row():
    p = parse_profile_csv(HEADER + "dgemm_,libarmpl.so,12.5\n")
    assert p.samples == (ProfileSample("dgemm_", "libarmpl.so", 12.5),)


def test_csv_quoted_symbol_with_comma():
    p = parse_profile_csv(HEADER + '"f(int, int)",app,3\n')
    assert p.samples[0].symbol == "f(int, int)"


@pytest.mark.parametrize("row", ["x,m,101", "x,m,-1", "x,m,abc", "x,m", ",m,1", "x,m,nan"])
def test_csv_bad_rows(row):
    with pytest.raises(BadRow) as info:
        parse_profile_csv(HEADER + "ok,m,1\n" + row + "\n")
    assert info.value.line == 3
    diags: list[str] = []
    p = parse_profile_csv(HEADER + "ok,m,1\n" + row + "\n", strict=False, diagnostics=diags)
    assert len(p.samples) == 1 and len(diags) == 1


def test_csv_bad_header():
    with pytest.raises(BadHeader):
        parse_profile_csv("sym,mod,pct\nx,m,1\n")
    with pytest.raises(BadHeader):
        parse_profile_csv("")


def test_csv_sum_above_100_rejected():
    with pytest.raises(InputError):
        parse_profile_csv(HEADER + "a,m,60\nb,m,41\n")
    # rounding slack of half a percent is tolerated
    assert parse_profile_csv(HEADER + "a,m,60\nb,m,40.4\n").total_percent == pytest.approx(100.4)


def test_perf_comments_only():
    text = "# comment\n\n#\n"
    with pytest.raises(NoSamples):
        parse_perf_report(text)
    assert parse_perf_report(text, strict=False).samples == ()


def test_perf_single_line():
    p = parse_perf_report("  12.34%  dcapp  dcapp  [.] Walker::doSweep\n")
    assert p.samples == (ProfileSample("Walker::doSweep", "dcapp", 12.34),)


def test_perf_three_lines_keep_order():
    text = """\
# Overhead  Command  Shared Object  Symbol
    30.00%  app  libblas.so  [.] dgemm_
     2.50%  app  [kernel.kallsyms]  [k] clear_page
  1.00%   app      app      main
"""
    p = parse_perf_report(text)
    assert [(s.symbol, s.module, s.percent) for s in p.samples] == [
        ("dgemm_", "libblas.so", 30.0),
        ("clear_page", "[kernel.kallsyms]", 2.5),
        ("main", "app", 1.0),
    ]


def test_perf_symbol_with_spaces_and_junk_line():
    diags: list[str] = []
    text = "  5.00%  app  app  [.] Foo<int, double>::bar(int) const\nnot a sample\n"
    p = parse_perf_report(text, diagnostics=diags)
    assert p.samples[0].symbol == "Foo<int, double>::bar(int) const"
    assert len(diags) == 1


def test_parse_profile_dispatch():
    assert parse_profile(HEADER + "a,m,1\n").samples[0].symbol == "a"
    assert parse_profile("  1.00%  c  m  [.] a\n").samples[0].symbol == "a"


def test_sample_invariants():
    with pytest.raises(ValueError):
        ProfileSample("", "m", 1)
    with pytest.raises(ValueError):
        ProfileSample("a", "m", 100.01)
    with pytest.raises(ValueError):
        Profile((ProfileSample("a", "", 80), ProfileSample("b", "", 21)))


# -- rules ---------------------------------------------------------------------


def test_rule_glob_is_anchored():
    rule = CategoryRule("lib*:dgemm*", "scientific_libraries")
    assert rule.matches(ProfileSample("dgemm_kernel", "libblas.so", 1))
    assert not rule.matches(ProfileSample("dgemm_kernel", "mylibblas.so", 1))
    assert not rule.matches(ProfileSample("x_dgemm", "libblas.so", 1))
    # regex metacharacters are literal
    assert CategoryRule("app:f(int)", "application").matches(ProfileSample("f(int)", "app", 1))
    assert not CategoryRule("app:f.", "application").matches(ProfileSample("fx", "app", 1))


def test_rule_file_parsing():
    rules = parse_category_rules("# c\n\n*:hpx::*,runtime\n a*b , other \n")
    assert [(r.pattern, r.category) for r in rules] == [("*:hpx::*", "runtime"), ("a*b", "other")]
    with pytest.raises(ConfigError):
        parse_category_rules("no-comma\n")
    with pytest.raises(ConfigError):
        parse_category_rules("x,unknown_category\n")


@pytest.mark.parametrize(
    "module, symbol, expected",
    [
        ("libarmpl_lp64.so", "dgemm_kernel_sve", "scientific_libraries"),
        ("app", "zgemm_", "scientific_libraries"),
        ("liblapack.so.3", "zgetrf_", "scientific_libraries"),
        ("app", "LAPACKE_dgesv", "scientific_libraries"),
        ("libfftw3.so.3", "fftw_execute", "scientific_libraries"),
        ("libhpx.so.1", "hpx::threads::detail::scheduling_loop", "runtime"),
        ("app", "hpx::lcos::local::spinlock::lock()", "runtime"),
        ("libomp.so", "__kmp_fork_call", "runtime"),
        ("libgomp.so.1", "GOMP_parallel", "runtime"),
        ("[kernel.kallsyms]", "clear_page_erms", "other"),
        ("libc.so.6", "memcpy", "other"),
        ("main_dca", "dca::phys::Walker::sweep()", "application"),
    ],
)
def test_default_rules(module, symbol, expected):
    assert categorize(ProfileSample(symbol, module, 1.0), DEFAULT_RULES) == expected


def test_no_rule_means_other():
    assert categorize(ProfileSample("x", "m", 1.0), []) == "other"


def test_rule_order_sensitivity():
    s = ProfileSample("dgemm_", "libblas.so", 5.0)
    overlapping = [CategoryRule("*:dgemm*", "scientific_libraries"), CategoryRule("libblas*:*", "runtime")]
    assert categorize(s, overlapping) == "scientific_libraries"
    assert categorize(s, overlapping[::-1]) == "runtime"


@settings(max_examples=200)
@given(profiles(), st.booleans())
def test_disjoint_rules_are_order_independent(p, flip):
    disjoint = [CategoryRule("libhpx*:*", "runtime"), CategoryRule("lib*blas*:*", "scientific_libraries")]
    rules = disjoint[::-1] if flip else disjoint
    assert breakdown(p, rules).totals == breakdown(p, disjoint).totals


# -- breakdown -----------------------------------------------------------------


def test_everything_under_threshold():
    p = Profile((ProfileSample("a", "m", 0.5), ProfileSample("b", "m", 1.0)))
    b = breakdown(p, DEFAULT_RULES)
    assert all(v == 0 for v in b.totals.values())
    assert b.below_threshold_percent == 1.5
    assert b.other_activities == 1.5


def test_negative_threshold_rejected():
    with pytest.raises(ValueError):
        breakdown(Profile(()), DEFAULT_RULES, -0.1)


@pytest.mark.parametrize(
    "name, expected",
    [
        ("a64fx_sve_disabled.perf.txt", {"application": 26.0, "scientific_libraries": 55.0, "runtime": 9.0}),
        ("a64fx_sve.perf.txt", {"application": 57.0, "scientific_libraries": 24.0, "runtime": 9.0}),
        ("a64fx_sve.csv", {"application": 57.0, "scientific_libraries": 24.0, "runtime": 9.0}),
    ],
)
def test_fixture_breakdowns(corpus, name, expected):
    p = parse_profile((corpus / "profiles" / name).read_text())
    b = breakdown(p, DEFAULT_RULES)
    for cat, value in expected.items():
        assert b[cat] == pytest.approx(value, abs=0.01)
    assert b.other_activities == pytest.approx(10.0, abs=0.01)
    assert b.total_percent == pytest.approx(100.0, abs=1e-9)


@settings(max_examples=300)
@given(profiles(), st.floats(0, 20, allow_nan=False))
def test_breakdown_matches_oracle(p, threshold):
    b = breakdown(p, DEFAULT_RULES, threshold)

    def category_of(module, symbol):
        return categorize(ProfileSample(symbol, module, 0.0), DEFAULT_RULES)

    totals, below = oracles.breakdown_totals(((s.module, s.symbol, s.percent) for s in p.samples), category_of, threshold)
    for c in CATEGORIES:
        assert b.totals[c] == pytest.approx(float(totals[c]), rel=1e-12, abs=1e-12)
    assert b.below_threshold_percent == pytest.approx(float(below), rel=1e-12, abs=1e-12)


def check_conservation(p, threshold):
    b = breakdown(p, DEFAULT_RULES, threshold)
    total = float(oracles.exact_sum(s.percent for s in p.samples))
    got = math.fsum(b.totals.values()) + b.below_threshold_percent
    assert math.isclose(got, total, rel_tol=1e-9, abs_tol=1e-12)


@settings(max_examples=1000)
@given(profiles(), st.floats(0, 20, allow_nan=False))
def test_conservation(p, threshold):
    check_conservation(p, threshold)


@settings(max_examples=300)
@given(profiles(), st.floats(0, 50, allow_nan=False), st.floats(0, 50, allow_nan=False))
def test_threshold_monotonicity(p, t1, t2):
    lo, hi = sorted((t1, t2))
    a, b = breakdown(p, DEFAULT_RULES, lo), breakdown(p, DEFAULT_RULES, hi)
    assert b.below_threshold_percent >= a.below_threshold_percent
    for c in CATEGORIES:
        assert b.totals[c] <= a.totals[c]
