import io
import json
import subprocess
import sys

import jsonschema
import pytest

from conftest import CORPUS, ROOT
from simd_advisor.cli import run
from simd_advisor.report import load_schema

REMARKS = [str(p) for p in sorted(CORPUS.glob("*.opt.yaml"))]
PROFILE = str(CORPUS / "perf.txt")


def cli(*argv, stdin=""):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), io.StringIO(stdin), out, err)
    return code, out.getvalue(), err.getvalue()


def subprocess_cli(*argv, stdin=""):
    proc = subprocess.run(
        [sys.executable, "-m", "simd_advisor.cli", *argv],
        input=stdin,
        capture_output=True,
        text=True,
        cwd=ROOT,
        timeout=60,
    )
    return proc.returncode, proc.stdout, proc.stderr


# -- usage errors (exit 1) -------------------------------------------------------


def test_no_arguments():
    code, out, err = cli()
    assert code == 1 and "usage:" in err and out == ""


@pytest.mark.parametrize(
    "argv",
    [
        ["frobnicate"],
        ["advise"],
        ["advise", "--remarks", "/nonexistent.opt.yaml"],
        ["advise", "--remarks", *REMARKS, "--threshold", "-1"],
        ["advise", "--remarks", *REMARKS, "--threshold", "abc"],
        ["advise", "--remarks", *REMARKS, "--arch", "avx512"],
        ["advise", "--remarks", *REMARKS, "--top", "0"],
        ["advise", "--remarks", *REMARKS, "--element-bits", "12"],
        ["advise", "--remarks", "-", "--profile", "-"],
        ["advise", "--remarks", str(CORPUS / "counters")],
        ["breakdown"],
        ["breakdown", "--profile", "/nope"],
        ["counters", "--baseline", "x"],
        ["compare", "--baseline", "/nope", "--other", "/nope"],
        ["classify"],
        ["classify", "--message", "x", "--rules", "/nope.yaml"],
    ],
)
def test_usage_errors(argv):
    code, _, err = cli(*argv)
    assert code == 1, err
    assert "usage:" in err


def test_help_and_version():
    code, out, _ = cli("--help")
    assert code == 0 and "advise" in out
    code, out, _ = cli("--version")
    assert code == 0 and out.strip().endswith("0.1.0")


# -- input errors (exit 2) -------------------------------------------------------


def test_malformed_remarks_strict_and_lenient(tmp_path):
    bad = tmp_path / "bad.opt.yaml"
    bad.write_text("--- !Missed\nName: x\n" + (CORPUS / "accumulator.opt.yaml").read_text())
    code, _, err = cli("advise", "--remarks", str(bad))
    assert code == 2 and "document 0" in err
    code, out, err = cli("advise", "--remarks", str(bad), "--lenient")
    assert code == 0 and "warning:" in err and "computeTimeFactors" in out


@pytest.mark.parametrize(
    "argv, stdin",
    [
        (["breakdown", "--profile", "-"], "# nothing here\n"),
        (["breakdown", "--profile", "-"], "symbol,module,percent\nx,m,200\n"),
        (["counters", "--baseline", "-", "--other", str(CORPUS / "counters" / "a64fx_sve.csv")], "label,counter,value\nw,A,-3\n"),
        (["counters", "--baseline", "-", "--other", str(CORPUS / "counters" / "a64fx_sve.csv")], "bad header\n"),
        (["compare", "--baseline", "-", "--other", str(CORPUS / "runs" / "neon.csv")], "label,wall_seconds,gflops\nx,5,\n"),
        (["compare", "--baseline", "-", "--other", str(CORPUS / "runs" / "neon.csv")], "label,wall_seconds,gflops\n"),
        (["advise", "--remarks", "-"], "--- !Missed\nPass: [\n"),
        (["advise", "--remarks", *REMARKS, "--profile", "-"], "no samples at all\n"),
    ],
)
def test_input_errors(argv, stdin):
    code, _, err = cli(*argv, stdin=stdin)
    assert code == 2, err
    assert err.startswith("error:") or "error:" in err


def test_bad_config_is_input_error(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("surprise: 1\n")
    code, _, err = cli("classify", "--message", "x", "--config", str(cfg))
    assert code == 2 and "unknown keys" in err


def test_binary_input_is_input_error(tmp_path):
    p = tmp_path / "bin.opt.yaml"
    p.write_bytes(b"\xff\xfe\x00garbage")
    code, _, _ = cli("advise", "--remarks", str(p))
    assert code == 2


# -- advise ----------------------------------------------------------------------


def test_advise_text():
    code, out, _ = cli("advise", "--remarks", *REMARKS, "--profile", PROFILE)
    assert code == 0
    first = out.index("#1 ")
    assert "ctint_walker.hpp:142" in out[first : out.index("\n", first)]
    assert "hotness: 14.20% (profile)" in out


def test_advise_gate():
    code, out, _ = cli("advise", "--remarks", *REMARKS, "--profile", PROFILE, "--fail-on-findings")
    assert code == 3 and out


def test_gate_passes_when_everything_vectorized(tmp_path):
    text = (CORPUS / "accumulator.opt.yaml").read_text()
    vec = text[text.index("--- !Passed") :]
    p = tmp_path / "v.opt.yaml"
    p.write_text(vec)
    code, out, _ = cli("advise", "--remarks", str(p), "--fail-on-findings")
    assert code == 0 and "already vectorized" in out


def test_gate_counts_findings_before_top():
    code, out, _ = cli("advise", "--remarks", *REMARKS, "--profile", PROFILE, "--top", "1", "--fail-on-findings", "--format", "structured")
    assert code == 3
    assert len(json.loads(out)["entries"]) == 1


def test_advise_structured_schema_valid_and_deterministic():
    args = ("advise", "--remarks", *REMARKS, "--profile", PROFILE, "--format", "structured")
    code, out, _ = cli(*args)
    assert code == 0
    data = json.loads(out)
    jsonschema.validate(data, load_schema())
    assert data["entries"][0]["hotness_percent"] == 14.2
    assert cli(*args)[1] == out


def test_threshold_filters_and_keep_unknown():
    code, out, _ = cli("advise", "--remarks", *REMARKS, "--profile", PROFILE, "--threshold", "5", "--format", "structured")
    hot = [e["hotness_percent"] for e in json.loads(out)["entries"]]
    assert hot == [14.2, 9.85, 6.4]
    # without a profile nothing has hotness; unknown sites are kept unless told otherwise
    _, out, _ = cli("advise", "--remarks", *REMARKS, "--format", "structured")
    assert {e["hotness_source"] for e in json.loads(out)["entries"]} == {"none"}
    _, out, _ = cli("advise", "--remarks", *REMARKS, "--no-keep-unknown", "--format", "structured")
    assert json.loads(out)["entries"] == []


def test_neon_arch_drops_bounds_estimates():
    _, out, _ = cli("advise", "--remarks", *REMARKS, "--profile", PROFILE, "--arch", "neon128", "--format", "structured")
    by_line = {e["location"]["line"]: e["benefit_estimate"] for e in json.loads(out)["entries"]}
    assert by_line[211] is None and by_line[97] == 2.0


def test_directory_and_stdin_inputs():
    code, out, _ = cli("advise", "--remarks", str(CORPUS / "pgo"))
    assert code == 0 and "75.00% (embedded)" in out
    code, out, _ = cli("advise", "--remarks", "-", stdin=(CORPUS / "pgo" / "pgo_walker.opt.yaml").read_text())
    assert code == 0 and "25.00% (embedded)" in out


def test_rules_env_and_config(tmp_path, monkeypatch):
    rules = tmp_path / "rules.yaml"
    rules.write_text("rules:\n  - substring: 'Unknown array bounds'\n    category: LIBCALL\n")
    monkeypatch.setenv("SIMD_ADVISOR_RULES", str(rules))
    assert cli("classify", "--message", "loop not vectorized: Unknown array bounds")[1] == "LIBCALL\n"
    monkeypatch.delenv("SIMD_ADVISOR_RULES")
    assert cli("classify", "--message", "loop not vectorized: Unknown array bounds")[1] == "UNKNOWN_BOUNDS\n"
    code, out, _ = cli("classify", "--message", "library call cannot be vectorized", "--remedies", "--config", str(CORPUS / "config" / "advisor.yaml"))
    assert code == 0 and "-fveclib=ArmPL" in out and "-fsimdmath" not in out


# -- other subcommands -----------------------------------------------------------


def test_classify_example():
    code, out, _ = cli("classify", "--message", "loop not vectorized: Unknown array bounds")
    assert (code, out) == (0, "UNKNOWN_BOUNDS\n")


def test_classify_with_remedies():
    code, out, _ = cli("classify", "--message", "loop not vectorized: cannot prove it is safe to reorder floating-point operations", "--remedies")
    assert code == 0 and "omp simd reduction" in out and "CAUTION:" in out


@pytest.mark.parametrize("name, app", [("a64fx_sve_disabled.perf.txt", "26.00%"), ("a64fx_sve.perf.txt", "57.00%")])
def test_breakdown(name, app):
    code, out, _ = cli("breakdown", "--profile", str(CORPUS / "profiles" / name))
    assert code == 0
    assert f"application              {app}" in out


def test_breakdown_custom_rules():
    code, out, _ = cli("breakdown", "--profile", PROFILE, "--rules", str(CORPUS / "config" / "categories.rules"))
    assert code == 0 and "total" in out


def test_counters():
    code, out, _ = cli(
        "counters",
        "--baseline", str(CORPUS / "counters" / "a64fx_sve_disabled.csv"),
        "--other", str(CORPUS / "counters" / "a64fx_sve.csv"),
    )
    assert code == 0
    assert "VEC_INC          40.00x  higher" in out
    assert "L2_DCM            1.00x  unchanged" in out
    assert "total 93.00%" in out
    # every header line states the orientation
    assert all("ratio = " in ln for ln in out.splitlines() if " vs " in ln)


def test_counters_tolerance_flag():
    code, out, _ = cli(
        "counters", "--tolerance", "0.25",
        "--baseline", str(CORPUS / "counters" / "a64fx_sve_disabled.csv"),
        "--other", str(CORPUS / "counters" / "a64fx_sve.csv"),
    )
    assert code == 0 and "FP_INS            1.20x  unchanged" in out


def test_compare():
    code, out, _ = cli("compare", "--baseline", str(CORPUS / "runs" / "neon.csv"), "--other", str(CORPUS / "runs" / "a64fx_sve.csv"))
    assert code == 0 and "GFlops ratio 2.89x" in out
    code, out, _ = cli("compare", "--baseline", str(CORPUS / "runs" / "a64fx_sve_disabled.csv"), "--other", str(CORPUS / "runs" / "a64fx_sve.csv"))
    assert code == 0 and "time speedup 2.00x" in out


# -- subprocess harness: exit codes as seen by a shell ------------------------------------


@pytest.mark.parametrize(
    "argv, expected",
    [
        ([], 1),
        (["classify", "--message", "loop not vectorized: Unknown array bounds"], 0),
        (["advise", "--remarks", *REMARKS, "--profile", PROFILE], 0),
        (["advise", "--remarks", *REMARKS, "--profile", PROFILE, "--fail-on-findings"], 3),
        (["breakdown", "--profile", str(CORPUS / "runs" / "neon.csv")], 2),
        (["counters", "--baseline", str(CORPUS / "counters" / "a64fx_sve_disabled.csv"), "--other", str(CORPUS / "counters" / "a64fx_sve.csv")], 0),
        (["compare", "--baseline", str(CORPUS / "runs" / "neon.csv"), "--other", str(CORPUS / "runs" / "a64fx_sve.csv")], 0),
        (["breakdown", "--profile", str(CORPUS / "perf.txt")], 0),
    ],
)
def test_exit_codes_in_subprocess(argv, expected):
    code, _, err = subprocess_cli(*argv)
    assert code == expected, err


def test_console_script_entry_point():
    import shutil

    exe = shutil.which("simd-advisor")
    if exe is None:
        pytest.skip("console script not installed")
    proc = subprocess.run([exe, "classify", "--message", "x"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout == "UNKNOWN\n"
