"""Command-line interface: outputs, formats, exit codes, determinism."""

import csv
import io
import json
import math
import subprocess
import sys

import pytest

from exactinf.cli import main, parse_grid


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_pvalue_sterne_poisson(capsys):
    code, out, _ = run(capsys, "pvalue", "--family", "poisson", "--test", "sterne", "--x", "9", "--theta0", "15.6")
    assert code == 0
    p = float(out.splitlines()[0].split(":")[1])
    assert p == pytest.approx(0.0993, abs=5e-4)
    assert "k1=" in out and "k2=" in out


def test_pvalue_blaker_negbinomial(capsys):
    code, out, _ = run(
        capsys, "pvalue", "--family", "negbinomial", "--k", "19", "--test", "blaker", "--x", "38", "--theta0", "0.625", "--format", "json"
    )
    data = json.loads(out)
    assert code == 0 and data["schema"] == 1
    assert data["pvalue"] == pytest.approx(0.0929, abs=5e-4)
    assert isinstance(data["cut"]["k1"], int)


def test_pvalue_fiducial(capsys):
    code, out, _ = run(capsys, "pvalue", "--family", "binomial", "--n", "20", "--test", "fiducial", "--x", "10", "--theta0", "0.5")
    assert code == 0 and out.startswith("p-value: 1")


def test_pvalue_reports_limits_near_breakpoint(capsys):
    from exactinf import breakpoints, poisson

    t = float(breakpoints("sterne", poisson(), 9).thetas[0])
    code, out, _ = run(capsys, "pvalue", "--family", "poisson", "--test", "sterne", "--x", "9", "--theta0", repr(t), "--format", "json")
    data = json.loads(out)
    assert "left_limit" in data and "right_limit" in data
    assert data["pvalue"] == pytest.approx(min(data["left_limit"], data["right_limit"]), abs=1e-11)


def test_curve_csv_rows(capsys):
    code, out, _ = run(capsys, "curve", "--family", "poisson", "--test", "sterne", "--x", "2", "--theta", "0:10:200")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0
    assert list(rows[0]) == ["theta", "pvalue", "is_jump", "left_limit", "right_limit"]
    jumps = [r for r in rows if r["is_jump"] == "1"]
    assert len(jumps) >= 2 and len(rows) == 200 + len(jumps)
    assert len(jumps) % 2 == 0
    thetas = [float(r["theta"]) for r in rows]
    assert thetas == sorted(thetas) and thetas[0] > 0


def test_curve_fiducial_has_no_jump_rows(capsys):
    _, out, _ = run(capsys, "curve", "--family", "poisson", "--test", "fiducial", "--x", "2", "--theta", "0:10:100")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 100 and all(r["is_jump"] == "0" for r in rows)


def test_curve_json(capsys):
    _, out, _ = run(capsys, "curve", "--family", "binomial", "--n", "10", "--test", "blaker", "--x", "3", "--theta", "0:1:50", "--format", "json")
    data = json.loads(out)
    assert data["schema"] == 1 and len(data["rows"]) == 50 + 2 * len(data["jumps"])


def test_interval_blaker_negbinomial(capsys):
    code, out, _ = run(capsys, "interval", "--family", "negbinomial", "--k", "19", "--test", "blaker", "--x", "38", "--alpha", "0.1", "--format", "json")
    data = json.loads(out)
    assert data["lower"] == pytest.approx(0.35992, abs=1e-4)
    assert data["upper"] == pytest.approx(0.62279, abs=1e-4)


def test_interval_fiducial_closed_form(capsys):
    code, out, _ = run(capsys, "interval", "--family", "binomial", "--n", "20", "--test", "fiducial", "--x", "0", "--alpha", "0.05")
    lo, hi = out.split(")")[0].strip("(").split(",")
    assert float(lo) == 0.0
    assert float(hi) == pytest.approx(1 - 0.025 ** (1 / 20), rel=1e-11)


def test_bounds_flat_column(capsys):
    _, out, _ = run(capsys, "bounds", "--family", "binomial", "--n", "20", "--test", "blaker", "--x", "4", "--alpha-grid", "0.005:0.3:300")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert list(rows[0]) == ["alpha", "lower", "upper", "lower_flat", "upper_flat", "flat"]
    assert any(r["flat"] == "1" for r in rows)
    assert all(r["flat"] == ("1" if r["lower_flat"] == r["upper_flat"] == "1" else "0") for r in rows)


def test_bounds_grid_edges_pulled_inside(capsys):
    _, out, _ = run(capsys, "bounds", "--family", "binomial", "--n", "5", "--test", "fiducial", "--x", "2", "--alpha-grid", "0:1:5")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert 0 < float(rows[0]["alpha"]) < 1e-8 and 1 - 1e-8 < float(rows[-1]["alpha"]) < 1


def test_nestedness_single(capsys):
    code, out, _ = run(capsys, "nestedness", "--family", "binomial", "--n", "20", "--test", "blaker")
    data = json.loads(out)
    assert code == 0 and len(data["records"]) == 21
    assert {"x", "alpha_L", "alpha_U", "alpha_nest"} <= set(data["records"][0])


def test_nestedness_range(capsys):
    code, out, _ = run(capsys, "nestedness", "--family", "binomial", "--test", "blaker", "--n-range", "7:12", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [int(r["n"]) for r in rows] == list(range(7, 13))
    assert all(float(r["alpha_nest"]) < 0.01 for r in rows)


def test_nestedness_single_trial(capsys):
    code, out, _ = run(capsys, "nestedness", "--family", "binomial", "--n", "1", "--test", "blaker")
    assert code == 0 and [r["x"] for r in json.loads(out)["records"]] == [0, 1]


def test_nestedness_poisson_needs_range(capsys):
    code, _, err = run(capsys, "nestedness", "--family", "poisson", "--test", "sterne")
    assert code == 2 and "infinite support" in err
    code, out, _ = run(capsys, "nestedness", "--family", "poisson", "--test", "sterne", "--x-range", "0:3")
    data = json.loads(out)
    assert code == 0 and data["alpha_U"] is None


def test_coverage_csv(capsys):
    code, out, _ = run(capsys, "coverage", "--family", "binomial", "--n", "10", "--test", "blaker", "--alpha", "0.05,0.1", "--theta", "0:1:101")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 101
    assert min(float(r["coverage_0.05"]) for r in rows) >= 0.95
    assert min(float(r["coverage_0.1"]) for r in rows) >= 0.9


def test_verify_minimality(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "minimality", "--family", "binomial", "--n", "20", "--alpha", "0.05")
    assert code == 0 and out.strip().endswith("PASS")


def test_verify_enumeration(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "enumeration", "--family", "binomial", "--n", "8")
    assert code == 0 and out.strip().endswith("PASS")


def test_verify_failure_exit_code(capsys):
    # an inward move smaller than the probe grid can resolve cannot be certified
    code, out, _ = run(capsys, "verify", "--suite", "minimality", "--family", "binomial", "--n", "20", "--delta", "1e-9")
    assert code == 1 and out.strip().endswith("FAIL")


@pytest.mark.parametrize(
    "argv,needle",
    [
        (["pvalue", "--family", "binomial", "--n", "5", "--x", "9", "--theta0", "0.5"], "outside the support"),
        (["pvalue", "--family", "binomial", "--n", "5", "--x", "2", "--theta0", "1.5"], "theta"),
        (["pvalue", "--family", "binomial", "--x", "2", "--theta0", "0.5"], "--n"),
        (["pvalue", "--family", "negbinomial", "--x", "2", "--theta0", "0.5"], "--k"),
        (["pvalue", "--family", "binomial", "--n", "5", "--test", "wald", "--x", "2", "--theta0", "0.5"], "wald"),
        (["curve", "--family", "poisson", "--x", "2", "--theta", "0:10"], "lo:hi:count"),
        (["interval", "--family", "binomial", "--n", "5", "--x", "2", "--alpha", "1.5"], "alpha"),
    ],
)
def test_domain_errors_exit_two(capsys, argv, needle):
    code, out, err = run(capsys, *argv)
    assert code == 2 and needle in err and out == ""


def test_usage_error_exit_two():
    with pytest.raises(SystemExit) as exc:
        main(["pvalue", "--x", "2"])
    assert exc.value.code == 2


def test_output_file_and_determinism(tmp_path):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in paths:
        assert main(["curve", "--family", "poisson", "--test", "blaker", "--x", "4", "--theta", "0:12:300", "--output", str(p)]) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_twelve_significant_digits(capsys):
    _, out, _ = run(capsys, "interval", "--family", "poisson", "--test", "fiducial", "--x", "3", "--alpha", "0.05")
    lo = out.split(",")[0].strip("(")
    assert len(lo.replace(".", "").lstrip("0")) <= 12


def test_threads_do_not_change_output(tmp_path, monkeypatch):
    argv = ["nestedness", "--family", "binomial", "--test", "blaker", "--n-range", "3:6"]
    outs = []
    for t in ("1", "3"):
        monkeypatch.setenv("EXACTINF_THREADS", t)
        p = tmp_path / f"{t}.json"
        assert main([*argv, "--output", str(p)]) == 0
        outs.append(p.read_bytes())
    assert outs[0] == outs[1]


def test_parse_grid():
    g = parse_grid("0:1:3", (0.0, 1.0))
    assert g[0] == pytest.approx(1e-9) and g[-1] == pytest.approx(1 - 1e-9) and len(g) == 3
    assert math.isclose(parse_grid("2:4:3")[1], 3.0)


def test_module_entry_point():
    res = subprocess.run(
        [sys.executable, "-m", "exactinf", "interval", "--family", "binomial", "--n", "20", "--test", "fiducial", "--x", "0", "--alpha", "0.05"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert res.returncode == 0 and res.stdout.startswith("(0, ")
