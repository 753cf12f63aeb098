"""End-to-end tests for the command line front end."""

from __future__ import annotations

import json
import textwrap

import pytest

from prodlab.cli import main
from prodlab.errors import ExperimentAbort
from prodlab.mc import ExperimentSummary

# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def write_config(path, body: str):
    path.write_text(textwrap.dedent(body), encoding="ascii")
    return str(path)


def clt_config(tmp_path, trials=30, seed=42, n=24, mc_extra=""):
    return write_config(
        tmp_path / "clt.toml",
        f"""
        [ensemble]
        kind = "rademacher"

        [geometry]
        n = {n}
        m = 1

        [functions]
        coeffs = [[[0.0, 0.0], [1.0, 0.0]]]

        [mc]
        trials = {trials}
        master_seed = {seed}
        {mc_extra}

        [tolerances]
        rel = 5.0
        abs = 5.0
        """,
    )


def xi_config(tmp_path, trials=25, seed=9):
    return write_config(
        tmp_path / "xi.toml",
        f"""
        [ensemble]
        kind = "gaussian"

        [geometry]
        n = 24
        m = 2
        target = "xi_process"
        xi_points = [[1.3, 0.0]]

        [mc]
        trials = {trials}
        master_seed = {seed}

        [tolerances]
        rel = 5.0
        abs = 5.0
        """,
    )


def density_config(tmp_path, n=64, ks=0.5):
    return write_config(
        tmp_path / "density.toml",
        f"""
        [ensemble]
        kind = "gaussian"

        [geometry]
        n = {n}
        m = 2

        [mc]
        master_seed = 5

        [tolerances]
        ks = {ks}
        """,
    )


def read_manifest(out_dir):
    return json.loads((out_dir / "manifest.json").read_text())


# ---------------------------------------------------------------------------
# selftest command
# ---------------------------------------------------------------------------


def test_selftest_passes_and_is_reproducible(capsys):
    assert main(["selftest"]) == 0
    first = capsys.readouterr().out
    assert "selftest: PASS" in first
    assert main(["selftest"]) == 0
    assert capsys.readouterr().out == first


def test_selftest_fails_under_fault_injection(capsys, monkeypatch):
    monkeypatch.setenv("PRODLAB_FAULT", "woodbury")
    assert main(["selftest"]) == 1
    out = capsys.readouterr().out
    assert "selftest: FAIL" in out
    assert "woodbury" in out


# ---------------------------------------------------------------------------
# clt command
# ---------------------------------------------------------------------------


def test_clt_writes_all_outputs(tmp_path, capsys):
    cfg = clt_config(tmp_path)
    out = tmp_path / "out"
    assert main(["clt", "--config", cfg, "--out", str(out)]) == 0
    assert "clt: PASS" in capsys.readouterr().out
    manifest = read_manifest(out)
    assert manifest["command"] == "clt"
    assert manifest["passed"] is True
    assert manifest["wall_time_seconds"] >= 0.0
    for name in manifest["outputs"]:
        target = out / name
        assert target.exists() and target.stat().st_size > 0
    assert manifest["outputs"] == sorted(["histogram.csv", "summary.json", "trials.csv"])


def test_clt_trials_csv_shape(tmp_path):
    cfg = clt_config(tmp_path)
    out = tmp_path / "out"
    main(["clt", "--config", cfg, "--out", str(out)])
    lines = (out / "trials.csv").read_text().splitlines()
    assert lines[0] == "trial_index,event_held,min_singular,re_f0,im_f0"
    assert len(lines) == 31
    first = lines[1].split(",")
    assert first[0] == "0" and first[1] == "1" and first[2] == "nan"
    float(first[3])
    float(first[4])


def test_clt_histogram_has_forty_bins_per_label(tmp_path):
    cfg = clt_config(tmp_path)
    out = tmp_path / "out"
    main(["clt", "--config", cfg, "--out", str(out)])
    lines = (out / "histogram.csv").read_text().splitlines()
    assert lines[0] == "label,bin_index,left_edge,right_edge,count"
    rows = [line.split(",") for line in lines[1:]]
    assert len(rows) == 40
    assert all(r[0] == "f0" for r in rows)
    assert [int(r[1]) for r in rows] == list(range(40))
    assert sum(int(r[4]) for r in rows) == 30
    edges = [float(r[2]) for r in rows] + [float(rows[-1][3])]
    assert all(a < b for a, b in zip(edges, edges[1:]))


def test_clt_summary_json_round_trips(tmp_path):
    cfg = clt_config(tmp_path)
    out = tmp_path / "out"
    main(["clt", "--config", cfg, "--out", str(out)])
    blob = json.loads((out / "summary.json").read_text())
    summary = ExperimentSummary.from_dict(blob)
    assert summary.labels == ("f0",)
    assert summary.completed == 30
    assert summary.comparison is not None
    assert summary.to_dict() == blob


def test_clt_is_byte_identical_across_reruns_and_threads(tmp_path):
    cfg = clt_config(tmp_path)
    outs = [tmp_path / f"out{i}" for i in range(3)]
    main(["clt", "--config", cfg, "--out", str(outs[0]), "--threads", "1"])
    main(["clt", "--config", cfg, "--out", str(outs[1]), "--threads", "1"])
    main(["clt", "--config", cfg, "--out", str(outs[2]), "--threads", "4"])
    baseline = (outs[0] / "trials.csv").read_bytes()
    assert (outs[1] / "trials.csv").read_bytes() == baseline
    assert (outs[2] / "trials.csv").read_bytes() == baseline
    assert (outs[1] / "summary.json").read_bytes() == (outs[0] / "summary.json").read_bytes()
    assert (outs[2] / "summary.json").read_bytes() == (outs[0] / "summary.json").read_bytes()


def test_clt_seed_flag_changes_results(tmp_path):
    cfg = clt_config(tmp_path)
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    main(["clt", "--config", cfg, "--out", str(out_a)])
    main(["clt", "--config", cfg, "--out", str(out_b), "--seed", "777"])
    assert (out_a / "trials.csv").read_bytes() != (out_b / "trials.csv").read_bytes()
    manifest = read_manifest(out_b)
    assert manifest["master_seed"] == 777


def test_clt_reports_insufficient_samples_but_exits_zero(tmp_path, capsys):
    cfg = clt_config(tmp_path, trials=2)
    out = tmp_path / "out"
    assert main(["clt", "--config", cfg, "--out", str(out)]) == 0
    assert "insufficient" in capsys.readouterr().out
    assert read_manifest(out)["checks"]["insufficient_samples"] is True


def test_clt_thread_precedence_flag_env_config(tmp_path, monkeypatch):
    cfg = clt_config(tmp_path, mc_extra="threads = 5")
    out = tmp_path / "o1"
    main(["clt", "--config", cfg, "--out", str(out)])
    assert read_manifest(out)["threads"] == 5
    monkeypatch.setenv("PRODLAB_THREADS", "3")
    out = tmp_path / "o2"
    main(["clt", "--config", cfg, "--out", str(out)])
    assert read_manifest(out)["threads"] == 3
    out = tmp_path / "o3"
    main(["clt", "--config", cfg, "--out", str(out), "--threads", "2"])
    assert read_manifest(out)["threads"] == 2


# ---------------------------------------------------------------------------
# density command
# ---------------------------------------------------------------------------


def test_density_writes_spectrum_and_radial_tables(tmp_path, capsys):
    cfg = density_config(tmp_path, n=64, ks=0.5)
    out = tmp_path / "out"
    assert main(["density", "--config", cfg, "--out", str(out)]) == 0
    out_text = capsys.readouterr().out
    assert "radial KS" in out_text and "density: PASS" in out_text
    eig_lines = (out / "eigenvalues.csv").read_text().splitlines()
    assert eig_lines[0] == "re,im" and len(eig_lines) == 65
    rad_lines = (out / "radial.csv").read_text().splitlines()
    assert rad_lines[0] == "radius,empirical_cdf,theoretical_cdf"
    assert len(rad_lines) == 65
    radii = [float(line.split(",")[0]) for line in rad_lines[1:]]
    assert radii == sorted(radii)
    manifest = read_manifest(out)
    assert manifest["checks"]["threshold_checked"] is True
    assert manifest["checks"]["radial_ks"] < 0.5


def test_density_skips_threshold_below_min_n(tmp_path, capsys):
    cfg = density_config(tmp_path, n=4, ks=1e-6)
    out = tmp_path / "out"
    assert main(["density", "--config", cfg, "--out", str(out)]) == 0
    assert "threshold skipped" in capsys.readouterr().out
    manifest = read_manifest(out)
    assert manifest["checks"]["threshold_checked"] is False
    assert manifest["passed"] is True


# ---------------------------------------------------------------------------
# xi command
# ---------------------------------------------------------------------------


def test_xi_writes_kernel_comparison(tmp_path, capsys):
    cfg = xi_config(tmp_path)
    out = tmp_path / "out"
    assert main(["xi", "--config", cfg, "--out", str(out)]) == 0
    assert "xi: PASS" in capsys.readouterr().out
    lines = (out / "xi.csv").read_text().splitlines()
    assert len(lines) == 2
    row = lines[1].split(",")
    assert (row[0], row[1]) == ("0", "0")
    assert float(row[2]) == 1.3
    summary = ExperimentSummary.from_dict(json.loads((out / "summary.json").read_text()))
    assert summary.labels == ("xi0",)
    labels = [r.label for r in summary.comparison.rows]
    assert labels == ["cov_conj[0,0]", "cov_plain[0,0]"]
    theory = [r.theoretical for r in summary.comparison.rows]
    for value in theory:
        assert abs(value - 1.9622030862720223) < 1e-12


def test_xi_command_rejects_product_target(tmp_path, capsys):
    cfg = clt_config(tmp_path)
    assert main(["xi", "--config", cfg, "--out", str(tmp_path / "out")]) == 2
    assert "config error" in capsys.readouterr().err


def test_clt_command_rejects_xi_target(tmp_path, capsys):
    cfg = xi_config(tmp_path)
    assert main(["clt", "--config", cfg, "--out", str(tmp_path / "out")]) == 2
    assert "config error" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# linearize-check command
# ---------------------------------------------------------------------------


def test_linearize_check_default_instances(capsys):
    assert main(["linearize-check"]) == 0
    out = capsys.readouterr().out
    assert "50 instances" in out and "PASS" in out


def test_linearize_check_with_config_and_output(tmp_path, capsys):
    cfg = write_config(
        tmp_path / "lin.toml",
        """
        [mc]
        trials = 6
        master_seed = 3
        """,
    )
    out = tmp_path / "out"
    assert main(["linearize-check", "--config", cfg, "--out", str(out)]) == 0
    assert "6 instances" in capsys.readouterr().out
    lines = (out / "linearize.csv").read_text().splitlines()
    assert lines[0] == "instance,m,n,kind,size,max_pairing_distance"
    assert len(lines) == 7
    manifest = read_manifest(out)
    assert manifest["checks"]["instances"] == 6
    assert manifest["passed"] is True


# ---------------------------------------------------------------------------
# error handling and exit codes
# ---------------------------------------------------------------------------


def test_missing_config_or_out_is_a_usage_error(tmp_path, capsys):
    assert main(["clt", "--out", str(tmp_path)]) == 2
    assert "--config is required" in capsys.readouterr().err
    cfg = clt_config(tmp_path)
    assert main(["clt", "--config", cfg]) == 2
    assert "--out is required" in capsys.readouterr().err


def test_unreadable_or_invalid_config_exits_two(tmp_path, capsys):
    missing = str(tmp_path / "nope.toml")
    assert main(["clt", "--config", missing, "--out", str(tmp_path / "o")]) == 2
    assert "not found" in capsys.readouterr().err
    bad = tmp_path / "bad.toml"
    bad.write_text("this is : not toml [")
    assert main(["clt", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert "not valid TOML" in capsys.readouterr().err


def test_bad_truncation_exponent_exits_two(tmp_path, capsys):
    cfg = write_config(
        tmp_path / "eps.toml",
        """
        [ensemble]
        kind = "gaussian"
        epsilon = 0.6

        [geometry]
        n = 16
        m = 1

        [functions]
        coeffs = [[[0.0, 0.0], [1.0, 0.0]]]

        [mc]
        trials = 30
        """,
    )
    assert main(["clt", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "truncation exponent" in capsys.readouterr().err


def test_bad_threads_env_exits_two(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("PRODLAB_THREADS", "abc")
    cfg = clt_config(tmp_path)
    assert main(["clt", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "PRODLAB_THREADS" in capsys.readouterr().err


def test_nonpositive_tolerance_scale_exits_two(tmp_path, capsys):
    cfg = clt_config(tmp_path)
    code = main(
        ["clt", "--config", cfg, "--out", str(tmp_path / "o"), "--tolerance-scale", "-1"]
    )
    assert code == 2
    assert "tolerance scale" in capsys.readouterr().err


def test_experiment_abort_exits_three(tmp_path, capsys, monkeypatch):
    def blow_up(config, threads=0):
        raise ExperimentAbort("too many failed trials")

    monkeypatch.setattr("prodlab.cli.run_experiment", blow_up)
    cfg = clt_config(tmp_path)
    assert main(["clt", "--config", cfg, "--out", str(tmp_path / "o")]) == 3
    assert "experiment aborted" in capsys.readouterr().err


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert capsys.readouterr().out.startswith("prodlab ")
