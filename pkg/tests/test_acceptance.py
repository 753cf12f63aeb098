"""Acceptance gate: ten end-to-end criteria, one printed PASS/FAIL line each."""

from __future__ import annotations

import json
import math
import textwrap
import time
from pathlib import Path

import numpy as np

from prodlab.cli import main
from prodlab.ensembles import (
    TruncationParams,
    gaussian,
    sample_matrix,
    truncate_hat,
    truncation_report,
)
from prodlab.linalg import identity_selftest
from prodlab.linearize import lift_test_function
from prodlab.spectra import TestFunction
from prodlab.theory import (
    contour_quadrature_covariance,
    linearized_covariance,
    product_covariance,
)

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def announce(num: int, ok: bool, detail: str) -> None:
    status = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE {num:2d}: {status} ({detail})")
    assert ok, f"criterion {num} failed: {detail}"


def load_summary(out_dir: Path) -> dict:
    return json.loads((out_dir / "summary.json").read_text())


def load_manifest(out_dir: Path) -> dict:
    return json.loads((out_dir / "manifest.json").read_text())


def run_config(name: str, command: str, out_dir: Path, *extra) -> int:
    args = [command, "--config", str(CONFIG_DIR / name), "--out", str(out_dir)]
    return main(args + list(extra))


# ---------------------------------------------------------------------------
# criterion 1: eigenvalue pairing of the block-cyclic linearization
# ---------------------------------------------------------------------------


def test_criterion_01_linearization_pairing(tmp_path):
    start = time.perf_counter()
    code = main(["linearize-check", "--out", str(tmp_path)])
    elapsed = time.perf_counter() - start
    manifest = load_manifest(tmp_path)
    worst = float(manifest["checks"]["worst_pairing_distance"])
    instances = int(manifest["checks"]["instances"])
    ok = code == 0 and instances == 50 and worst < 1e-6 and elapsed < 30.0
    announce(
        1,
        ok,
        f"{instances} instances, worst pairing distance {worst:.2e}, {elapsed:.1f}s",
    )


# ---------------------------------------------------------------------------
# criterion 2: matrix identity self-test and Weyl inequality
# ---------------------------------------------------------------------------


def test_criterion_02_identity_selftest():
    start = time.perf_counter()
    report = identity_selftest(seed=0)
    elapsed = time.perf_counter() - start
    ok = (
        report.passed
        and report.max_residual < 1e-10
        and report.weyl_pairs == 100
        and report.weyl_violations == 0
        and elapsed < 10.0
    )
    announce(
        2,
        ok,
        f"max identity residual {report.max_residual:.2e}, "
        f"weyl violations {report.weyl_violations}/{report.weyl_pairs}, {elapsed:.1f}s",
    )


# ---------------------------------------------------------------------------
# criterion 3: covariance closed forms vs quadrature, and the lift identity
# ---------------------------------------------------------------------------


def test_criterion_03_closed_forms_vs_quadrature():
    start = time.perf_counter()
    worst_quad = 0.0
    for a in range(0, 9):
        for b in range(0, 9):
            f = TestFunction(tuple([0.0] * a + [1.0]))
            g = TestFunction(tuple([0.0] * b + [1.0]))
            prod = product_covariance(f, g)
            for kid, val in (("product_plain", prod.plain), ("product_conj", prod.conj)):
                q = contour_quadrature_covariance(f, g, kid, m=1)
                worst_quad = max(worst_quad, abs(q.value - val))
            for m in (1, 2, 3, 4):
                lin = linearized_covariance(f, g, m)
                for kid, val in (
                    ("linearized_plain", lin.plain),
                    ("linearized_conj", lin.conj),
                ):
                    q = contour_quadrature_covariance(f, g, kid, m=m)
                    worst_quad = max(worst_quad, abs(q.value - val))
    rng = np.random.Generator(np.random.Philox(key=33))
    worst_lift = 0.0
    for i in range(20):
        deg_f = int(rng.integers(1, 7))
        deg_g = int(rng.integers(1, 7))
        f = TestFunction(tuple(rng.normal(size=deg_f + 1) + 1j * rng.normal(size=deg_f + 1)))
        g = TestFunction(tuple(rng.normal(size=deg_g + 1) + 1j * rng.normal(size=deg_g + 1)))
        m = 1 + i % 4
        direct = product_covariance(f, g)
        lifted = linearized_covariance(
            lift_test_function(f, m), lift_test_function(g, m), m
        )
        worst_lift = max(
            worst_lift, abs(direct.plain - lifted.plain), abs(direct.conj - lifted.conj)
        )
    elapsed = time.perf_counter() - start
    ok = worst_quad < 1e-10 and worst_lift < 1e-12 and elapsed < 5.0
    announce(
        3,
        ok,
        f"quadrature gap {worst_quad:.2e}, lift gap {worst_lift:.2e}, {elapsed:.1f}s",
    )


# ---------------------------------------------------------------------------
# criterion 4: monomial variances match the power and forget the factor count
# ---------------------------------------------------------------------------


def test_criterion_04_monomial_variance_m_independence(tmp_path):
    start = time.perf_counter()
    parts = []
    ok = True
    for name, tol in (("clt_rademacher_m1.toml", 0.15), ("clt_rademacher_m3.toml", 0.20)):
        out = tmp_path / name.replace(".toml", "")
        code = run_config(name, "clt", out)
        summary = load_summary(out)
        worst_rel = 0.0
        for j, a in enumerate((1.0, 2.0, 3.0)):
            worst_rel = max(worst_rel, abs(summary["var_real"][j] - a) / a)
        cross_conj = abs(complex(*summary["cov_conj"][0][1]))
        cross_plain = abs(complex(*summary["cov_plain"][0][1]))
        cross = max(cross_conj, cross_plain)
        ok = ok and code == 0 and worst_rel <= tol and cross < 0.12
        parts.append(f"m={summary['m']}: var rel {worst_rel:.3f} (tol {tol}), |cov(z,z^2)| {cross:.3f}")
    elapsed = time.perf_counter() - start
    announce(4, ok, "; ".join(parts) + f", {elapsed:.0f}s")


# ---------------------------------------------------------------------------
# criterion 5: fixed test functions match the limit variances and look Gaussian
# ---------------------------------------------------------------------------


def test_criterion_05_variance_and_normality(tmp_path):
    start = time.perf_counter()
    parts = []
    ok = True
    runs = (
        ("clt_fig2.toml", 2.0, 4.0, True),
        ("clt_fig2_gaussian.toml", 2.0, 3.0, False),
    )
    for name, target_re, target_im, check_normality in runs:
        out = tmp_path / name.replace(".toml", "")
        code = run_config(name, "clt", out)
        summary = load_summary(out)
        rel_re = abs(summary["var_real"][0] - target_re) / target_re
        rel_im = abs(summary["var_imag"][0] - target_im) / target_im
        ok = ok and code == 0 and rel_re <= 0.25 and rel_im <= 0.25
        detail = f"{name}: Var(Re) rel {rel_re:.3f}, Var(Im) rel {rel_im:.3f}"
        if check_normality:
            norm = summary["normality_real"][0]
            skew = abs(norm["skewness"])
            kurt = abs(norm["excess_kurtosis"])
            ks = norm["ks_fitted"]
            ok = ok and skew < 0.2 and kurt < 0.4 and ks < 0.045
            detail += f", |skew| {skew:.3f}, |exkurt| {kurt:.3f}, KS {ks:.4f}"
        parts.append(detail)
    elapsed = time.perf_counter() - start
    announce(5, ok, "; ".join(parts) + f", {elapsed:.0f}s")


# ---------------------------------------------------------------------------
# criterion 6: radial law of the eigenvalue cloud
# ---------------------------------------------------------------------------


def test_criterion_06_radial_density(tmp_path):
    start = time.perf_counter()
    parts = []
    ok = True
    for name in ("density_m2.toml", "density_m1.toml"):
        out = tmp_path / name.replace(".toml", "")
        code = run_config(name, "density", out)
        manifest = load_manifest(out)
        ks = float(manifest["checks"]["radial_ks"])
        ok = ok and code == 0 and manifest["checks"]["threshold_checked"] and ks < 0.08
        parts.append(f"{name}: KS {ks:.4f}")
    elapsed = time.perf_counter() - start
    ok = ok and elapsed < 60.0
    announce(6, ok, "; ".join(parts) + f", {elapsed:.0f}s")


# ---------------------------------------------------------------------------
# criterion 7: resolvent process covariance and conjugation symmetry
# ---------------------------------------------------------------------------


def test_criterion_07_resolvent_process_kernel(tmp_path):
    start = time.perf_counter()
    out = tmp_path / "xi"
    code = run_config("xi_m2.toml", "xi", out)
    summary = load_summary(out)
    empirical = complex(*summary["cov_conj"][0][0])
    rel = abs(empirical - 1.9622030862720223) / 1.9622030862720223
    rows = (out / "trials.csv").read_text().splitlines()[1:]
    worst_sym = 0.0
    for line in rows:
        cols = [float(v) for v in line.split(",")]
        xi1 = complex(cols[5], cols[6])
        xi2 = complex(cols[7], cols[8])
        worst_sym = max(worst_sym, abs(xi2 - xi1.conjugate()), abs(cols[4]))
    elapsed = time.perf_counter() - start
    ok = code == 0 and rel <= 0.20 and worst_sym < 1e-10 and len(rows) == 3000
    announce(
        7,
        ok,
        f"E[XiXibar] rel {rel:.3f} at z=1.3, conjugation gap {worst_sym:.2e} "
        f"over {len(rows)} trials, {elapsed:.0f}s",
    )


# ---------------------------------------------------------------------------
# criterion 8: the least-singular-value event holds nearly always
# ---------------------------------------------------------------------------


def test_criterion_08_event_frequency(tmp_path):
    start = time.perf_counter()
    parts = []
    ok = True
    for name in ("event_m1.toml", "event_m2.toml"):
        out = tmp_path / name.replace(".toml", "")
        code = run_config(name, "clt", out)
        summary = load_summary(out)
        rate = float(summary["event_rate"])
        logged = summary["min_singular_overall"]
        lines = (out / "trials.csv").read_text().splitlines()
        smin_values = [float(line.split(",")[2]) for line in lines[1:]]
        ok = (
            ok
            and code == 0
            and rate >= 0.99
            and logged is not None
            and float(logged) > 0.0
            and all(math.isfinite(v) for v in smin_values)
        )
        parts.append(f"{name}: event rate {rate:.3f}, min singular {float(logged):.4f}")
    elapsed = time.perf_counter() - start
    announce(8, ok, "; ".join(parts) + f", {elapsed:.0f}s")


# ---------------------------------------------------------------------------
# criterion 9: truncation keeps the law effectively unchanged at large n
# ---------------------------------------------------------------------------


def test_criterion_09_truncation_budget():
    start = time.perf_counter()
    dist = gaussian()
    params = TruncationParams(0.1)
    n = 10_000
    report = truncation_report(dist, n, params)
    x = sample_matrix(dist, n, 12345)
    x_hat = truncate_hat(x, dist, params)
    max_entry = float(np.max(np.abs(x_hat)))
    bound = 4.0 * n ** 0.4
    elapsed = time.perf_counter() - start
    ok = (
        report.var_gap < 1e-4
        and report.mu_t == 0.0
        and max_entry <= bound
        and report.fourth_ratio <= 256.0
        and elapsed < 10.0
    )
    announce(
        9,
        ok,
        f"var gap {report.var_gap:.2e}, max entry {max_entry:.2f} <= {bound:.1f}, "
        f"fourth ratio {report.fourth_ratio:.3f}, {elapsed:.1f}s",
    )


# ---------------------------------------------------------------------------
# criterion 10: byte-identical outputs across thread counts
# ---------------------------------------------------------------------------

REDUCED_CLT = """
[ensemble]
kind = "rademacher"

[geometry]
n = 48
m = {m}

[functions]
coeffs = [[[0.0, 0.0], [1.0, 0.0]], [[0.0, 0.0], [0.0, 2.0], [1.0, 0.0]]]

[mc]
trials = 40
master_seed = {seed}
{event}
"""

REDUCED_EVENT_LIN = """
[ensemble]
kind = "gaussian"

[geometry]
n = 32
m = 2
target = "linearized"

[functions]
coeffs = [[[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]]

[mc]
trials = 40
master_seed = 606

[event]
enabled = true
c = 0.05
gridpoints = 16
"""

REDUCED_XI = """
[ensemble]
kind = "gaussian"

[geometry]
n = 32
m = 2
target = "xi_process"
xi_points = [[1.3, 0.0]]

[mc]
trials = 40
master_seed = 404
"""

REDUCED_DENSITY = """
[ensemble]
kind = "gaussian"

[geometry]
n = 96
m = 2

[mc]
master_seed = 505
"""


def test_criterion_10_thread_count_determinism(tmp_path):
    start = time.perf_counter()
    configs = {
        "reduced_clt_m1.toml": REDUCED_CLT.format(m=1, seed=101, event=""),
        "reduced_clt_m3.toml": REDUCED_CLT.format(m=3, seed=202, event=""),
        "reduced_event.toml": REDUCED_CLT.format(m=1, seed=303, event="")
        + "\n[event]\nenabled = true\nc = 0.05\ngridpoints = 16\n",
        "reduced_event_lin.toml": REDUCED_EVENT_LIN,
        "reduced_xi.toml": REDUCED_XI,
    }
    commands = {
        "reduced_clt_m1.toml": "clt",
        "reduced_clt_m3.toml": "clt",
        "reduced_event.toml": "clt",
        "reduced_event_lin.toml": "clt",
        "reduced_xi.toml": "xi",
    }
    ok = True
    compared = 0
    for name, body in configs.items():
        cfg = tmp_path / name
        cfg.write_text(textwrap.dedent(body), encoding="ascii")
        baselines = {}
        for threads in (1, 2, 8):
            out = tmp_path / f"{name}-t{threads}"
            code = main(
                [
                    commands[name],
                    "--config",
                    str(cfg),
                    "--out",
                    str(out),
                    "--threads",
                    str(threads),
                    "--tolerance-scale",
                    "1000",
                ]
            )
            ok = ok and code == 0
            for artifact in ("trials.csv", "summary.json"):
                blob = (out / artifact).read_bytes()
                key = (name, artifact)
                if key not in baselines:
                    baselines[key] = blob
                else:
                    compared += 1
                    ok = ok and blob == baselines[key]
    density_cfg = tmp_path / "reduced_density.toml"
    density_cfg.write_text(textwrap.dedent(REDUCED_DENSITY), encoding="ascii")
    blobs = []
    for run in range(2):
        out = tmp_path / f"density-run{run}"
        code = main(
            [
                "density",
                "--config",
                str(density_cfg),
                "--out",
                str(out),
                "--tolerance-scale",
                "1000",
            ]
        )
        ok = ok and code == 0
        blobs.append(
            (out / "eigenvalues.csv").read_bytes() + (out / "radial.csv").read_bytes()
        )
    compared += 1
    ok = ok and blobs[0] == blobs[1]
    elapsed = time.perf_counter() - start
    announce(
        10,
        ok,
        f"{compared} byte-level comparisons across thread counts 1/2/8, {elapsed:.0f}s",
    )
