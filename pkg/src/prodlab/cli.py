"""Batch front end: parse TOML configs, run suites, and persist plot-ready results."""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from . import __version__
from .backend import backend_name
from .ensembles import (
    derive_seed,
    discrete_symmetric,
    gaussian,
    rademacher,
    sample_matrix,
    uniform_symmetric,
)
from .errors import ConfigError, ExperimentAbort, PoleError
from .linalg import eigenvalues, identity_selftest
from .linearize import check_linearization, product_matrix
from .mc import (
    EventConfig,
    ExperimentConfig,
    attach_comparison,
    compare_to_theory,
    run_experiment,
)
from .spectra import TestFunction, radial_ks
from .theory import (
    contour_quadrature_covariance,
    linearized_covariance,
    process_kernel,
    product_covariance,
    radial_cdf,
)

IDENTITY_TOL = 1e-10
LINEARIZE_TOL = 1e-6
QUADRATURE_TOL = 1e-10
DENSITY_CAP = 4096


def _g(x: float) -> str:
    return f"{float(x):.17g}"


def _load_config(path: str) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid TOML: {exc}") from exc


def _build_dist(section: dict):
    kind = str(section.get("kind", "gaussian"))
    sigma = float(section.get("sigma", 1.0))
    tau = float(section.get("tau", 1.0))
    try:
        if kind == "discrete":
            values = section.get("values")
            probs = section.get("probs")
            if not values or not probs:
                raise ConfigError("discrete ensemble needs values and probs arrays")
            return discrete_symmetric(
                tuple(float(v) for v in values),
                tuple(float(p) for p in probs),
                tau_witness=tau,
            )
        factories = {
            "gaussian": gaussian,
            "rademacher": rademacher,
            "uniform": uniform_symmetric,
        }
        if kind not in factories:
            raise ConfigError(f"unknown ensemble kind {kind!r}")
        return factories[kind](sigma=sigma, tau_witness=tau)
    except ValueError as exc:
        raise ConfigError(f"invalid ensemble section: {exc}") from exc


def _build_functions(section: dict, default_delta: float) -> tuple[TestFunction, ...]:
    coeffs_list = section.get("coeffs", [])
    deltas = section.get("deltas", [])
    out = []
    try:
        for idx, pairs in enumerate(coeffs_list):
            cs = tuple(complex(float(p[0]), float(p[1])) for p in pairs)
            d = float(deltas[idx]) if idx < len(deltas) else default_delta
            out.append(TestFunction(cs, delta=d))
    except (TypeError, IndexError, ValueError) as exc:
        raise ConfigError(f"invalid functions section: {exc}") from exc
    return tuple(out)


def _build_experiment(cfg: dict, args) -> tuple[ExperimentConfig, dict]:
    geo = cfg.get("geometry", {})
    ens = cfg.get("ensemble", {})
    mc_sec = cfg.get("mc", {})
    ev = cfg.get("event", {})
    if "n" not in geo or "m" not in geo:
        raise ConfigError("config must set geometry.n and geometry.m")
    dist = _build_dist(ens)
    delta = float(geo.get("delta", 0.5))
    functions = _build_functions(cfg.get("functions", {}), delta)
    try:
        xi_points = tuple(
            complex(float(p[0]), float(p[1])) for p in geo.get("xi_points", [])
        )
    except (TypeError, IndexError, ValueError) as exc:
        raise ConfigError(f"invalid geometry.xi_points: {exc}") from exc
    epsilon = ens.get("epsilon")
    seed = args.seed if args.seed is not None else int(mc_sec.get("master_seed", 0))
    try:
        config = ExperimentConfig(
            n=int(geo["n"]),
            m=int(geo["m"]),
            dist=dist,
            trials=int(mc_sec.get("trials", 2)),
            functions=functions,
            delta=delta,
            epsilon=None if epsilon is None else float(epsilon),
            master_seed=seed,
            event=EventConfig(
                enabled=bool(ev.get("enabled", False)),
                c=float(ev.get("c", 0.05)),
                gridpoints=int(ev.get("gridpoints", 64)),
            ),
            target=str(geo.get("target", "product")),
            xi_points=xi_points,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config: {exc}") from exc
    config.validate()
    return config, _tolerances(cfg, args)


def _tolerances(cfg: dict, args) -> dict:
    tol = cfg.get("tolerances", {}) if cfg else {}
    scale = float(args.tolerance_scale)
    if scale <= 0.0:
        raise ConfigError("tolerance scale must be positive")
    return {
        "rel": float(tol.get("rel", 0.25)) * scale,
        "abs": float(tol.get("abs", 0.12)) * scale,
        "ks": float(tol.get("ks", 0.08)) * scale,
        "min_n": int(tol.get("min_n", 32)),
    }


def _resolve_threads(args, cfg: dict) -> int:
    if args.threads is not None:
        return int(args.threads)
    env = os.environ.get("PRODLAB_THREADS")
    if env is not None and env != "":
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigError(f"PRODLAB_THREADS must be an integer, got {env!r}") from exc
    mc_sec = cfg.get("mc", {}) if cfg else {}
    return int(mc_sec.get("threads", 0))


def _write_lines(path: Path, lines: list[str]) -> None:
    path.write_text("\n".join(lines) + "\n", encoding="ascii")


def _write_trials_csv(path: Path, records, labels) -> None:
    header = ["trial_index", "event_held", "min_singular"]
    for label in labels:
        header += [f"re_{label}", f"im_{label}"]
    lines = [",".join(header)]
    for rec in records:
        row = [str(rec.trial_index), "1" if rec.event_held else "0", _g(rec.min_singular)]
        for s in rec.statistics:
            row += [_g(s.real), _g(s.imag)]
        lines.append(",".join(row))
    _write_lines(path, lines)


def _write_histogram_csv(path: Path, records, summary, bins: int = 40) -> None:
    lines = ["label,bin_index,left_edge,right_edge,count"]
    stats = np.array([rec.statistics for rec in records], dtype=complex)
    stats = stats.reshape(len(records), len(summary.labels))
    for j, label in enumerate(summary.labels):
        centered = stats[:, j].real - summary.means[j].real
        counts, edges = np.histogram(centered, bins=bins)
        for b in range(bins):
            lines.append(
                f"{label},{b},{_g(edges[b])},{_g(edges[b + 1])},{int(counts[b])}"
            )
    _write_lines(path, lines)


def _write_summary_json(path: Path, summary) -> None:
    path.write_text(
        json.dumps(summary.to_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n",
        encoding="ascii",
    )


def _write_manifest(
    out_dir: Path, command: str, config_echo, seed, threads, wall, checks, outputs, passed
) -> None:
    for name in outputs:
        target = out_dir / name
        if not target.exists() or target.stat().st_size == 0:
            raise RuntimeError(f"output file {name} missing or empty")
    manifest = {
        "version": __version__,
        "command": command,
        "backend": backend_name(),
        "config": config_echo,
        "master_seed": seed,
        "threads": threads,
        "wall_time_seconds": wall,
        "checks": checks,
        "outputs": sorted(outputs),
        "passed": passed,
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True, allow_nan=False) + "\n",
        encoding="ascii",
    )


def _theory_for(config: ExperimentConfig) -> dict:
    pairs: dict[str, complex] = {}
    try:
        if config.target == "xi_process":
            zs = config.xi_points
            for i in range(len(zs)):
                for j in range(i, len(zs)):
                    pairs[f"cov_conj[{i},{j}]"] = process_kernel(zs[i], zs[j], config.m)
                    pairs[f"cov_plain[{i},{j}]"] = process_kernel(
                        zs[i], zs[j].conjugate(), config.m
                    )
            return pairs
    except PoleError as exc:
        raise ConfigError(f"xi points too close to the unit circle: {exc}") from exc
    if config.target == "linearized":
        covariance = lambda f, g: linearized_covariance(f, g, config.m)
    else:
        covariance = product_covariance
    fns = config.functions
    for j, f in enumerate(fns):
        var_re, var_im = covariance(f, f).variance_parts()
        pairs[f"var_re[{j}]"] = var_re
        pairs[f"var_im[{j}]"] = var_im
    for i in range(len(fns)):
        for j in range(i + 1, len(fns)):
            pair = covariance(fns[i], fns[j])
            pairs[f"cov_conj[{i},{j}]"] = pair.conj
            pairs[f"cov_plain[{i},{j}]"] = pair.plain
    return pairs


def cmd_selftest(args) -> int:
    seed = args.seed if args.seed is not None else 0
    scale = float(args.tolerance_scale)
    checks: list[tuple[str, float, float]] = []
    report = identity_selftest(seed=seed)
    for name, residual in report.residuals().items():
        checks.append((name, residual, IDENTITY_TOL * scale))
    checks.append(("weyl", float(report.weyl_violations), 0.5))
    for idx, (m, n) in enumerate([(1, 12), (2, 10), (3, 8), (4, 6)]):
        dist = rademacher() if idx % 2 == 0 else gaussian()
        factors = [
            sample_matrix(dist, n, derive_seed(seed, 1000 + idx, k)) for k in range(m)
        ]
        chk = check_linearization(factors, tol=LINEARIZE_TOL * scale)
        checks.append((f"linearize[m={m},n={n}]", chk.max_pairing_distance, LINEARIZE_TOL * scale))
    f = TestFunction((0.0, 2.0j, 1.0))
    g = TestFunction((0.0, 0.0, 1.0, 1.0j))
    closed = {
        "product_plain": product_covariance(f, g).plain,
        "product_conj": product_covariance(f, g).conj,
        "linearized_plain": linearized_covariance(f, g, 2).plain,
        "linearized_conj": linearized_covariance(f, g, 2).conj,
    }
    for kernel_id, value in closed.items():
        quad = contour_quadrature_covariance(f, g, kernel_id, m=2)
        checks.append((f"quadrature[{kernel_id}]", abs(quad.value - value), QUADRATURE_TOL * scale))
    width = max(len(name) for name, _, _ in checks)
    print(f"{'check'.ljust(width)}  {'residual':>12}  {'threshold':>12}  status")
    first_fail = None
    for name, residual, threshold in checks:
        ok = residual <= threshold
        if not ok and first_fail is None:
            first_fail = name
        print(f"{name.ljust(width)}  {residual:12.4e}  {threshold:12.4e}  {'ok' if ok else 'FAIL'}")
    if first_fail is None:
        print("selftest: PASS")
        return 0
    print(f"selftest: FAIL (first failing check: {first_fail})")
    return 1


def cmd_clt(args) -> int:
    cfg = _load_config(args.config)
    config, tols = _build_experiment(cfg, args)
    if config.target == "xi_process":
        raise ConfigError("clt command expects a product or linearized target; use xi")
    threads = _resolve_threads(args, cfg)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    result = run_experiment(config, threads=threads)
    table = compare_to_theory(result.summary, _theory_for(config), tols["rel"], tols["abs"])
    summary = attach_comparison(result.summary, table)
    wall = time.perf_counter() - start
    _write_trials_csv(out_dir / "trials.csv", result.records, summary.labels)
    _write_summary_json(out_dir / "summary.json", summary)
    _write_histogram_csv(out_dir / "histogram.csv", result.records, summary)
    checks = {
        "comparison_passed": table.passed,
        "insufficient_samples": table.insufficient,
        "event_rate": summary.event_rate,
        "failures": summary.failures,
    }
    _write_manifest(
        out_dir,
        "clt",
        cfg,
        config.master_seed,
        threads,
        wall,
        checks,
        ["trials.csv", "summary.json", "histogram.csv"],
        table.passed,
    )
    if table.insufficient:
        print("clt: comparison marked insufficient samples")
    print(f"clt: {'PASS' if table.passed else 'FAIL'} ({len(table.rows)} comparisons)")
    return 0 if table.passed else 1


def cmd_density(args) -> int:
    cfg = _load_config(args.config)
    geo = cfg.get("geometry", {})
    if "n" not in geo or "m" not in geo:
        raise ConfigError("config must set geometry.n and geometry.m")
    n = int(geo["n"])
    m = int(geo["m"])
    if n < 2 or n > DENSITY_CAP:
        raise ConfigError(f"density n must lie in [2, {DENSITY_CAP}]")
    if m < 1:
        raise ConfigError("m must be an integer >= 1")
    dist = _build_dist(cfg.get("ensemble", {}))
    tols = _tolerances(cfg, args)
    mc_sec = cfg.get("mc", {})
    seed = args.seed if args.seed is not None else int(mc_sec.get("master_seed", 0))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    unit = dist.unit_variance()
    factors = [sample_matrix(unit, n, derive_seed(seed, 0, k)) for k in range(m)]
    scaled = product_matrix(factors).scaled * dist.sigma
    spec = eigenvalues(scaled)
    ks = radial_ks(spec, m, dist.sigma)
    wall = time.perf_counter() - start
    lines = ["re,im"]
    for z in spec.values:
        lines.append(f"{_g(z.real)},{_g(z.imag)}")
    _write_lines(out_dir / "eigenvalues.csv", lines)
    radii = np.sort(np.abs(spec.values))
    lines = ["radius,empirical_cdf,theoretical_cdf"]
    for i, r in enumerate(radii):
        lines.append(f"{_g(r)},{_g((i + 1) / n)},{_g(radial_cdf(float(r), m, dist.sigma))}")
    _write_lines(out_dir / "radial.csv", lines)
    checked = n >= tols["min_n"]
    passed = (not checked) or ks < tols["ks"]
    checks = {
        "radial_ks": ks,
        "ks_threshold": tols["ks"],
        "threshold_checked": checked,
        "min_n": tols["min_n"],
    }
    _write_manifest(
        out_dir,
        "density",
        cfg,
        seed,
        1,
        wall,
        checks,
        ["eigenvalues.csv", "radial.csv"],
        passed,
    )
    note = "" if checked else " (threshold skipped below min-n)"
    print(f"density: radial KS = {ks:.5f}{note}")
    print(f"density: {'PASS' if passed else 'FAIL'}")
    return 0 if passed else 1


def cmd_xi(args) -> int:
    cfg = _load_config(args.config)
    config, tols = _build_experiment(cfg, args)
    if config.target != "xi_process":
        raise ConfigError("xi command expects geometry.target = 'xi_process'")
    threads = _resolve_threads(args, cfg)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    result = run_experiment(config, threads=threads)
    theory = _theory_for(config)
    table = compare_to_theory(result.summary, theory, tols["rel"], tols["abs"])
    summary = attach_comparison(result.summary, table)
    wall = time.perf_counter() - start
    _write_trials_csv(out_dir / "trials.csv", result.records, summary.labels)
    _write_summary_json(out_dir / "summary.json", summary)
    zs = config.xi_points
    lines = [
        "i,j,re_z_i,im_z_i,re_z_j,im_z_j,"
        "re_empirical_conj,im_empirical_conj,re_kernel_conj,im_kernel_conj,rel_error_conj,"
        "re_empirical_plain,im_empirical_plain,re_kernel_plain,im_kernel_plain,rel_error_plain"
    ]
    for i in range(len(zs)):
        for j in range(i, len(zs)):
            emp_conj = summary.cov_conj[i][j]
            emp_plain = summary.cov_plain[i][j]
            k_conj = complex(theory[f"cov_conj[{i},{j}]"])
            k_plain = complex(theory[f"cov_plain[{i},{j}]"])
            row = [str(i), str(j), _g(zs[i].real), _g(zs[i].imag), _g(zs[j].real), _g(zs[j].imag)]
            row += [_g(emp_conj.real), _g(emp_conj.imag), _g(k_conj.real), _g(k_conj.imag)]
            row.append(_g(abs(emp_conj - k_conj) / abs(k_conj)))
            row += [_g(emp_plain.real), _g(emp_plain.imag), _g(k_plain.real), _g(k_plain.imag)]
            row.append(_g(abs(emp_plain - k_plain) / abs(k_plain)))
            lines.append(",".join(row))
    _write_lines(out_dir / "xi.csv", lines)
    checks = {
        "comparison_passed": table.passed,
        "insufficient_samples": table.insufficient,
        "event_rate": summary.event_rate,
        "failures": summary.failures,
    }
    _write_manifest(
        out_dir,
        "xi",
        cfg,
        config.master_seed,
        threads,
        wall,
        checks,
        ["trials.csv", "summary.json", "xi.csv"],
        table.passed,
    )
    if table.insufficient:
        print("xi: comparison marked insufficient samples")
    print(f"xi: {'PASS' if table.passed else 'FAIL'} ({len(table.rows)} comparisons)")
    return 0 if table.passed else 1


def cmd_linearize_check(args) -> int:
    cfg = _load_config(args.config) if args.config else {}
    mc_sec = cfg.get("mc", {})
    seed = args.seed if args.seed is not None else int(mc_sec.get("master_seed", 0))
    count = int(mc_sec.get("trials", 50))
    tol = LINEARIZE_TOL * float(args.tolerance_scale)
    start = time.perf_counter()
    rows = []
    worst = 0.0
    all_matched = True
    for t in range(count):
        m = 1 + t % 4
        n = 4 + t % 29
        kind = "rademacher" if t % 2 == 0 else "gaussian"
        dist = rademacher() if t % 2 == 0 else gaussian()
        factors = [sample_matrix(dist, n, derive_seed(seed, t, k)) for k in range(m)]
        chk = check_linearization(factors, tol=tol)
        worst = max(worst, chk.max_pairing_distance)
        all_matched = all_matched and chk.matched
        rows.append(f"{t},{m},{n},{kind},{chk.size},{_g(chk.max_pairing_distance)}")
    wall = time.perf_counter() - start
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        _write_lines(
            out_dir / "linearize.csv",
            ["instance,m,n,kind,size,max_pairing_distance"] + rows,
        )
        checks = {"instances": count, "worst_pairing_distance": worst, "tolerance": tol}
        _write_manifest(
            out_dir, "linearize-check", cfg, seed, 1, wall, checks, ["linearize.csv"], all_matched
        )
    print(f"linearize-check: {count} instances, worst pairing distance {worst:.3e}")
    print(f"linearize-check: {'PASS' if all_matched else 'FAIL'}")
    return 0 if all_matched else 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prodlab",
        description="Simulation laboratory for spectra of products of iid random matrices.",
    )
    parser.add_argument("--version", action="version", version=f"prodlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    specs = [
        ("selftest", cmd_selftest, "run identity, linearization, and quadrature checks"),
        ("clt", cmd_clt, "Monte Carlo linear statistics vs limit covariances"),
        ("density", cmd_density, "one spectrum vs the limit radial law"),
        ("xi", cmd_xi, "resolvent process covariances vs the limit kernel"),
        ("linearize-check", cmd_linearize_check, "eigenvalue pairing across random instances"),
    ]
    for name, handler, help_text in specs:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", type=str, default=None, help="TOML config path")
        p.add_argument("--out", type=str, default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override master seed")
        p.add_argument("--threads", type=int, default=None, help="worker threads (0 = auto)")
        p.add_argument(
            "--tolerance-scale",
            type=float,
            default=1.0,
            help="multiply every pass/fail tolerance by this factor",
        )
        p.set_defaults(handler=handler)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command in ("clt", "density", "xi"):
        if not args.config:
            print("config error: --config is required", file=sys.stderr)
            return 2
        if not args.out:
            print("config error: --out is required", file=sys.stderr)
            return 2
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ExperimentAbort as exc:
        print(f"experiment aborted: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
