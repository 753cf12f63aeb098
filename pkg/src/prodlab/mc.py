"""Monte Carlo runner: samples trials, centers statistics, and compares moments to theory."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .ensembles import (
    AtomDistribution,
    TruncationParams,
    derive_seed,
    sample_matrix,
    truncate_hat,
)
from .errors import (
    ConfigError,
    DegenerateSampleError,
    ExperimentAbort,
    NonConvergenceError,
    PoleError,
    TruncationError,
)
from .linalg import eigenvalues, resolvent_trace
from .linearize import linearization, product_matrix
from .spectra import TestFunction, least_singular_event, linear_statistic

SOLVER_CAP = 4096
TARGETS = ("product", "linearized", "xi_process")
MIN_SAMPLES = 20


@dataclass(frozen=True)
class EventConfig:
    """Least-singular-value gate evaluated on the circle |z| = 1 + delta/2."""

    enabled: bool = False
    c: float = 0.05
    gridpoints: int = 64


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one experiment; a config plus a seed determines every trial."""

    n: int
    m: int
    dist: AtomDistribution
    trials: int
    functions: tuple[TestFunction, ...] = ()
    delta: float = 0.5
    epsilon: float | None = None
    master_seed: int = 0
    event: EventConfig = field(default_factory=EventConfig)
    target: str = "product"
    xi_points: tuple[complex, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "functions", tuple(self.functions))
        object.__setattr__(self, "xi_points", tuple(complex(z) for z in self.xi_points))

    def validate(self) -> None:
        if not isinstance(self.n, int) or self.n < 2:
            raise ConfigError("n must be an integer >= 2")
        if not isinstance(self.m, int) or self.m < 1:
            raise ConfigError("m must be an integer >= 1")
        if self.n * self.m > SOLVER_CAP:
            raise ConfigError(f"n*m = {self.n * self.m} exceeds the solver cap {SOLVER_CAP}")
        if not isinstance(self.trials, int) or self.trials < 2:
            raise ConfigError("trials must be an integer >= 2")
        if not (isinstance(self.delta, (int, float)) and self.delta > 0.0):
            raise ConfigError("delta must be positive")
        if self.target not in TARGETS:
            raise ConfigError(f"target must be one of {TARGETS}, got {self.target!r}")
        if self.target == "xi_process":
            if not self.xi_points:
                raise ConfigError("xi_process target needs at least one evaluation point")
            for z in self.xi_points:
                if abs(z) <= 1.0 + 1e-9:
                    raise ConfigError(
                        f"xi evaluation point {z} must lie strictly outside the unit disk"
                    )
        else:
            if not self.functions:
                raise ConfigError("at least one test function is required")
            for j, f in enumerate(self.functions):
                if f.delta < self.delta - 1e-12:
                    raise ConfigError(
                        f"function {j} has analyticity margin {f.delta} < delta {self.delta}"
                    )
        if self.epsilon is not None:
            try:
                params = TruncationParams(float(self.epsilon))
                params.validate_against(self.dist)
            except (ValueError, TruncationError) as exc:
                raise ConfigError(f"invalid truncation exponent: {exc}") from exc
        if not (self.event.c > 0.0):
            raise ConfigError("event threshold c must be positive")
        if self.event.gridpoints < 8:
            raise ConfigError("event gridpoints must be >= 8")
        if not isinstance(self.master_seed, int) or not 0 <= self.master_seed < 2**64:
            raise ConfigError("master_seed must be an integer in [0, 2^64)")

    def labels(self) -> tuple[str, ...]:
        if self.target == "xi_process":
            return tuple(f"xi{j}" for j in range(len(self.xi_points)))
        return tuple(f"f{j}" for j in range(len(self.functions)))


@dataclass(frozen=True)
class TrialRecord:
    """One trial's statistics; reproducible from (config, trial_index) alone."""

    trial_index: int
    statistics: tuple[complex, ...]
    event_held: bool
    min_singular: float


@dataclass(frozen=True)
class NormalityReport:
    """Moment and distribution diagnostics for one real sample set."""

    skewness: float
    excess_kurtosis: float
    ks_fitted: float
    jarque_bera: float
    n_samples: int

    def to_dict(self) -> dict:
        return {
            "skewness": self.skewness,
            "excess_kurtosis": self.excess_kurtosis,
            "ks_fitted": self.ks_fitted,
            "jarque_bera": self.jarque_bera,
            "n_samples": self.n_samples,
        }

    @staticmethod
    def from_dict(d: dict) -> "NormalityReport":
        return NormalityReport(
            skewness=float(d["skewness"]),
            excess_kurtosis=float(d["excess_kurtosis"]),
            ks_fitted=float(d["ks_fitted"]),
            jarque_bera=float(d["jarque_bera"]),
            n_samples=int(d["n_samples"]),
        )


def normality_report(samples) -> NormalityReport:
    """Moment skewness/kurtosis, KS distance against a fitted normal, and Jarque-Bera."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples, got {x.size}")
    mu = float(x.mean())
    c = x - mu
    m2 = float(np.mean(c * c))
    if not (m2 > 0.0) or not math.isfinite(m2):
        raise DegenerateSampleError("sample variance is zero or non-finite")
    m3 = float(np.mean(c**3))
    m4 = float(np.mean(c**4))
    skew = m3 / m2**1.5
    exkurt = m4 / (m2 * m2) - 3.0
    n = int(x.size)
    jb = n / 6.0 * (skew * skew + 0.25 * exkurt * exkurt)
    z = np.sort(c) / math.sqrt(m2)
    cdf = np.empty(n)
    inv_sqrt2 = 1.0 / math.sqrt(2.0)
    for i in range(n):
        cdf[i] = 0.5 * (1.0 + math.erf(z[i] * inv_sqrt2))
    steps = np.arange(1, n + 1, dtype=float) / n
    d_plus = float(np.max(steps - cdf))
    d_minus = float(np.max(cdf - (steps - 1.0 / n)))
    return NormalityReport(
        skewness=skew,
        excess_kurtosis=exkurt,
        ks_fitted=max(d_plus, d_minus),
        jarque_bera=jb,
        n_samples=n,
    )


def _c2l(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def _l2c(pair) -> complex:
    return complex(float(pair[0]), float(pair[1]))


@dataclass(frozen=True)
class ComparisonRow:
    """One empirical-vs-theory entry with its Monte Carlo standard error."""

    label: str
    empirical: complex
    theoretical: complex
    rel_error: float | None
    std_error: float
    passed: bool
    mode: str

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "empirical": _c2l(self.empirical),
            "theoretical": _c2l(self.theoretical),
            "rel_error": self.rel_error,
            "std_error": self.std_error,
            "passed": self.passed,
            "mode": self.mode,
        }

    @staticmethod
    def from_dict(d: dict) -> "ComparisonRow":
        rel = d["rel_error"]
        return ComparisonRow(
            label=str(d["label"]),
            empirical=_l2c(d["empirical"]),
            theoretical=_l2c(d["theoretical"]),
            rel_error=None if rel is None else float(rel),
            std_error=float(d["std_error"]),
            passed=bool(d["passed"]),
            mode=str(d["mode"]),
        )


@dataclass(frozen=True)
class ComparisonTable:
    """All comparison rows for one experiment plus the tolerances they were judged at."""

    rows: tuple[ComparisonRow, ...]
    rel_tolerance: float
    abs_tolerance: float

    @property
    def passed(self) -> bool:
        return all(row.passed for row in self.rows)

    @property
    def insufficient(self) -> bool:
        return any(row.mode == "insufficient samples" for row in self.rows)

    def to_dict(self) -> dict:
        return {
            "rows": [row.to_dict() for row in self.rows],
            "rel_tolerance": self.rel_tolerance,
            "abs_tolerance": self.abs_tolerance,
            "passed": self.passed,
        }

    @staticmethod
    def from_dict(d: dict) -> "ComparisonTable":
        return ComparisonTable(
            rows=tuple(ComparisonRow.from_dict(r) for r in d["rows"]),
            rel_tolerance=float(d["rel_tolerance"]),
            abs_tolerance=float(d["abs_tolerance"]),
        )


@dataclass(frozen=True)
class ExperimentSummary:
    """Aggregated moments of the centered statistics with Monte Carlo standard errors."""

    n: int
    m: int
    trials: int
    completed: int
    failures: int
    target: str
    labels: tuple[str, ...]
    event_rate: float
    min_singular_overall: float | None
    means: tuple[complex, ...]
    var_real: tuple[float, ...]
    var_imag: tuple[float, ...]
    se_var_real: tuple[float, ...]
    se_var_imag: tuple[float, ...]
    cov_plain: tuple[tuple[complex, ...], ...]
    cov_conj: tuple[tuple[complex, ...], ...]
    se_plain: tuple[tuple[float, ...], ...]
    se_conj: tuple[tuple[float, ...], ...]
    normality_real: tuple[NormalityReport | None, ...]
    normality_imag: tuple[NormalityReport | None, ...]
    comparison: ComparisonTable | None = None

    def cov_conj_matrix(self) -> np.ndarray:
        return np.array(self.cov_conj, dtype=complex)

    def cov_plain_matrix(self) -> np.ndarray:
        return np.array(self.cov_plain, dtype=complex)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "trials": self.trials,
            "completed": self.completed,
            "failures": self.failures,
            "target": self.target,
            "labels": list(self.labels),
            "event_rate": self.event_rate,
            "min_singular_overall": self.min_singular_overall,
            "means": [_c2l(z) for z in self.means],
            "var_real": list(self.var_real),
            "var_imag": list(self.var_imag),
            "se_var_real": list(self.se_var_real),
            "se_var_imag": list(self.se_var_imag),
            "cov_plain": [[_c2l(z) for z in row] for row in self.cov_plain],
            "cov_conj": [[_c2l(z) for z in row] for row in self.cov_conj],
            "se_plain": [list(row) for row in self.se_plain],
            "se_conj": [list(row) for row in self.se_conj],
            "normality_real": [None if r is None else r.to_dict() for r in self.normality_real],
            "normality_imag": [None if r is None else r.to_dict() for r in self.normality_imag],
            "comparison": None if self.comparison is None else self.comparison.to_dict(),
        }

    @staticmethod
    def from_dict(d: dict) -> "ExperimentSummary":
        comp = d.get("comparison")
        return ExperimentSummary(
            n=int(d["n"]),
            m=int(d["m"]),
            trials=int(d["trials"]),
            completed=int(d["completed"]),
            failures=int(d["failures"]),
            target=str(d["target"]),
            labels=tuple(str(s) for s in d["labels"]),
            event_rate=float(d["event_rate"]),
            min_singular_overall=(
                None if d["min_singular_overall"] is None else float(d["min_singular_overall"])
            ),
            means=tuple(_l2c(p) for p in d["means"]),
            var_real=tuple(float(v) for v in d["var_real"]),
            var_imag=tuple(float(v) for v in d["var_imag"]),
            se_var_real=tuple(float(v) for v in d["se_var_real"]),
            se_var_imag=tuple(float(v) for v in d["se_var_imag"]),
            cov_plain=tuple(tuple(_l2c(p) for p in row) for row in d["cov_plain"]),
            cov_conj=tuple(tuple(_l2c(p) for p in row) for row in d["cov_conj"]),
            se_plain=tuple(tuple(float(v) for v in row) for row in d["se_plain"]),
            se_conj=tuple(tuple(float(v) for v in row) for row in d["se_conj"]),
            normality_real=tuple(
                None if r is None else NormalityReport.from_dict(r) for r in d["normality_real"]
            ),
            normality_imag=tuple(
                None if r is None else NormalityReport.from_dict(r) for r in d["normality_imag"]
            ),
            comparison=None if comp is None else ComparisonTable.from_dict(comp),
        )


@dataclass(frozen=True)
class ExperimentResult:
    """Per-trial records in trial order plus the aggregated summary."""

    records: tuple[TrialRecord, ...]
    summary: ExperimentSummary


def run_trial(config: ExperimentConfig, trial_index: int) -> TrialRecord:
    """Run one trial; factors are sampled at unit atom variance so statistics
    are those of the sigma-normalized product."""
    unit = config.dist.unit_variance()
    trunc = None if config.epsilon is None else TruncationParams(float(config.epsilon))
    factors = []
    for k in range(config.m):
        seed = derive_seed(config.master_seed, trial_index, k)
        x = sample_matrix(unit, config.n, seed)
        if trunc is not None:
            x = truncate_hat(x, unit, trunc)
        factors.append(x)
    if config.target == "product":
        matrix = product_matrix(factors).scaled
    else:
        matrix = linearization(factors).matrix
    event_held = True
    min_singular = math.nan
    if config.event.enabled:
        report = least_singular_event(
            matrix, config.delta, c=config.event.c, gridpoints=config.event.gridpoints
        )
        event_held = report.held
        min_singular = report.min_singular
    width = len(config.xi_points) if config.target == "xi_process" else len(config.functions)
    if config.event.enabled and not event_held:
        stats = tuple(0.0 + 0.0j for _ in range(width))
    else:
        spec = eigenvalues(matrix)
        if config.target == "xi_process":
            stats = tuple(complex(resolvent_trace(spec, z)) for z in config.xi_points)
        else:
            stats = tuple(complex(linear_statistic(spec, f)) for f in config.functions)
    return TrialRecord(
        trial_index=trial_index,
        statistics=stats,
        event_held=event_held,
        min_singular=min_singular,
    )


def _resolve_threads(threads: int) -> int:
    if threads and threads > 0:
        return int(threads)
    return max(1, min(os.cpu_count() or 1, 8))


def _safe_normality(x: np.ndarray) -> NormalityReport | None:
    if x.size < MIN_SAMPLES:
        return None
    try:
        return normality_report(x)
    except DegenerateSampleError:
        return None


def _summarize(
    config: ExperimentConfig, records: list[TrialRecord], failures: int
) -> ExperimentSummary:
    labels = config.labels()
    k = len(labels)
    stats = np.array([rec.statistics for rec in records], dtype=complex).reshape(len(records), k)
    n_ok = stats.shape[0]
    means = stats.mean(axis=0)
    centered = stats - means
    var_real = stats.real.var(axis=0, ddof=1)
    var_imag = stats.imag.var(axis=0, ddof=1)
    se_var_real = np.empty(k)
    se_var_imag = np.empty(k)
    for j in range(k):
        for part, out in ((stats.real[:, j], se_var_real), (stats.imag[:, j], se_var_imag)):
            c = part - part.mean()
            v = float(np.mean(c * c))
            m4 = float(np.mean(c**4))
            out[j] = math.sqrt(max(m4 - v * v, 0.0) / n_ok)
    prods_conj = centered[:, :, None] * centered.conj()[:, None, :]
    prods_plain = centered[:, :, None] * centered[:, None, :]
    cov_conj = prods_conj.sum(axis=0) / (n_ok - 1)
    cov_plain = prods_plain.sum(axis=0) / (n_ok - 1)
    se_conj = np.sqrt(np.mean(np.abs(prods_conj - prods_conj.mean(axis=0)) ** 2, axis=0) / n_ok)
    se_plain = np.sqrt(np.mean(np.abs(prods_plain - prods_plain.mean(axis=0)) ** 2, axis=0) / n_ok)
    normality_real = tuple(_safe_normality(centered.real[:, j]) for j in range(k))
    normality_imag = tuple(_safe_normality(centered.imag[:, j]) for j in range(k))
    event_rate = float(np.mean([1.0 if rec.event_held else 0.0 for rec in records]))
    if config.event.enabled:
        min_singular_overall = float(min(rec.min_singular for rec in records))
    else:
        min_singular_overall = None
    return ExperimentSummary(
        n=config.n,
        m=config.m,
        trials=config.trials,
        completed=n_ok,
        failures=failures,
        target=config.target,
        labels=labels,
        event_rate=event_rate,
        min_singular_overall=min_singular_overall,
        means=tuple(complex(z) for z in means),
        var_real=tuple(float(v) for v in var_real),
        var_imag=tuple(float(v) for v in var_imag),
        se_var_real=tuple(float(v) for v in se_var_real),
        se_var_imag=tuple(float(v) for v in se_var_imag),
        cov_plain=tuple(tuple(complex(z) for z in row) for row in cov_plain),
        cov_conj=tuple(tuple(complex(z) for z in row) for row in cov_conj),
        se_plain=tuple(tuple(float(v) for v in row) for row in se_plain),
        se_conj=tuple(tuple(float(v) for v in row) for row in se_conj),
        normality_real=normality_real,
        normality_imag=normality_imag,
    )


def run_experiment(config: ExperimentConfig, threads: int = 0) -> ExperimentResult:
    """Run all trials with deterministic per-trial seeds and an index-ordered
    reduction, so results are identical for any thread count."""
    config.validate()
    workers = _resolve_threads(threads)

    def job(t: int):
        try:
            return run_trial(config, t)
        except (NonConvergenceError, PoleError, TruncationError) as exc:
            return (t, f"{type(exc).__name__}: {exc}")

    if workers <= 1:
        outcomes = [job(t) for t in range(config.trials)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(job, range(config.trials)))
    records: list[TrialRecord] = []
    failed: list[tuple[int, str]] = []
    for out in outcomes:
        if isinstance(out, TrialRecord):
            records.append(out)
        else:
            failed.append(out)
    if len(failed) > 0.01 * config.trials:
        first = failed[0]
        raise ExperimentAbort(
            f"{len(failed)} of {config.trials} trials failed "
            f"(first: trial {first[0]}, {first[1]})"
        )
    summary = _summarize(config, records, len(failed))
    return ExperimentResult(records=tuple(records), summary=summary)


def _summary_entry(summary: ExperimentSummary, key: str) -> tuple[complex, float]:
    name, _, index = key.partition("[")
    if not index.endswith("]"):
        raise KeyError(f"malformed comparison key {key!r}")
    index = index[:-1]
    if name in ("var_re", "var_im"):
        j = int(index)
        if name == "var_re":
            return complex(summary.var_real[j]), summary.se_var_real[j]
        return complex(summary.var_imag[j]), summary.se_var_imag[j]
    if name in ("cov_conj", "cov_plain"):
        i_s, j_s = index.split(",")
        i, j = int(i_s), int(j_s)
        if name == "cov_conj":
            return summary.cov_conj[i][j], summary.se_conj[i][j]
        return summary.cov_plain[i][j], summary.se_plain[i][j]
    raise KeyError(f"unknown comparison key {key!r}")


def compare_to_theory(
    summary: ExperimentSummary,
    theory_values: dict,
    rel_tolerance: float = 0.25,
    abs_tolerance: float = 0.12,
) -> ComparisonTable:
    """Compare summary entries against theoretical values.

    Keys address summary entries: "var_re[j]", "var_im[j]", "cov_conj[i,j]",
    "cov_plain[i,j]".  Theory values with modulus below 1e-12 are judged in
    absolute mode (|empirical| <= abs_tolerance); everything else relatively.
    Fewer than 20 completed trials marks every row "insufficient samples" and
    passes it, since no moment estimate is meaningful at that size.
    """
    rows = []
    for key in sorted(theory_values):
        empirical, std_error = _summary_entry(summary, key)
        theoretical = complex(theory_values[key])
        if summary.completed < MIN_SAMPLES:
            rows.append(
                ComparisonRow(
                    label=key,
                    empirical=empirical,
                    theoretical=theoretical,
                    rel_error=None,
                    std_error=std_error,
                    passed=True,
                    mode="insufficient samples",
                )
            )
            continue
        if abs(theoretical) < 1e-12:
            rows.append(
                ComparisonRow(
                    label=key,
                    empirical=empirical,
                    theoretical=theoretical,
                    rel_error=None,
                    std_error=std_error,
                    passed=bool(abs(empirical) <= abs_tolerance),
                    mode="absolute",
                )
            )
            continue
        rel = abs(empirical - theoretical) / abs(theoretical)
        rows.append(
            ComparisonRow(
                label=key,
                empirical=empirical,
                theoretical=theoretical,
                rel_error=float(rel),
                std_error=std_error,
                passed=bool(rel <= rel_tolerance),
                mode="relative",
            )
        )
    return ComparisonTable(
        rows=tuple(rows), rel_tolerance=float(rel_tolerance), abs_tolerance=float(abs_tolerance)
    )


def attach_comparison(summary: ExperimentSummary, table: ComparisonTable) -> ExperimentSummary:
    """Return a copy of the summary with the comparison table embedded."""
    return replace(summary, comparison=table)
