"""Atom distributions for iid matrix entries: sampling, moments, truncation."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import TruncationError

KINDS = ("gaussian", "rademacher", "uniform_symmetric", "discrete_symmetric")

_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def derive_seed(master_seed: int, *path: int) -> int:
    """Counter-style seed derivation: hash the master seed with an index path.

    Used as derive_seed(master, trial) or derive_seed(master, trial, factor) so
    every factor matrix of every trial gets an independent stream regardless of
    scheduling order.
    """
    s = _splitmix64(master_seed & _MASK64)
    for p in path:
        s = _splitmix64(s ^ _splitmix64((int(p) + 0x243F6A8885A308D3) & _MASK64))
    return s


def _phi(x: float) -> float:
    # standard normal density
    return math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def _norm_cdf_sym(t: float) -> float:
    # P(|Z| <= t) = 2 Phi(t) - 1
    return math.erf(t / math.sqrt(2.0))


@dataclass(frozen=True)
class AtomDistribution:
    """Mean-zero entry law with variance sigma^2 and finite 4+tau moment.

    tau_witness is the tau for which E|xi|^{4+tau} is known finite; every
    built-in kind has all moments, so it is a free label used only to validate
    truncation exponents.
    """

    kind: str
    sigma: float = 1.0
    tau_witness: float = 1.0
    values: tuple[float, ...] = field(default=())
    probs: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}, expected one of {KINDS}")
        if not (self.sigma > 0.0 and math.isfinite(self.sigma)):
            raise ValueError("sigma must be positive and finite")
        if not (self.tau_witness > 0.0):
            raise ValueError("tau_witness must be positive")
        if self.kind == "discrete_symmetric":
            v = self.values
            p = self.probs
            if len(v) == 0 or len(v) != len(p):
                raise ValueError("discrete_symmetric needs matching values/probs")
            if any(q <= 0.0 for q in p):
                raise ValueError("probabilities must be positive")
            if abs(sum(p) - 1.0) > 1e-12:
                raise ValueError("probabilities must sum to 1")
            lookup = {}
            for x, q in zip(v, p):
                lookup[x] = lookup.get(x, 0.0) + q
            for x, q in lookup.items():
                if x != 0.0 and abs(lookup.get(-x, -1.0) - q) > 1e-12:
                    raise ValueError("support must be symmetric: each (x, p) needs (-x, p)")
            var = sum(q * x * x for x, q in zip(v, p))
            if var <= 0.0:
                raise ValueError("distribution is a point mass at 0")
            if abs(var - self.sigma**2) > 1e-10 * max(1.0, self.sigma**2):
                raise ValueError("sigma does not match the discrete support variance")
        elif self.values or self.probs:
            raise ValueError("values/probs are only valid for discrete_symmetric")

    # ---- moments ------------------------------------------------------

    def variance(self) -> float:
        return self.sigma**2

    def fourth_moment(self) -> float:
        s4 = self.sigma**4
        if self.kind == "gaussian":
            return 3.0 * s4
        if self.kind == "rademacher":
            return s4
        if self.kind == "uniform_symmetric":
            return 9.0 * s4 / 5.0
        return float(sum(q * x**4 for x, q in zip(self.values, self.probs)))

    def truncated_moment(self, k: int, t: float) -> float:
        """E[xi^k 1_{|xi| <= t}], analytic per kind (odd k vanish by symmetry)."""
        if t < 0.0:
            raise ValueError("threshold must be nonnegative")
        if k % 2 == 1:
            return 0.0
        if k not in (0, 2, 4):
            raise ValueError("only moments of order <= 4 are implemented")
        s = self.sigma
        if self.kind == "gaussian":
            u = t / s
            mass = _norm_cdf_sym(u)
            if k == 0:
                return mass
            if k == 2:
                return s**2 * (mass - 2.0 * u * _phi(u))
            return s**4 * (3.0 * mass - (2.0 * u**3 + 6.0 * u) * _phi(u))
        if self.kind == "rademacher":
            return s**k if t >= s else 0.0
        if self.kind == "uniform_symmetric":
            a = s * math.sqrt(3.0)
            c = min(t, a)
            return c ** (k + 1) / (a * (k + 1))
        return float(
            sum(q * x**k for x, q in zip(self.values, self.probs) if abs(x) <= t)
        )

    def unit_variance(self) -> "AtomDistribution":
        """The same law rescaled to sigma = 1."""
        if self.sigma == 1.0:
            return self
        if self.kind == "discrete_symmetric":
            return AtomDistribution(
                kind=self.kind,
                sigma=1.0,
                tau_witness=self.tau_witness,
                values=tuple(x / self.sigma for x in self.values),
                probs=self.probs,
            )
        return AtomDistribution(kind=self.kind, sigma=1.0, tau_witness=self.tau_witness)


def gaussian(sigma: float = 1.0, tau_witness: float = 1.0) -> AtomDistribution:
    return AtomDistribution(kind="gaussian", sigma=sigma, tau_witness=tau_witness)


def rademacher(sigma: float = 1.0, tau_witness: float = 1.0) -> AtomDistribution:
    return AtomDistribution(kind="rademacher", sigma=sigma, tau_witness=tau_witness)


def uniform_symmetric(sigma: float = 1.0, tau_witness: float = 1.0) -> AtomDistribution:
    return AtomDistribution(kind="uniform_symmetric", sigma=sigma, tau_witness=tau_witness)


def discrete_symmetric(values, probs, tau_witness: float = 1.0) -> AtomDistribution:
    var = sum(q * x * x for x, q in zip(values, probs))
    return AtomDistribution(
        kind="discrete_symmetric",
        sigma=math.sqrt(var),
        tau_witness=tau_witness,
        values=tuple(float(x) for x in values),
        probs=tuple(float(q) for q in probs),
    )


def sample_matrix(dist: AtomDistribution, n: int, seed: int) -> np.ndarray:
    """An n x n matrix of iid draws from dist, deterministic in (dist, n, seed).

    The generator is Philox keyed by the 64-bit seed: counter-based, so streams
    for distinct seeds are independent and reproducible across thread layouts.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed & _MASK64)))
    if dist.kind == "gaussian":
        return rng.normal(0.0, dist.sigma, (n, n))
    if dist.kind == "rademacher":
        return dist.sigma * (2.0 * rng.integers(0, 2, (n, n)).astype(np.float64) - 1.0)
    if dist.kind == "uniform_symmetric":
        half = dist.sigma * math.sqrt(3.0)
        return rng.uniform(-half, half, (n, n))
    support = np.asarray(dist.values, dtype=np.float64)
    weights = np.asarray(dist.probs, dtype=np.float64)
    return rng.choice(support, size=(n, n), p=weights / weights.sum())


@dataclass(frozen=True)
class TruncationParams:
    """Entry truncation at threshold T = n^{1/2 - epsilon}."""

    epsilon: float

    def __post_init__(self):
        if not (0.0 < self.epsilon < 0.5):
            raise ValueError("epsilon must lie in (0, 1/2)")

    def threshold(self, n: int) -> float:
        if n < 1:
            raise ValueError("n must be >= 1")
        return float(n) ** (0.5 - self.epsilon)

    def validate_against(self, dist: AtomDistribution) -> None:
        tau = dist.tau_witness
        bound = tau / (8.0 + 2.0 * tau)
        if self.epsilon > bound + 1e-15:
            raise ValueError(
                f"epsilon={self.epsilon} exceeds tau/(8+2tau)={bound:.6g} "
                f"for tau={tau}"
            )


def _truncated_mean_var(dist: AtomDistribution, t: float) -> tuple[float, float]:
    mu = dist.truncated_moment(1, t)
    m2 = dist.truncated_moment(2, t)
    return mu, m2 - mu * mu


def truncate_hat(m: np.ndarray, dist: AtomDistribution, params: TruncationParams) -> np.ndarray:
    """Entrywise truncate-center-rescale: (x 1_{|x|<=T} - mu_T) / sqrt(v_T).

    mu_T and v_T come from the distribution object, never from the sample, so
    output entries stay iid. Requires sigma = 1 (rescale upstream).
    """
    if abs(dist.sigma - 1.0) > 1e-12:
        raise ValueError("truncation requires a unit-variance law; rescale upstream")
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix")
    n = a.shape[0]
    t = params.threshold(n)
    mu, v = _truncated_mean_var(dist, t)
    if v <= 0.0:
        raise TruncationError(
            f"truncation at T={t:.6g} leaves zero variance for kind={dist.kind}"
        )
    kept = np.where(np.abs(a) <= t, a, 0.0)
    return (kept - mu) / math.sqrt(v)


@dataclass(frozen=True)
class TruncationReport:
    """Analytic summary of what truncation at level n does to the entry law."""

    n: int
    threshold: float
    mu_t: float
    v_t: float
    var_gap: float
    sup_bound: float
    fourth_ratio: float


def truncation_report(dist: AtomDistribution, n: int, params: TruncationParams) -> TruncationReport:
    """var_gap = |1 - v_T|, sup_bound = 4T, fourth_ratio = E|xi_hat|^4 / E|xi|^4."""
    if abs(dist.sigma - 1.0) > 1e-12:
        raise ValueError("truncation requires a unit-variance law; rescale upstream")
    t = params.threshold(n)
    mu, v = _truncated_mean_var(dist, t)
    if v <= 0.0:
        raise TruncationError(
            f"truncation at T={t:.6g} leaves zero variance for kind={dist.kind}"
        )
    m2 = dist.truncated_moment(2, t)
    m4 = dist.truncated_moment(4, t)
    # E[(xi 1 - mu)^4] expanded; odd truncated moments vanish for symmetric laws
    # but mu is kept general for clarity of the formula
    fourth_centered = m4 - 4.0 * mu * dist.truncated_moment(3, t) + 6.0 * mu * mu * m2 - 3.0 * mu**4
    return TruncationReport(
        n=n,
        threshold=t,
        mu_t=mu,
        v_t=v,
        var_gap=abs(1.0 - v),
        sup_bound=4.0 * t,
        fourth_ratio=(fourth_centered / (v * v)) / dist.fourth_moment(),
    )
