"""Linear eigenvalue statistics, least-singular-value events, resolvent samples,
and the radial distribution check against the limit law."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import theory
from .linalg import (
    ComplexSpectrum,
    eigenvalues,
    least_singular_on_contour,
    resolvent_trace,
)


@dataclass(frozen=True)
class TestFunction:
    """Polynomial test function given by complex coefficients, index = power.

    delta records the analyticity margin: the function is treated as defined on
    |z| <= 1 + delta. Polynomials are entire; the margin is carried so configs
    can assert their functions cover the contour in use.
    """

    coefficients: tuple[complex, ...]
    delta: float = 0.5

    def __post_init__(self):
        coeffs = tuple(complex(c) for c in self.coefficients)
        if len(coeffs) == 0:
            raise ValueError("need at least one coefficient")
        if any(
            not (np.isfinite(c.real) and np.isfinite(c.imag)) for c in coeffs
        ):
            raise ValueError("coefficients must be finite")
        if not (self.delta > 0.0):
            raise ValueError("delta must be positive")
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def degree(self) -> int:
        d = len(self.coefficients) - 1
        while d > 0 and self.coefficients[d] == 0:
            d -= 1
        return d

    @property
    def is_real(self) -> bool:
        return all(c.imag == 0.0 for c in self.coefficients)

    def __call__(self, z):
        a = np.asarray(self.coefficients[::-1], dtype=np.complex128)
        return np.polyval(a, z)

    def conjugate(self) -> "TestFunction":
        return TestFunction(
            coefficients=tuple(np.conj(c) for c in self.coefficients),
            delta=self.delta,
        )


def linear_statistic(spec: ComplexSpectrum, f: TestFunction) -> complex:
    """tr f(M) = sum_i f(lambda_i) evaluated from a computed spectrum."""
    if spec.n == 0:
        return 0.0 + 0.0j
    return complex(np.sum(f(spec.values)))


@dataclass(frozen=True)
class EventReport:
    """Outcome of the uniform least-singular-value check on |z| = 1 + delta/2."""

    radius: float
    threshold: float
    min_singular: float
    argmin: complex
    held: bool


def least_singular_event(
    m, delta: float, c: float = 0.05, gridpoints: int = 64
) -> EventReport:
    """Check inf s_min(M - zI) >= c over the circle |z| = 1 + delta/2.

    The infimum over {|z| >= 1 + delta/2} is attained on the boundary circle
    because the resolvent norm is subharmonic off the spectrum, so a boundary
    grid scan is the whole search.
    """
    if delta <= 0.0:
        raise ValueError("delta must be positive")
    if c <= 0.0:
        raise ValueError("threshold c must be positive")
    scan = least_singular_on_contour(m, 1.0 + 0.5 * delta, gridpoints)
    return EventReport(
        radius=scan.radius,
        threshold=c,
        min_singular=scan.min_value,
        argmin=scan.argmin,
        held=bool(scan.min_value >= c),
    )


def xi_sample(lin, z: complex, event: EventReport | None = None) -> complex:
    """One sample of the resolvent trace statistic tr G(z) 1_{event} for the
    linearization; the caller centers across trials."""
    if event is not None and not event.held:
        return 0.0 + 0.0j
    return resolvent_trace(eigenvalues(lin.matrix), z)


def radial_ks(spec: ComplexSpectrum, m: int, sigma: float = 1.0) -> float:
    """Kolmogorov-Smirnov distance between the empirical law of |lambda| and
    the limit radial law (r/sigma)^{2/m}."""
    if spec.n == 0:
        raise ValueError("empty spectrum")
    radii = np.sort(np.abs(spec.values))
    k = radii.size
    cdf = np.array([theory.radial_cdf(float(r), m, sigma) for r in radii])
    upper = np.arange(1, k + 1) / k
    lower = np.arange(0, k) / k
    return float(np.max(np.maximum(cdf - lower, upper - cdf)))
