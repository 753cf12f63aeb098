"""Limit-theory values: covariance closed forms, covariance quadrature oracle,
resolvent-process kernel, and the limiting eigenvalue density."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import PoleError


def _coeffs(f) -> np.ndarray:
    """Accept a TestFunction-like object (``.coefficients``) or a plain sequence."""
    raw = getattr(f, "coefficients", f)
    a = np.asarray(raw, dtype=np.complex128).ravel()
    if a.size == 0:
        raise ValueError("need at least one coefficient")
    if not np.all(np.isfinite(a)):
        raise ValueError("coefficients must be finite")
    return a


@dataclass(frozen=True)
class CovariancePair:
    """plain = E[F(f) F(g)], conj = E[F(f) conj(F(g))] for the limit Gaussian."""

    plain: complex
    conj: complex

    def variance_parts(self) -> tuple[float, float]:
        """(Var Re F, Var Im F) when f = g: from E[F^2] and E[|F|^2]."""
        var_re = 0.5 * (self.conj.real + self.plain.real)
        var_im = 0.5 * (self.conj.real - self.plain.real)
        return var_re, var_im


def product_covariance(f, g) -> CovariancePair:
    """Limit covariances of centered linear statistics of the scaled product.

    For polynomials f = sum a_p z^p, g = sum b_p z^p the contour integrals
    reduce by residues to plain = sum_p p a_p b_p and conj = sum_p p a_p
    conj(b_p); the value does not depend on the factor count.
    """
    a = _coeffs(f)
    b = _coeffs(g)
    d = min(a.size, b.size)
    plain = 0.0 + 0.0j
    conj = 0.0 + 0.0j
    for p in range(1, d):
        plain += p * a[p] * b[p]
        conj += p * a[p] * np.conj(b[p])
    return CovariancePair(plain=complex(plain), conj=complex(conj))


def linearized_covariance(f, g, m: int) -> CovariancePair:
    """Covariances for statistics of the block linearization of an m-fold product.

    Only coefficient indices divisible by m contribute, each with weight m*p:
    plain = sum_{m|p} m p a_p b_p, and conjugated analogously. Composing with
    the m-lift of test functions recovers product_covariance exactly.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    a = _coeffs(f)
    b = _coeffs(g)
    d = min(a.size, b.size)
    plain = 0.0 + 0.0j
    conj = 0.0 + 0.0j
    for p in range(m, d, m):
        plain += m * p * a[p] * b[p]
        conj += m * p * a[p] * np.conj(b[p])
    return CovariancePair(plain=complex(plain), conj=complex(conj))


def process_kernel(z: complex, w: complex, m: int) -> complex:
    """Covariance kernel E[Xi(z) conj(Xi(w))] = m^2 (z wbar)^{m-1} / ((z wbar)^m - 1)^2.

    For the unconjugated pairing E[Xi(z) Xi(w)] evaluate at (z, conj(w)),
    using Xi(w) = conj(Xi(wbar)) for matrices with real entries.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    u = complex(z) * np.conj(complex(w))
    denom = u**m - 1.0
    if abs(denom) < 1e-8:
        raise PoleError(f"kernel pole: |(z wbar)^m - 1| = {abs(denom):.3g} < 1e-8")
    return complex(m * m * u ** (m - 1) / (denom * denom))


def density_mu_m(z: complex, m: int, sigma: float = 1.0) -> float:
    """Limiting eigenvalue density of the m-fold product at z.

    (1/(m pi)) sigma^{-2/m} |z|^{2/m - 2} on |z| <= sigma, zero outside. The
    origin is an integrable singularity for m >= 2, reported as inf.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if sigma <= 0.0:
        raise ValueError("sigma must be positive")
    r = abs(complex(z))
    if r > sigma:
        return 0.0
    if r == 0.0:
        if m == 1:
            return 1.0 / (math.pi * sigma**2)
        return math.inf
    return (1.0 / (m * math.pi)) * sigma ** (-2.0 / m) * r ** (2.0 / m - 2.0)


def radial_cdf(r: float, m: int, sigma: float = 1.0) -> float:
    """P(|lambda| <= r) under the limit law: (r/sigma)^{2/m} clipped to [0, 1]."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if sigma <= 0.0:
        raise ValueError("sigma must be positive")
    if r <= 0.0:
        return 0.0
    return min(1.0, (r / sigma) ** (2.0 / m))


_KERNEL_IDS = ("product_plain", "product_conj", "linearized_plain", "linearized_conj")


@dataclass(frozen=True)
class QuadratureResult:
    """Double contour quadrature value with an aliasing estimate."""

    value: complex
    radius: float
    nodes: int
    alias_bound: float
    accuracy_warning: bool


def contour_quadrature_covariance(
    f,
    g,
    kernel_id: str,
    m: int = 1,
    radius: float = 1.5,
    nodes: int = 256,
) -> QuadratureResult:
    """Covariance by trapezoid double contour quadrature on |z| = |w| = radius.

    Independent oracle for the closed forms: the trapezoid rule on the circle
    integrates trigonometric polynomials exactly, so for polynomial f, g the
    only error is aliasing of the kernel's geometric tail, which decays like
    radius^{-2 k}. The conjugated variant traverses wbar clockwise (dwbar =
    conj(dw)); the sign convention is pinned by conj(z^a, z^a) = a > 0.
    """
    if kernel_id not in _KERNEL_IDS:
        raise ValueError(f"kernel_id must be one of {_KERNEL_IDS}")
    if radius <= 1.0:
        raise ValueError("radius must exceed 1 (contour outside the unit disk)")
    if nodes < 8:
        raise ValueError("nodes must be >= 8")
    if m < 1:
        raise ValueError("m must be >= 1")
    a = _coeffs(f)
    b = _coeffs(g)
    theta = 2.0 * np.pi * np.arange(nodes) / nodes
    zs = radius * np.exp(1j * theta)
    fz = np.polyval(a[::-1], zs)
    gw = np.polyval(b[::-1], zs)
    if kernel_id.endswith("conj"):
        u = zs[:, None] * np.conj(zs)[None, :]
        gv = np.conj(gw)[None, :]
    else:
        u = zs[:, None] * zs[None, :]
        gv = gw[None, :]
    if kernel_id.startswith("product"):
        kern = 1.0 / (u - 1.0) ** 2
    else:
        kern = m * m * u ** (m - 1) / (u**m - 1.0) ** 2
    value = complex(np.mean(fz[:, None] * gv * kern * u))
    tail_exp = max(1, nodes - (a.size - 1) - (b.size - 1) - 2 * m)
    alias = float(radius ** (-2.0 * tail_exp))
    return QuadratureResult(
        value=value,
        radius=float(radius),
        nodes=int(nodes),
        alias_bound=alias,
        accuracy_warning=alias > 1e-11,
    )
