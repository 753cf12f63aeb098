"""Dense spectral routines: eigenvalues, singular values, resolvents, contour scans.

Hot kernels live in the backend modules (numba by default, pure numpy as the
fallback, selected through prodlab.backend). This module owns validation, the
spectrum containers, and the matrix-identity self-test.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .backend import backend_name, kernels
from .errors import NonConvergenceError, PoleError

# env hook for fault injection in the self-test; test-only, documented in README
FAULT_ENV = "PRODLAB_FAULT"


def _as_real_square(m) -> np.ndarray:
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if a.size and not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return np.ascontiguousarray(a)


@dataclass(frozen=True)
class ComplexSpectrum:
    """Eigenvalue multiset of a real matrix, sorted by (real, imag)."""

    values: np.ndarray

    @staticmethod
    def from_values(values) -> "ComplexSpectrum":
        v = np.asarray(values, dtype=np.complex128).ravel()
        order = np.lexsort((v.imag, v.real))
        return ComplexSpectrum(values=v[order])

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class SingularSpectrum:
    """Singular values, sorted descending, all nonnegative."""

    values: np.ndarray

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def smallest(self) -> float:
        return float(self.values[-1]) if self.n else 0.0


def eigenvalues(m) -> ComplexSpectrum:
    """Eigenvalues of a real square matrix.

    Real input keeps the spectrum closed under conjugation: complex eigenvalues
    are produced as exact conjugate pairs by the 2x2 block extraction.
    """
    a = _as_real_square(m)
    wr, wi, ok = kernels().eig_real(a)
    if not ok:
        raise NonConvergenceError(
            f"eigenvalue iteration exhausted its budget (n={a.shape[0]}, "
            f"backend={backend_name()})"
        )
    return ComplexSpectrum.from_values(wr + 1j * wi)


def singular_values(m) -> SingularSpectrum:
    """Singular values of a real square matrix, descending."""
    a = _as_real_square(m)
    s, ok = kernels().singular_values(a)
    if not ok:
        raise NonConvergenceError(
            f"singular value iteration exhausted its budget (n={a.shape[0]}, "
            f"backend={backend_name()})"
        )
    return SingularSpectrum(values=np.asarray(s, dtype=np.float64))


def resolvent_trace(spec: ComplexSpectrum, z: complex) -> complex:
    """tr (M - zI)^{-1} = sum_i 1/(lambda_i - z) from a computed spectrum."""
    z = complex(z)
    diff = spec.values - z
    if spec.n and np.min(np.abs(diff)) < 1e-12:
        raise PoleError(f"z={z} is within 1e-12 of an eigenvalue")
    return complex(np.sum(1.0 / diff))


def smallest_singular_value(m, z: complex = 0.0) -> float:
    """Least singular value of M - zI."""
    a = _as_real_square(m)
    z = complex(z)
    return float(kernels().smin_shifted(a, z.real, z.imag))


@dataclass(frozen=True)
class ContourScan:
    """Minimum of smin(M - zI) over an equispaced grid on a circle."""

    radius: float
    gridpoints: int
    min_value: float
    argmin: complex


def least_singular_on_contour(m, radius: float, gridpoints: int = 64) -> ContourScan:
    """Scan smin(M - zI) over gridpoints equispaced z on |z| = radius."""
    a = _as_real_square(m)
    if radius <= 0:
        raise ValueError("radius must be positive")
    if gridpoints < 8:
        raise ValueError("gridpoints must be >= 8")
    best, zr, zi = kernels().contour_min_smin(a, float(radius), int(gridpoints))
    return ContourScan(
        radius=float(radius),
        gridpoints=int(gridpoints),
        min_value=float(best),
        argmin=complex(zr, zi),
    )


@dataclass(frozen=True)
class IdentityReport:
    """Residuals from the matrix-identity self-test."""

    sherman_morrison: float
    sherman_morrison_vector: float
    woodbury: float
    resolvent_identity: float
    weyl_pairs: int
    weyl_violations: int
    max_residual: float

    @property
    def weyl_holds(self) -> bool:
        return self.weyl_violations == 0

    @property
    def passed(self) -> bool:
        return self.max_residual < 1e-10 and self.weyl_holds

    def residuals(self) -> dict[str, float]:
        return {
            "sherman_morrison": self.sherman_morrison,
            "sherman_morrison_vector": self.sherman_morrison_vector,
            "woodbury": self.woodbury,
            "resolvent_identity": self.resolvent_identity,
        }


def _rel(delta: np.ndarray, ref: np.ndarray) -> float:
    den = np.linalg.norm(ref)
    if den == 0.0:
        return float(np.linalg.norm(delta))
    return float(np.linalg.norm(delta) / den)


def identity_selftest(seed: int = 0, n: int = 50, weyl_pairs: int = 100) -> IdentityReport:
    """Exercise the rank-one inverse update (full and vector form), the
    Woodbury block update, the resolvent identity A^{-1} - B^{-1} =
    A^{-1}(B - A)B^{-1}, and the Weyl singular value perturbation bound
    |s_i(A) - s_i(B)| <= ||A - B||, all on random well-conditioned instances.

    Singular values go through the active backend kernels, so the self-test
    also exercises the compiled path. Setting the environment variable
    PRODLAB_FAULT=woodbury flips a sign inside the Woodbury update so the
    failure path of the selftest command can be driven in tests.
    """
    rng = np.random.default_rng(seed)
    fault = os.environ.get(FAULT_ENV, "")

    a = rng.standard_normal((n, n)) + n * np.eye(n)
    ainv = np.linalg.inv(a)

    u = rng.standard_normal(n)
    v = rng.standard_normal(n)
    denom = 1.0 + v @ ainv @ u
    lhs = np.linalg.inv(a + np.outer(u, v))
    res_sm = _rel(lhs - (ainv - ainv @ np.outer(u, v) @ ainv / denom), lhs)
    res_smv = _rel(lhs @ u - (ainv @ u) / denom, lhs @ u)

    k = 5
    uu = rng.standard_normal((n, k))
    vv = rng.standard_normal((n, k))
    sign = -1.0 if fault == "woodbury" else 1.0
    lhs_w = np.linalg.inv(a + uu @ vv.T) @ uu
    inner = np.linalg.inv(np.eye(k) + sign * (vv.T @ ainv @ uu))
    rhs_w = ainv @ uu @ inner
    res_w = _rel(lhs_w - rhs_w, lhs_w)

    b = a + rng.standard_normal((n, n))
    binv = np.linalg.inv(b)
    res_rz = _rel((ainv - binv) - ainv @ (b - a) @ binv, ainv - binv)

    violations = 0
    for _ in range(weyl_pairs):
        x = rng.standard_normal((n, n))
        y = rng.standard_normal((n, n))
        sx = singular_values(x).values
        sy = singular_values(y).values
        gap = singular_values(x - y).values[0]
        slack = 1e-8 * max(sx[0], sy[0])
        if np.max(np.abs(sx - sy)) > gap + slack:
            violations += 1

    return IdentityReport(
        sherman_morrison=res_sm,
        sherman_morrison_vector=res_smv,
        woodbury=res_w,
        resolvent_identity=res_rz,
        weyl_pairs=weyl_pairs,
        weyl_violations=violations,
        max_residual=max(res_sm, res_smv, res_w, res_rz),
    )
