"""Products of iid factors, their block-cyclic linearization, and the test
function lift across the spectrum correspondence."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import eigenvalues
from .spectra import TestFunction


def _check_factors(factors) -> list[np.ndarray]:
    mats = [np.ascontiguousarray(np.asarray(x, dtype=np.float64)) for x in factors]
    if not mats:
        raise ValueError("need at least one factor")
    n = mats[0].shape[0] if mats[0].ndim == 2 else -1
    for x in mats:
        if x.ndim != 2 or x.shape[0] != x.shape[1] or x.shape[0] != n:
            raise ValueError("factors must be square matrices of equal size")
    if n == 0:
        raise ValueError("factors must be nonempty")
    return mats


@dataclass(frozen=True)
class MatrixProduct:
    """Ordered factors X_1 .. X_m and the scaled product n^{-m/2} X_1 ... X_m."""

    factors: tuple[np.ndarray, ...]
    scaled: np.ndarray

    @property
    def m(self) -> int:
        return len(self.factors)

    @property
    def n(self) -> int:
        return self.scaled.shape[0]


def product_matrix(factors) -> MatrixProduct:
    """Multiply factors left to right and scale by n^{-m/2}."""
    mats = _check_factors(factors)
    n = mats[0].shape[0]
    m = len(mats)
    acc = mats[0].copy()
    for x in mats[1:]:
        acc = acc @ x
    acc *= float(n) ** (-0.5 * m)
    return MatrixProduct(factors=tuple(mats), scaled=acc)


@dataclass(frozen=True)
class BlockLinearization:
    """mn x mn block matrix: blocks (k, k+1) = X_k/sqrt(n), block (m, 1) = X_m/sqrt(n)."""

    m: int
    n: int
    matrix: np.ndarray


def linearization(factors) -> BlockLinearization:
    """Assemble the block-cyclic linearization of the factor list.

    For m = 1 the corner block and the diagonal coincide, giving X/sqrt(n).
    """
    mats = _check_factors(factors)
    n = mats[0].shape[0]
    m = len(mats)
    scale = 1.0 / math.sqrt(n)
    y = np.zeros((m * n, m * n))
    for k in range(m - 1):
        y[k * n : (k + 1) * n, (k + 1) * n : (k + 2) * n] = mats[k] * scale
    y[(m - 1) * n :, 0:n] = mats[m - 1] * scale
    return BlockLinearization(m=m, n=n, matrix=y)


def pairing_distance(first, second) -> float:
    """Max distance in an assignment between two equal-size complex multisets.

    Greedy nearest-neighbor (largest magnitude first) always runs; for small
    sets an optimal assignment is also computed and the smaller max distance
    wins. Robust to solver noise when the underlying multisets coincide.
    """
    u = np.asarray(first, dtype=np.complex128).ravel()
    v = np.asarray(second, dtype=np.complex128).ravel()
    if u.size != v.size:
        raise ValueError("multisets must have equal size")
    if u.size == 0:
        return 0.0
    dist = np.abs(u[:, None] - v[None, :])
    used = np.zeros(v.size, dtype=bool)
    worst = 0.0
    for i in np.argsort(-np.abs(u), kind="stable"):
        row = np.where(used, np.inf, dist[i])
        j = int(np.argmin(row))
        used[j] = True
        worst = max(worst, float(row[j]))
    if u.size <= 128:
        from scipy.optimize import linear_sum_assignment

        rows, cols = linear_sum_assignment(dist)
        worst = min(worst, float(dist[rows, cols].max()))
    return worst


@dataclass(frozen=True)
class LinearizationCheck:
    """Outcome of comparing eig(Y)^m against m copies of eig(P)."""

    matched: bool
    max_pairing_distance: float
    size: int


def check_linearization(factors, tol: float = 1e-6, cap: int = 512) -> LinearizationCheck:
    """Verify that the linearization's m-th powered spectrum equals m copies of
    the product's spectrum, up to tol in pairing distance."""
    mats = _check_factors(factors)
    n = mats[0].shape[0]
    m = len(mats)
    if m * n > cap:
        raise ValueError(f"m*n = {m * n} exceeds the dense-check cap {cap}")
    lifted = eigenvalues(linearization(mats).matrix).values ** m
    base = np.repeat(eigenvalues(product_matrix(mats).scaled).values, m)
    d = pairing_distance(lifted, base)
    return LinearizationCheck(matched=bool(d <= tol), max_pairing_distance=d, size=m * n)


def lift_test_function(f: TestFunction, m: int) -> TestFunction:
    """g(z) = f(z^m)/m, so that tr f(P) = tr g(Y) at the level of spectra.

    The coefficient of z^{pm} in g is a_p/m; all other coefficients vanish.
    g is analytic wherever |z|^m stays in f's disk, so the margin maps to
    (1 + delta)^{1/m} - 1.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    a = f.coefficients
    out = [0.0 + 0.0j] * ((len(a) - 1) * m + 1)
    for p, c in enumerate(a):
        out[p * m] = c / m
    return TestFunction(
        coefficients=tuple(out),
        delta=(1.0 + f.delta) ** (1.0 / m) - 1.0,
    )
