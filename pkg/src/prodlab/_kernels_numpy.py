"""Pure-numpy fallback kernels with the same call surface as the numba backend."""
import numpy as np


def eig_real(a0):
    """Eigenvalues of a real square matrix. Returns (wr, wi, ok)."""
    n = a0.shape[0]
    if n == 0:
        return np.empty(0), np.empty(0), True
    try:
        w = np.linalg.eigvals(a0)
    except np.linalg.LinAlgError:
        return np.empty(n), np.empty(n), False
    return np.ascontiguousarray(w.real), np.ascontiguousarray(w.imag), True


def singular_values(a0):
    """Singular values of a real square matrix, descending. Returns (s, ok)."""
    if a0.shape[0] == 0:
        return np.empty(0), True
    try:
        s = np.linalg.svd(a0, compute_uv=False)
    except np.linalg.LinAlgError:
        return np.empty(a0.shape[0]), False
    return s, True


def smin_complex(a0):
    """Least singular value of a complex square matrix."""
    if a0.shape[0] == 0:
        return 0.0
    if not np.any(a0):
        return 0.0
    return float(np.linalg.svd(a0, compute_uv=False)[-1])


def smin_shifted(m, zr, zi):
    """Least singular value of M - zI for real M and complex z = zr + i zi."""
    c = m.astype(np.complex128, copy=True)
    np.fill_diagonal(c, c.diagonal() - complex(zr, zi))
    return smin_complex(c)


def contour_min_smin(m, radius, gridpoints):
    """Minimum of smin(M - zI) over an equispaced grid on |z| = radius.

    Returns (min_value, argmin_re, argmin_im)."""
    best = np.inf
    best_re = radius
    best_im = 0.0
    for g in range(gridpoints):
        theta = 2.0 * np.pi * g / gridpoints
        zr = radius * np.cos(theta)
        zi = radius * np.sin(theta)
        s = smin_shifted(m, zr, zi)
        if s < best:
            best = s
            best_re = zr
            best_im = zi
    return best, best_re, best_im
