"""Numba-compiled dense kernels: eigenvalues, singular values, shifted least singular values.

Algorithms: Parlett-Reinsch balancing, Householder reduction to Hessenberg form,
Francis double-shift QR for eigenvalues, Golub-Kahan bidiagonalization with
implicit-shift QR for singular values, and partial-pivot complex LU with inverse
iteration for the least singular value of M - zI. All kernels are deterministic:
no fastmath, fixed reduction order, no threading inside a kernel.
"""
import numpy as np
from numba import njit

EPS = 2.220446049250313e-16
# deflation threshold |h[i+1,i]| <= DEFL * (|h[i,i]| + |h[i+1,i+1]|)
DEFL = 8.0 * EPS


@njit(cache=True, nogil=True)
def _balance(a):
    # Parlett-Reinsch diagonal scaling (similarity, eigenvalues unchanged)
    n = a.shape[0]
    radix = 2.0
    sqrdx = radix * radix
    done = False
    while not done:
        done = True
        for i in range(n):
            r = 0.0
            c = 0.0
            for j in range(n):
                if j != i:
                    c += abs(a[j, i])
                    r += abs(a[i, j])
            if c != 0.0 and r != 0.0:
                g = r / radix
                f = 1.0
                s = c + r
                while c < g:
                    f *= radix
                    c *= sqrdx
                g = r * radix
                while c > g:
                    f /= radix
                    c /= sqrdx
                if (c + r) / f < 0.95 * s:
                    done = False
                    g = 1.0 / f
                    for j in range(n):
                        a[i, j] *= g
                    for j in range(n):
                        a[j, i] *= f


@njit(cache=True, nogil=True)
def _hessenberg(a):
    # Householder reduction; lower triangle below the first subdiagonal is zeroed
    n = a.shape[0]
    u = np.empty(n)
    for k in range(n - 2):
        scale = 0.0
        for i in range(k + 1, n):
            x = abs(a[i, k])
            if x > scale:
                scale = x
        if scale == 0.0:
            continue
        norm2 = 0.0
        for i in range(k + 1, n):
            u[i] = a[i, k] / scale
            norm2 += u[i] * u[i]
        norm = np.sqrt(norm2)
        x1 = u[k + 1]
        alpha = -norm if x1 >= 0.0 else norm
        u1 = x1 - alpha
        beta = -1.0 / (alpha * u1)
        u[k + 1] = u1
        # left: rows k+1.., columns k+1.. (column k is set exactly below)
        for j in range(k + 1, n):
            s = 0.0
            for i in range(k + 1, n):
                s += u[i] * a[i, j]
            s *= beta
            for i in range(k + 1, n):
                a[i, j] -= s * u[i]
        # right: all rows, columns k+1..
        for i in range(n):
            s = 0.0
            for j in range(k + 1, n):
                s += a[i, j] * u[j]
            s *= beta
            for j in range(k + 1, n):
                a[i, j] -= s * u[j]
        a[k + 1, k] = alpha * scale
        for i in range(k + 2, n):
            a[i, k] = 0.0


@njit(cache=True, nogil=True)
def _hqr(a, wr, wi, budget):
    # Francis double-shift QR on an upper Hessenberg matrix, eigenvalues only.
    # Returns iterations used, or -1 if the sweep budget was exhausted.
    n = a.shape[0]
    anorm = 0.0
    for i in range(n):
        lo = i - 1 if i > 0 else 0
        for j in range(lo, n):
            anorm += abs(a[i, j])
    if anorm == 0.0:
        anorm = 1.0
    total = 0
    nn = n - 1
    t = 0.0
    p = 0.0
    q = 0.0
    r = 0.0
    while nn >= 0:
        its = 0
        while True:
            l = nn
            while l > 0:
                s = abs(a[l - 1, l - 1]) + abs(a[l, l])
                if s == 0.0:
                    s = anorm
                if abs(a[l, l - 1]) <= DEFL * s:
                    a[l, l - 1] = 0.0
                    break
                l -= 1
            x = a[nn, nn]
            if l == nn:
                wr[nn] = x + t
                wi[nn] = 0.0
                nn -= 1
                break
            y = a[nn - 1, nn - 1]
            w = a[nn, nn - 1] * a[nn - 1, nn]
            if l == nn - 1:
                p = 0.5 * (y - x)
                q = p * p + w
                z = np.sqrt(abs(q))
                x += t
                if q >= 0.0:
                    z = p + (z if p >= 0.0 else -z)
                    wr[nn - 1] = x + z
                    wr[nn] = wr[nn - 1]
                    if z != 0.0:
                        wr[nn] = x - w / z
                    wi[nn - 1] = 0.0
                    wi[nn] = 0.0
                else:
                    wr[nn - 1] = x + p
                    wr[nn] = x + p
                    wi[nn - 1] = -z
                    wi[nn] = z
                nn -= 2
                break
            if total >= budget:
                return -1
            if its > 0 and its % 10 == 0:
                # exceptional shift against stagnation
                t += x
                for i in range(nn + 1):
                    a[i, i] -= x
                s = abs(a[nn, nn - 1]) + abs(a[nn - 1, nn - 2])
                y = 0.75 * s
                x = y
                w = -0.4375 * s * s
            its += 1
            total += 1
            m = nn - 2
            while m >= l:
                z = a[m, m]
                r = x - z
                s = y - z
                p = (r * s - w) / a[m + 1, m] + a[m, m + 1]
                q = a[m + 1, m + 1] - z - r - s
                r = a[m + 2, m + 1]
                s = abs(p) + abs(q) + abs(r)
                p /= s
                q /= s
                r /= s
                if m == l:
                    break
                u = abs(a[m, m - 1]) * (abs(q) + abs(r))
                v = abs(p) * (abs(a[m - 1, m - 1]) + abs(z) + abs(a[m + 1, m + 1]))
                if u <= DEFL * v:
                    break
                m -= 1
            for i in range(m + 2, nn + 1):
                a[i, i - 2] = 0.0
            for i in range(m + 3, nn + 1):
                a[i, i - 3] = 0.0
            for k in range(m, nn):
                if k != m:
                    p = a[k, k - 1]
                    q = a[k + 1, k - 1]
                    r = 0.0
                    if k != nn - 1:
                        r = a[k + 2, k - 1]
                    x = abs(p) + abs(q) + abs(r)
                    if x != 0.0:
                        p /= x
                        q /= x
                        r /= x
                s = np.sqrt(p * p + q * q + r * r)
                if p < 0.0:
                    s = -s
                if s == 0.0:
                    continue
                if k == m:
                    if l != m:
                        a[k, k - 1] = -a[k, k - 1]
                else:
                    a[k, k - 1] = -s * x
                p += s
                x = p / s
                y = q / s
                z = r / s
                q /= p
                r /= p
                if k != nn - 1:
                    for j in range(k, nn + 1):
                        p = a[k, j] + q * a[k + 1, j] + r * a[k + 2, j]
                        a[k, j] -= p * x
                        a[k + 1, j] -= p * y
                        a[k + 2, j] -= p * z
                else:
                    for j in range(k, nn + 1):
                        p = a[k, j] + q * a[k + 1, j]
                        a[k, j] -= p * x
                        a[k + 1, j] -= p * y
                mmin = k + 3 if k + 3 < nn else nn
                if k != nn - 1:
                    for i in range(l, mmin + 1):
                        p = x * a[i, k] + y * a[i, k + 1] + z * a[i, k + 2]
                        a[i, k] -= p
                        a[i, k + 1] -= p * q
                        a[i, k + 2] -= p * r
                else:
                    for i in range(l, mmin + 1):
                        p = x * a[i, k] + y * a[i, k + 1]
                        a[i, k] -= p
                        a[i, k + 1] -= p * q
    return total


@njit(cache=True, nogil=True)
def eig_real(a0):
    """Eigenvalues of a real square matrix. Returns (wr, wi, ok)."""
    n = a0.shape[0]
    wr = np.empty(n)
    wi = np.empty(n)
    if n == 0:
        return wr, wi, True
    if n == 1:
        wr[0] = a0[0, 0]
        wi[0] = 0.0
        return wr, wi, True
    a = a0.copy()
    _balance(a)
    _hessenberg(a)
    used = _hqr(a, wr, wi, 30 * n)
    return wr, wi, used >= 0


@njit(cache=True, nogil=True)
def _bidiagonalize(a, d, rv1):
    # Golub-Kahan reduction of square a to upper bidiagonal form.
    # d[i] = diagonal; rv1[i] = superdiagonal element coupling d[i-1], d[i]; rv1[0] = 0.
    n = a.shape[0]
    u = np.empty(n)
    rv1[0] = 0.0
    for k in range(n):
        scale = 0.0
        for i in range(k, n):
            x = abs(a[i, k])
            if x > scale:
                scale = x
        if scale > 0.0:
            norm2 = 0.0
            for i in range(k, n):
                u[i] = a[i, k] / scale
                norm2 += u[i] * u[i]
            norm = np.sqrt(norm2)
            x1 = u[k]
            alpha = -norm if x1 >= 0.0 else norm
            u1 = x1 - alpha
            beta = -1.0 / (alpha * u1)
            u[k] = u1
            for j in range(k + 1, n):
                s = 0.0
                for i in range(k, n):
                    s += u[i] * a[i, j]
                s *= beta
                for i in range(k, n):
                    a[i, j] -= s * u[i]
            d[k] = alpha * scale
        else:
            d[k] = 0.0
        if k >= n - 1:
            continue
        scale = 0.0
        for j in range(k + 1, n):
            x = abs(a[k, j])
            if x > scale:
                scale = x
        if scale > 0.0:
            norm2 = 0.0
            for j in range(k + 1, n):
                u[j] = a[k, j] / scale
                norm2 += u[j] * u[j]
            norm = np.sqrt(norm2)
            x1 = u[k + 1]
            alpha = -norm if x1 >= 0.0 else norm
            u1 = x1 - alpha
            beta = -1.0 / (alpha * u1)
            u[k + 1] = u1
            for i in range(k + 1, n):
                s = 0.0
                for j in range(k + 1, n):
                    s += a[i, j] * u[j]
                s *= beta
                for j in range(k + 1, n):
                    a[i, j] -= s * u[j]
            rv1[k + 1] = alpha * scale
        else:
            rv1[k + 1] = 0.0


@njit(cache=True, nogil=True)
def _bidiag_svd(d, rv1, anorm):
    # Implicit-shift QR on a bidiagonal (values only). True on convergence.
    n = d.shape[0]
    for k in range(n - 1, -1, -1):
        for its in range(1, 61):
            flag = True
            l = k
            nm = 0
            while l >= 0:
                nm = l - 1
                if abs(rv1[l]) <= EPS * anorm:
                    flag = False
                    break
                if abs(d[nm]) <= EPS * anorm:
                    break
                l -= 1
            if flag:
                # d[l-1] is negligible: rotate rv1[l] away
                c = 0.0
                s = 1.0
                for i in range(l, k + 1):
                    f = s * rv1[i]
                    rv1[i] = c * rv1[i]
                    if abs(f) <= EPS * anorm:
                        break
                    g = d[i]
                    h = np.hypot(f, g)
                    d[i] = h
                    h = 1.0 / h
                    c = g * h
                    s = -f * h
            z = d[k]
            if l == k:
                if z < 0.0:
                    d[k] = -z
                break
            if its >= 60:
                return False
            x = d[l]
            nm = k - 1
            y = d[nm]
            g = rv1[nm]
            h = rv1[k]
            f = ((y - z) * (y + z) + (g - h) * (g + h)) / (2.0 * h * y)
            g = np.hypot(f, 1.0)
            if f >= 0.0:
                f = ((x - z) * (x + z) + h * ((y / (f + g)) - h)) / x
            else:
                f = ((x - z) * (x + z) + h * ((y / (f - g)) - h)) / x
            c = 1.0
            s = 1.0
            for j in range(l, nm + 1):
                i = j + 1
                g = rv1[i]
                y = d[i]
                h = s * g
                g = c * g
                z = np.hypot(f, h)
                rv1[j] = z
                c = f / z
                s = h / z
                f = x * c + g * s
                g = g * c - x * s
                h = y * s
                y *= c
                z = np.hypot(f, h)
                d[j] = z
                if z != 0.0:
                    z = 1.0 / z
                    c = f * z
                    s = h * z
                f = c * g + s * y
                x = c * y - s * g
            rv1[l] = 0.0
            rv1[k] = f
            d[k] = x
    return True


@njit(cache=True, nogil=True)
def singular_values(a0):
    """Singular values of a real square matrix, descending. Returns (s, ok)."""
    n = a0.shape[0]
    if n == 0:
        return np.empty(0), True
    a = a0.copy()
    d = np.empty(n)
    rv1 = np.empty(n)
    _bidiagonalize(a, d, rv1)
    anorm = 0.0
    for i in range(n):
        v = abs(d[i]) + abs(rv1[i])
        if v > anorm:
            anorm = v
    if anorm == 0.0:
        return d * 0.0, True
    ok = _bidiag_svd(d, rv1, anorm)
    out = np.sort(d)[::-1].copy()
    return out, ok


@njit(cache=True, nogil=True)
def _lu_complex(a, piv):
    # In-place partial-pivot LU. Returns False if an exact zero pivot appears.
    n = a.shape[0]
    ok = True
    for k in range(n):
        p = k
        best = abs(a[k, k])
        for i in range(k + 1, n):
            v = abs(a[i, k])
            if v > best:
                best = v
                p = i
        piv[k] = p
        if p != k:
            for j in range(n):
                tmp = a[k, j]
                a[k, j] = a[p, j]
                a[p, j] = tmp
        akk = a[k, k]
        if akk == 0:
            ok = False
            continue
        inv = 1.0 / akk
        for i in range(k + 1, n):
            mult = a[i, k] * inv
            a[i, k] = mult
            if mult != 0:
                for j in range(k + 1, n):
                    a[i, j] -= mult * a[k, j]
    return ok


@njit(cache=True, nogil=True)
def _lu_solve(a, piv, b):
    # Solve A x = b in place given the factorization from _lu_complex.
    n = a.shape[0]
    for k in range(n):
        p = piv[k]
        if p != k:
            tmp = b[k]
            b[k] = b[p]
            b[p] = tmp
    for k in range(n):
        bk = b[k]
        if bk != 0:
            for i in range(k + 1, n):
                b[i] -= a[i, k] * bk
    for k in range(n - 1, -1, -1):
        s = b[k]
        for j in range(k + 1, n):
            s -= a[k, j] * b[j]
        b[k] = s / a[k, k]


@njit(cache=True, nogil=True)
def _lu_solve_conj_transpose(a, piv, b):
    # Solve A^H x = b in place (A = P^T L U convention of _lu_complex).
    n = a.shape[0]
    # U^H w = b, forward substitution
    for k in range(n):
        s = b[k]
        for j in range(k):
            s -= np.conj(a[j, k]) * b[j]
        b[k] = s / np.conj(a[k, k])
    # L^H y = w, backward substitution, unit diagonal
    for k in range(n - 1, -1, -1):
        s = b[k]
        for i in range(k + 1, n):
            s -= np.conj(a[i, k]) * b[i]
        b[k] = s
    # x = P^T y: undo the row swaps in reverse order
    for k in range(n - 1, -1, -1):
        p = piv[k]
        if p != k:
            tmp = b[k]
            b[k] = b[p]
            b[p] = tmp


@njit(cache=True, nogil=True)
def smin_complex(a0):
    """Least singular value of a complex square matrix via LU + inverse iteration."""
    n = a0.shape[0]
    if n == 0:
        return 0.0
    amax = 0.0
    for i in range(n):
        for j in range(n):
            v = abs(a0[i, j])
            if v > amax:
                amax = v
    if amax == 0.0:
        return 0.0
    a = a0.copy()
    piv = np.empty(n, np.int64)
    if not _lu_complex(a, piv):
        return 0.0
    # power iteration on (A^H A)^{-1}; largest eigenvalue is 1/smin^2
    b = np.empty(n, np.complex128)
    for i in range(n):
        b[i] = complex(np.cos(0.7 * (i + 1)), np.sin(1.3 * (i + 1) + 0.4))
    nrm = 0.0
    for i in range(n):
        nrm += b[i].real * b[i].real + b[i].imag * b[i].imag
    nrm = np.sqrt(nrm)
    for i in range(n):
        b[i] /= nrm
    lam2 = 0.0
    lam1 = 0.0
    lam = 0.0
    for it in range(300):
        _lu_solve_conj_transpose(a, piv, b)
        _lu_solve(a, piv, b)
        nrm = 0.0
        for i in range(n):
            nrm += b[i].real * b[i].real + b[i].imag * b[i].imag
        lam2 = lam1
        lam1 = lam
        lam = np.sqrt(nrm)
        if not np.isfinite(lam) or lam == 0.0:
            return 0.0
        inv = 1.0 / lam
        for i in range(n):
            b[i] *= inv
        if it >= 2 and abs(lam - lam1) <= 5e-13 * lam:
            break
    # Aitken extrapolation of the geometric tail; a stalled iteration (clustered
    # bottom singular values) otherwise reports a value inside the cluster.
    d1 = lam1 - lam2
    d2 = lam - lam1
    if d1 != 0.0:
        rho = d2 / d1
        if 0.0 < rho < 0.9999:
            lam = lam + d2 * rho / (1.0 - rho)
    return 1.0 / np.sqrt(lam)


@njit(cache=True, nogil=True)
def smin_shifted(m, zr, zi):
    """Least singular value of M - zI for real M and complex z = zr + i zi."""
    n = m.shape[0]
    c = np.empty((n, n), np.complex128)
    z = complex(zr, zi)
    for i in range(n):
        for j in range(n):
            c[i, j] = m[i, j]
        c[i, i] -= z
    return smin_complex(c)


@njit(cache=True, nogil=True)
def contour_min_smin(m, radius, gridpoints):
    """Minimum of smin(M - zI) over an equispaced grid on |z| = radius.

    Returns (min_value, argmin_re, argmin_im)."""
    n = m.shape[0]
    best = np.inf
    best_re = radius
    best_im = 0.0
    c = np.empty((n, n), np.complex128)
    for g in range(gridpoints):
        theta = 2.0 * np.pi * g / gridpoints
        zr = radius * np.cos(theta)
        zi = radius * np.sin(theta)
        z = complex(zr, zi)
        for i in range(n):
            for j in range(n):
                c[i, j] = m[i, j]
            c[i, i] -= z
        s = smin_complex(c)
        if s < best:
            best = s
            best_re = zr
            best_im = zi
    return best, best_re, best_im
