# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for frequency sweeps and time-domain simulation.

Same contract as :mod:`posfilter._kernels_py`; see there for semantics.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, cos, sin, fabs
from libc.stdlib cimport malloc, free

cnp.import_array()

NAME = "compiled"
cdef int MAX_GOLDEN_STEPS = 200

ctypedef double complex cplx


cdef double _sym_max_eig(double* S, int N) noexcept nogil:
    # cyclic Jacobi on a real symmetric N x N matrix stored row-major (destroyed)
    cdef int sweep, i, j, k
    cdef double off, theta, t, c, s, tau, aij, aii, ajj, aki, akj, best
    for sweep in range(60):
        off = 0.0
        for i in range(N):
            for j in range(i + 1, N):
                off += S[i * N + j] * S[i * N + j]
        if off < 1e-30:
            break
        for i in range(N):
            for j in range(i + 1, N):
                aij = S[i * N + j]
                if fabs(aij) < 1e-300:
                    continue
                aii = S[i * N + i]
                ajj = S[j * N + j]
                theta = (ajj - aii) / (2.0 * aij)
                t = (1.0 if theta >= 0 else -1.0) / (fabs(theta) + sqrt(theta * theta + 1.0))
                c = 1.0 / sqrt(t * t + 1.0)
                s = t * c
                tau = s / (1.0 + c)
                S[i * N + i] = aii - t * aij
                S[j * N + j] = ajj + t * aij
                S[i * N + j] = 0.0
                S[j * N + i] = 0.0
                for k in range(N):
                    if k != i and k != j:
                        aki = S[k * N + i]
                        akj = S[k * N + j]
                        S[k * N + i] = aki - s * (akj + tau * aki)
                        S[i * N + k] = S[k * N + i]
                        S[k * N + j] = akj + s * (aki - tau * akj)
                        S[j * N + k] = S[k * N + j]
    best = S[0]
    for i in range(1, N):
        if S[i * N + i] > best:
            best = S[i * N + i]
    return best


cdef double _sigma_max(cplx* G, int p, int q, double* work) noexcept nogil:
    # largest singular value of a row-major p x q complex matrix
    cdef int i, j, k, r, kk, N
    cdef cplx acc
    cdef double a, d, tot
    if p == 1 or q == 1:
        tot = 0.0
        for i in range(p * q):
            tot += G[i].real * G[i].real + G[i].imag * G[i].imag
        return sqrt(tot)
    # H = G G^H (p <= q) or G^H G, size kk x kk
    kk = p if p <= q else q
    N = 2 * kk
    cdef cplx* H = <cplx*> (work + N * N)
    for i in range(kk):
        for j in range(kk):
            acc = 0
            if p <= q:
                for r in range(q):
                    acc = acc + G[i * q + r] * G[j * q + r].conjugate()
            else:
                for r in range(p):
                    acc = acc + G[r * q + i].conjugate() * G[r * q + j]
            H[i * kk + j] = acc
    if kk == 2:
        a = H[0].real
        d = H[3].real
        tot = 0.5 * (a + d) + sqrt(0.25 * (a - d) * (a - d) + H[1].real * H[1].real + H[1].imag * H[1].imag)
        return sqrt(tot if tot > 0 else 0.0)
    # real symmetric embedding [[X, -Y], [Y, X]] of H = X + iY
    for i in range(kk):
        for j in range(kk):
            work[i * N + j] = H[i * kk + j].real
            work[(i + kk) * N + (j + kk)] = H[i * kk + j].real
            work[i * N + (j + kk)] = -H[i * kk + j].imag
            work[(i + kk) * N + j] = H[i * kk + j].imag
    tot = _sym_max_eig(work, N)
    return sqrt(tot if tot > 0 else 0.0)


cdef int _response(const double[:, ::1] A, const double[:, ::1] B, const double[:, ::1] C,
                   const double[:, ::1] D, double omega, cplx* M, cplx* X, cplx* G) noexcept nogil:
    # G = C (e^{jw} I - A)^{-1} B + D; returns -1 on a zero pivot
    cdef int n = A.shape[0], q = B.shape[1], p = C.shape[0]
    cdef int i, j, k, piv
    cdef cplx z = cos(omega) + 1j * sin(omega)
    cdef cplx f, tmp, inv
    cdef double best, mag
    for i in range(n):
        for j in range(n):
            M[i * n + j] = -A[i, j]
        M[i * n + i] = M[i * n + i] + z
        for j in range(q):
            X[i * q + j] = B[i, j]
    for k in range(n):
        piv = k
        best = M[k * n + k].real * M[k * n + k].real + M[k * n + k].imag * M[k * n + k].imag
        for i in range(k + 1, n):
            mag = M[i * n + k].real * M[i * n + k].real + M[i * n + k].imag * M[i * n + k].imag
            if mag > best:
                best = mag
                piv = i
        if best == 0.0:
            return -1
        if piv != k:
            for j in range(n):
                tmp = M[k * n + j]
                M[k * n + j] = M[piv * n + j]
                M[piv * n + j] = tmp
            for j in range(q):
                tmp = X[k * q + j]
                X[k * q + j] = X[piv * q + j]
                X[piv * q + j] = tmp
        inv = 1.0 / M[k * n + k]
        M[k * n + k] = inv
        for i in range(k + 1, n):
            f = M[i * n + k] * inv
            if f == 0:
                continue
            for j in range(k + 1, n):
                M[i * n + j] = M[i * n + j] - f * M[k * n + j]
            for j in range(q):
                X[i * q + j] = X[i * q + j] - f * X[k * q + j]
    for k in range(n - 1, -1, -1):
        for j in range(q):
            tmp = X[k * q + j]
            for i in range(k + 1, n):
                tmp = tmp - M[k * n + i] * X[i * q + j]
            X[k * q + j] = tmp * M[k * n + k]
    for i in range(p):
        for j in range(q):
            tmp = D[i, j]
            for k in range(n):
                tmp = tmp + C[i, k] * X[k * q + j]
            G[i * q + j] = tmp
    return 0


def sigma_max_grid(A, B, C, D, omegas, double cutoff=float("inf")):
    """Largest singular value at each frequency, stopping after the first
    sample strictly above ``cutoff``.

    Returns the evaluated prefix; it is shorter than ``omegas`` exactly when
    the last entry exceeds ``cutoff``.
    """
    cdef const double[:, ::1] A_ = np.ascontiguousarray(A, dtype=np.float64)
    cdef const double[:, ::1] B_ = np.ascontiguousarray(B, dtype=np.float64)
    cdef const double[:, ::1] C_ = np.ascontiguousarray(C, dtype=np.float64)
    cdef const double[:, ::1] D_ = np.ascontiguousarray(D, dtype=np.float64)
    cdef const double[::1] w = np.ascontiguousarray(omegas, dtype=np.float64)
    cdef int n = A_.shape[0], q = B_.shape[1], p = C_.shape[0]
    cdef Py_ssize_t N = w.shape[0], i, count = 0
    out = np.empty(N, dtype=np.float64)
    cdef double[::1] out_ = out
    cdef int kk = p if p <= q else q
    cdef cplx* M = <cplx*> malloc((n * n + 1) * sizeof(cplx))
    cdef cplx* X = <cplx*> malloc((n * q + 1) * sizeof(cplx))
    cdef cplx* G = <cplx*> malloc((p * q + 1) * sizeof(cplx))
    cdef double* work = <double*> malloc((4 * kk * kk + 2 * kk * kk + 8) * sizeof(double))
    cdef int status = 0
    cdef double s
    try:
        with nogil:
            for i in range(N):
                if _response(A_, B_, C_, D_, w[i], M, X, G) != 0:
                    status = -1
                    break
                s = _sigma_max(G, p, q, work)
                out_[i] = s
                count = i + 1
                if s > cutoff:
                    break
    finally:
        free(M)
        free(X)
        free(G)
        free(work)
    if status != 0:
        raise ZeroDivisionError(f"singular resolvent at omega={w[count]}")
    return out[:count]


def sigma_max_one(A, B, C, D, double omega):
    return float(sigma_max_grid(A, B, C, D, np.array([omega]))[0])


cdef double _sig_at(const double[:, ::1] A, const double[:, ::1] B, const double[:, ::1] C,
                    const double[:, ::1] D, double omega, cplx* M, cplx* X, cplx* G,
                    double* work, int* status) noexcept nogil:
    if _response(A, B, C, D, omega, M, X, G) != 0:
        status[0] = -1
        return 0.0
    return _sigma_max(G, C.shape[0], B.shape[1], work)


def refine_peak(A, B, C, D, double lo, double hi, double tol, double bracket_tol):
    """Golden-section maximisation of the largest singular value on
    ``[lo, hi]``.

    Stops once the bracket is narrower than ``bracket_tol`` and the best value
    moved by less than ``tol * (1 + best)`` in the last step.  Returns
    ``(omega, value)`` of the better interior point.
    """
    cdef const double[:, ::1] A_ = np.ascontiguousarray(A, dtype=np.float64)
    cdef const double[:, ::1] B_ = np.ascontiguousarray(B, dtype=np.float64)
    cdef const double[:, ::1] C_ = np.ascontiguousarray(C, dtype=np.float64)
    cdef const double[:, ::1] D_ = np.ascontiguousarray(D, dtype=np.float64)
    cdef int n = A_.shape[0], q = B_.shape[1], p = C_.shape[0]
    cdef int kk = p if p <= q else q
    cdef cplx* M = <cplx*> malloc((n * n + 1) * sizeof(cplx))
    cdef cplx* X = <cplx*> malloc((n * q + 1) * sizeof(cplx))
    cdef cplx* G = <cplx*> malloc((p * q + 1) * sizeof(cplx))
    cdef double* work = <double*> malloc((4 * kk * kk + 2 * kk * kk + 8) * sizeof(double))
    cdef int status = 0
    cdef double invphi = (sqrt(5.0) - 1.0) / 2.0
    cdef double a = lo, b = hi, c, d, fc, fd, best, new_best, change
    cdef int steps = 0
    try:
        with nogil:
            c = b - invphi * (b - a)
            d = a + invphi * (b - a)
            fc = _sig_at(A_, B_, C_, D_, c, M, X, G, work, &status)
            fd = _sig_at(A_, B_, C_, D_, d, M, X, G, work, &status)
            best = fc if fc > fd else fd
            while status == 0 and steps < MAX_GOLDEN_STEPS:
                steps += 1
                if fc >= fd:
                    b = d
                    d = c
                    fd = fc
                    c = b - invphi * (b - a)
                    fc = _sig_at(A_, B_, C_, D_, c, M, X, G, work, &status)
                else:
                    a = c
                    c = d
                    fc = fd
                    d = a + invphi * (b - a)
                    fd = _sig_at(A_, B_, C_, D_, d, M, X, G, work, &status)
                new_best = fc if fc > fd else fd
                change = fabs(new_best - best)
                if new_best > best:
                    best = new_best
                if b - a < bracket_tol and change < tol * (1.0 + best):
                    break
    finally:
        free(M)
        free(X)
        free(G)
        free(work)
    if status != 0:
        raise ZeroDivisionError("singular resolvent during refinement")
    if fc >= fd:
        return c, fc
    return d, fd


def simulate(A, B, C, D, xi0, W):
    """States ``(K+1, n)`` and outputs ``(K, p)`` of the forced recursion."""
    cdef const double[:, ::1] A_ = np.ascontiguousarray(A, dtype=np.float64)
    cdef const double[:, ::1] B_ = np.ascontiguousarray(B, dtype=np.float64)
    cdef const double[:, ::1] C_ = np.ascontiguousarray(C, dtype=np.float64)
    cdef const double[:, ::1] D_ = np.ascontiguousarray(D, dtype=np.float64)
    cdef const double[:, ::1] W_ = np.ascontiguousarray(W, dtype=np.float64)
    cdef int n = A_.shape[0], q = B_.shape[1], p = C_.shape[0]
    cdef Py_ssize_t K = W_.shape[0], k
    cdef int i, j
    cdef double acc
    states = np.empty((K + 1, n), dtype=np.float64)
    outputs = np.empty((K, p), dtype=np.float64)
    cdef double[:, ::1] X = states
    cdef double[:, ::1] Y = outputs
    cdef const double[::1] x0 = np.ascontiguousarray(xi0, dtype=np.float64)
    for i in range(n):
        X[0, i] = x0[i]
    with nogil:
        for k in range(K):
            for i in range(p):
                acc = 0.0
                for j in range(n):
                    acc = acc + C_[i, j] * X[k, j]
                for j in range(q):
                    acc = acc + D_[i, j] * W_[k, j]
                Y[k, i] = acc
            for i in range(n):
                acc = 0.0
                for j in range(n):
                    acc = acc + A_[i, j] * X[k, j]
                for j in range(q):
                    acc = acc + B_[i, j] * W_[k, j]
                X[k + 1, i] = acc
    return states, outputs
