"""Pure numpy kernels, used when the compiled extension is unavailable.

Each function matches the compiled kernel's contract to floating-point
round-off.
"""

import numpy as np

NAME = "python"
MAX_GOLDEN_STEPS = 200


def _responses(A, B, C, D, omegas):
    omegas = np.asarray(omegas, dtype=float)
    n = A.shape[0]
    if n == 0:
        return np.broadcast_to(D.astype(complex), (omegas.size,) + D.shape)
    M = np.exp(1j * omegas)[:, None, None] * np.eye(n) - A
    try:
        X = np.linalg.solve(M, np.broadcast_to(B.astype(complex), (omegas.size,) + B.shape))
    except np.linalg.LinAlgError as exc:
        raise ZeroDivisionError("singular resolvent") from exc
    return C @ X + D


def _sigmas(G):
    if G.shape[1] == 1 or G.shape[2] == 1:
        return np.sqrt(np.sum(G.real**2 + G.imag**2, axis=(1, 2)))
    return np.linalg.svd(G, compute_uv=False)[:, 0]


def sigma_max_grid(A, B, C, D, omegas, cutoff=float("inf")):
    """Largest singular value at each frequency, stopping after the first
    sample strictly above ``cutoff``.

    Returns the evaluated prefix; it is shorter than ``omegas`` exactly when
    the last entry exceeds ``cutoff``.
    """
    s = _sigmas(_responses(A, B, C, D, omegas))
    above = np.flatnonzero(s > cutoff)
    if above.size:
        return s[: above[0] + 1]
    return s


def sigma_max_one(A, B, C, D, omega):
    return float(sigma_max_grid(A, B, C, D, np.array([omega]))[0])


def refine_peak(A, B, C, D, lo, hi, tol, bracket_tol):
    """Golden-section maximisation of the largest singular value on
    ``[lo, hi]``.

    Stops once the bracket is narrower than ``bracket_tol`` and the best value
    moved by less than ``tol * (1 + best)`` in the last step.  Returns
    ``(omega, value)`` of the better interior point.
    """
    invphi = (5.0**0.5 - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc = sigma_max_one(A, B, C, D, c)
    fd = sigma_max_one(A, B, C, D, d)
    best = max(fc, fd)
    for _ in range(MAX_GOLDEN_STEPS):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = sigma_max_one(A, B, C, D, c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = sigma_max_one(A, B, C, D, d)
        new_best = max(fc, fd)
        change = abs(new_best - best)
        best = max(best, new_best)
        if b - a < bracket_tol and change < tol * (1.0 + best):
            break
    return (c, fc) if fc >= fd else (d, fd)


def simulate(A, B, C, D, xi0, W):
    """States ``(K+1, n)`` and outputs ``(K, p)`` of the forced recursion."""
    K = W.shape[0]
    states = np.empty((K + 1, A.shape[0]))
    states[0] = xi0
    BW = W @ B.T
    for k in range(K):
        states[k + 1] = A @ states[k] + BW[k]
    outputs = states[:-1] @ C.T + W @ D.T
    return states, outputs
