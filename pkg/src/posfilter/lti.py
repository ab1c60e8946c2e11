"""Discrete-time state-space systems.

A single :class:`StateSpace` type represents the plant, the filter and the
filtering error system.  The plant stores its measured and estimated outputs
stacked as ``[y; z]`` inside one system (see :class:`PlantSpec`) so that the
shared ``(A, B)`` pair exists only once.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import _backend


class DimensionError(ValueError):
    """Matrix or vector shapes are inconsistent."""


class SingularResolventError(ArithmeticError):
    """``e^{jw} I - A`` is singular (a pole sits on the unit circle)."""


class UnstableSystemError(ValueError):
    """A Schur-stable system was required."""


def _as_matrix(M, name: str, shape: tuple[int | None, int | None] = (None, None)) -> np.ndarray:
    arr = np.array(M, dtype=float)
    if arr.ndim == 1 and arr.size == 0:
        arr = arr.reshape(0, 0)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be a 2-D matrix, got shape {arr.shape}")
    for got, want in zip(arr.shape, shape):
        if want is not None and got != want:
            raise DimensionError(f"{name} has shape {arr.shape}, expected {shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class StateSpace:
    """Discrete-time system ``x+ = A x + B w``, ``y = C x + D w``.

    ``n = 0`` is allowed and denotes a static gain ``D``.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        D = _as_matrix(self.D, "D")
        p, q = D.shape
        A = np.array(self.A, dtype=float)
        n = 0 if A.size == 0 else A.shape[0]
        object.__setattr__(self, "A", _as_matrix(A.reshape(n, n) if A.size == 0 else A, "A", (n, n)))
        B = np.array(self.B, dtype=float)
        object.__setattr__(self, "B", _as_matrix(B.reshape(n, q) if B.size == 0 else B, "B", (n, q)))
        C = np.array(self.C, dtype=float)
        object.__setattr__(self, "C", _as_matrix(C.reshape(p, n) if C.size == 0 else C, "C", (p, n)))
        object.__setattr__(self, "D", D)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def q(self) -> int:
        return self.B.shape[1]

    @property
    def p(self) -> int:
        return self.C.shape[0]

    @property
    def poles(self) -> np.ndarray:
        return np.linalg.eigvals(self.A) if self.n else np.zeros(0, dtype=complex)

    def is_stable(self) -> bool:
        return spectral_radius(self.A) < 1.0

    def scaled_output(self, alpha: float) -> "StateSpace":
        """The same system with ``C`` and ``D`` multiplied by ``alpha``."""
        return StateSpace(self.A, self.B, alpha * self.C, alpha * self.D)

    def __eq__(self, other):
        if not isinstance(other, StateSpace):
            return NotImplemented
        return all(
            a.shape == b.shape and np.array_equal(a, b)
            for a, b in zip((self.A, self.B, self.C, self.D), (other.A, other.B, other.C, other.D))
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class PlantSpec:
    """Stable plant with outputs stacked as ``[y; z]``.

    Rows ``0..p-1`` of the output matrices are the measurements ``y``, the
    remaining ``m`` rows are the signal ``z`` to be estimated.
    """

    sys: StateSpace
    p: int

    def __post_init__(self):
        total = self.sys.p
        if not 1 <= self.p < total:
            raise DimensionError(
                f"measured-output count p={self.p} must satisfy 1 <= p < {total}"
            )
        rho = spectral_radius(self.sys.A)
        if not rho < 1.0:
            raise UnstableSystemError(f"plant is not Schur-stable (spectral radius {rho:.6g})")

    @classmethod
    def from_matrices(cls, A, B, C, D, L, G) -> "PlantSpec":
        C = np.atleast_2d(np.asarray(C, dtype=float))
        D = np.atleast_2d(np.asarray(D, dtype=float))
        L = np.atleast_2d(np.asarray(L, dtype=float))
        G = np.atleast_2d(np.asarray(G, dtype=float))
        if C.shape[1:] != L.shape[1:] or D.shape[1:] != G.shape[1:]:
            raise DimensionError("C/L and D/G must have matching column counts")
        if C.shape[0] != D.shape[0] or L.shape[0] != G.shape[0]:
            raise DimensionError("C/D and L/G must have matching row counts")
        return cls(StateSpace(A, B, np.vstack([C, L]), np.vstack([D, G])), C.shape[0])

    @property
    def m(self) -> int:
        return self.sys.p - self.p

    @property
    def n(self) -> int:
        return self.sys.n

    @property
    def q(self) -> int:
        return self.sys.q

    A = property(lambda self: self.sys.A)
    B = property(lambda self: self.sys.B)
    C = property(lambda self: self.sys.C[: self.p])
    D = property(lambda self: self.sys.D[: self.p])
    L = property(lambda self: self.sys.C[self.p :])
    G = property(lambda self: self.sys.D[self.p :])

    def is_positive(self) -> bool:
        """Diagnostic only; plant positivity is never enforced."""
        return all(is_nonnegative(M) for M in (self.sys.A, self.sys.B, self.sys.C, self.sys.D))


@dataclass(frozen=True)
class SimulationTrace:
    states: np.ndarray  # (K+1, n)
    outputs: np.ndarray  # (K, p)
    inputs: np.ndarray = field(repr=False)  # (K, q)

    @property
    def horizon(self) -> int:
        return self.outputs.shape[0]


def spectral_radius(A) -> float:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"spectral radius needs a square matrix, got shape {A.shape}")
    if A.size == 0:
        return 0.0
    if A.shape[0] == 1:
        return abs(float(A[0, 0]))
    return float(np.max(np.abs(np.linalg.eigvals(A))))


def is_nonnegative(M, tol: float = 0.0) -> bool:
    return bool(np.all(np.asarray(M, dtype=float) >= -tol))


def assemble_error_system(plant: PlantSpec, filt) -> StateSpace:
    """Filtering error system from ``w`` to ``e = z - zhat``.

    ``filt`` is any object with ``Ahat, Bhat, Chat, Dhat`` matrices.  Plant
    states come first in the stacked state ``[x; xhat]``.
    """
    Ah, Bh, Ch, Dh = filt.Ahat, filt.Bhat, filt.Chat, filt.Dhat
    nh = Ah.shape[0]
    if Bh.shape != (nh, plant.p) or Ch.shape != (plant.m, nh) or Dh.shape != (plant.m, plant.p):
        raise DimensionError(
            f"filter shapes Ahat{Ah.shape} Bhat{Bh.shape} Chat{Ch.shape} Dhat{Dh.shape} "
            f"do not fit plant with p={plant.p}, m={plant.m}"
        )
    A, B, C, D, L, G = plant.A, plant.B, plant.C, plant.D, plant.L, plant.G
    n = plant.n
    Af = np.block([[A, np.zeros((n, nh))], [Bh @ C, Ah]])
    Bf = np.vstack([B, Bh @ D])
    Cf = np.hstack([L - Dh @ C, -Ch])
    Df = G - Dh @ D
    return StateSpace(Af, Bf, Cf, Df)


def frequency_response(sys: StateSpace, omega: float) -> np.ndarray:
    """``C (e^{jw} I - A)^{-1} B + D`` as a complex ``p x q`` matrix."""
    if sys.n == 0:
        return sys.D.astype(complex)
    M = np.exp(1j * omega) * np.eye(sys.n) - sys.A
    try:
        X = np.linalg.solve(M, sys.B.astype(complex))
    except np.linalg.LinAlgError as exc:
        raise SingularResolventError(f"resolvent singular at omega={omega}") from exc
    if np.linalg.cond(M) > 1e15:
        raise SingularResolventError(f"resolvent numerically singular at omega={omega}")
    return sys.C @ X + sys.D


InputSignal = Callable[[int], Sequence[float]] | Iterable[Sequence[float]] | np.ndarray


def _input_matrix(w: InputSignal, K: int, q: int) -> np.ndarray:
    if callable(w):
        W = np.array([np.asarray(w(k), dtype=float).ravel() for k in range(K)], dtype=float)
    else:
        W = np.asarray(w if isinstance(w, np.ndarray) else list(w), dtype=float)
    if W.size == 0 and q == 0:
        W = np.zeros((K, 0))
    elif W.ndim == 1 and q == 1:
        W = W.reshape(-1, 1)
    if W.shape != (K, q):
        raise DimensionError(f"inputs must have shape ({K}, {q}), got {W.shape}")
    return W


def simulate(sys: StateSpace, xi0, w: InputSignal, K: int) -> SimulationTrace:
    """Run ``xi[k+1] = A xi[k] + B w[k]``, ``e[k] = C xi[k] + D w[k]`` for ``k < K``.

    ``w`` is a callable ``k -> w_k``, or an array/iterable of ``K`` rows.
    """
    if K < 1:
        raise ValueError("horizon K must be positive")
    xi0 = np.asarray(xi0, dtype=float).ravel()
    if xi0.shape != (sys.n,):
        raise DimensionError(f"initial state has length {xi0.size}, system order is {sys.n}")
    W = _input_matrix(w, K, sys.q)
    states, outputs = _backend.kernels().simulate(sys.A, sys.B, sys.C, sys.D, xi0, W)
    return SimulationTrace(states, outputs, W)


def default_disturbance(k: int) -> np.ndarray:
    """Benchmark disturbance ``w_k = [1/(1 + 0.25 k), exp(-0.02 k)]``."""
    return np.array([1.0 / (1.0 + 0.25 * k), np.exp(-0.02 * k)])
