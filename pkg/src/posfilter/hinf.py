"""H-infinity norm of stable discrete-time systems.

The norm is found in two phases.  A uniform grid over ``[0, pi]``, seeded
with the pole angles of ``A``, locates the peaks of the largest singular
value; each local maximum of the sampled curve is then polished by
golden-section search.  An optional cutoff stops the sweep at the first
sample exceeding it, which is all an optimizer needs to reject a trial
point.

Peaks narrower than the grid spacing that sit far from every pole angle can
be missed.  The seeding makes this unlikely for the lightly damped, low-order
systems this package targets, and the test suite checks agreement with a
dense brute-force sweep.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from .lti import SingularResolventError, StateSpace, UnstableSystemError, frequency_response

__all__ = ["NormKind", "NormResult", "hinf_norm", "sigma_max_at"]

DEFAULT_TOL = 1e-7
GRID_SIZE = 1024
BRACKET_TOL = 1e-9
MAX_REFINED_PEAKS = 64


class NormKind(enum.Enum):
    VALUE = "value"
    EXCEEDS_CUTOFF = "exceeds_cutoff"


@dataclass(frozen=True)
class NormResult:
    """Norm value, or a certified lower bound above the cutoff."""

    kind: NormKind
    value: float
    peak_frequency: float

    @property
    def exceeds_cutoff(self) -> bool:
        return self.kind is NormKind.EXCEEDS_CUTOFF


def sigma_max_at(sys: StateSpace, omega: float) -> float:
    """Largest singular value of the frequency response at ``omega``."""
    G = frequency_response(sys, omega)
    if G.size == 0:
        return 0.0
    return float(np.linalg.svd(G, compute_uv=False)[0])


def hinf_norm(
    sys: StateSpace,
    tol: float = DEFAULT_TOL,
    cutoff: float | None = None,
    grid_size: int = GRID_SIZE,
) -> NormResult:
    """H-infinity norm of a Schur-stable system.

    With ``cutoff`` set, the result is ``EXCEEDS_CUTOFF`` as soon as one
    frequency sample is strictly larger than ``cutoff``; its ``value`` is
    then only a lower bound on the norm.

    Raises :class:`UnstableSystemError` when ``sys`` is not Schur-stable;
    callers are expected to screen for stability first.
    """
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if sys.n == 0:
        s = float(np.linalg.svd(sys.D, compute_uv=False)[0]) if sys.D.size else 0.0
        if cutoff is not None and s > cutoff:
            return NormResult(NormKind.EXCEEDS_CUTOFF, s, 0.0)
        return NormResult(NormKind.VALUE, s, 0.0)

    poles = np.linalg.eigvals(sys.A)
    rho = float(np.max(np.abs(poles)))
    if not rho < 1.0:
        raise UnstableSystemError(f"system is not Schur-stable (spectral radius {rho:.6g})")

    kern = _backend.kernels()
    A, B, C, D = sys.A, sys.B, sys.C, sys.D
    # pole angles first: with a cutoff, the likely peaks are tried early
    pole_angles = np.unique(np.abs(np.angle(poles)))
    order = np.concatenate([pole_angles, np.linspace(0.0, np.pi, grid_size)])
    limit = math.inf if cutoff is None else float(cutoff)
    try:
        samples = kern.sigma_max_grid(A, B, C, D, order, limit)
    except ZeroDivisionError as exc:
        raise SingularResolventError(str(exc)) from exc
    if samples.size < order.size:
        return NormResult(NormKind.EXCEEDS_CUTOFF, float(samples[-1]), float(order[samples.size - 1]))

    omegas, idx = np.unique(order, return_index=True)
    values = samples[idx]
    i_best = int(np.argmax(values))
    best_w, best_v = float(omegas[i_best]), float(values[i_best])

    last = omegas.size - 1
    left = np.concatenate([[True], values[1:] > values[:-1]]) if last else np.array([True])
    right = np.concatenate([values[:-1] >= values[1:], [True]]) if last else np.array([True])
    peaks = np.flatnonzero(left & right)
    peaks = peaks[np.argsort(-values[peaks], kind="stable")][:MAX_REFINED_PEAKS]

    for i in peaks:
        lo = float(omegas[max(i - 1, 0)])
        hi = float(omegas[min(i + 1, last)])
        if hi <= lo:
            continue
        try:
            w, v = kern.refine_peak(A, B, C, D, lo, hi, tol, BRACKET_TOL)
        except ZeroDivisionError as exc:
            raise SingularResolventError(str(exc)) from exc
        if v > best_v:
            best_w, best_v = w, v
    return NormResult(NormKind.VALUE, float(best_v), float(best_w))
