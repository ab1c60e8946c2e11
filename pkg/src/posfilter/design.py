"""Positive reduced-order filter design by direct search.

The decision vector holds the entries of ``Ahat, Bhat, Chat, Dhat`` (each
row-major, in that order).  A point is feasible when every entry is
nonnegative and ``Ahat`` is Schur-stable; since the plant is stable this is
exactly when the error system is stable.  Infeasible points score
``math.inf``.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .hinf import DEFAULT_TOL, hinf_norm
from .lti import (
    DimensionError,
    InputSignal,
    PlantSpec,
    _input_matrix,
    assemble_error_system,
    default_disturbance,
    simulate,
    spectral_radius,
)
from .search import (
    INFEASIBLE,
    SAMPLER_BUDGET,
    BenchmarkReport,
    Method,
    OptimizerOptions,
    SamplerExhaustedError,
    multi_start,
)

log = logging.getLogger(__name__)

# open unit interval used for random starting entries
SAMPLE_LOW = 2.0**-53
SAMPLE_HIGH = 1.0 - 2.0**-53
DEFAULT_THRESHOLDS = (0.1415, 0.0448)
DEFAULT_SIM_HORIZON = 100


def _matrix(M, shape, name) -> np.ndarray:
    arr = np.array(M, dtype=float)
    if arr.size == 0:
        arr = arr.reshape(shape)
    arr = np.atleast_2d(arr) if arr.ndim < 2 else arr
    if arr.shape != shape:
        raise DimensionError(f"{name} has shape {arr.shape}, expected {shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class FilterParams:
    """Filter ``xhat+ = Ahat xhat + Bhat y``, ``zhat = Chat xhat + Dhat y``."""

    Ahat: np.ndarray
    Bhat: np.ndarray
    Chat: np.ndarray
    Dhat: np.ndarray

    def __post_init__(self):
        Dh = np.atleast_2d(np.array(self.Dhat, dtype=float))
        m, p = Dh.shape
        Ah = np.array(self.Ahat, dtype=float)
        nh = 0 if Ah.size == 0 else int(round(math.sqrt(Ah.size)))
        object.__setattr__(self, "Ahat", _matrix(Ah, (nh, nh), "Ahat"))
        object.__setattr__(self, "Bhat", _matrix(self.Bhat, (nh, p), "Bhat"))
        object.__setattr__(self, "Chat", _matrix(self.Chat, (m, nh), "Chat"))
        object.__setattr__(self, "Dhat", _matrix(Dh, (m, p), "Dhat"))

    @property
    def order(self) -> int:
        return self.Ahat.shape[0]

    @property
    def p(self) -> int:
        return self.Dhat.shape[1]

    @property
    def m(self) -> int:
        return self.Dhat.shape[0]

    def matrices(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        return self.Ahat, self.Bhat, self.Chat, self.Dhat

    def is_feasible(self) -> bool:
        return all(np.all(M >= 0) for M in self.matrices()) and spectral_radius(self.Ahat) < 1.0

    def static_part(self) -> "FilterParams":
        """The zero-order filter keeping only ``Dhat``."""
        return FilterParams(np.zeros((0, 0)), np.zeros((0, self.p)), np.zeros((self.m, 0)), self.Dhat)

    def __eq__(self, other):
        if not isinstance(other, FilterParams):
            return NotImplemented
        return all(
            a.shape == b.shape and np.array_equal(a, b)
            for a, b in zip(self.matrices(), other.matrices())
        )

    __hash__ = None


@dataclass(frozen=True)
class ThetaLayout:
    """Shape of the decision vector for a filter of a given order.

    With ``fix_c`` (only for a first-order filter with one estimated output)
    ``Chat`` is pinned to 1 and left out of the vector.
    """

    order: int
    p: int
    m: int
    fix_c: bool = False

    def __post_init__(self):
        if self.order < 0 or self.p < 1 or self.m < 1:
            raise DimensionError(f"invalid filter dimensions {self}")
        if self.fix_c and (self.order, self.m) != (1, 1):
            raise ValueError("Chat normalisation needs a first-order filter with m = 1")

    @classmethod
    def for_plant(cls, plant: PlantSpec, order: int, fix_c: bool = False) -> "ThetaLayout":
        return cls(order, plant.p, plant.m, fix_c)

    @property
    def shapes(self) -> list[tuple[int, int]]:
        nh, p, m = self.order, self.p, self.m
        return [(nh, nh), (nh, p), (m, nh), (m, p)]

    @property
    def size(self) -> int:
        sizes = [r * c for r, c in self.shapes]
        if self.fix_c:
            sizes[2] = 0
        return sum(sizes)

    def pack(self, filt: FilterParams) -> np.ndarray:
        if [M.shape for M in filt.matrices()] != self.shapes:
            raise DimensionError(f"filter shapes do not match layout {self}")
        parts = [M.ravel() for M in filt.matrices()]
        if self.fix_c:
            parts[2] = parts[2][:0]
        return np.concatenate(parts)

    def unpack(self, theta) -> FilterParams:
        theta = np.asarray(theta, dtype=float).ravel()
        if theta.size != self.size:
            raise DimensionError(f"decision vector has length {theta.size}, expected {self.size}")
        mats, pos = [], 0
        for k, (r, c) in enumerate(self.shapes):
            if k == 2 and self.fix_c:
                mats.append(np.ones((r, c)))
                continue
            mats.append(theta[pos : pos + r * c].reshape(r, c))
            pos += r * c
        return FilterParams(*mats)


def pack(filt: FilterParams) -> np.ndarray:
    """Canonical decision vector of ``filt``."""
    return ThetaLayout(filt.order, filt.p, filt.m).pack(filt)


def unpack(theta, order: int, p: int, m: int) -> FilterParams:
    return ThetaLayout(order, p, m).unpack(theta)


def _feasible_filter(theta: np.ndarray, layout: ThetaLayout) -> FilterParams | None:
    if theta.size != layout.size:
        raise DimensionError(f"decision vector has length {theta.size}, expected {layout.size}")
    if not np.all(theta >= 0):
        return None
    filt = layout.unpack(theta)
    if not spectral_radius(filt.Ahat) < 1.0:
        return None
    return filt


class HInfObjective:
    """H-infinity norm of the error system, ``inf`` off the feasible set.

    When called with ``cutoff``, a value above the cutoff may be a lower
    bound of the true norm; re-evaluate without it before reporting.
    """

    def __init__(self, plant: PlantSpec, layout: ThetaLayout, norm_tol: float = DEFAULT_TOL):
        if (layout.p, layout.m) != (plant.p, plant.m):
            raise DimensionError("layout does not match the plant outputs")
        self.plant = plant
        self.layout = layout
        self.norm_tol = norm_tol

    def __call__(self, theta, cutoff: float | None = None) -> float:
        filt = _feasible_filter(np.asarray(theta, dtype=float).ravel(), self.layout)
        if filt is None:
            return INFEASIBLE
        sys = assemble_error_system(self.plant, filt)
        return hinf_norm(sys, self.norm_tol, cutoff).value


def hinf_objective(theta, plant: PlantSpec, order: int, norm_tol: float = DEFAULT_TOL,
                   cutoff: float | None = None) -> float:
    return HInfObjective(plant, ThetaLayout.for_plant(plant, order), norm_tol)(theta, cutoff)


class SimulationObjective:
    """Sum over the horizon of the absolute estimation errors ``|e_k|``
    (all components), ``inf`` off the feasible set."""

    def __init__(self, plant: PlantSpec, layout: ThetaLayout, xi0, w: InputSignal, horizon: int):
        self.plant = plant
        self.layout = layout
        self.horizon = int(horizon)
        self.xi0 = np.asarray(xi0, dtype=float).ravel()
        if self.xi0.size != plant.n + layout.order:
            raise DimensionError(
                f"initial error-system state has length {self.xi0.size}, "
                f"expected {plant.n + layout.order}"
            )
        self.inputs = _input_matrix(w, self.horizon, plant.q)

    def __call__(self, theta) -> float:
        filt = _feasible_filter(np.asarray(theta, dtype=float).ravel(), self.layout)
        if filt is None:
            return INFEASIBLE
        trace = simulate(assemble_error_system(self.plant, filt), self.xi0, self.inputs, self.horizon)
        return float(np.abs(trace.outputs).sum())


def simulation_objective(theta, plant: PlantSpec, order: int, xi0, w: InputSignal,
                         horizon: int = DEFAULT_SIM_HORIZON) -> float:
    layout = ThetaLayout.for_plant(plant, order)
    return SimulationObjective(plant, layout, xi0, w, horizon)(theta)


def random_initial_filter(rng: np.random.Generator, order: int, p: int, m: int,
                          budget: int = SAMPLER_BUDGET) -> FilterParams:
    """Filter with entries uniform on ``[2**-53, 1 - 2**-53]``.

    Draws are repeated until ``Ahat`` is Schur-stable, at most ``budget``
    times; a first-order filter always succeeds on the first draw.
    """
    layout = ThetaLayout(order, p, m)
    for _ in range(budget):
        theta = rng.uniform(SAMPLE_LOW, SAMPLE_HIGH, layout.size)
        filt = layout.unpack(theta)
        if spectral_radius(filt.Ahat) < 1.0:
            return filt
    raise SamplerExhaustedError(f"no stable random Ahat of order {order} in {budget} draws")


class FilterSampler:
    """Random feasible decision vectors, for :func:`~posfilter.search.multi_start`."""

    def __init__(self, layout: ThetaLayout, budget: int = SAMPLER_BUDGET):
        self.layout = layout
        self.budget = budget

    def __call__(self, rng: np.random.Generator) -> np.ndarray:
        L = self.layout
        filt = random_initial_filter(rng, L.order, L.p, L.m, self.budget)
        return L.pack(filt)


class _FixedStart:
    def __init__(self, theta):
        self.theta = np.asarray(theta, dtype=float)

    def __call__(self, rng):
        return self.theta.copy()


class ObjectiveKind(str, enum.Enum):
    HINF = "hinf"
    SIM_L1 = "sim-l1"


@dataclass(frozen=True)
class DesignConfig:
    method: Method = Method.NM_RESTART
    opts: OptimizerOptions = field(default_factory=OptimizerOptions)
    starts: int = 3
    seed: int = 0
    objective: ObjectiveKind = ObjectiveKind.HINF
    sim_horizon: int = DEFAULT_SIM_HORIZON
    sim_xi0: Sequence[float] | None = None
    sim_input: InputSignal | None = None
    norm_tol: float = DEFAULT_TOL
    fix_c_normalization: bool = False
    thresholds: Sequence[float] = DEFAULT_THRESHOLDS
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        object.__setattr__(self, "objective", ObjectiveKind(self.objective))
        if self.starts < 1:
            raise ValueError("starts must be at least 1")
        if not self.norm_tol > 0:
            raise ValueError("norm_tol must be positive")
        if self.sim_horizon < 1:
            raise ValueError("sim_horizon must be positive")


class Design(NamedTuple):
    filter: FilterParams
    objective: float
    report: BenchmarkReport


def make_objective(plant: PlantSpec, layout: ThetaLayout, config: DesignConfig):
    if config.objective is ObjectiveKind.HINF:
        return HInfObjective(plant, layout, config.norm_tol)
    xi0 = np.zeros(plant.n + layout.order) if config.sim_xi0 is None else config.sim_xi0
    w = config.sim_input
    if w is None:
        if plant.q != 2:
            raise DimensionError("the built-in disturbance has 2 channels; pass sim_input")
        w = default_disturbance
    return SimulationObjective(plant, layout, xi0, w, config.sim_horizon)


def design_filter(plant: PlantSpec, order: int, config: DesignConfig | None = None,
                  initial: FilterParams | None = None) -> Design:
    """Best filter of the given order over ``config.starts`` random starts.

    With ``initial``, a single optimisation is run from that filter instead.
    The returned objective is recomputed from scratch for the returned
    filter.
    """
    config = config or DesignConfig()
    fix_c = config.fix_c_normalization
    if fix_c and (order, plant.m) != (1, 1):
        log.warning("Chat normalisation ignored: needs order 1 and one estimated output")
        fix_c = False
    layout = ThetaLayout.for_plant(plant, order, fix_c)
    f = make_objective(plant, layout, config)

    if initial is not None:
        start = layout.pack(_with_unit_c(initial) if fix_c else initial)
        sampler, K = _FixedStart(start), 1
    else:
        sampler, K = FilterSampler(layout), config.starts
    report = multi_start(
        config.method, f, sampler, K, seed=config.seed, thresholds=config.thresholds,
        opts=config.opts, workers=config.workers,
    )
    best = layout.unpack(report.best.x)
    if isinstance(f, HInfObjective):
        value = hinf_norm(assemble_error_system(plant, best), config.norm_tol).value
    else:
        value = f(layout.pack(best))
    return Design(best, value, report)


def _with_unit_c(filt: FilterParams) -> FilterParams:
    # state rescaling xhat -> c * xhat keeps the transfer function when c = Chat > 0
    c = float(filt.Chat[0, 0])
    if c <= 0:
        return FilterParams(filt.Ahat, filt.Bhat, np.ones((1, 1)), filt.Dhat)
    return FilterParams(filt.Ahat, c * filt.Bhat, np.ones((1, 1)), filt.Dhat)
