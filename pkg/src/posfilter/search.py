"""Derivative-free minimisers over extended-real objectives.

Objectives map a 1-D float array to a float, returning ``math.inf``
(:data:`INFEASIBLE`) for points outside the feasible set; ``inf`` sorts after
every finite value, which is exactly the ordering the optimizers need.  NaN
is treated as infeasible.

An objective may accept an optional ``cutoff`` keyword.  Nelder-Mead then
passes the value a trial point has to beat; an objective is free to stop
early and return any number strictly above the cutoff when it can prove the
true value is larger.  Such values only ever lead to rejecting the trial
point, so the iterates are the same as with exact evaluation.
"""

from __future__ import annotations

import enum
import inspect
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "INFEASIBLE",
    "BenchmarkReport",
    "InfeasibleStartError",
    "Method",
    "OptimizerOptions",
    "OptimizerResult",
    "SamplerExhaustedError",
    "StartRecord",
    "Termination",
    "initial_simplex",
    "multi_start",
    "multidirectional_search",
    "nelder_mead",
    "nm_with_restarts",
    "relative_improvement",
]

INFEASIBLE = math.inf

# standard coefficients: reflection, expansion, contraction, shrink
RHO, CHI, PSI, SIGMA = 1.0, 2.0, 0.5, 0.5
MDS_EXPAND, MDS_CONTRACT = 2.0, 0.5
SAMPLER_BUDGET = 1000
SIMPLEX_KINDS = ("regular", "coordinate")

Objective = Callable[..., float]
Callback = Callable[[int, np.ndarray, float], None]


class InfeasibleStartError(ValueError):
    """The starting point has an infeasible objective value."""


class SamplerExhaustedError(RuntimeError):
    """No feasible starting point was found within the draw budget."""


class Termination(enum.Enum):
    CONVERGED = "converged"
    MAX_EVALS = "max_evals"
    MAX_ITERS = "max_iters"


class Method(str, enum.Enum):
    NM = "nm"
    NM_RESTART = "nm-restart"
    MDS = "mds"


@dataclass(frozen=True)
class OptimizerOptions:
    """Stopping rules.  ``None`` budgets mean unlimited."""

    tol_f: float = 1e-7
    tol_x: float = 1e-7
    max_evals: int | None = None
    max_iters: int | None = None
    restart_eps: float = 1e-7
    simplex: str = "regular"

    def __post_init__(self):
        if self.simplex not in SIMPLEX_KINDS:
            raise ValueError(f"simplex must be one of {SIMPLEX_KINDS}, got {self.simplex!r}")
        for name in ("tol_f", "tol_x", "restart_eps"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("max_evals", "max_iters"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise ValueError(f"{name} must be a positive integer or None")


@dataclass
class OptimizerResult:
    x: np.ndarray
    f: float
    evals: int
    iters: int
    termination: Termination
    restart_values: list[float] = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return math.isfinite(self.f)


class _Counted:
    """Evaluation counter and cutoff adapter around a user objective."""

    def __init__(self, f: Objective, max_evals: int | None):
        self.f = f
        self.evals = 0
        self.max_evals = max_evals
        try:
            params = inspect.signature(f).parameters
            self.takes_cutoff = "cutoff" in params or any(
                p.kind is inspect.Parameter.VAR_KEYWORD for p in params.values()
            )
        except (TypeError, ValueError):
            self.takes_cutoff = False

    def __call__(self, x: np.ndarray, cutoff: float = math.inf) -> float:
        self.evals += 1
        if self.takes_cutoff and math.isfinite(cutoff):
            v = self.f(x, cutoff=cutoff)
        else:
            v = self.f(x)
        v = float(v)
        return INFEASIBLE if math.isnan(v) else v

    @property
    def exhausted(self) -> bool:
        return self.max_evals is not None and self.evals >= self.max_evals


def initial_simplex(x0: np.ndarray, kind: str = "regular") -> np.ndarray:
    """Starting simplex around ``x0`` (row 0 is ``x0`` itself).

    ``"regular"``: all edges of length ``max(||x0||_inf, 1)``, every other
    vertex offset from ``x0`` in all coordinates.  ``"coordinate"``: vertex
    ``i`` scales coordinate ``i`` by 1.05, or sets it to 0.00025 where it is
    zero.
    """
    x0 = np.asarray(x0, dtype=float)
    n = x0.size
    sim = np.tile(x0, (n + 1, 1))
    if n == 0:
        return sim
    if kind == "coordinate":
        for i in range(n):
            sim[i + 1, i] = 1.05 * x0[i] if x0[i] != 0 else 0.00025
        return sim
    if kind != "regular":
        raise ValueError(f"unknown simplex kind {kind!r}")
    scale = max(float(np.max(np.abs(x0))), 1.0)
    root = math.sqrt(n + 1)
    along = scale / (n * math.sqrt(2)) * (root - 1 + n)
    across = scale / (n * math.sqrt(2)) * (root - 1)
    sim[1:] += across
    for i in range(n):
        sim[i + 1, i] = x0[i] + along
    return sim


def _converged(sim: np.ndarray, fs: np.ndarray, opts: OptimizerOptions) -> bool:
    if sim.shape[0] < 2:
        return True
    if not math.isfinite(fs[0]) or not np.all(np.isfinite(fs)):
        return False
    return (
        float(np.max(np.abs(fs[1:] - fs[0]))) <= opts.tol_f
        and float(np.max(np.abs(sim[1:] - sim[0]))) <= opts.tol_x
    )


def _sort(sim: np.ndarray, fs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # stable: among equal values the vertex listed earlier (older) stays ahead
    order = np.argsort(fs, kind="stable")
    return sim[order], fs[order]


def _budget_hit(fun: _Counted, iters: int, max_iters: int | None) -> Termination | None:
    if fun.exhausted:
        return Termination.MAX_EVALS
    if max_iters is not None and iters >= max_iters:
        return Termination.MAX_ITERS
    return None


def _start(fun: _Counted, x0, kind: str) -> tuple[np.ndarray, np.ndarray]:
    x0 = np.array(x0, dtype=float).ravel()
    if not np.all(np.isfinite(x0)):
        raise ValueError("starting point must be finite")
    f0 = fun(x0)
    if not math.isfinite(f0):
        raise InfeasibleStartError("objective is infeasible at the starting point")
    sim = initial_simplex(x0, kind)
    fs = np.empty(sim.shape[0])
    fs[0] = f0
    for j in range(1, sim.shape[0]):
        fs[j] = fun(sim[j])
    return _sort(sim, fs)


def _nm_core(fun: _Counted, x0, opts: OptimizerOptions, max_iters, callback) -> OptimizerResult:
    sim, fs = _start(fun, x0, opts.simplex)
    n = sim.shape[1]
    iters = 0
    while True:
        if _converged(sim, fs, opts):
            status = Termination.CONVERGED
            break
        status = _budget_hit(fun, iters, max_iters)
        if status is not None:
            break
        iters += 1
        worst = sim[-1]
        xbar = sim[:-1].mean(axis=0)
        xr = (1 + RHO) * xbar - RHO * worst
        fr = fun(xr, cutoff=fs[-1])
        new = None
        if fr < fs[0]:
            xe = (1 + RHO * CHI) * xbar - RHO * CHI * worst
            fe = fun(xe, cutoff=fr)
            new = (xe, fe) if fe < fr else (xr, fr)
        elif fr < fs[-2]:
            new = (xr, fr)
        elif fr < fs[-1]:
            xc = (1 + PSI * RHO) * xbar - PSI * RHO * worst
            fc = fun(xc, cutoff=fr)
            if fc <= fr:
                new = (xc, fc)
        else:
            xcc = (1 - PSI) * xbar + PSI * worst
            fcc = fun(xcc, cutoff=fs[-1])
            if fcc < fs[-1]:
                new = (xcc, fcc)
        if new is not None:
            sim[-1], fs[-1] = new
        else:
            for j in range(1, n + 1):
                sim[j] = sim[0] + SIGMA * (sim[j] - sim[0])
                fs[j] = fun(sim[j])
        sim, fs = _sort(sim, fs)
        if callback is not None:
            callback(iters, sim[0].copy(), float(fs[0]))
    return OptimizerResult(sim[0].copy(), float(fs[0]), fun.evals, iters, status)


def nelder_mead(
    f: Objective,
    x0,
    opts: OptimizerOptions | None = None,
    callback: Callback | None = None,
) -> OptimizerResult:
    """Minimise ``f`` by the Nelder-Mead simplex method.

    The simplex starts at ``x0`` (see :func:`initial_simplex`) and iterates
    until every vertex is within ``tol_f`` in value and ``tol_x`` in
    max-norm of the best one, or a budget runs out.  ``callback(k, x, fx)``
    sees the best vertex after each iteration.

    Raises :class:`InfeasibleStartError` if ``f(x0)`` is infeasible.
    """
    opts = opts or OptimizerOptions()
    fun = _Counted(f, opts.max_evals)
    return _nm_core(fun, x0, opts, opts.max_iters, callback)


def relative_improvement(previous: float, current: float) -> float:
    """``|(|previous / current|) - 1|`` with the zero and infeasible cases
    resolved: ``0/0`` gives 0, ``x/0`` gives ``inf`` and any infeasible value
    gives ``nan`` (the caller stops)."""
    if not (math.isfinite(previous) and math.isfinite(current)):
        return math.nan
    if current == 0:
        return 0.0 if previous == 0 else math.inf
    return abs(abs(previous / current) - 1.0)


def nm_with_restarts(
    f: Objective,
    x0,
    opts: OptimizerOptions | None = None,
    callback: Callback | None = None,
) -> OptimizerResult:
    """Nelder-Mead restarted from its own result until the relative
    improvement between consecutive runs drops to ``opts.restart_eps``.

    Each restart builds a fresh simplex around the incumbent.  Budgets apply
    to the whole sequence of runs.  ``restart_values`` lists the final value
    of every inner run.
    """
    opts = opts or OptimizerOptions()
    fun = _Counted(f, opts.max_evals)
    iters = 0

    def run(start):
        nonlocal iters
        remaining = None if opts.max_iters is None else opts.max_iters - iters
        res = _nm_core(fun, start, opts, remaining, callback)
        iters += res.iters
        return res

    res = run(x0)
    values = [res.f]
    acc = 1.0
    while acc > opts.restart_eps and res.termination is Termination.CONVERGED:
        prev = res
        res = run(prev.x)
        values.append(res.f)
        acc = relative_improvement(prev.f, res.f)
        if math.isnan(acc):
            break
    return OptimizerResult(res.x, res.f, fun.evals, iters, res.termination, values)


def multidirectional_search(
    f: Objective,
    x0,
    opts: OptimizerOptions | None = None,
    callback: Callback | None = None,
) -> OptimizerResult:
    """Torczon's multidirectional search.

    Every iteration reflects the whole simplex through its best vertex,
    expands by 2 when the reflection found a better point (keeping the
    expansion only if it beats the reflection), and otherwise contracts by
    half toward the best vertex.  Stopping rules match :func:`nelder_mead`.
    """
    opts = opts or OptimizerOptions()
    fun = _Counted(f, opts.max_evals)
    sim, fs = _start(fun, x0, opts.simplex)
    iters = 0
    while True:
        if _converged(sim, fs, opts):
            status = Termination.CONVERGED
            break
        status = _budget_hit(fun, iters, opts.max_iters)
        if status is not None:
            break
        iters += 1
        v0, f0 = sim[0], fs[0]
        ref = 2.0 * v0 - sim[1:]
        fr = np.array([fun(v) for v in ref])
        if fr.size and fr.min() < f0:
            exp = v0 - MDS_EXPAND * (sim[1:] - v0)
            fe = np.array([fun(v) for v in exp])
            if fe.min() < fr.min():
                sim[1:], fs[1:] = exp, fe
            else:
                sim[1:], fs[1:] = ref, fr
        else:
            sim[1:] = v0 + MDS_CONTRACT * (sim[1:] - v0)
            fs[1:] = [fun(v) for v in sim[1:]]
        sim, fs = _sort(sim, fs)
        if callback is not None:
            callback(iters, sim[0].copy(), float(fs[0]))
    return OptimizerResult(sim[0].copy(), float(fs[0]), fun.evals, iters, status)


_OPTIMIZERS = {
    Method.NM: nelder_mead,
    Method.NM_RESTART: nm_with_restarts,
    Method.MDS: multidirectional_search,
}


@dataclass(frozen=True)
class StartRecord:
    index: int
    seed: int
    f_final: float
    evals: int
    iters: int
    time_s: float
    x: np.ndarray = field(repr=False)
    x0: np.ndarray = field(repr=False)
    restart_values: tuple[float, ...] = ()
    termination: Termination = Termination.CONVERGED


@dataclass
class BenchmarkReport:
    """Aggregate of ``K`` independent runs of one method."""

    method: str
    K: int
    min_objective: float
    mean_objective: float
    success_rates: dict[float, float]
    mean_time_s: float
    per_start: list[StartRecord]

    @property
    def best(self) -> StartRecord:
        return min(self.per_start, key=lambda r: (r.f_final, r.index))

    def to_dict(self, include_points: bool = True) -> dict:
        rows = []
        for r in self.per_start:
            row = {
                "index": r.index,
                "seed": r.seed,
                "f_final": _json_float(r.f_final),
                "evals": r.evals,
                "iters": r.iters,
                "time_s": r.time_s,
                "termination": r.termination.value,
                "restart_values": [_json_float(v) for v in r.restart_values],
            }
            if include_points:
                row["x0"] = r.x0.tolist()
                row["x"] = r.x.tolist()
            rows.append(row)
        return {
            "method": self.method,
            "K": self.K,
            "min_objective": _json_float(self.min_objective),
            "mean_objective": _json_float(self.mean_objective),
            "success_rates": {repr(t): v for t, v in self.success_rates.items()},
            "mean_time_s": self.mean_time_s,
            "per_start": rows,
        }


def _json_float(v: float):
    return v if math.isfinite(v) else None


def _draw_feasible(f: Objective, sampler, rng, budget: int) -> np.ndarray:
    for _ in range(budget):
        x = np.asarray(sampler(rng), dtype=float).ravel()
        if math.isfinite(float(f(x))):
            return x
    raise SamplerExhaustedError(f"no feasible starting point in {budget} draws")


def _one_start(args) -> StartRecord:
    method, f, sampler, index, seed, opts, budget = args
    rng = np.random.default_rng(seed)
    x0 = _draw_feasible(f, sampler, rng, budget)
    t0 = time.perf_counter()
    res = _OPTIMIZERS[method](f, x0, opts)
    elapsed = time.perf_counter() - t0
    return StartRecord(
        index, seed, res.f, res.evals, res.iters, elapsed, res.x, x0,
        tuple(res.restart_values), res.termination,
    )


def multi_start(
    method: Method | str,
    f: Objective,
    sampler: Callable[[np.random.Generator], np.ndarray],
    K: int,
    seed: int = 0,
    thresholds: Sequence[float] = (),
    opts: OptimizerOptions | None = None,
    workers: int = 1,
    sampler_budget: int = SAMPLER_BUDGET,
) -> BenchmarkReport:
    """Run ``K`` optimisations from independent random starts.

    Start ``i`` draws from ``np.random.default_rng(seed + i)`` until ``f`` is
    feasible, so every method sees the same starting points for the same
    seed and the report does not depend on ``workers``.  With ``workers > 1``
    the runs go to a process pool and ``f``/``sampler`` must be picklable.
    """
    method = Method(method)
    if K < 1:
        raise ValueError("K must be at least 1")
    opts = opts or OptimizerOptions()
    jobs = [(method, f, sampler, i, seed + i, opts, sampler_budget) for i in range(K)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_one_start, jobs))
    else:
        records = [_one_start(job) for job in jobs]

    values = np.array([r.f_final for r in records])
    finite = values[np.isfinite(values)]
    return BenchmarkReport(
        method=method.value,
        K=K,
        min_objective=float(values.min()),
        mean_objective=float(finite.mean()) if finite.size else math.nan,
        success_rates={float(t): float(np.mean(values < t)) for t in thresholds},
        mean_time_s=float(np.mean([r.time_s for r in records])),
        per_start=records,
    )
