"""Compare the compiled and pure-numpy kernels.

    python3 benchmarks/bench_backends.py [--repeat N] [--design]

Times one H-infinity norm of the bundled error system, a frequency sweep of
random systems, a 100-step simulation and, with ``--design``, a short
single-start design.  Results go to stdout as a table; ``--json PATH`` also
writes them to a file.
"""

from __future__ import annotations

import argparse
import json
import sys
import timeit

import numpy as np

from posfilter import _backend
from posfilter.design import DesignConfig, design_filter
from posfilter.fileio import load_filter, load_problem
from posfilter.hinf import hinf_norm
from posfilter.lti import StateSpace, assemble_error_system, default_disturbance, simulate
from posfilter.search import Method


def _random_system(rng, n=6, q=3, p=3):
    A = rng.normal(size=(n, n))
    A *= 0.9 / np.max(np.abs(np.linalg.eigvals(A)))
    return StateSpace(A, rng.normal(size=(n, q)), rng.normal(size=(p, n)), rng.normal(size=(p, q)))


def cases(with_design: bool):
    plant, _ = load_problem("lls10")
    err = assemble_error_system(plant, load_filter("filter_lls10", plant))
    big = _random_system(np.random.default_rng(0))
    xi0 = [0.03, 0.08, 0.10, 0.05]
    out = {
        "norm, 4-state error system": lambda: hinf_norm(err),
        "norm, 6-state 3x3 system": lambda: hinf_norm(big),
        "simulate, 100 steps": lambda: simulate(err, xi0, default_disturbance, 100),
    }
    if with_design:
        cfg = DesignConfig(method=Method.NM_RESTART, starts=1, seed=1)
        out["design, nm-restart, 1 start"] = lambda: design_filter(plant, 1, cfg)
    return out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=200)
    ap.add_argument("--design", action="store_true", help="include a single-start design run")
    ap.add_argument("--json")
    args = ap.parse_args(argv)

    backends = _backend.available()
    if "compiled" not in backends:
        print("note: compiled extension not built; timing the numpy kernels only", file=sys.stderr)
    results: dict[str, dict[str, float]] = {}
    for name, fn in cases(args.design).items():
        number = 1 if name.startswith("design") else args.repeat
        results[name] = {}
        for b in backends:
            with _backend.using(b):
                fn()  # warm-up
                t = min(timeit.repeat(fn, number=number, repeat=3)) / number
            results[name][b] = t

    width = max(map(len, results))
    print(f"{'case':<{width}}  " + "  ".join(f"{b:>12}" for b in backends) + "  speed-up")
    for name, row in results.items():
        cells = "  ".join(f"{row[b] * 1e3:>9.3f} ms" for b in backends)
        speed = f"{row['python'] / row['compiled']:.1f}x" if "compiled" in row else "-"
        print(f"{name:<{width}}  {cells}  {speed:>8}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"backends": backends, "seconds": results}, fh, indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
