"""Compare the numba and numpy kernel backends.

    python benchmarks/bench_kernels.py [--repeat 3] [--grid 32]

Cases: batched propagation of a tau21 x tau43 fourth-order sweep, and the
row expansion inside the general weight solver for N = 4, d = 3.
"""

import argparse
import time

import numpy as np

from synthcorr import _kernels
from synthcorr.engine import _UnitaryCache, _slot_data, fourth_order_protocol, tau_grid
from synthcorr.liouville import kron
from synthcorr.model import ExperimentParams, build
from synthcorr.synthesis import GeneralWeightProblem, _row_factors, _rows


def propagate_case(grid: int, n_repeat: int):
    params = ExperimentParams(n_repeat=n_repeat)
    model = build(params)
    g = tau_grid(0.0, 2e-6, grid)
    specs = [fourth_order_protocol(params, a, 10e-6, b, model=model) for a in g for b in g]
    maps, weights, ptr = _slot_data(specs[0], "phase-cycle")
    cache = _UnitaryCache(model, specs[0].coupling_mode)
    W = np.array([[cache.slot(s) for s in sp.slots] for sp in specs])
    obs = kron(specs[0].observable, np.eye(model.bath_dim))
    return lambda backend: _kernels.propagate(model.rho0, maps, weights, ptr, W, obs, backend=backend)


def expand_case():
    prob = GeneralWeightProblem(4, 3, "+--+", (2, 2, 2, 2))
    rows, _ = _rows(prob.N, prob.d)
    F = _row_factors(prob, rows)
    c = np.random.default_rng(0).normal(size=len(rows))
    return lambda backend: _kernels.expand_rows(c, F, backend=backend)


def best_time(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--grid", type=int, default=32)
    args = ap.parse_args(argv)

    cases = {
        f"propagate {args.grid}x{args.grid}, n=1": propagate_case(args.grid, 1),
        f"propagate {args.grid}x{args.grid}, n=3": propagate_case(args.grid, 3),
        "expand_rows N=4 d=3": expand_case(),
    }
    backends = ["numpy"] + (["numba"] if _kernels.HAVE_NUMBA else [])
    print(f"{'case':28s} " + " ".join(f"{b:>10s}" for b in backends) + "   speedup  max|diff|")
    for name, case in cases.items():
        res = {}
        for b in backends:
            if b == "numba":
                case(b)  # compile outside the timed region
            res[b] = best_time(lambda: case(b), args.repeat)
        cols = " ".join(f"{res[b][0]:9.3f}s" for b in backends)
        extra = ""
        if "numba" in res:
            diff = float(np.max(np.abs(res["numba"][1] - res["numpy"][1])))
            extra = f"  {res['numpy'][0] / res['numba'][0]:7.1f}x  {diff:.1e}"
        print(f"{name:28s} {cols}{extra}")


if __name__ == "__main__":
    main()
