"""Compare the compiled and pure-Python kernels on a frozen step march.

    python benchmarks/bench_kernels.py --n-cells 64 --n-steps 1000 --repeat 5
"""

import argparse
import timeit

import numpy as np

from evolsolve import _kernels_py
from evolsolve.domain import ProblemSpec, validate_problem
from evolsolve.operators import FrozenOperator

try:
    from evolsolve import _kernels as _compiled
except ImportError:
    _compiled = None


def _setup(n_cells, n_steps):
    problem = validate_problem(ProblemSpec(n_cells=n_cells, n_steps=n_steps))
    fac = FrozenOperator(problem, 0).factor(problem.dt)
    rng = np.random.default_rng(0)
    forcing = problem.dt * rng.standard_normal((n_steps + 1, n_cells + 1))
    bnd = np.zeros((n_steps + 1, 2))
    return fac, forcing, bnd


def _runner(impl, fac, forcing, bnd):
    out = np.zeros_like(forcing)

    def run():
        impl.march(
            fac.mult, fac.inv, fac.upper, fac.rl, fac.rr,
            fac.expl_lower, fac.expl_diag, fac.expl_upper, fac.explicit,
            forcing, bnd, out,
        )
        return out

    return run


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n-cells", type=int, default=64)
    parser.add_argument("--n-steps", type=int, default=1000)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)

    fac, forcing, bnd = _setup(args.n_cells, args.n_steps)
    backends = [("python", _kernels_py)]
    if _compiled is not None:
        backends.insert(0, ("compiled", _compiled))
    results = {}
    print(f"march: n_cells={args.n_cells} n_steps={args.n_steps} (best of {args.repeat})")
    for name, impl in backends:
        run = _runner(impl, fac, forcing, bnd)
        best = min(timeit.repeat(run, number=1, repeat=args.repeat))
        results[name] = (best, run().copy())
        print(f"  {name:9s} {best * 1e3:10.3f} ms")
    if len(results) == 2:
        (tc, uc), (tp, up) = results["compiled"], results["python"]
        print(f"  speedup   {tp / tc:10.1f}x   max |diff| = {np.max(np.abs(uc - up)):.2e}")
    else:
        print("  compiled extension not built; only the fallback was timed")


if __name__ == "__main__":
    main()
