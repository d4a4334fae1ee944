"""Benchmark the jitted fixed-point kernels against the numpy fallback.

Run: python benchmarks/bench_kernels.py

Times the per-grid continuation solve and a batched transform
evaluation on a representative workload. The jitted path is warmed up
first so compilation cost is excluded from the reported numbers.
"""

from __future__ import annotations

import time

import numpy as np

from rank1spec import _kernels, solver
from rank1spec.measures import AmplitudeLaw, SpectralMeasure
from rank1spec.solver import ModelSpec, SolverOptions, solve_mpe_grid

GRID = np.linspace(0.011, 3.989, 400)
N_RUNS = 5


def model() -> ModelSpec:
    return ModelSpec(c=1.0, sigma=AmplitudeLaw([(1.0, 1.0)]),
                     n0=SpectralMeasure(atoms=[(0.0, 1.0)]))


def time_grid_solve(n_runs: int) -> list[float]:
    m = model()
    opts = SolverOptions(eps_final=1e-4)
    times = []
    for _ in range(n_runs):
        t0 = time.perf_counter()
        solve_mpe_grid(GRID, m, opts)
        times.append(time.perf_counter() - t0)
    return times


def time_transform_batch(fn, n_runs: int) -> list[float]:
    atom_loc = np.array([0.0])
    atom_mass = np.array([0.3])
    grid = np.linspace(0.1, 3.0, 2000)
    vals = 0.7 / 2.9 * np.ones(2000)
    zs = np.linspace(0.05, 3.95, 5000) + 1e-4j
    times = []
    for _ in range(n_runs):
        t0 = time.perf_counter()
        fn(zs, atom_loc, atom_mass, grid, vals)
        times.append(time.perf_counter() - t0)
    return times


def report(label: str, numba_times, numpy_times) -> None:
    mean_nb = np.mean(numba_times) * 1000
    std_nb = np.std(numba_times) * 1000
    mean_np = np.mean(numpy_times) * 1000
    std_np = np.std(numpy_times) * 1000
    print(f"{label}")
    print(f"  jitted: {mean_nb:8.2f} +- {std_nb:.2f} ms")
    print(f"  numpy:  {mean_np:8.2f} +- {std_np:.2f} ms")
    print(f"  speedup: {mean_np / mean_nb:.1f}x")


def main() -> None:
    if not _kernels.HAS_NUMBA:
        print("numba is not installed; nothing to compare")
        return
    if not _kernels.USE_NUMBA:
        print("RANK1SPEC_NO_NUMBA is set; unset it to benchmark the jit path")
        return

    # warm up compilation before timing
    solve_mpe_grid(GRID[:4], model(), SolverOptions(eps_final=1e-2))
    _kernels.stieltjes_many(np.array([1j]), np.array([0.0]), np.array([1.0]),
                            np.zeros(0), np.zeros(0))

    numba_solve = time_grid_solve(N_RUNS)

    # the solver binds the kernel at import, so swap it there
    saved = solver.picard_solve
    solver.picard_solve = _kernels._picard_numpy
    try:
        numpy_solve = time_grid_solve(N_RUNS)
    finally:
        solver.picard_solve = saved

    report(f"continuation solve, {GRID.size}-point grid", numba_solve,
           numpy_solve)

    numba_batch = time_transform_batch(_kernels.stieltjes_many, N_RUNS)
    numpy_batch = time_transform_batch(_kernels._stieltjes_numpy, N_RUNS)
    report("transform batch, 5000 points x 2000-node density", numba_batch,
           numpy_batch)


if __name__ == "__main__":
    main()
