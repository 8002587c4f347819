"""Time the Godunov kernels: compiled extension vs numpy fallback.

Runs the same bottleneck scenario through both backends, checks that the
final density fields agree, and reports wall time per cell-step.

    python benchmarks/bench_backends.py [--cells N] [--steps N]
"""

import argparse
import time

import numpy as np

from lanekw import kernels
from lanekw.fd import TriangularFD
from lanekw.intensity import PiecewiseLocationIntensity, ConstantIntensity
from lanekw.sim import DemandBC, RoadScenario, run


def build_scenario(cells: int) -> RoadScenario:
    fd = TriangularFD(v_f=65.0, rho_c=40.0, rho_j=240.0)
    lc_middle = PiecewiseLocationIntensity(
        breakpoints=(0.0, 1.0, 1.5, 3.0),
        segments=(ConstantIntensity(0.0), ConstantIntensity(0.1),
                  ConstantIntensity(0.0)))
    return RoadScenario(
        length=3.0, cells=cells, fd=fd, intensity=lc_middle,
        initial_density=30.0, upstream=DemandBC(2600.0), t_end=0.0)


def drive(scn: RoadScenario, steps: int, backend: str):
    from lanekw.sim import initial_state, stable_dt, step

    state = initial_state(scn)
    dt = stable_dt(scn)
    t0 = time.perf_counter()
    for _ in range(steps):
        state = step(scn, state, dt, backend=backend)
    elapsed = time.perf_counter() - t0
    return elapsed, state.rho


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cells", type=int, default=2000)
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    names = kernels.available()
    print(f"backends: {', '.join(names)}")
    if len(names) < 2:
        print("compiled extension not built; timing the fallback only")

    scn = build_scenario(args.cells)
    results = {}
    for name in names:
        best = float("inf")
        rho = None
        for _ in range(args.repeat):
            elapsed, rho = drive(scn, args.steps, name)
            best = min(best, elapsed)
        per = best / (args.cells * args.steps) * 1e9
        results[name] = (best, per, rho)
        print(f"{name:>8}: {best:.3f} s  ({per:.1f} ns per cell-step)")

    if len(results) == 2:
        rho_py = results["python"][2]
        rho_c = results["cython"][2]
        agree = np.allclose(rho_py, rho_c, rtol=1e-12, atol=1e-12)
        print(f"fields agree: {agree} "
              f"(max |diff| = {np.max(np.abs(rho_py - rho_c)):.3e})")
        print(f"speedup: {results['python'][0] / results['cython'][0]:.1f}x")
        if not agree:
            return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
