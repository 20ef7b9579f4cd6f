"""How per-iteration cost and memory grow with the horizon.

The backward pass reuses one precomputed gain, so each iteration is a
fixed number of small matrix-vector products per knot: linear in N.
The static footprint of the generated solver is affine in N by
construction. Both claims are measured here on the rocket problem.
"""

import numpy as np

from tinysocp.benchmarks import make_rocket_landing, measure_per_iteration_time
from tinysocp.codegen import estimate_footprint
from tinysocp.problem import validate

HORIZONS = (8, 16, 32, 64, 128, 256)


def main():
    rows = []
    for N in HORIZONS:
        sc = make_rocket_landing(N=N)
        vp = validate(sc.problem)
        t = measure_per_iteration_time(vp, rho=sc.settings.rho, iters=30, repeats=5)
        data_b, work_b = estimate_footprint(vp, "f32")
        rows.append((N, t, data_b, work_b))

    print("   N   time/iter      data(f32)  workspace(f32)")
    for N, t, d, w in rows:
        print(f"  {N:3d}   {t * 1e6:8.1f} us   {d:7d} B   {w:8d} B")

    ns = np.log([r[0] for r in rows])
    ts = np.log([r[1] for r in rows])
    exponent = np.polyfit(ns, ts, 1)[0]
    print(f"\nlog-log fit exponent for time vs N: {exponent:.3f} "
          f"(1.0 is perfectly linear)")

    d = [r[2] for r in rows]
    beta = (d[1] - d[0]) / (HORIZONS[1] - HORIZONS[0])
    print(f"data section grows by exactly {beta:.1f} B per knot")


if __name__ == "__main__":
    main()
