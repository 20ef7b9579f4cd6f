"""Rocket soft landing under shrinking iteration budgets.

Receding-horizon runs of the thrust-cone lander at per-step budgets of
3, 33, and 444 iterations. Tighter budgets still land, just less
precisely; warm starting is what makes the small budgets usable.
"""

import numpy as np

from tinysocp.benchmarks import format_record, make_rocket_landing, run_closed_loop

STEPS = 90


def main():
    print("budget ladder (warm-started):")
    for budget in (3, 33, 444):
        sc = make_rocket_landing()
        res = run_closed_loop(sc, steps=STEPS, budget=budget)
        print(" ", format_record(sc, budget, STEPS, res))

    print("\nwarm vs cold at budget 33:")
    warm = run_closed_loop(make_rocket_landing(), steps=STEPS, budget=33)
    cold = run_closed_loop(
        make_rocket_landing(), steps=STEPS, budget=33, warm_start=False
    )
    print(f"  warm landing error {warm.metrics.landing_error:.4f}, "
          f"violation {warm.metrics.total_violation:.5f}")
    print(f"  cold landing error {cold.metrics.landing_error:.4f}, "
          f"violation {cold.metrics.total_violation:.5f}")

    sc = make_rocket_landing()
    res = run_closed_loop(sc, steps=STEPS, budget=444)
    touchdown = res.states[-1]
    print(f"\nfinal state at budget 444: pos {np.round(touchdown[:3], 4)}, "
          f"vel {np.round(touchdown[3:], 4)}")
    print(f"worst per-step thrust-cone excess: {np.max(res.input_cone_excess):.2e}")


if __name__ == "__main__":
    main()
