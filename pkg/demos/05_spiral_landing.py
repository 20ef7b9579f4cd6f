"""Helical descent shaped by a 45-degree position cone.

The reference is a cylinder of constant radius descending to the
ground, which the cone |(x, y)| <= z forbids near touchdown. The
constraint, not the reference, pinches the flight path into a spiral.
Turning the cone off shows the contrast.
"""

import numpy as np

from dataclasses import replace

from tinysocp.benchmarks import make_spiral_landing, run_closed_loop

STEPS = 260


def main():
    on = run_closed_loop(make_spiral_landing(), steps=STEPS, budget=500)
    sc_off = make_spiral_landing()
    off = run_closed_loop(
        sc_off,
        steps=STEPS,
        budget=500,
        settings=replace(sc_off.settings, en_state_soc=False),
    )

    on_viol = int(np.sum(on.state_cone_excess > 1e-2))
    off_viol = int(np.sum(off.state_cone_excess > 1e-2))
    print(f"cone on : {on_viol}/{STEPS} steps outside the cone "
          f"(worst excess {np.max(on.state_cone_excess):.2e})")
    print(f"cone off: {off_viol}/{STEPS} steps outside the cone "
          f"(worst excess {np.max(off.state_cone_excess):.2e})")
    print(f"landing error, cone on : {on.metrics.landing_error:.4f}")
    print(f"landing error, cone off: {off.metrics.landing_error:.4f}")

    print("\nradius vs altitude while descending (cone on):")
    for i in range(0, STEPS + 1, 40):
        r = np.linalg.norm(on.states[i, :2])
        z = on.states[i, 2]
        inside = "in " if r <= z + 1e-2 else "OUT"
        print(f"  step {i:3d}: r = {r:.3f}, alt = {z:.3f}  [{inside}]")


if __name__ == "__main__":
    main()
