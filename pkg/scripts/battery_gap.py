"""Where the battery buffer's average actuation age drops below its
information age, and how far the actuation age is from symmetric in the
two rates."""

import argparse

import numpy as np

from age_metrics import analytic
from age_metrics.optimizer import battery_symmetry_gap


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--step", type=float, default=0.01)
    args = ap.parse_args()
    rates = np.arange(args.step, 1, args.step)
    below, worst = 0, (0.0, None)
    for l1 in rates:
        for l2 in rates:
            gap = 1 / l1 - analytic.aoa_buffer_battery(l1, l2)
            if gap > 0:
                below += 1
                if gap > worst[0]:
                    worst = (gap, (round(float(l1), 4), round(float(l2), 4)))
    print(f"aoa < aoi on {below}/{rates.size ** 2} grid points "
          f"({below / rates.size ** 2:.1%}); largest gap {worst[0]:.3f} at {worst[1]}")
    print("lambda_a lambda_b  |aoa(a,b) - aoa(b,a)|")
    for a, b in [(0.1, 0.3), (0.2, 0.6), (0.3, 0.9), (0.5, 0.7), (0.05, 0.95)]:
        print(f"{a:<8} {b:<8}  {battery_symmetry_gap(a, b):.6f}")


if __name__ == "__main__":
    main()
