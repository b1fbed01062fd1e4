"""Queue-pattern probabilities of the FCFS queue: chain vs closed form."""

import argparse

from age_metrics.verify import pattern_check


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--hmax", type=int, default=8)
    args = ap.parse_args()
    print("lambda1 lambda2 patterns   spread     state_err  level_err  queue_err  pass")
    for l1, l2 in [(0.1, 0.3), (0.2, 0.5), (0.3, 0.9), (0.5, 0.7), (0.6, 0.8)]:
        r = pattern_check(l1, l2, args.hmax)
        print(f"{l1:<7} {l2:<7} {r.n_patterns:<8} {r.spread:<10.1e} {r.state_err:<10.1e} "
              f"{r.level_err:<10.1e} {r.queue_err:<10.1e} {r.passed()}")


if __name__ == "__main__":
    main()
