#!/usr/bin/env python3
"""Distance between the simulated pool and its deterministic limit.

Runs replications of the base contagion case for a ladder of pool sizes
and prints the sup-distance statistics; the medians should fall roughly
like 1/sqrt(N):

    python scripts/lln_study.py --n-values 100 1000 10000 --reps 20
"""

import argparse

from creditpool import (
    FirmType,
    SystematicFactorConfig,
    TimeGrid,
    homogeneous_measure,
    lln_experiment,
)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n-values", type=int, nargs="+",
                        default=[100, 1000, 10000])
    parser.add_argument("--reps", type=int, default=20)
    parser.add_argument("--seed", type=int, default=20260810)
    parser.add_argument("--beta-c", type=float, default=2.0)
    parser.add_argument("--t-end", type=float, default=1.0)
    parser.add_argument("--n-steps", type=int, default=1000)
    args = parser.parse_args()

    measure = homogeneous_measure(
        FirmType(alpha=4.0, lambda_bar=0.5, sigma=0.9, beta_c=args.beta_c),
        0.5,
    )
    report = lln_experiment(
        measure,
        SystematicFactorConfig(),
        TimeGrid(args.t_end, args.n_steps),
        args.n_values,
        n_reps=args.reps,
        seed=args.seed,
    )
    print(f"{'N':>8} {'reps':>5} {'mean':>9} {'median':>9} "
          f"{'q10':>9} {'q90':>9} {'seconds':>8}")
    for c in report.cells:
        print(f"{c.n_firms:>8} {c.n_reps:>5} {c.mean:>9.4f} {c.median:>9.4f} "
              f"{c.q10:>9.4f} {c.q90:>9.4f} {c.seconds:>8.1f}")
    if report.median_violations:
        print(f"note: median did not improve at N in {report.median_violations}")


if __name__ == "__main__":
    main()
