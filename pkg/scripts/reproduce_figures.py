#!/usr/bin/env python3
"""Write the three parameter-sweep curve families as CSV.

Equivalent to `creditpool figures`, exposed as a script so the grid and
output location are easy to tweak from the command line:

    python scripts/reproduce_figures.py --out out/figures --n-steps 2000
"""

import argparse
from pathlib import Path

from creditpool import (
    TimeGrid,
    contagion_sweep,
    figure_sweep,
    reversion_level_sweep,
    reversion_speed_sweep,
)

SWEEPS = (
    ("fig1_betaC.csv", contagion_sweep),
    ("fig2_alpha.csv", reversion_speed_sweep),
    ("fig3_lambdabar.csv", reversion_level_sweep),
)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="out/figures", help="output directory")
    parser.add_argument("--t-end", type=float, default=1.0)
    parser.add_argument("--n-steps", type=int, default=1000)
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    grid = TimeGrid(args.t_end, args.n_steps)
    t = grid.points()
    for filename, build in SWEEPS:
        rows = ["t,param_value,F"]
        for value, f in figure_sweep(build(grid)):
            rows.extend(
                f"{t[k]!r},{value!r},{float(f.values[k])!r}"
                for k in range(grid.n_points)
            )
        path = out / filename
        path.write_text("\n".join(rows) + "\n")
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
