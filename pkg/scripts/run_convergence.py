#!/usr/bin/env python3
"""Exact-solver convergence run: 4x4-spin TFIM, five sweeps, D=2."""

import argparse

from isodmrg.runner import RunConfig, run_experiment


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--lattice", default="4x4")
    parser.add_argument("--sweeps", type=int, default=5)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--out", default="runs/convergence")
    args = parser.parse_args()
    x, y = (int(v) for v in args.lattice.lower().split("x"))
    config = RunConfig(
        lattice_x=x, lattice_y=y, method="exact", sweeps=args.sweeps, seed=args.seed
    )
    report, paths = run_experiment(config, args.out)
    print(f"final_energy={report.final_energy!r}")
    print(f"rel_error={report.final_rel_error!r}")
    print(f"csv={paths['csv']}")


if __name__ == "__main__":
    main()
