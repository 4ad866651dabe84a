#!/usr/bin/env python3
"""Shot-budget convergence grid: exact solver vs tomography at 10^3..10^5."""

import argparse
import json

from isodmrg.presets import reproduce_fig2


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="runs/fig2")
    parser.add_argument("--seed", type=int, default=1)
    args = parser.parse_args()
    manifest = reproduce_fig2(args.out, seed=args.seed)
    print(json.dumps(manifest["checks"], indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
