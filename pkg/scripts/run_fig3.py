#!/usr/bin/env python3
"""Shot-cost comparison: sampled Krylov solver vs full tomography."""

import argparse
import json

from isodmrg.presets import reproduce_fig3


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="runs/fig3")
    parser.add_argument("--seed", type=int, default=1)
    args = parser.parse_args()
    manifest = reproduce_fig3(args.out, seed=args.seed)
    print(json.dumps(manifest["comparison"], indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
