"""Command-line driver.

Two subcommands: `run` executes a single optimization from flags and/or a
JSON config file (flags win), `reproduce` runs a preset figure grid.
Exit codes: 0 success, 2 configuration error, 3 resource-guard violation.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import sys
from pathlib import Path

from .errors import ConfigError, GuardError
from .presets import FIGURES, reproduce
from .runner import RunConfig, load_config, run_experiment

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_GUARD = 3


def _parse_lattice(text: str) -> tuple[int, int]:
    try:
        x, y = text.lower().split("x")
        return int(x), int(y)
    except ValueError as exc:
        raise ConfigError(f"lattice must look like 4x4, got {text!r}") from exc


@contextlib.contextmanager
def _thread_cap(threads: int | None):
    if threads is None:
        yield
        return
    if threads < 1:
        raise ConfigError("threads must be >= 1")
    try:
        import threadpoolctl
    except ImportError:
        import os

        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(threads)
        yield
        return
    with threadpoolctl.threadpool_limits(limits=threads):
        yield


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="isodmrg",
        description="DMRG-style isoTNS optimizer with a simulated quantum coprocessor",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one optimization")
    run_p.add_argument("--config", type=str, help="JSON config (or summary) file")
    run_p.add_argument("--lattice", type=str, help="physical lattice, e.g. 4x4")
    run_p.add_argument("--D", type=int, dest="d", help="bond dimension (power of two)")
    run_p.add_argument("--g", type=float, help="transverse field strength")
    run_p.add_argument(
        "--method", choices=("exact", "tomography", "lanczos"), help="per-site solver"
    )
    run_p.add_argument("--sweeps", type=int, help="number of sweeps")
    run_p.add_argument("--shots", type=int, help="shots per measurement setting")
    run_p.add_argument("--krylov-k", type=int, dest="krylov_k", help="Krylov dimension")
    run_p.add_argument(
        "--adaptive",
        action="store_true",
        default=None,
        help="double shots when a step's energy estimate rises",
    )
    run_p.add_argument(
        "--no-adaptive", dest="adaptive", action="store_false", help="disable doubling"
    )
    run_p.add_argument("--seed", type=int, help="master RNG seed")
    run_p.add_argument("--qubit-guard", type=int, dest="qubit_guard", help="statevector qubit cap")
    run_p.add_argument("--out", type=str, default="runs/latest", help="output directory")
    run_p.add_argument("--threads", type=int, help="cap BLAS/OpenMP thread fan-out")

    rep_p = sub.add_parser("reproduce", help="run a preset figure grid")
    rep_p.add_argument("figure", choices=FIGURES)
    rep_p.add_argument("--scale", choices=("small",), default="small")
    rep_p.add_argument("--seed", type=int, default=1)
    rep_p.add_argument("--out", type=str, default=None, help="output directory")
    rep_p.add_argument("--threads", type=int, help="cap BLAS/OpenMP thread fan-out")
    return parser


def _overrides_from_args(args: argparse.Namespace) -> dict:
    overrides: dict = {}
    if args.lattice is not None:
        overrides["lattice_x"], overrides["lattice_y"] = _parse_lattice(args.lattice)
    for key in ("d", "g", "method", "sweeps", "shots", "krylov_k", "seed", "qubit_guard"):
        value = getattr(args, key)
        if value is not None:
            overrides[key] = value
    if args.adaptive is not None:
        overrides["adaptive_doubling"] = args.adaptive
    return overrides


def _cmd_run(args: argparse.Namespace) -> int:
    overrides = _overrides_from_args(args)
    if args.config is not None:
        config = load_config(args.config, overrides)
    else:
        config = RunConfig.from_dict(overrides)
    with _thread_cap(args.threads):
        report, paths = run_experiment(config, args.out)
    rel = report.final_rel_error
    print(f"final_energy={report.final_energy!r}")
    print(f"rel_error={'n/a' if rel is None else repr(rel)}")
    print(f"total_shots={report.total_shots}")
    print(f"csv={paths['csv']}")
    print(f"summary={paths['summary']}")
    return EXIT_OK


def _cmd_reproduce(args: argparse.Namespace) -> int:
    out = args.out if args.out is not None else f"runs/{args.figure}"
    with _thread_cap(args.threads):
        manifest = reproduce(args.figure, out, seed=args.seed)
    print(json.dumps(manifest, indent=2, sort_keys=True))
    print(f"manifest={Path(out) / 'manifest.json'}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_reproduce(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GuardError as exc:
        print(f"guard violation: {exc}", file=sys.stderr)
        return EXIT_GUARD


if __name__ == "__main__":
    sys.exit(main())
