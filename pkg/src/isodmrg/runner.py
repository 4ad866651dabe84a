"""Experiment driver: resolve a run configuration, execute, write artifacts.

A run optimizes one seeded isoTNS toward the TFIM ground state and emits a
step-by-step CSV trace plus a JSON summary that embeds the fully resolved
configuration, so any summary file doubles as a config for an identical
re-run.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError, GuardError
from .network import IsoTNS
from .pauli import tfim
from .reference import ITERATIVE_QUBIT_LIMIT, exact_ground
from .simulator import DEFAULT_QUBIT_GUARD
from .sweep import METHODS, SweepConfig, SweepReport, optimize

CONFIG_FIELDS = (
    "lattice_x",
    "lattice_y",
    "d",
    "g",
    "method",
    "sweeps",
    "shots",
    "krylov_k",
    "adaptive_doubling",
    "seed",
    "qubit_guard",
)


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved settings for one optimization run.

    `lattice_x` and `lattice_y` count physical spin columns and rows; the
    isoTNS grid is (lattice_x - 2) x lattice_y because the edge tensor
    columns each hold two spin columns.
    """

    lattice_x: int = 4
    lattice_y: int = 4
    d: int = 2
    g: float = 3.5
    method: str = "exact"
    sweeps: int = 5
    shots: int = 1000
    krylov_k: int = 3
    adaptive_doubling: bool = False
    seed: int = 1
    qubit_guard: int = DEFAULT_QUBIT_GUARD

    def __post_init__(self):
        if self.lattice_x < 3:
            raise ConfigError("lattice_x must be >= 3 (isoTNS width >= 1)")
        if self.lattice_y < 1:
            raise ConfigError("lattice_y must be >= 1")
        if self.d < 1 or (self.d & (self.d - 1)) != 0:
            raise ConfigError(f"bond dimension d must be a power of two, got {self.d}")
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.sweeps < 1:
            raise ConfigError("sweeps must be >= 1")
        if self.shots < 1:
            raise ConfigError("shots must be >= 1")
        if self.krylov_k < 1:
            raise ConfigError("krylov_k must be >= 1")
        if self.qubit_guard < 1:
            raise ConfigError("qubit_guard must be >= 1")

    @property
    def iso_shape(self) -> tuple[int, int]:
        return (self.lattice_x - 2, self.lattice_y)

    @property
    def n_phys_qubits(self) -> int:
        return self.lattice_x * self.lattice_y

    def validated(self) -> "RunConfig":
        """Check module preconditions that depend on derived sizes."""
        if self.n_phys_qubits > self.qubit_guard:
            raise GuardError(
                f"{self.lattice_x}x{self.lattice_y} lattice needs "
                f"{self.n_phys_qubits} qubits, guard is {self.qubit_guard}"
            )
        return self

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in CONFIG_FIELDS}

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        # A summary file embeds its config under "config"; accept both forms.
        if "config" in data and isinstance(data["config"], dict):
            data = data["config"]
        unknown = set(data) - set(CONFIG_FIELDS)
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)


def load_config(path: str | Path, overrides: dict | None = None) -> RunConfig:
    """Read a config (or summary) JSON file and apply overrides on top."""
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    if "config" in data and isinstance(data["config"], dict):
        data = data["config"]
    if overrides:
        data = {**data, **overrides}
    return RunConfig.from_dict(data)


def run_experiment(config: RunConfig, out_dir: str | Path) -> tuple[SweepReport, dict]:
    """Execute one run and write sweep.csv plus summary.json into out_dir."""
    config.validated()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    ham = tfim(config.lattice_x, config.lattice_y, config.g)
    reference = None
    if config.n_phys_qubits <= ITERATIVE_QUBIT_LIMIT:
        reference = exact_ground(ham, want_vector=False).ground_energy

    lx, ly = config.iso_shape
    state = IsoTNS.random(lx, ly, config.d, seed=config.seed)
    sweep_cfg = SweepConfig(
        method=config.method,
        sweeps=config.sweeps,
        shots=config.shots,
        adaptive_doubling=config.adaptive_doubling,
        krylov_k=config.krylov_k,
        seed=config.seed,
        reference_energy=reference,
    )
    report = optimize(state, ham, sweep_cfg)

    csv_path = out / "sweep.csv"
    json_path = out / "summary.json"
    csv_path.write_text(report.to_csv())
    summary = dict(report.summary())
    summary["config"] = config.to_dict()
    summary["iso_shape"] = list(config.iso_shape)
    summary["n_phys_qubits"] = config.n_phys_qubits
    summary["artifacts"] = {"csv": csv_path.name}
    json_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    paths = {"csv": str(csv_path), "summary": str(json_path)}
    return report, paths


def _config_summary_line(report: SweepReport) -> str:
    rel = report.final_rel_error
    rel_text = "n/a" if rel is None else f"{rel:.6e}"
    return (
        f"final_energy={report.final_energy:.10f} "
        f"rel_error={rel_text} total_shots={report.total_shots}"
    )
