"""The stand-in quantum processor: exact statevector evolution and sampling.

States live on ``n`` qubits with qubit 0 as the most significant bit of the
flat amplitude index, so ``amplitudes.reshape([2]*n)`` puts qubit q on axis
q.  Sampling uses a counter-based generator keyed by (seed, setting id), so
batches are reproducible independently of execution order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuits import Circuit
from .errors import GuardError
from .pauli import PauliString, PauliSum, apply_string, apply_sum

DEFAULT_QUBIT_GUARD = 26


@dataclass
class Statevector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128).reshape(-1)
        if self.amplitudes.size != 2**self.n_qubits:
            raise ValueError(
                f"{self.amplitudes.size} amplitudes for {self.n_qubits} qubits"
            )

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def as_axes(self) -> np.ndarray:
        """View with one axis per qubit."""
        return self.amplitudes.reshape([2] * self.n_qubits)


@dataclass(frozen=True)
class ShotBatch:
    """Measurement record: unique outcome bitstrings and their counts."""

    setting: int
    shots: int
    values: np.ndarray
    counts: np.ndarray
    seed: int

    def __post_init__(self):
        if int(self.counts.sum()) != self.shots:
            raise ValueError("outcome counts do not add up to the shot total")


def _check_guard(n_qubits: int, max_qubits: int) -> None:
    if n_qubits > max_qubits:
        raise GuardError(f"{n_qubits} qubits exceed the {max_qubits}-qubit guard")


def apply_gate(amps: np.ndarray, qubits: tuple[int, ...], matrix: np.ndarray) -> np.ndarray:
    """Apply a dense unitary to the axis-per-qubit amplitude array."""
    k = len(qubits)
    m = matrix.reshape([2] * (2 * k))
    amps = np.tensordot(m, amps, axes=(tuple(range(k, 2 * k)), qubits))
    return np.moveaxis(amps, range(k), qubits)


def run(circuit: Circuit, center_state: np.ndarray | None = None, max_qubits: int = DEFAULT_QUBIT_GUARD) -> Statevector:
    """Run the circuit on |0...0>, optionally feeding the open center wires.

    ``center_state`` is required exactly when the circuit has center wires;
    it is placed on those wires (bit j of the center index on wire
    ``center_wires[j]``) before any gate acts.
    """
    n = circuit.n_qubits
    _check_guard(n, max_qubits)
    if (center_state is None) != (len(circuit.center_wires) == 0):
        raise ValueError("center_state must be given iff the circuit has open center wires")

    amps = np.zeros([2] * n, dtype=np.complex128)
    if center_state is None:
        amps[(0,) * n] = 1.0
        input_norm = 1.0
    else:
        k = len(circuit.center_wires)
        v = np.asarray(center_state, dtype=np.complex128).reshape(-1)
        if v.size != 2**k:
            raise ValueError(f"center state has {v.size} amplitudes, wires expect {2**k}")
        block = v.reshape([2] * k)
        order = np.argsort(circuit.center_wires)
        index = [0] * n
        for w in circuit.center_wires:
            index[w] = slice(None)
        amps[tuple(index)] = block.transpose(order)
        input_norm = float(np.linalg.norm(v))

    for gate in circuit.gates:
        amps = apply_gate(amps, gate.qubits, gate.matrix)

    out = Statevector(n, amps.reshape(-1))
    if abs(out.norm() - input_norm) > 1e-9 * max(1.0, input_norm):
        raise AssertionError(f"norm drifted from {input_norm} to {out.norm()}")
    return out


def reduce_to_center(circuit: Circuit, state: Statevector) -> np.ndarray:
    """Adjoint of ``run`` onto the center space: apply inverse gates, project
    every pad wire onto <0|, and return the center-leg vector."""
    if not circuit.center_wires:
        raise ValueError("circuit has no open center wires")
    amps = state.as_axes()
    for gate in reversed(circuit.gates):
        amps = apply_gate(amps, gate.qubits, gate.matrix.conj().T)
    index = [0] * circuit.n_qubits
    for w in circuit.center_wires:
        index[w] = slice(None)
    block = amps[tuple(index)]
    order = np.argsort(np.argsort(circuit.center_wires))
    return block.transpose(order).reshape(-1)


def expectation(state: Statevector, op: PauliSum | PauliString) -> float:
    """Exact <psi|op|psi> for a Pauli string or real-coefficient Pauli sum."""
    n = op.n_qubits
    if n != state.n_qubits:
        raise ValueError(f"operator on {n} qubits, state on {state.n_qubits}")
    amps = state.as_axes()
    if isinstance(op, PauliString):
        acted = apply_string(amps, op.letters)
    else:
        acted = apply_sum(amps, op)
    return float(np.real(np.vdot(amps, acted)))


def rotate_to_basis(amps: np.ndarray, basis: str) -> np.ndarray:
    """Rotate each qubit so that measuring Z afterwards measures the letter.

    X applies H; Y applies H S-dagger; Z and I leave the qubit alone.
    """
    h = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)
    hsdg = h @ np.diag([1.0, -1j])
    for q, letter in enumerate(basis):
        if letter in ("I", "Z"):
            continue
        if letter == "X":
            amps = apply_gate(amps, (q,), h)
        elif letter == "Y":
            amps = apply_gate(amps, (q,), hsdg)
        else:
            raise ValueError(f"unknown basis letter {letter!r}")
    return amps


def rng_for_setting(seed: int, setting: int) -> np.random.Generator:
    """Counter-based generator keyed by (seed, setting id)."""
    return np.random.Generator(np.random.Philox(key=[seed % 2**64, setting % 2**64]))


def sample_counts(probs: np.ndarray, shots: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Multinomial draw; returns (outcome indices, counts) for hit outcomes."""
    p = np.clip(np.asarray(probs, dtype=np.float64), 0.0, None)
    total = p.sum()
    if not (0.9999 < total < 1.0001):
        raise ValueError(f"probabilities sum to {total}")
    hits = rng.multinomial(shots, p / total)
    values = np.nonzero(hits)[0].astype(np.uint64)
    return values, hits[values.astype(np.int64)].astype(np.int64)


def sample(state: Statevector, basis: str, shots: int, seed: int, setting: int = 0) -> ShotBatch:
    """Measure every qubit in the given per-qubit Pauli basis.

    Outcomes are full bitstrings packed as integers (qubit 0 = most
    significant bit), drawn multinomially from the rotated distribution.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if len(basis) != state.n_qubits:
        raise ValueError(f"basis length {len(basis)} != {state.n_qubits} qubits")
    rotated = rotate_to_basis(state.as_axes().copy(), basis)
    probs = np.abs(rotated.reshape(-1)) ** 2
    values, counts = sample_counts(probs, shots, rng_for_setting(seed, setting))
    return ShotBatch(setting=setting, shots=shots, values=values, counts=counts, seed=seed)


def parity_signs(values: np.ndarray, mask: int) -> np.ndarray:
    """(-1)^popcount(value & mask) for each outcome value."""
    m = values.astype(np.uint64, copy=True)
    m &= np.uint64(mask)
    for shift in (32, 16, 8, 4, 2, 1):
        m ^= m >> np.uint64(shift)
    return 1 - 2 * (m & np.uint64(1)).astype(np.int64)
