"""Circuit construction for isoTNS preparation and measurement.

``build_isometry_circuit`` turns every non-center tensor into a unitary gate
(padding the isometry with |0> input wires) and emits the gates in causal
order, so that running the circuit with the center vector on its designated
input wires reproduces the contracted state exactly.  Qubits are numbered on
the physical (lx+2) x ly lattice, q = row * (lx+2) + col.

``build_tomography_circuit`` prepends one Bell pair per center-leg qubit, so
the output state is sum_i |i> (x) U|i> / sqrt(dim) with the ancillas on the
trailing qubit indices.  ``build_shift_circuit`` instead prepares the phased
superposition (|0> + i^m |s>)/sqrt(2) on the center wires with a GHZ-style
prep, applies a unitary V, and then the isometry gates.

Gate matrices are dense unitaries applied directly; CX counts in
``resource_estimate`` are analytic, no decomposition is performed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import IsoTNS
from .tensors import embed_isometry_in_unitary

_H = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=np.complex128) / np.sqrt(2.0)
_CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=np.complex128
)


@dataclass(frozen=True)
class Gate:
    """Dense unitary on an ordered wire tuple; wires[0] is the most
    significant bit of the matrix index."""

    label: str
    qubits: tuple[int, ...]
    matrix: np.ndarray

    def __post_init__(self):
        k = len(self.qubits)
        if len(set(self.qubits)) != k:
            raise ValueError(f"gate {self.label}: repeated qubit in {self.qubits}")
        if self.matrix.shape != (2**k, 2**k):
            raise ValueError(
                f"gate {self.label}: matrix shape {self.matrix.shape} does not fit {k} qubits"
            )


@dataclass(frozen=True)
class Circuit:
    """Immutable causal gate sequence.

    ``center_wires`` lists the open input wires expecting the center vector
    (most significant bit first); closed circuits have none.  ``ancilla_wires``
    lists tomography ancillas, index-aligned with the center-leg bits.
    """

    n_qubits: int
    gates: tuple[Gate, ...]
    center_wires: tuple[int, ...] = ()
    ancilla_wires: tuple[int, ...] = ()

    def __post_init__(self):
        for g in self.gates:
            for q in g.qubits:
                if not (0 <= q < self.n_qubits):
                    raise ValueError(f"gate {g.label} touches qubit {q} outside 0..{self.n_qubits - 1}")

    def check_causal(self) -> None:
        """Verify no gate consumes a wire that is neither fresh nor live."""
        live = set(self.center_wires)
        seen = set(self.center_wires)
        for g in self.gates:
            for q in g.qubits:
                if q in live:
                    continue
                if q in seen:
                    raise ValueError(f"gate {g.label} reuses retired wire {q}")
                seen.add(q)
                live.add(q)
        return None


def dumps(circuit: Circuit) -> str:
    """Debug text listing: one 'label wires... (dim)' line per gate."""
    lines = [
        f"qubits {circuit.n_qubits}",
        f"center_wires {' '.join(map(str, circuit.center_wires)) or '-'}",
        f"ancilla_wires {' '.join(map(str, circuit.ancilla_wires)) or '-'}",
    ]
    for g in circuit.gates:
        wires = " ".join(map(str, g.qubits))
        lines.append(f"{g.label} {wires} (dim {g.matrix.shape[0]})")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ResourceEstimate:
    """Analytic hardware cost figures; no compilation is performed."""

    qubit_count: int
    cx_per_bulk_unitary: int
    cx_total: int
    depth_estimate: int


def resource_estimate(state: IsoTNS) -> ResourceEstimate:
    """Qubit and CX-count estimates for preparing the state.

    Each tensor's unitary costs 2 * (product of its output-leg dims) CX
    gates; a bulk tensor at bond dimension d costs 2*d**4.  The depth grows
    with the causal path length, (lx + ly) * d**4.
    """
    cx_total = 0
    for x in range(state.lx):
        for y in range(state.ly):
            legs = state.legs(x, y)
            ins = state.input_legs_at(x, y)
            out_dim = 1
            for i, leg in enumerate(legs):
                if leg not in ins:
                    out_dim *= state.tensors[x][y].shape[i]
            cx_total += 2 * out_dim
    return ResourceEstimate(
        qubit_count=state.n_phys_qubits,
        cx_per_bulk_unitary=2 * state.d**4,
        cx_total=cx_total,
        depth_estimate=(state.lx + state.ly) * state.d**4,
    )


def _bit_count(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if 2**n != dim:
        raise ValueError(f"leg dimension {dim} is not a power of two")
    return n


def build_isometry_circuit(state: IsoTNS) -> Circuit:
    """Gate sequence preparing the network state from the center vector.

    Returns an open circuit: the center-leg bits enter on
    ``circuit.center_wires`` (canonical leg order, most significant bit of
    each leg first) and all other wires start in |0>.
    """
    cx, cy = state.center
    center_legs = state.legs(cx, cy)
    center_t = state.tensors[cx][cy]

    bond_wires: dict = {}
    phys_of: dict = {}
    wire = 0
    center_wires = []
    for i, leg in enumerate(center_legs):
        bits = _bit_count(center_t.shape[i])
        ws = list(range(wire, wire + bits))
        wire += bits
        center_wires.extend(ws)
        if leg.startswith("P"):
            phys_of[ws[0]] = state.qubit_index(cx, cy, int(leg[1:]))
        else:
            bond_wires[_bond_of(state, cx, cy, leg)] = ws

    gates = []
    for (x, y) in state.iter_sites_causal():
        if (x, y) == (cx, cy):
            continue
        t = state.tensors[x][y]
        legs = state.legs(x, y)
        ins = state.input_legs_at(x, y)
        in_names = [l for l in legs if l in ins]
        out_names = [l for l in legs if l not in ins]

        in_wires = []
        for leg in in_names:
            in_wires.extend(bond_wires.pop(_bond_of(state, x, y, leg)))
        out_bits = sum(_bit_count(t.shape[legs.index(l)]) for l in out_names)
        n_pads = out_bits - len(in_wires)
        pad_wires = list(range(wire, wire + n_pads))
        wire += n_pads
        gate_wires = pad_wires + in_wires

        perm = [legs.index(l) for l in out_names] + [legs.index(l) for l in in_names]
        d_out = 2**out_bits
        d_in = 2 ** len(in_wires)
        w_matrix = t.transpose(perm).reshape(d_out, d_in)
        unitary = embed_isometry_in_unitary(w_matrix)
        gates.append(Gate(label=f"iso[{x},{y}]", qubits=tuple(gate_wires), matrix=unitary))

        cursor = 0
        for leg in out_names:
            bits = _bit_count(t.shape[legs.index(leg)])
            ws = gate_wires[cursor : cursor + bits]
            cursor += bits
            if leg.startswith("P"):
                phys_of[ws[0]] = state.qubit_index(x, y, int(leg[1:]))
            else:
                bond_wires[_bond_of(state, x, y, leg)] = ws

    n = state.n_phys_qubits
    if wire != n or bond_wires:
        raise AssertionError(f"wire accounting failed: used {wire} of {n}, dangling bonds {list(bond_wires)}")
    if sorted(phys_of.values()) != list(range(n)):
        raise AssertionError("wire-to-qubit relabeling is not a bijection")

    relabel = {w: phys_of[w] for w in range(n)}
    gates = [
        Gate(label=g.label, qubits=tuple(relabel[q] for q in g.qubits), matrix=g.matrix)
        for g in gates
    ]
    return Circuit(
        n_qubits=n,
        gates=tuple(gates),
        center_wires=tuple(relabel[w] for w in center_wires),
    )


def _bond_of(state: IsoTNS, x: int, y: int, leg: str) -> tuple:
    if leg == "L":
        return ("h", x - 1, y)
    if leg == "R":
        return ("h", x, y)
    if leg == "U":
        return ("v", x, y - 1)
    if leg == "D":
        return ("v", x, y)
    raise ValueError(f"not a virtual leg: {leg!r}")


def build_tomography_circuit(state: IsoTNS) -> Circuit:
    """Bell-pair circuit whose output is sum_i |i> (x) U|i> / sqrt(dim).

    Ancilla j (qubit n_phys + j) pairs with center-leg bit j; measuring the
    ancillas in a Pauli basis implements coefficient tomography of the
    effective Hamiltonian.
    """
    iso = build_isometry_circuit(state)
    n = iso.n_qubits
    k = len(iso.center_wires)
    gates = []
    ancillas = tuple(range(n, n + k))
    for j, w in enumerate(iso.center_wires):
        anc = n + j
        gates.append(Gate(label="H", qubits=(anc,), matrix=_H))
        gates.append(Gate(label="CNOT", qubits=(anc, w), matrix=_CNOT))
    gates.extend(iso.gates)
    return Circuit(
        n_qubits=n + k,
        gates=tuple(gates),
        center_wires=(),
        ancilla_wires=ancillas,
    )


def build_shift_circuit(state: IsoTNS, v_unitary: np.ndarray, s: int, m: int) -> Circuit:
    """Closed circuit preparing U V (|0> + e^{i pi m/2}|s>)/sqrt(2).

    The superposition is prepared GHZ-style on the support of s (Hadamard
    plus phase on the leading support bit, CNOT fanout to the rest), then the
    center-space unitary V and the isometry gates are applied.  s indexes the
    center basis with bit 0 most significant; s = 0 is rejected because the
    direct-expectation path needs no shift circuit.
    """
    iso = build_isometry_circuit(state)
    k = len(iso.center_wires)
    dim = 2**k
    if not (0 < s < dim):
        raise ValueError(f"s must be a nonzero center-basis index below {dim}, got {s}")
    if v_unitary.shape != (dim, dim):
        raise ValueError(f"V has shape {v_unitary.shape}, expected {(dim, dim)}")
    if np.max(np.abs(v_unitary.conj().T @ v_unitary - np.eye(dim))) > 1e-10:
        raise ValueError("V is not unitary")

    support = [j for j in range(k) if (s >> (k - 1 - j)) & 1]
    lead = support[0]
    phase = np.array([[1.0, 0.0], [0.0, 1j ** (m % 4)]], dtype=np.complex128)
    gates = [Gate(label="H", qubits=(iso.center_wires[lead],), matrix=_H)]
    if m % 4:
        gates.append(Gate(label=f"phase{m % 4}", qubits=(iso.center_wires[lead],), matrix=phase))
    for j in support[1:]:
        gates.append(
            Gate(label="CNOT", qubits=(iso.center_wires[lead], iso.center_wires[j]), matrix=_CNOT)
        )
    gates.append(Gate(label="V", qubits=iso.center_wires, matrix=np.asarray(v_unitary, dtype=np.complex128)))
    gates.extend(iso.gates)
    return Circuit(n_qubits=iso.n_qubits, gates=tuple(gates), center_wires=())
