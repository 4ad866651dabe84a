import numpy as np
import pytest

from isodmrg.circuits import (
    build_isometry_circuit,
    build_shift_circuit,
    build_tomography_circuit,
    dumps,
    resource_estimate,
)
from isodmrg.network import IsoTNS
from isodmrg.pauli import PauliString
from isodmrg.simulator import expectation, reduce_to_center, run


def dense_state(state):
    v = state.contract_full()
    return v / np.linalg.norm(v)


class TestIsometryCircuit:
    @pytest.mark.parametrize("lx,ly,d,seed", [(1, 2, 2, 0), (2, 2, 2, 1), (2, 3, 2, 2), (3, 2, 2, 3)])
    def test_matches_network_contraction(self, lx, ly, d, seed):
        state = IsoTNS.random(lx, ly, d, seed=seed)
        circ = build_isometry_circuit(state)
        out = run(circ, center_state=state.center_vector()).amplitudes
        assert np.allclose(out, dense_state(state), atol=1e-10)

    def test_causal_order_holds(self):
        state = IsoTNS.random(2, 3, 2, seed=4)
        build_isometry_circuit(state).check_causal()

    def test_adjoint_recovers_center_vector(self):
        state = IsoTNS.random(2, 2, 2, seed=5)
        circ = build_isometry_circuit(state)
        full = run(circ, center_state=state.center_vector())
        back = reduce_to_center(circ, full)
        assert np.allclose(back, state.center_vector(), atol=1e-10)


class TestTomographyCircuit:
    def test_ancilla_marginal_is_maximally_mixed(self):
        # Bell pairing an isometry forces the ancilla reduced density
        # matrix to the maximally mixed state I/dim.
        state = IsoTNS.random(2, 3, 2, seed=6)
        circ = build_tomography_circuit(state)
        out = run(circ)
        n_sys = state.n_phys_qubits
        k = circ.n_qubits - n_sys
        dim = 2**k
        # ancillas occupy the least significant bits of the joint index
        psi = out.amplitudes.reshape(2**n_sys, dim)
        rho = psi.conj().T @ psi
        assert np.allclose(rho, np.eye(dim) / dim, atol=1e-10)
        for j in range(k):
            letters = ["I"] * circ.n_qubits
            letters[n_sys + j] = "Z"
            val = expectation(out, PauliString("".join(letters)))
            assert abs(val) < 1e-10

    def test_bulk_center_uses_five_ancillas(self):
        # one ancilla per physical leg plus log2(D) per virtual leg
        state = IsoTNS.random(3, 3, 2, seed=9)
        state.moses_move("right")
        state.shift_center("down")
        assert state.center == (1, 1)
        circ = build_tomography_circuit(state)
        assert len(circ.ancilla_wires) == 5

    def test_output_norm_and_wire_layout(self):
        state = IsoTNS.random(2, 2, 2, seed=7)
        circ = build_tomography_circuit(state)
        k = len(build_isometry_circuit(state).center_wires)
        assert circ.n_qubits == state.n_phys_qubits + k
        assert circ.ancilla_wires == tuple(
            range(state.n_phys_qubits, state.n_phys_qubits + k)
        )
        assert np.isclose(run(circ).norm(), 1.0, atol=1e-10)

    def test_bell_structure_against_direct_sum(self):
        # output must equal sum_i |i>_anc (x) U|i>_sys / sqrt(dim) with the
        # ancilla index equal to the center-space basis label
        state = IsoTNS.random(1, 2, 2, seed=8)
        iso = build_isometry_circuit(state)
        k = len(iso.center_wires)
        dim = 2**k
        n_sys = state.n_phys_qubits
        want = np.zeros(2 ** (n_sys + k), dtype=complex)
        for i in range(dim):
            basis = np.zeros(dim)
            basis[i] = 1.0
            branch = run(iso, center_state=basis).amplitudes
            # ancillas are the least significant bits of the joint index
            want[i::dim] += branch / np.sqrt(dim)
        got = run(build_tomography_circuit(state)).amplitudes
        assert np.allclose(got, want, atol=1e-10)


class TestShiftCircuit:
    def test_prepares_shifted_superposition(self):
        state = IsoTNS.random(1, 2, 2, seed=9)
        iso = build_isometry_circuit(state)
        k = len(iso.center_wires)
        dim = 2**k
        rng = np.random.default_rng(10)
        v, _ = np.linalg.qr(
            rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        )
        for s in (1, dim // 2, dim - 1):
            for m in range(4):
                circ = build_shift_circuit(state, v, s=s, m=m)
                got = run(circ).amplitudes
                center = np.zeros(dim, dtype=complex)
                center[0] = 1.0
                center[s] += 1j**m
                center /= np.sqrt(2)
                want = run(iso, center_state=v @ center).amplitudes
                assert np.allclose(got, want, atol=1e-10)

    def test_rejects_zero_shift_and_bad_unitary(self):
        state = IsoTNS.random(1, 2, 2, seed=11)
        dim = 2 ** len(build_isometry_circuit(state).center_wires)
        eye = np.eye(dim)
        with pytest.raises(ValueError):
            build_shift_circuit(state, eye, s=0, m=0)
        with pytest.raises(ValueError):
            build_shift_circuit(state, np.ones((dim, dim)), s=1, m=0)


class TestResourceEstimate:
    def test_lattice_qubit_count(self):
        # iso grid lx x ly encodes (lx + 2) x ly physical spins
        state = IsoTNS.random(3, 5, 2, seed=12)
        est = resource_estimate(state)
        assert est.qubit_count == 25

    def test_bulk_unitary_cx_cost(self):
        state = IsoTNS.random(3, 3, 2, seed=13)
        est = resource_estimate(state)
        assert est.cx_per_bulk_unitary == 32

    def test_depth_scales_with_causal_path(self):
        state = IsoTNS.random(1, 1, 1, seed=14)
        est = resource_estimate(state)
        assert est.qubit_count == 3
        assert est.depth_estimate == (1 + 1) * 1**4

    def test_total_cx_counts_output_legs(self):
        # single tensor, no virtual legs: three physical outputs of dim 2
        state = IsoTNS.random(1, 1, 2, seed=15)
        est = resource_estimate(state)
        assert est.cx_total == 2 * 8


class TestSerialization:
    def test_dump_is_stable_text(self):
        state = IsoTNS.random(1, 2, 2, seed=16)
        circ = build_isometry_circuit(state)
        a = dumps(circ)
        b = dumps(build_isometry_circuit(state))
        assert a == b
        assert "qubits" in a
