"""Exact ground-state reference via diagonalization of the physical Hamiltonian.

Small systems (<= 12 qubits) are diagonalized densely; larger ones (<= 20
qubits) use a restarted iterative eigensolve on an implicit Pauli matvec
that never materializes the matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as spla

from .errors import GuardError
from .pauli import PauliSum, apply_sum

DENSE_QUBIT_LIMIT = 12
ITERATIVE_QUBIT_LIMIT = 20


@dataclass(frozen=True)
class SpectrumResult:
    """Ground-state energy and, when size permits, the ground vector."""

    ground_energy: float
    ground_vector: np.ndarray | None
    method: str

    def __post_init__(self):
        if self.method not in ("dense", "iterative"):
            raise ValueError(f"unknown method {self.method!r}")


def _matvec_operator(ham: PauliSum, n: int) -> spla.LinearOperator:
    dim = 2**n

    def mv(v):
        return apply_sum(np.ascontiguousarray(v, dtype=np.complex128), ham)

    return spla.LinearOperator((dim, dim), matvec=mv, dtype=np.complex128)


def exact_ground(ham: PauliSum, want_vector: bool = True) -> SpectrumResult:
    """Lowest eigenpair of the Pauli-sum Hamiltonian.

    Deterministic: the iterative path starts from the fixed uniform vector,
    so repeated calls give bit-identical results.
    """
    n = ham.n_qubits
    if n > ITERATIVE_QUBIT_LIMIT:
        raise GuardError(
            f"exact_ground supports at most {ITERATIVE_QUBIT_LIMIT} qubits, got {n}"
        )
    dim = 2**n
    if n <= DENSE_QUBIT_LIMIT:
        mat = ham.to_matrix()
        vals, vecs = np.linalg.eigh(mat)
        vec = vecs[:, 0] if want_vector else None
        return SpectrumResult(float(vals[0]), vec, "dense")
    v0 = np.full(dim, 1.0 / np.sqrt(dim), dtype=np.complex128)
    op = _matvec_operator(ham, n)
    vals, vecs = spla.eigsh(op, k=1, which="SA", v0=v0, tol=1e-10, maxiter=5000)
    vec = np.ascontiguousarray(vecs[:, 0], dtype=np.complex128)
    resid = np.linalg.norm(op @ vec - vals[0] * vec)
    scale = sum(abs(coeff) for coeff, _ in ham.terms)
    if resid > 1e-8 * max(1.0, scale):
        raise RuntimeError(f"iterative eigensolve residual {resid:.2e} too large")
    return SpectrumResult(float(vals[0]), vec if want_vector else None, "iterative")
