"""Pauli strings, real-weighted Pauli sums, and the transverse-field Ising model.

Qubits on an ``Lx x Ly`` physical grid are indexed row-major,
``q = row * Lx + col``.  Statevectors use the matching convention: the
amplitude array reshaped to ``[2] * n`` has one axis per qubit, axis ``q``
for qubit ``q``, so qubit 0 owns the most significant bit of the flat index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "PauliString",
    "PauliSum",
    "CommutingGroup",
    "tfim",
    "group_qubitwise",
    "center_terms",
    "apply_string",
    "apply_sum",
]

_LETTERS = frozenset("IXYZ")

_SINGLE = {
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}


@dataclass(frozen=True)
class PauliString:
    """Tensor product of single-qubit Paulis, one letter per qubit."""

    letters: str

    def __post_init__(self):
        if not self.letters or set(self.letters) - _LETTERS:
            raise ValueError(f"invalid Pauli letters {self.letters!r}")

    @property
    def n_qubits(self) -> int:
        return len(self.letters)

    @property
    def weight(self) -> int:
        return sum(c != "I" for c in self.letters)

    def support(self) -> tuple[int, ...]:
        return tuple(q for q, c in enumerate(self.letters) if c != "I")

    def qubitwise_commutes(self, other: "PauliString") -> bool:
        if self.n_qubits != other.n_qubits:
            raise ValueError("qubit count mismatch")
        return all(
            a == b or a == "I" or b == "I"
            for a, b in zip(self.letters, other.letters)
        )

    def to_matrix(self) -> np.ndarray:
        if self.n_qubits > 12:
            raise ValueError("dense Pauli matrices are limited to 12 qubits")
        m = np.array([[1.0 + 0j]])
        for c in self.letters:
            m = np.kron(m, _SINGLE[c])
        return m


@dataclass(frozen=True)
class CommutingGroup:
    """Qubit-wise commuting terms sharing one measurement basis.

    ``basis`` holds one letter per qubit; positions no member touches stay
    ``I`` and are measured in Z.
    """

    members: tuple[tuple[float, PauliString], ...]
    basis: str


@dataclass(frozen=True)
class PauliSum:
    """Real linear combination of Pauli strings on a fixed qubit count."""

    terms: tuple[tuple[float, PauliString], ...]

    def __post_init__(self):
        if not self.terms:
            raise ValueError("empty Pauli sum")
        n = self.terms[0][1].n_qubits
        seen = set()
        clean = []
        for coeff, string in self.terms:
            if isinstance(coeff, complex):
                raise ValueError("coefficients must be real")
            if string.n_qubits != n:
                raise ValueError("mixed qubit counts in Pauli sum")
            if string.letters in seen:
                raise ValueError(f"duplicate term {string.letters}")
            seen.add(string.letters)
            clean.append((float(coeff), string))
        object.__setattr__(self, "terms", tuple(clean))

    @property
    def n_qubits(self) -> int:
        return self.terms[0][1].n_qubits

    @property
    def n_terms(self) -> int:
        return len(self.terms)

    def coefficient_norm(self) -> float:
        """Sum of absolute coefficients; an upper bound on the operator norm."""
        return float(sum(abs(c) for c, _ in self.terms))

    def to_matrix(self) -> np.ndarray:
        if self.n_qubits > 12:
            raise ValueError("dense matrices are limited to 12 qubits")
        dim = 2**self.n_qubits
        m = np.zeros((dim, dim), dtype=np.complex128)
        for coeff, string in self.terms:
            m += coeff * string.to_matrix()
        return m

    def to_text(self) -> str:
        return "\n".join(f"{c!r} {s.letters}" for c, s in self.terms) + "\n"

    @staticmethod
    def from_text(text: str) -> "PauliSum":
        terms = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"line {lineno}: expected 'coeff letters'")
            try:
                coeff = float(parts[0])
            except ValueError as exc:
                raise ValueError(f"line {lineno}: bad coefficient {parts[0]!r}") from exc
            terms.append((coeff, PauliString(parts[1])))
        return PauliSum(tuple(terms))


def tfim(lx: int, ly: int, g: float) -> PauliSum:
    """Open-boundary transverse-field Ising model on an ``lx x ly`` grid.

    ``H = -sum_<ij> Z_i Z_j - g * sum_i X_i`` with nearest-neighbour bonds and
    qubits indexed ``q = row * lx + col``.  Bond terms come first (row-major
    site order, right bond before down bond), then the field terms.
    """
    if lx < 1 or ly < 1:
        raise ValueError("grid dimensions must be positive")
    n = lx * ly
    terms: list[tuple[float, PauliString]] = []

    def zz(a: int, b: int) -> PauliString:
        letters = ["I"] * n
        letters[a] = "Z"
        letters[b] = "Z"
        return PauliString("".join(letters))

    for row in range(ly):
        for col in range(lx):
            q = row * lx + col
            if col + 1 < lx:
                terms.append((-1.0, zz(q, q + 1)))
            if row + 1 < ly:
                terms.append((-1.0, zz(q, q + lx)))
    for q in range(n):
        letters = ["I"] * n
        letters[q] = "X"
        terms.append((-float(g), PauliString("".join(letters))))
    return PauliSum(tuple(terms))


def group_qubitwise(h: PauliSum) -> list[CommutingGroup]:
    """Greedy first-fit partition of ``h`` into qubit-wise commuting groups.

    Terms are scanned in order and placed in the first group whose every
    member they qubit-wise commute with.  For the transverse-field Ising model
    this yields exactly two groups (bonds, fields).
    """
    groups: list[list[tuple[float, PauliString]]] = []
    for coeff, string in h.terms:
        for group in groups:
            if all(string.qubitwise_commutes(s) for _, s in group):
                group.append((coeff, string))
                break
        else:
            groups.append([(coeff, string)])
    out = []
    for group in groups:
        basis = ["I"] * h.n_qubits
        for _, string in group:
            for q, c in enumerate(string.letters):
                if c != "I":
                    basis[q] = c
        out.append(CommutingGroup(tuple(group), "".join(basis)))
    return out


def center_terms(
    h: PauliSum, shifts: list[float] | np.ndarray
) -> tuple[PauliSum, float]:
    """Bookkeeping for centered observables ``O - <O>``.

    Subtracting the per-term expectation shifts each term by a multiple of the
    identity, so the Pauli content is unchanged and the scalar
    ``offset = sum_i h_i * shift_i`` must be added back to any energy computed
    from the centered sum.
    """
    shifts = np.asarray(shifts, dtype=float)
    if shifts.shape != (h.n_terms,):
        raise ValueError("one shift per term required")
    offset = float(sum(c * s for (c, _), s in zip(h.terms, shifts)))
    return h, offset


def apply_string(amps: np.ndarray, letters: str) -> np.ndarray:
    """Apply a Pauli string to an amplitude array (shape preserved).

    The array may be flat or have one axis per qubit; its size must be 2^n.
    Uses axis flips for X/Y and broadcast sign factors for Z/Y, so the cost is
    ``O(2^n)`` per non-identity letter with no index tables.
    """
    n = len(letters)
    if amps.size != 2**n:
        raise ValueError("length mismatch between state and Pauli string")
    shape = amps.shape
    flip_axes = tuple(q for q, c in enumerate(letters) if c in "XY")
    sign_axes = tuple(q for q, c in enumerate(letters) if c in "ZY")
    n_y = letters.count("Y")
    t = amps.reshape([2] * n)
    if flip_axes:
        t = np.flip(t, axis=flip_axes)
    out = np.array(t, dtype=np.complex128)
    for q in sign_axes:
        sgn_shape = [1] * n
        sgn_shape[q] = 2
        out *= np.array([1.0, -1.0]).reshape(sgn_shape)
    if n_y % 4:
        out *= (-1j) ** (n_y % 4)
    return out.reshape(shape)


def apply_sum(amps: np.ndarray, h: PauliSum) -> np.ndarray:
    """Apply a Pauli sum to an amplitude array (shape preserved)."""
    out = np.zeros(amps.shape, dtype=np.complex128)
    for coeff, string in h.terms:
        out += coeff * apply_string(amps, string.letters)
    return out
