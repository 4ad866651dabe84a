"""Measurement-driven estimation of the effective Hamiltonian.

Two protocols stand in for the quantum processor's role in the optimization
loop.  Tomography reconstructs every Pauli coefficient of
H_eff = U^dag H U from joint measurements on the Bell-pair state
|Psi~> = sum_i |i> (x) U|i> / sqrt(dim): the coefficient of P is
tr(P H_eff)/dim = (-1)^{#Y(P)} <P (x) H> on that state.  The parameter-shift
protocol instead estimates the single matrix-vector product H_eff v from
expectation values of H on the shifted states U V (|0> + i^m |s>)/sqrt(2),
which feeds a Krylov solve that never needs the full matrix.

Both accept an exact-expectation backend (infinite shots) and a sampling
backend with per-setting seeded shot noise.  The identity coefficient is
never assigned its own measurement setting: it is recovered from the pooled
physical-qubit marginals that all settings of a commuting group share, which
also supply the means used for centered-operator variance reduction.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .circuits import Circuit, build_isometry_circuit, build_tomography_circuit
from .errors import GuardError
from .network import IsoTNS
from .pauli import CommutingGroup, PauliString, PauliSum, apply_string, apply_sum, group_qubitwise
from .simulator import (
    DEFAULT_QUBIT_GUARD,
    Statevector,
    apply_gate,
    parity_signs,
    reduce_to_center,
    rng_for_setting,
    run,
    sample_counts,
)
from .tensors import embed_isometry_in_unitary, hermitian_lowest

CENTER_QUBIT_GUARD = 6

_LETTERS = "IXYZ"
_ROT = {
    "X": np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2),
    "Y": (np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)) @ np.diag([1.0, -1j]),
}


@dataclass(frozen=True)
class ShotPlan:
    """Measurement budget: shots per setting, grouping, centering flag."""

    shots: int
    grouping: str = "qubitwise"
    pooled_shifts: bool = True

    def __post_init__(self):
        if self.shots < 1:
            raise ValueError("shots must be >= 1")
        if self.grouping not in ("qubitwise", "none"):
            raise ValueError(f"unknown grouping mode {self.grouping!r}")


@dataclass
class EffectiveHamiltonian:
    """Hermitian matrix on the center-leg space plus its Pauli coefficients."""

    dim: int
    matrix: np.ndarray
    provenance: str
    coefficients: dict = field(default_factory=dict)
    identity_coefficient: float = 0.0
    shots_used: int = 0

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=np.complex128)
        if self.matrix.shape != (self.dim, self.dim):
            raise ValueError(f"matrix shape {self.matrix.shape} != dim {self.dim}")
        defect = float(np.max(np.abs(self.matrix - self.matrix.conj().T)))
        if defect > 1e-8:
            raise ValueError(f"matrix is not Hermitian (defect {defect:.2e})")

    def expectation(self, v: np.ndarray) -> float:
        v = np.asarray(v, dtype=np.complex128).reshape(-1)
        return float(np.real(np.vdot(v, self.matrix @ v)) / np.real(np.vdot(v, v)))


@dataclass
class ApplyResult:
    """One estimated matrix-vector product of the effective Hamiltonian."""

    w: np.ndarray
    v_prime: np.ndarray
    shots_used: int


def center_qubits(circuit: Circuit) -> int:
    k = len(circuit.center_wires)
    if k > CENTER_QUBIT_GUARD:
        raise GuardError(f"{k} center-leg qubits exceed the guard of {CENTER_QUBIT_GUARD}")
    return k


def pauli_letters(index: int, k: int) -> str:
    """Base-4 enumeration of Pauli strings; qubit 0 is the leading digit."""
    return "".join(_LETTERS[(index >> (2 * (k - 1 - j))) & 3] for j in range(k))


def _groups_for(ham: PauliSum, plan: ShotPlan) -> list[CommutingGroup]:
    if plan.grouping == "qubitwise":
        return group_qubitwise(ham)
    return [
        CommutingGroup(members=((c, s),), basis=s.letters)
        for c, s in ham.terms
    ]


def _sys_mask(letters: str) -> int:
    n = len(letters)
    return sum(1 << (n - 1 - q) for q in range(n) if letters[q] != "I")


def _rotate_rows(rows: np.ndarray, letters: str) -> np.ndarray:
    """Rotate the per-qubit axes 1..n of a (dim, 2, ..., 2) array to the
    measurement basis given by letters."""
    for q, letter in enumerate(letters):
        if letter in ("I", "Z"):
            continue
        rows = apply_gate(rows, (1 + q,), _ROT[letter])
    return rows


# Pauli letter of one qubit from its (X-mask bit, phase-mask bit) pair,
# as a base-4 digit matching pauli_letters.
_XW_DIGIT = {(0, 0): 0, (1, 0): 1, (1, 1): 2, (0, 1): 3}


def _wht_axis0(m: np.ndarray) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform along axis 0 (length 2^k)."""
    out = np.ascontiguousarray(m)
    n = out.shape[0]
    h = 1
    while h < n:
        for i in range(0, n, 2 * h):
            top = out[i : i + h].copy()
            bot = out[i + h : i + 2 * h]
            out[i : i + h] = top + bot
            out[i + h : i + 2 * h] = top - bot
        h *= 2
    return out


def exact_effective_hamiltonian(
    state: IsoTNS, ham: PauliSum, max_qubits: int = DEFAULT_QUBIT_GUARD
) -> EffectiveHamiltonian:
    """H_eff = U^dag H U column by column through the preparation circuit.

    Column j is built by running the circuit on center basis state |j>,
    applying H to the full statevector, and pulling the result back through
    the adjoint circuit.
    """
    if ham.n_qubits != state.n_phys_qubits:
        raise ValueError("Hamiltonian size does not match the lattice")
    circ = build_isometry_circuit(state)
    if circ.n_qubits > max_qubits:
        raise GuardError(f"{circ.n_qubits} qubits exceed the {max_qubits}-qubit guard")
    dim = 2 ** len(circ.center_wires)
    heff = np.zeros((dim, dim), dtype=np.complex128)
    basis = np.eye(dim, dtype=np.complex128)
    for j in range(dim):
        psi = run(circ, basis[j], max_qubits=max_qubits)
        acted = apply_sum(psi.as_axes(), ham).reshape(-1)
        heff[:, j] = reduce_to_center(circ, Statevector(circ.n_qubits, acted))
    heff = 0.5 * (heff + heff.conj().T)
    return EffectiveHamiltonian(dim=dim, matrix=heff, provenance="exact")


def _tomography_rows(state: IsoTNS, max_qubits: int) -> tuple[np.ndarray, int, int]:
    """Simulate the Bell-pair circuit; return (M, n_sys, k) where row i of M
    is <i|_anc Psi~, a system statevector of squared norm 1/dim."""
    circ = build_tomography_circuit(state)
    if circ.n_qubits > max_qubits:
        raise GuardError(f"{circ.n_qubits} qubits exceed the {max_qubits}-qubit guard")
    k = len(circ.ancilla_wires)
    n_sys = circ.n_qubits - k
    psi = run(circ, max_qubits=max_qubits)
    amps = psi.as_axes()
    amps = np.moveaxis(amps, range(n_sys, n_sys + k), range(k))
    return amps.reshape(2**k, 2**n_sys), n_sys, k


def tomography_estimate(
    state: IsoTNS,
    ham: PauliSum,
    plan: ShotPlan,
    backend: str = "exact",
    seed: int = 0,
    max_qubits: int = DEFAULT_QUBIT_GUARD,
) -> EffectiveHamiltonian:
    """Reconstruct H_eff from Bell-state measurements.

    One measurement setting per (non-identity Pauli P on the ancillas,
    commuting group of H).  Within a setting the ancillas are measured in
    the basis of P and the physical qubits in the group's shared basis; the
    estimator averages z_P * z_O and applies the transpose sign (-1)^{#Y(P)}.
    The identity coefficient comes from the pooled physical marginals of all
    settings of each group; with ``plan.pooled_shifts`` those same marginals
    center the operators (z_O -> z_O - mu_O), reducing variance without
    changing expectations.

    The exact backend evaluates the same per-group quantities at infinite
    shots from the simulated Bell state.
    """
    if backend not in ("exact", "sampled"):
        raise ValueError(f"unknown backend {backend!r}")
    if ham.n_qubits != state.n_phys_qubits:
        raise ValueError("Hamiltonian size does not match the lattice")
    iso = build_isometry_circuit(state)
    k = center_qubits(iso)
    dim = 2**k
    groups = _groups_for(ham, plan)
    rows, n_sys, _ = _tomography_rows(state, max_qubits)

    if backend == "exact":
        gram = np.zeros((dim, dim), dtype=np.complex128)
        rows_nd = rows.reshape([2] * (k + n_sys))
        for coeff, string in ham.terms:
            acted = apply_string(rows_nd, "I" * k + string.letters)
            gram += coeff * dim * (rows.conj() @ acted.reshape(dim, -1).T)
        coeffs: dict[str, float] = {}
        for p in range(4**k):
            letters = pauli_letters(p, k)
            pm = PauliString(letters).to_matrix()
            coeffs[letters] = float(np.real(np.trace(pm @ gram)) / dim)
        shots_used = 0
    else:
        coeffs, shots_used = _tomography_sampled(rows, n_sys, k, ham, groups, plan, seed)

    matrix = np.zeros((dim, dim), dtype=np.complex128)
    for letters, value in coeffs.items():
        matrix += value * PauliString(letters).to_matrix()
    return EffectiveHamiltonian(
        dim=dim,
        matrix=matrix,
        provenance="exact-tomography" if backend == "exact" else f"tomography({plan.shots})",
        coefficients=coeffs,
        identity_coefficient=coeffs["I" * k],
        shots_used=shots_used,
    )


def _tomography_sampled(
    rows: np.ndarray,
    n_sys: int,
    k: int,
    ham: PauliSum,
    groups: list[CommutingGroup],
    plan: ShotPlan,
    seed: int,
) -> tuple[dict, int]:
    """Shot-sampled tomography over all (P != I, group) settings.

    Sampling is factorized exactly: system outcomes are drawn from the
    basis-rotated marginal (shared by every P of a group), then ancilla
    outcomes from the conditional distribution of the P-rotated ancillas
    given each system outcome.  The joint law equals full-register
    multinomial sampling; the generator is keyed by (seed, setting id).
    """
    dim = 2**k
    nbins = 2**n_sys
    shots = plan.shots
    n_p = 4**k - 1

    # Per-group precomputation shared by every P setting of the group:
    # system-basis-rotated Bell rows, marginal CDF, and the z_O sign table
    # for every system outcome bin.
    rotated = []
    cdfs = []
    marginals = []
    sign_tables = []
    bin_bits = (
        (np.arange(nbins, dtype=np.uint64)[None, :] >> np.arange(n_sys, dtype=np.uint64)[:, None])
        & np.uint64(1)
    ).astype(np.float64)
    for g in groups:
        rg = _rotate_rows(rows.reshape([dim] + [2] * n_sys), g.basis).reshape(dim, nbins)
        rotated.append(rg)
        q = np.sum(np.abs(rg) ** 2, axis=0)
        q /= q.sum()
        marginals.append(q)
        cdf = np.cumsum(q)
        cdf[-1] = 1.0
        cdfs.append(cdf)
        mask_bits = np.array(
            [[(m >> j) & 1 for j in range(n_sys)] for m in (_sys_mask(s.letters) for _, s in g.members)],
            dtype=np.float64,
        )
        sign_tables.append(1.0 - 2.0 * ((mask_bits @ bin_bits) % 2))

    # accumulators: per setting-derived sums
    sum_pz = np.zeros((n_p, len(groups), max(len(g.members) for g in groups)))
    sum_p = np.zeros((n_p, len(groups)))
    pooled_z = [np.zeros(len(g.members)) for g in groups]
    pooled_n = [0 for _ in groups]

    # The P expectation of the conditional ancilla state factors through a
    # Walsh-Hadamard transform over the ancilla index: for P specified by an
    # X-type mask x and a phase mask w, <M_s|P|M_s> = Re[(-i)^{#Y} W_x[w, s]]
    # with W_x the transform of T_x[a, s] = conj(M[a, s]) M[a^x, s].  One
    # transform per (x, group) covers every phase mask at once.
    anc_index = np.arange(dim, dtype=np.int64)
    n_groups = len(groups)
    for x in range(dim):
        perm = anc_index ^ x
        for gi, g in enumerate(groups):
            m_rot = rotated[gi]
            w_table = _wht_axis0(m_rot.conj() * m_rot[perm])
            for w in range(dim):
                p_index = 0
                for j in range(k):
                    xb = (x >> (k - 1 - j)) & 1
                    wb = (w >> (k - 1 - j)) & 1
                    p_index |= _XW_DIGIT[(xb, wb)] << (2 * (k - 1 - j))
                if p_index == 0:
                    continue
                m4 = bin(x & w).count("1") % 4
                row = w_table[w]
                contrast = (row.real, row.imag, -row.real, -row.imag)[m4]
                q = marginals[gi]
                with np.errstate(divide="ignore", invalid="ignore"):
                    p_plus = np.where(q > 0, 0.5 * (1.0 + contrast / q), 0.5)
                p_plus = np.clip(p_plus, 0.0, 1.0)

                setting = (p_index - 1) * n_groups + gi
                rng = rng_for_setting(seed, setting)
                if shots * 8 >= nbins:
                    counts = rng.multinomial(shots, marginals[gi])
                else:
                    u = rng.random(shots)
                    idx = np.searchsorted(cdfs[gi], u, side="right")
                    counts = np.bincount(idx, minlength=nbins)
                pooled_z[gi] += sign_tables[gi] @ counts
                pooled_n[gi] += shots
                occupied = np.nonzero(counts)[0]
                # The recorded statistic is the +/-1 parity contrast of the
                # ancilla counts, so the multinomial pushforward is exactly
                # a binomial in the +1 probability mass.
                n_plus = rng.binomial(counts[occupied], p_plus[occupied])
                t_net = np.zeros(nbins)
                t_net[occupied] = 2.0 * n_plus - counts[occupied]
                sum_p[p_index - 1, gi] = float(np.sum(t_net))
                sum_pz[p_index - 1, gi, : len(g.members)] = sign_tables[gi] @ t_net

    mus = [pooled_z[gi] / pooled_n[gi] for gi in range(len(groups))]
    coeffs: dict[str, float] = {}
    identity = 0.0
    for gi, g in enumerate(groups):
        for oi, (h_o, _) in enumerate(g.members):
            identity += h_o * mus[gi][oi]
    coeffs["I" * k] = float(identity)
    for p_index in range(1, 4**k):
        letters = pauli_letters(p_index, k)
        sign = (-1.0) ** letters.count("Y")
        value = 0.0
        for gi, g in enumerate(groups):
            for oi, (h_o, _) in enumerate(g.members):
                est = sum_pz[p_index - 1, gi, oi] / shots
                if plan.pooled_shifts:
                    est -= mus[gi][oi] * (sum_p[p_index - 1, gi] / shots)
                value += h_o * est
        coeffs[letters] = float(sign * value)
    return coeffs, (4**k - 1) * len(groups) * shots


def dump_coefficients(eff: EffectiveHamiltonian, path: str) -> None:
    """CSV table of estimated Pauli coefficients for diagnostics."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["pauli", "coefficient", "provenance", "shots_used"])
        for letters in sorted(eff.coefficients):
            writer.writerow([letters, repr(eff.coefficients[letters]), eff.provenance, eff.shots_used])


# ------------------------------------------------------- parameter-shift path


def _phi_columns(state: IsoTNS, v_unitary: np.ndarray, max_qubits: int) -> tuple[np.ndarray, Circuit]:
    """Statevectors U (V e_s) for every center basis vector e_s."""
    circ = build_isometry_circuit(state)
    if circ.n_qubits > max_qubits:
        raise GuardError(f"{circ.n_qubits} qubits exceed the {max_qubits}-qubit guard")
    dim = 2 ** len(circ.center_wires)
    cols = np.empty((dim, 2**circ.n_qubits), dtype=np.complex128)
    for s in range(dim):
        cols[s] = run(circ, v_unitary[:, s], max_qubits=max_qubits).amplitudes
    return cols, circ


def _sampled_energy(
    phi: np.ndarray, n_qubits: int, groups: list[CommutingGroup], shots: int, seed: int, setting: int
) -> tuple[float, int, int]:
    """<phi|H|phi> from per-group sampled measurements on |phi>."""
    total = 0.0
    amps = phi.reshape([2] * n_qubits)
    for g in groups:
        rotated = _rotate_rows(amps[None, ...], g.basis)[0].reshape(-1)
        probs = np.abs(rotated) ** 2
        values, counts = sample_counts(probs, shots, rng_for_setting(seed, setting))
        for h_o, string in g.members:
            signs = parity_signs(values, _sys_mask(string.letters))
            total += h_o * float(signs @ counts) / shots
        setting += 1
    return total, setting, len(groups) * shots


def apply_heff(
    state: IsoTNS,
    ham: PauliSum,
    v: np.ndarray,
    plan: ShotPlan | None = None,
    backend: str = "exact",
    seed: int = 0,
    max_qubits: int = DEFAULT_QUBIT_GUARD,
) -> ApplyResult:
    """Estimate H_eff v through the parameter-shift rule.

    A deterministic unitary completion V of v fixes the working basis.  The
    diagonal entry w_0 is the direct expectation of H on U V|0> = U v; each
    off-diagonal w_s (s != 0) combines the four shifted expectations
    E_m = <phi_s^m|H|phi_s^m> on phi_s^m = U V (|0> + i^m |s>)/sqrt(2) as
    w_s = (1/2) sum_m i^m E_m = <s|V^dag H_eff|v>.  Returns w in the V basis
    and v' = V w = H_eff v.

    The exact backend evaluates the same combination in closed form,
    w_s = <U V e_s| H |U v>, which equals the four-term sum exactly.
    """
    if backend not in ("exact", "sampled"):
        raise ValueError(f"unknown backend {backend!r}")
    if ham.n_qubits != state.n_phys_qubits:
        raise ValueError("Hamiltonian size does not match the lattice")
    v = np.asarray(v, dtype=np.complex128).reshape(-1)
    if abs(np.linalg.norm(v) - 1.0) > 1e-8:
        raise ValueError("v must be a unit vector")
    v_unitary = embed_isometry_in_unitary(v.reshape(-1, 1))
    cols, circ = _phi_columns(state, v_unitary, max_qubits)
    k = center_qubits(circ)
    dim = 2**k
    w = np.zeros(dim, dtype=np.complex128)

    if backend == "exact":
        acted = apply_sum(cols[0].reshape([2] * circ.n_qubits), ham).reshape(-1)
        for s in range(dim):
            w[s] = np.vdot(cols[s], acted)
        w[0] = np.real(w[0])
        shots_used = 0
    else:
        if plan is None:
            raise ValueError("sampled backend requires a shot plan")
        groups = _groups_for(ham, plan)
        setting = 0
        shots_used = 0
        e0, setting, used = _sampled_energy(cols[0], circ.n_qubits, groups, plan.shots, seed, setting)
        shots_used += used
        w[0] = e0
        for s in range(1, dim):
            acc = 0.0 + 0.0j
            for m in range(4):
                phi = (cols[0] + (1j**m) * cols[s]) / np.sqrt(2.0)
                e_m, setting, used = _sampled_energy(phi, circ.n_qubits, groups, plan.shots, seed, setting)
                shots_used += used
                acc += (1j**m) * e_m
            w[s] = 0.5 * acc
    return ApplyResult(w=w, v_prime=v_unitary @ w, shots_used=shots_used)


@dataclass
class KrylovResult:
    energy: float
    vector: np.ndarray
    shots_used: int
    n_applies: int
    ritz_values: list = field(default_factory=list)


def krylov_ground(
    state: IsoTNS,
    ham: PauliSum,
    v0: np.ndarray,
    k: int = 3,
    plan: ShotPlan | None = None,
    backend: str = "exact",
    seed: int = 0,
    max_qubits: int = DEFAULT_QUBIT_GUARD,
) -> KrylovResult:
    """Krylov-subspace ground solve fed by measured H_eff applications.

    Builds up to k basis vectors with full re-orthonormalization (two
    Gram-Schmidt passes), stops early when the residual drops below 1e-8,
    and solves the projected eigenproblem assembled from the stored
    applications.  With the exact backend and k equal to the center
    dimension this reproduces the exact ground pair.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    v0 = np.asarray(v0, dtype=np.complex128).reshape(-1)
    nrm = np.linalg.norm(v0)
    if nrm == 0:
        raise ValueError("v0 must be nonzero")
    basis = [v0 / nrm]
    applied = []
    shots_used = 0
    for j in range(k):
        res = apply_heff(
            state, ham, basis[j], plan=plan, backend=backend, seed=seed + 7919 * j, max_qubits=max_qubits
        )
        shots_used += res.shots_used
        applied.append(res.v_prime)
        if j == k - 1 or len(basis) == v0.size:
            break
        r = res.v_prime.copy()
        for _ in range(2):
            for b in basis:
                r -= np.vdot(b, r) * b
        beta = np.linalg.norm(r)
        if beta < 1e-8 * max(1.0, float(np.linalg.norm(res.v_prime))):
            break
        basis.append(r / beta)

    n_b = len(basis)
    n_w = len(applied)
    t = np.zeros((n_b, n_w), dtype=np.complex128)
    for i in range(n_b):
        for j in range(n_w):
            t[i, j] = np.vdot(basis[i], applied[j])
    t_square = t[:n_w, :n_w]
    t_square = 0.5 * (t_square + t_square.conj().T)
    values, vectors = hermitian_lowest(t_square, k=1)
    ground = np.zeros_like(v0)
    for i in range(n_w):
        ground += vectors[:, 0][i] * basis[i]
    ground /= np.linalg.norm(ground)
    ritz = [float(x) for x in np.linalg.eigvalsh(t_square)]
    return KrylovResult(
        energy=float(values[0]),
        vector=ground,
        shots_used=shots_used,
        n_applies=n_w,
        ritz_values=ritz,
    )
