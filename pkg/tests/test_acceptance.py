"""Acceptance gate: every shipped guarantee, one test per criterion.

Each test prints a single PASS/FAIL line with its key numbers and enforces
the stated tolerance and time budget.  Run order follows criterion number.
"""

import time

import numpy as np
import pytest

from isodmrg.circuits import build_isometry_circuit, resource_estimate
from isodmrg.estimators import (
    ShotPlan,
    apply_heff,
    exact_effective_hamiltonian,
    krylov_ground,
    tomography_estimate,
)
from isodmrg.network import IsoTNS
from isodmrg.pauli import tfim
from isodmrg.reference import exact_ground
from isodmrg.simulator import run
from isodmrg.sweep import SweepConfig, optimize, sweep_schedule


def _report(capsys, number, name, ok, detail):
    with capsys.disabled():
        print(f"\n[acceptance {number}] {name}: {'PASS' if ok else 'FAIL'} ({detail})", flush=True)
    assert ok, f"criterion {number} ({name}): {detail}"


def _move_center_to(state, x, y):
    while state.center[0] < x:
        state.move_center_to_row(0)
        state.moses_move("right")
    state.move_center_to_row(y)


# corner, two edges, interior, far corner of the 3x3 tensor grid
FIVE_SITES = ((0, 0), (1, 0), (0, 1), (1, 1), (2, 2))


def _five_site_states():
    ham = tfim(5, 3, 3.5)
    for x, y in FIVE_SITES:
        state = IsoTNS.random(3, 3, 2, seed=11)
        _move_center_to(state, x, y)
        yield (x, y), state, ham


@pytest.fixture(scope="module")
def reference_16q():
    return exact_ground(tfim(4, 4, 3.5), want_vector=False).ground_energy


def _run_curve(iso_lx, iso_ly, method, sweeps, shots, seed, ref, adaptive=False):
    state = IsoTNS.random(iso_lx, iso_ly, 2, seed=seed)
    ham = tfim(iso_lx + 2, iso_ly, 3.5)
    config = SweepConfig(
        method=method,
        sweeps=sweeps,
        shots=shots,
        seed=seed,
        adaptive_doubling=adaptive,
        reference_energy=ref,
    )
    return optimize(state, ham, config)


def _shots_at_target(report, target):
    for rec in report.steps:
        if rec.rel_error is not None and rec.rel_error <= target:
            return rec.shots_cumulative
    return None


def test_criterion_1_estimator_oracle_equivalence(capsys):
    t0 = time.monotonic()
    worst = 0.0
    for site, state, ham in _five_site_states():
        oracle = exact_effective_hamiltonian(state, ham)
        estimate = tomography_estimate(state, ham, ShotPlan(shots=1), backend="exact")
        dev = float(np.max(np.abs(estimate.matrix - oracle.matrix)))
        worst = max(worst, dev)
    elapsed = time.monotonic() - t0
    ok = worst < 1e-9 and elapsed < 60
    _report(
        capsys, 1, "coefficient tomography equals the adjoint-built center operator",
        ok, f"max entrywise dev {worst:.2e} over {len(FIVE_SITES)} center sites, {elapsed:.1f}s",
    )


def test_criterion_2_parameter_shift_equivalence(capsys):
    t0 = time.monotonic()
    rng = np.random.default_rng(202)
    worst = 0.0
    n_vectors = 0
    for site, state, ham in _five_site_states():
        oracle = exact_effective_hamiltonian(state, ham)
        for _ in range(4):
            v = rng.normal(size=oracle.dim) + 1j * rng.normal(size=oracle.dim)
            v /= np.linalg.norm(v)
            res = apply_heff(state, ham, v, backend="exact")
            dev = float(np.max(np.abs(res.v_prime - oracle.matrix @ v)))
            worst = max(worst, dev)
            n_vectors += 1
    elapsed = time.monotonic() - t0
    ok = worst < 1e-9 and n_vectors == 20 and elapsed < 60
    _report(
        capsys, 2, "shifted-superposition applications equal the matrix product",
        ok, f"max dev {worst:.2e} over {n_vectors} vectors, {elapsed:.1f}s",
    )


def test_criterion_3_circuit_contraction_equivalence(capsys):
    t0 = time.monotonic()
    shapes = [
        (1, 1, 2), (1, 2, 2), (1, 3, 2), (2, 1, 2), (2, 2, 2),
        (3, 1, 2), (2, 3, 2), (3, 2, 2), (1, 2, 4), (2, 2, 4),
        (4, 1, 2), (1, 4, 2), (3, 3, 2), (2, 4, 2), (3, 4, 2),
    ]
    worst = 0.0
    count = 0
    seed = 0
    while count < 50:
        lx, ly, d = shapes[count % len(shapes)]
        state = IsoTNS.random(lx, ly, d, seed=seed)
        circ = build_isometry_circuit(state)
        via_circuit = run(circ, center_state=state.center_vector()).amplitudes
        via_contraction = state.contract_full()
        dev = float(np.max(np.abs(via_circuit - via_contraction)))
        worst = max(worst, dev)
        count += 1
        seed += 1
    elapsed = time.monotonic() - t0
    ok = worst < 1e-10 and elapsed < 120
    _report(
        capsys, 3, "preparation circuit equals the tensor contraction",
        ok, f"max dev {worst:.2e} over {count} states up to 20 qubits, {elapsed:.1f}s",
    )


def test_criterion_4_exact_sweep_convergence(capsys, reference_16q):
    t0 = time.monotonic()
    report = _run_curve(2, 4, "exact", sweeps=5, shots=1, seed=1, ref=reference_16q)
    elapsed = time.monotonic() - t0
    rel = report.final_rel_error
    ok = rel is not None and rel < 1e-2 and elapsed < 300
    _report(
        capsys, 4, "five exact sweeps reach 1e-2 on the 16-spin lattice",
        ok, f"final rel error {rel:.2e}, {elapsed:.1f}s",
    )


def test_criterion_5_shot_budget_convergence(capsys, reference_16q):
    t0 = time.monotonic()
    exact = _run_curve(2, 4, "exact", sweeps=5, shots=1, seed=1, ref=reference_16q)
    low = _run_curve(2, 4, "tomography", sweeps=5, shots=1000, seed=1, ref=reference_16q)
    high = _run_curve(2, 4, "tomography", sweeps=5, shots=100000, seed=1, ref=reference_16q)
    elapsed = time.monotonic() - t0
    e_rel, l_rel, h_rel = (
        exact.final_rel_error,
        low.final_rel_error,
        high.final_rel_error,
    )
    within_2x = h_rel <= 2 * e_rel
    low_worse = l_rel > h_rel
    ok = within_2x and low_worse and elapsed < 3600
    _report(
        capsys, 5, "high-shot tomography tracks the exact curve, low-shot lags",
        ok,
        f"exact {e_rel:.2e}, 1e5 shots {h_rel:.2e} (<= 2x exact: {within_2x}), "
        f"1e3 shots {l_rel:.2e} (worse than 1e5: {low_worse}), {elapsed:.0f}s",
    )


def test_criterion_6_method_shot_efficiency(capsys):
    t0 = time.monotonic()
    ref = exact_ground(tfim(3, 3, 3.5), want_vector=False).ground_energy
    lanczos = _run_curve(1, 3, "lanczos", sweeps=3, shots=10000, seed=1, ref=ref, adaptive=True)
    tomo = _run_curve(1, 3, "tomography", sweeps=3, shots=10000, seed=1, ref=ref, adaptive=True)
    best_lanczos = min(r.rel_error for r in lanczos.steps)
    best_tomo = min(r.rel_error for r in tomo.steps)
    target = max(best_lanczos, best_tomo)
    shots_lanczos = _shots_at_target(lanczos, target)
    shots_tomo = _shots_at_target(tomo, target)
    elapsed = time.monotonic() - t0
    reached = shots_lanczos is not None and shots_tomo is not None
    ratio = (shots_tomo / shots_lanczos) if reached else float("nan")
    ok = reached and shots_lanczos <= shots_tomo and elapsed < 3600
    _report(
        capsys, 6, "Krylov solver needs fewer shots than tomography at matched error",
        ok,
        f"target rel error {target:.2e}: Krylov {shots_lanczos} shots vs "
        f"tomography {shots_tomo} shots, ratio {ratio:.1f}x, {elapsed:.0f}s",
    )


def test_criterion_7_statistical_properties(capsys):
    t0 = time.monotonic()
    state = IsoTNS.random(1, 1, 2, seed=7)
    ham = tfim(3, 1, 1.2)
    exact = tomography_estimate(state, ham, ShotPlan(shots=1), backend="exact")

    def mse(shots, reps, seed0):
        total = 0.0
        for r in range(reps):
            eff = tomography_estimate(
                state, ham, ShotPlan(shots=shots), backend="sampled", seed=seed0 + r
            )
            total += float(np.sum(np.abs(eff.matrix - exact.matrix) ** 2))
        return total / reps

    ratio = mse(100, 50, 5000) / mse(200, 50, 6000)
    halving_ok = 1.5 < ratio < 2.5

    biased = IsoTNS.product_state(1, 2)
    biased_ham = tfim(3, 2, 0.5)
    biased_exact = tomography_estimate(biased, biased_ham, ShotPlan(shots=1), backend="exact")

    def mse_pooled(pooled, reps=50):
        total = 0.0
        for r in range(reps):
            eff = tomography_estimate(
                biased,
                biased_ham,
                ShotPlan(shots=60, pooled_shifts=pooled),
                backend="sampled",
                seed=7000 + r,
            )
            total += float(np.sum(np.abs(eff.matrix - biased_exact.matrix) ** 2))
        return total / reps

    centered, raw = mse_pooled(True), mse_pooled(False)
    centering_ok = centered < raw
    elapsed = time.monotonic() - t0
    ok = halving_ok and centering_ok and elapsed < 600
    _report(
        capsys, 7, "shot doubling halves the variance; centering cuts it further",
        ok,
        f"doubling ratio {ratio:.2f} (want 2 +/- 25%), centered mse {centered:.3f} "
        f"< uncentered {raw:.3f}: {centering_ok}, {elapsed:.0f}s",
    )


def test_criterion_8_structural_constants(capsys):
    t0 = time.monotonic()
    state = IsoTNS.random(3, 5, 2, seed=8)
    est = resource_estimate(state)
    qubits_ok = state.n_phys_qubits == 25 and est.qubit_count == 25
    steps_ok = len(sweep_schedule(3, 5)) == 15
    cx_ok = est.cx_per_bulk_unitary == 32
    elapsed = time.monotonic() - t0
    ok = qubits_ok and steps_ok and cx_ok
    _report(
        capsys, 8, "3x5 grid: 25 spins, 15 steps per sweep, 32 CX per bulk unitary",
        ok,
        f"qubits {state.n_phys_qubits}, steps {len(sweep_schedule(3, 5))}, "
        f"CX {est.cx_per_bulk_unitary}, {elapsed:.2f}s",
    )


def test_criterion_9_invariant_suites(capsys):
    t0 = time.monotonic()
    failures = []

    # isometry conditions hold after every kind of move
    state = IsoTNS.random(3, 3, 2, seed=9)
    try:
        state.validate()
        state.shift_center("down")
        state.validate()
        state.move_center_to_row(0)
        state.validate()
        state.moses_move("right")
        state.validate()
        state.move_center_to_row(2)
        state.validate()
    except Exception as err:  # pragma: no cover - failure path
        failures.append(f"isometry checks: {err}")

    # the center vector carries the full state norm
    state = IsoTNS.random(2, 2, 2, seed=10)
    psi = state.contract_full()
    if abs(np.linalg.norm(psi) - np.linalg.norm(state.center_vector())) > 1e-10:
        failures.append("norm mismatch between center vector and full state")

    # in-column shifts are exact
    state = IsoTNS.random(2, 3, 2, seed=11)
    before = state.contract_full()
    rep = state.shift_center("down")
    after = state.contract_full()
    fid = abs(np.vdot(before, after)) / (np.linalg.norm(before) * np.linalg.norm(after))
    if rep.fidelity != 1.0 or fid < 1 - 1e-10:
        failures.append(f"in-column shift not exact (fidelity {fid})")

    # reported column-move fidelity equals the true global overlap
    for seed in (12, 13):
        state = IsoTNS.random(3, 3, 2, seed=seed)
        state.move_center_to_row(0)
        before = state.contract_full()
        rep = state.moses_move("right")
        after = state.contract_full()
        overlap = abs(np.vdot(before, after)) / (
            np.linalg.norm(before) * np.linalg.norm(after)
        )
        if abs(rep.fidelity - overlap) > 1e-8:
            failures.append(
                f"column move fidelity {rep.fidelity} != overlap {overlap} (seed {seed})"
            )

    # Ritz values never increase with subspace size
    state = IsoTNS.random(1, 1, 2, seed=14)
    ham = tfim(3, 1, 1.2)
    v0 = state.center_vector()
    energies = [
        krylov_ground(state, ham, v0, k=k, backend="exact").energy for k in (1, 2, 3, 4)
    ]
    if any(b > a + 1e-10 for a, b in zip(energies, energies[1:])):
        failures.append(f"Ritz values increased: {energies}")

    elapsed = time.monotonic() - t0
    ok = not failures and elapsed < 600
    _report(
        capsys, 9, "isometry, norm, shift, overlap and Ritz invariants",
        ok, "; ".join(failures) if failures else f"all invariants hold, {elapsed:.1f}s",
    )
