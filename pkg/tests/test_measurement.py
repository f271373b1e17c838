"""Tests for finite-shot Pauli sampling and energy estimation."""

import dataclasses

import numpy as np
import pytest

from looptn.encoding import (
    PostSelectionError,
    QubitDensity,
    QubitState,
    build_xy_hamiltonian,
    energy_expectation,
    ground_state,
    w_state,
    xy_w_regime_hamiltonian,
)
from looptn.measurement import EnergyEstimate, ShotPlan, estimate_energy, sample_pauli


def test_eigenstate_gives_exact_estimate():
    state = QubitState(np.eye(8)[0])  # |000>, eigenvalue +1 of ZZZ
    for n in (1, 10, 1000):
        est = sample_pauli(state, "ZZZ", ShotPlan(n, seed=1))
        assert est.mean == 1.0
        assert est.standard_error == 0.0
        assert est.shots_used == n


def test_maximally_mixed_estimate_is_bounded():
    rho = QubitDensity(np.eye(2) / 2)
    for seed in range(5):
        est = sample_pauli(rho, "Z", ShotPlan(200, seed=seed))
        assert abs(est.mean) <= 1.0
        assert est.standard_error > 0.0


def test_w_state_z_estimate_within_errors():
    m = 4
    state = w_state(m)
    exact = 1.0 - 2.0 / m
    est = sample_pauli(state, "ZIII", ShotPlan(10_000, seed=7))
    assert abs(est.mean - exact) <= 4.0 * est.standard_error


def test_determinism_bit_for_bit():
    state = w_state(3)
    a = sample_pauli(state, "ZXY", ShotPlan(500, seed=11))
    b = sample_pauli(state, "ZXY", ShotPlan(500, seed=11))
    assert a == b
    c = sample_pauli(state, "ZXY", ShotPlan(500, seed=12))
    assert c.mean != a.mean or c.standard_error != a.standard_error


def test_subseeds_differ_by_observable_and_spawn_key():
    rho = QubitDensity(np.eye(2) / 2)
    plan = ShotPlan(400, seed=3)
    a = sample_pauli(rho, "Z", plan, observable_index=0)
    b = sample_pauli(rho, "Z", plan, observable_index=1)
    assert a.mean != b.mean  # independent draws
    c = sample_pauli(rho, "Z", plan.child(5), observable_index=0)
    assert c.mean != a.mean


def test_postselection_attrition():
    state = dataclasses.replace(w_state(2), postselection_probability=0.25)
    est = sample_pauli(state, "ZI", ShotPlan(4000, seed=2))
    assert est.shots_performed == 4000
    assert 0 < est.shots_used < 4000
    # binomial mean 1000, generous window
    assert 800 < est.shots_used < 1200


def test_postselection_total_failure_raises():
    state = dataclasses.replace(w_state(2), postselection_probability=1e-12)
    with pytest.raises(PostSelectionError):
        sample_pauli(state, "ZI", ShotPlan(10, seed=0))


def test_energy_single_z_term_deterministic():
    ham = build_xy_hamiltonian(3, 0.0, 4.0)  # only Z terms, coefficient 1 each
    state = QubitState(np.eye(8)[0])
    est = estimate_energy(state, ham, ShotPlan(50, seed=5))
    assert est.value == pytest.approx(3.0)
    assert est.standard_error == 0.0


def test_exact_mode_matches_dense_trace():
    ham = xy_w_regime_hamiltonian()
    rng = np.random.default_rng(13)
    amps = rng.standard_normal(16) + 1j * rng.standard_normal(16)
    state = QubitState(amps / np.linalg.norm(amps))
    est = estimate_energy(state, ham, None)
    ref = float((state.amps.conj() @ ham.matrix() @ state.amps).real)
    assert est.value == pytest.approx(ref, abs=1e-12)
    assert est.standard_error == 0.0


def test_exact_mode_on_w_state_matches_ed():
    ham = xy_w_regime_hamiltonian()
    energy, _ = ground_state(ham)
    est = estimate_energy(w_state(4), ham, None)
    assert est.value == pytest.approx(energy, abs=1e-10)


def test_energy_estimate_convergence():
    ham = xy_w_regime_hamiltonian()
    state = w_state(4)
    exact = energy_expectation(state, ham)
    est = estimate_energy(state, ham, ShotPlan(20_000, seed=17))
    assert abs(est.value - exact) <= 5.0 * est.standard_error


def test_unbiasedness_over_many_seeds():
    # mean of estimates over many repetitions stays within 5 combined
    # standard errors of the exact value
    ham = xy_w_regime_hamiltonian()
    state = w_state(4)
    exact = energy_expectation(state, ham)
    reps = 300
    values = np.array(
        [estimate_energy(state, ham, ShotPlan(100, seed=s)).value for s in range(reps)]
    )
    se_of_mean = values.std(ddof=1) / np.sqrt(reps)
    assert abs(values.mean() - exact) <= 5.0 * se_of_mean


def test_error_scales_as_inverse_sqrt_shots():
    ham = xy_w_regime_hamiltonian()
    state = w_state(4)
    sds = []
    for n in (100, 1000, 10_000):
        vals = np.array(
            [estimate_energy(state, ham, ShotPlan(n, seed=s)).value for s in range(60)]
        )
        sds.append(vals.std(ddof=1))
    for i, ratio in enumerate((np.sqrt(10), np.sqrt(10))):
        observed = sds[i] / sds[i + 1]
        assert ratio / 1.5 <= observed <= ratio * 1.5
