"""Tests for the truncated Fock-space primitives."""

import numpy as np
import pytest

import oracles
from looptn import fock
from looptn.fock import (
    FockDensity,
    FockState,
    SqueezeParam,
    Su2Param,
    TruncationError,
    apply_loss_channel,
    apply_one_mode_gate,
    apply_two_mode_gate,
    build_su2_mode_transform,
    build_two_mode_squeezer,
    expectation_number,
    expm_antihermitian,
    loss_kraus_operators,
    partial_trace,
    project_occupation,
)

NO_ABORT = dict(leakage_threshold=np.inf)


# ---------------------------------------------------------------------------
# two-mode squeezer


def test_squeezer_zero_is_identity():
    g, leak = build_two_mode_squeezer(0.0, 5)
    assert np.allclose(g, np.eye(25), atol=1e-14)
    assert leak < 1e-14


def test_squeezer_matches_analytic_tmsv():
    d, r = 12, 0.5
    g, _ = build_two_mode_squeezer(r, d, **NO_ABORT)
    psi = g[:, 0].reshape(d, d)
    expected = oracles.tmsv_amplitudes(r, 0.0, d)
    assert np.max(np.abs(np.diag(psi) - expected)) < 1e-10
    off = psi - np.diag(np.diag(psi))
    assert np.max(np.abs(off)) < 1e-12


def test_squeezer_matches_dense_expm_oracle():
    # low-occupation columns (the regime the simulator uses) against the
    # independent padded expm; boundary columns are subunitary by design
    d, r = 12, 0.5
    g, _ = build_two_mode_squeezer(r, d, **NO_ABORT)
    ref = oracles.squeezer_unitary(r, d, pad=28)
    tot = (np.arange(d)[:, None] + np.arange(d)[None, :]).reshape(-1)
    cols = tot <= 2
    assert np.max(np.abs(g[:, cols] - ref[:, cols])) < 1e-12


def test_squeezer_full_gate_matches_oracle_small_cutoff():
    d = 4
    for eta in (0.4, 0.55 * np.exp(0.7j)):
        g, _ = build_two_mode_squeezer(eta, d, **NO_ABORT)
        ref = oracles.squeezer_unitary(eta, d, pad=28)
        assert np.max(np.abs(g - ref)) < 1e-12


def test_squeezer_phase_rotates_amplitudes():
    d, r, phase = 12, 0.5, np.pi / 3
    g, _ = build_two_mode_squeezer(r * np.exp(1j * phase), d, **NO_ABORT)
    psi = g[:, 0].reshape(d, d)
    expected = oracles.tmsv_amplitudes(r, phase, d)
    assert np.max(np.abs(np.diag(psi) - expected)) < 1e-10


def test_squeezer_aborts_when_cutoff_too_small():
    with pytest.raises(TruncationError):
        build_two_mode_squeezer(0.5, 4)  # default threshold 1e-8


def test_squeezer_vacuum_leakage_analytic():
    # deficit of the vacuum column is 1 - sqrt(1 - tanh(r)^(2d))
    d, r = 6, 0.6
    g, _ = build_two_mode_squeezer(r, d, **NO_ABORT)
    got = 1.0 - np.linalg.norm(g[:, 0])
    expected = 1.0 - np.sqrt(1.0 - np.tanh(r) ** (2 * d))
    assert abs(got - expected) < 1e-12


def test_squeeze_param_bound():
    with pytest.raises(ValueError):
        SqueezeParam(2.5)
    SqueezeParam(2.5, r_max=3.0)


def test_expm_agrees_with_taylor_reference():
    d, r = 12, 1.0
    k = oracles.squeezer_generator(r, d)
    got = expm_antihermitian(k)
    ref = oracles.taylor_expm(k)
    assert np.max(np.abs(got - ref)) < 1e-12


def test_squeezer_mean_photon_number():
    # <n_h> on squeezed vacuum = sinh(r)^2 up to the weight of the truncated
    # tail, sum_{n>=d} n (1-q) q^n with q = tanh(r)^2
    for d in (12, 14):
        for r in (0.3, 0.75):
            g, _ = build_two_mode_squeezer(r, d, **NO_ABORT)
            state = FockState(("h", "v"), g[:, 0].reshape(d, d))
            q = np.tanh(r) ** 2
            tail = q ** d * (d + q / (1 - q))
            dev = abs(expectation_number(state, "h") - np.sinh(r) ** 2)
            assert dev <= 1.5 * tail + 1e-9


# ---------------------------------------------------------------------------
# SU(2) transform


def test_su2_identity():
    g = build_su2_mode_transform(Su2Param(0.0, 0.0, 0.0), 4)
    assert np.allclose(g, np.eye(16), atol=1e-13)


def test_su2_beamsplitter_on_single_photon():
    d = 4
    v = Su2Param(np.pi / 2, 0.0, 0.0)
    g = build_su2_mode_transform(v, d)
    state = FockState.from_occupation(("h", "v"), (1, 0), d)
    out = apply_two_mode_gate(state, g, ("h", "v"))
    expected = np.zeros((d, d), dtype=complex)
    expected[1, 0] = 1 / np.sqrt(2)
    expected[0, 1] = 1 / np.sqrt(2)
    assert np.max(np.abs(out.amps - expected)) < 1e-13


def test_su2_vacuum_invariant():
    rng = np.random.default_rng(7)
    for _ in range(5):
        v = Su2Param(*rng.uniform([-np.pi] * 3, [np.pi] * 3))
        g = build_su2_mode_transform(v, 4)
        vac = np.zeros(16)
        vac[0] = 1.0
        assert np.max(np.abs(g @ vac - vac)) < 1e-13


def test_su2_matches_oracle_and_single_photon_block():
    d = 5
    angles = (0.9, 0.4, -1.2)
    v = Su2Param(*angles)
    g = build_su2_mode_transform(v, d)
    ref = oracles.passive_unitary(oracles.su2_zyz(*angles), d)
    assert np.max(np.abs(g - ref)) < 1e-12
    i10, i01 = 1 * d + 0, 0 * d + 1
    block = np.array([[g[i10, i10], g[i10, i01]], [g[i01, i10], g[i01, i01]]])
    assert np.max(np.abs(block - v.matrix())) < 1e-13


def test_su2_unitary_and_number_conserving():
    rng = np.random.default_rng(3)
    d = 4
    n_total = np.kron(np.arange(d), np.ones(d)) + np.kron(np.ones(d), np.arange(d))
    for _ in range(10):
        v = Su2Param(rng.uniform(0, np.pi), rng.uniform(-np.pi, np.pi), rng.uniform(-np.pi, np.pi))
        g = build_su2_mode_transform(v, d)
        assert np.max(np.abs(g.conj().T @ g - np.eye(d * d))) < 1e-10
        # block diagonal in total occupation
        mask = n_total[:, None] != n_total[None, :]
        assert np.max(np.abs(g[mask])) < 1e-12


def test_passive_conserves_photon_number_expectation():
    rng = np.random.default_rng(11)
    d = 4
    amps = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    state = FockState(("h", "v"), amps / np.linalg.norm(amps))
    v = Su2Param(1.2, 0.5, -0.3)
    g = build_su2_mode_transform(v, d)
    out = apply_two_mode_gate(state, g, ("h", "v"))
    before = expectation_number(state, "h") + expectation_number(state, "v")
    after = expectation_number(out, "h") + expectation_number(out, "v")
    assert abs(before - after) < 1e-12


# ---------------------------------------------------------------------------
# gate application


def _random_state(modes, d, seed):
    rng = np.random.default_rng(seed)
    amps = rng.standard_normal((d,) * len(modes)) + 1j * rng.standard_normal((d,) * len(modes))
    return FockState(tuple(modes), amps / np.linalg.norm(amps))


def test_apply_identity_gate_is_noop():
    state = _random_state("abc", 3, 0)
    out = apply_two_mode_gate(state, np.eye(9), ("a", "c"))
    assert np.max(np.abs(out.amps - state.amps)) < 1e-15


def test_gate_then_inverse_restores_state():
    state = _random_state("abc", 4, 1)
    g, _ = build_two_mode_squeezer(0.4, 4, **NO_ABORT)
    # use the exactly-unitary passive transform for a strict inverse check
    v = build_su2_mode_transform(Su2Param(0.8, -0.9, 0.2), 4)
    out = apply_two_mode_gate(state, v, ("b", "a"))
    back = apply_two_mode_gate(out, v.conj().T, ("b", "a"))
    assert np.max(np.abs(back.amps - state.amps)) < 1e-12


def test_squeezer_on_vacuum_pair_leaves_spectator_marginal():
    d = 4
    spectator = _random_state("c", d, 2)
    amps = np.multiply.outer(
        np.multiply.outer(FockState.vacuum(("a",), d).amps, FockState.vacuum(("b",), d).amps),
        spectator.amps,
    )
    rho = FockState(("a", "b", "c"), amps).to_density()
    g, _ = build_two_mode_squeezer(0.3, d, **NO_ABORT)
    out = apply_two_mode_gate(rho, g, ("a", "b"))
    before = partial_trace(rho, ["c"])
    after = partial_trace(out, ["c"])
    assert np.max(np.abs(after.mat / after.trace() - before.mat / before.trace())) < 1e-12


def test_gate_errors():
    state = _random_state("ab", 3, 3)
    with pytest.raises(KeyError):
        apply_two_mode_gate(state, np.eye(9), ("a", "z"))
    with pytest.raises(ValueError):
        apply_two_mode_gate(state, np.eye(8), ("a", "b"))
    with pytest.raises(ValueError):
        apply_two_mode_gate(state, np.eye(9), ("a", "a"))


def test_density_gate_matches_pure_conjugation():
    d = 3
    state = _random_state("ab", d, 4)
    v = build_su2_mode_transform(Su2Param(0.6, 0.1, 0.9), d)
    pure_out = apply_two_mode_gate(state, v, ("a", "b"))
    dens_out = apply_two_mode_gate(state.to_density(), v, ("a", "b"))
    assert np.max(np.abs(dens_out.mat - pure_out.to_density().mat)) < 1e-12


# ---------------------------------------------------------------------------
# loss channel


def test_loss_identity_at_full_transmission():
    rho = _random_state("ab", 4, 5).to_density()
    out = apply_loss_channel(rho, "a", 1.0)
    assert np.max(np.abs(out.mat - rho.mat)) < 1e-15


def test_loss_complete_gives_vacuum_marginal():
    rho = _random_state("ab", 4, 6).to_density()
    out = apply_loss_channel(rho, "a", 0.0)
    # mode a ends in vacuum
    assert expectation_number(out, "a") < 1e-12
    # mode b keeps its marginal
    before = partial_trace(rho, ["b"])
    after = partial_trace(out, ["b"])
    assert np.max(np.abs(after.mat - before.mat)) < 1e-12


def test_loss_single_photon_analytic():
    d = 4
    rho = FockState.from_occupation(("a",), (1,), d).to_density()
    out = apply_loss_channel(rho, "a", 0.9)
    expected = np.zeros((d, d), dtype=complex)
    expected[1, 1] = 0.9
    expected[0, 0] = 0.1
    assert np.max(np.abs(out.mat - expected)) < 1e-14


def test_loss_requires_valid_transmissivity():
    rho = FockDensity.vacuum(("a",), 3)
    with pytest.raises(ValueError):
        apply_loss_channel(rho, "a", 1.5)
    with pytest.raises(ValueError):
        apply_loss_channel(rho, "a", -0.1)


def test_kraus_family_is_trace_preserving():
    for d in (2, 4, 7):
        for t in (0.0, 0.17, 0.5, 0.93, 1.0):
            ops = loss_kraus_operators(t, d)
            acc = sum(k.conj().T @ k for k in ops)
            assert np.max(np.abs(acc - np.eye(d))) < 1e-12


def test_loss_channel_preserves_trace():
    rho = _random_state("ab", 4, 8).to_density()
    out = apply_loss_channel(rho, "b", 0.73)
    assert abs(out.trace() - rho.trace()) < 1e-12
    out.validate()


def test_loss_semigroup_composition():
    rho = _random_state("ab", 5, 9).to_density()
    t1, t2 = 0.8, 0.6
    once = apply_loss_channel(rho, "a", t1 * t2)
    twice = apply_loss_channel(apply_loss_channel(rho, "a", t1), "a", t2)
    assert np.max(np.abs(once.mat - twice.mat)) < 1e-10


# ---------------------------------------------------------------------------
# partial trace and projection


def test_partial_trace_keep_all():
    rho = _random_state("abc", 3, 10).to_density()
    out = partial_trace(rho, ["a", "b", "c"])
    assert np.max(np.abs(out.mat - rho.mat)) < 1e-15


def test_partial_trace_preserves_trace_and_hermiticity():
    rho = _random_state("abc", 3, 11).to_density()
    out = partial_trace(rho, ["b"])
    assert abs(out.trace() - rho.trace()) < 1e-12
    assert np.max(np.abs(out.mat - out.mat.conj().T)) < 1e-12


def test_tmsv_marginal_is_thermal():
    d, r = 12, 0.5
    g, _ = build_two_mode_squeezer(r, d, **NO_ABORT)
    rho = FockState(("h", "v"), g[:, 0].reshape(d, d)).to_density()
    marg = partial_trace(rho, ["h"])
    nbar = np.sinh(r) ** 2
    expected = np.diag((nbar / (1 + nbar)) ** np.arange(d) / (1 + nbar))
    assert np.max(np.abs(marg.mat - expected)) < 1e-9
    assert abs(expectation_number(marg, "h") - nbar) < 1e-6


def test_partial_trace_of_product_state():
    a = _random_state("a", 3, 12)
    b = _random_state("b", 3, 13)
    joint = FockState(("a", "b"), np.multiply.outer(a.amps, b.amps)).to_density()
    marg = partial_trace(joint, ["b"])
    assert np.max(np.abs(marg.mat - b.to_density().mat)) < 1e-12


def test_partial_trace_empty_keep_rejected():
    rho = FockDensity.vacuum(("a", "b"), 3)
    with pytest.raises(ValueError):
        partial_trace(rho, [])


def test_project_occupation_pure_and_density():
    d = 3
    state = _random_state("ab", d, 14)
    proj = project_occupation(state, "a", 1)
    assert proj.modes == ("b",)
    expected = state.amps[1, :]
    assert np.max(np.abs(proj.amps - expected)) < 1e-15
    dens = project_occupation(state.to_density(), "a", 1)
    assert np.max(np.abs(dens.mat - np.outer(expected, expected.conj()))) < 1e-14
