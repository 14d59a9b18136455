"""Cat-map and kicked-map assembly, observables, and fits."""

import math

import numpy as np
import pytest

from qchaos.maps import (
    CatMapSpec,
    KickedMapSpec,
    build_cat_step,
    build_kicked_step,
    classical_standard_map_params,
    fit_decay,
    floquet_matrix,
    gaussian_packet,
    lattice_distribution,
    prepare_cat_initial,
    qubits_required,
    run_cat_experiment,
    second_moment,
    spectral_readout,
    tunneling_period,
    well_populations,
)
from qchaos.oracle import evolve_cat_exact
from qchaos.rng import Stream
from qchaos.state import NoiseSpec, RegisterLayout, StateVector, new_basis_state

FIG3_SPEC = KickedMapSpec(n_sys=5, K=0.04, hbar=4 * math.pi / 32, potential="double_well", a=1.6)


# -- qubit accounting ---------------------------------------------------------


def test_qubits_required():
    assert qubits_required(7, 1) == 20
    assert qubits_required(7, 8) == 26
    assert qubits_required(40, 8) == 125


def test_qubits_required_bad_L():
    with pytest.raises(ValueError):
        qubits_required(4, 3)


def test_layout_partition():
    spec = CatMapSpec(n=3, L=4)
    layout = spec.layout
    assert layout.width("x") == 3
    assert layout.width("y") == 5
    assert layout.width("carry") == 4
    assert spec.num_qubits == 12


# -- initial states -----------------------------------------------------------


def test_prepare_single_cell():
    spec = CatMapSpec(n=2, L=1)
    mask = np.zeros((4, 4), bool)
    mask[1, 2] = True
    s = prepare_cat_initial(spec, mask)
    assert np.argmax(np.abs(s.amplitudes)) == 1 + (2 << 2)
    assert abs(s.norm_sq() - 1) < 1e-14


def test_prepare_all_cells_uniform():
    spec = CatMapSpec(n=2, L=1)
    s = prepare_cat_initial(spec, np.ones((4, 4), bool))
    dist = lattice_distribution(s, spec)
    np.testing.assert_allclose(dist, np.full((4, 4), 1 / 16), atol=1e-14)


def test_prepare_k_cells_amplitude():
    spec = CatMapSpec(n=2, L=1)
    mask = np.zeros((4, 4), bool)
    mask[0, 0] = mask[1, 3] = mask[2, 2] = True
    s = prepare_cat_initial(spec, mask)
    nonzero = s.amplitudes[np.abs(s.amplitudes) > 0]
    np.testing.assert_allclose(np.abs(nonzero), 1 / math.sqrt(3))


def test_prepare_empty_mask_rejected():
    with pytest.raises(ValueError):
        prepare_cat_initial(CatMapSpec(n=2, L=1), np.zeros((4, 4), bool))


# -- cat step -------------------------------------------------------------------


def test_cat_step_single_point():
    # (x=1, y=2) -> (x=0, y=3) on the 4x4 lattice
    spec = CatMapSpec(n=2, L=1)
    mask = np.zeros((4, 4), bool)
    mask[1, 2] = True
    s = prepare_cat_initial(spec, mask)
    build_cat_step(spec).apply_to(s)
    dist = lattice_distribution(s, spec)
    assert dist[0, 3] == pytest.approx(1.0, abs=1e-12)


def test_cat_step_uniform_invariant():
    spec = CatMapSpec(n=3, L=1)
    s = prepare_cat_initial(spec, np.ones((8, 8), bool))
    build_cat_step(spec).apply_to(s)
    np.testing.assert_allclose(lattice_distribution(s, spec), np.full((8, 8), 1 / 64), atol=1e-12)


def test_cat_step_matches_classical_oracle_t10():
    spec = CatMapSpec(n=5, L=1)
    stream = Stream(12)
    mask = stream.uniform_block(32 * 32).reshape(32, 32) < 0.2
    mask[3, 7] = True
    s = prepare_cat_initial(spec, mask)
    step = build_cat_step(spec)
    ref = mask.copy()
    for _ in range(10):
        step.apply_to(s)
        ref = evolve_cat_exact(ref, 1, 5, 1)
    np.testing.assert_allclose(lattice_distribution(s, spec), ref / ref.sum(), atol=1e-9)


def test_cat_step_gate_count_linear():
    for n in (2, 3, 4, 5, 6):
        spec = CatMapSpec(n=n, L=1)
        assert len(build_cat_step(spec)) <= 16 * n


def test_cat_experiment_exact_reversal():
    spec = CatMapSpec(n=4, L=1)
    stream = Stream(13)
    mask = stream.uniform_block(16 * 16).reshape(16, 16) < 0.3
    mask[0, 0] = True
    res = run_cat_experiment(spec, mask, 10, 10, NoiseSpec(0.0))
    assert res.fidelities[-1] >= 1 - 1e-9
    assert res.overlaps[-1] == pytest.approx(1.0, abs=1e-12)


def test_cat_experiment_long_reversal_small():
    # 400 forward + 400 inverse steps return exactly at epsilon = 0
    spec = CatMapSpec(n=5, L=1)
    stream = Stream(14)
    mask = stream.uniform_block(32 * 32).reshape(32, 32) < 0.1
    mask[5, 5] = True
    res = run_cat_experiment(spec, mask, 400, 400, NoiseSpec(0.0))
    assert res.fidelities[-1] >= 1 - 1e-9


def test_cat_experiment_deterministic():
    spec = CatMapSpec(n=3, L=1)
    mask = np.zeros((8, 8), bool)
    mask[2:5, 3:6] = True
    a = run_cat_experiment(spec, mask, 5, 5, NoiseSpec(0.02, seed=3))
    b = run_cat_experiment(spec, mask, 5, 5, NoiseSpec(0.02, seed=3))
    assert np.array_equal(a.final_state.amplitudes, b.final_state.amplitudes)
    assert np.array_equal(a.fidelities, b.fidelities)


# -- second moment ----------------------------------------------------------------


def test_second_moment_delta():
    spec = CatMapSpec(n=3, L=4)
    dist = np.zeros((8, 32))
    dist[:, 16] = 1 / 8  # strip at y = 2
    assert second_moment(dist, spec) == pytest.approx(0.0, abs=1e-12)


def test_second_moment_symmetric_deltas():
    spec = CatMapSpec(n=3, L=4)
    dist = np.zeros((8, 32))
    d_cells = 6  # +-0.75 torus units around y = 2
    dist[0, 16 - d_cells] = 0.5
    dist[0, 16 + d_cells] = 0.5
    assert second_moment(dist, spec) == pytest.approx((d_cells / 8) ** 2, abs=1e-12)


# -- spectral readout --------------------------------------------------------------


def test_spectral_readout_uniform_gives_zero_frequency():
    layout = RegisterLayout(4, {"r": (0, 1, 2, 3)})
    s = StateVector(4, np.full(16, 0.25, dtype=np.complex128))
    spectrum = spectral_readout(s, layout, "r")
    assert spectrum[0] == pytest.approx(1.0, abs=1e-12)
    # state untouched unless consumed
    np.testing.assert_allclose(s.amplitudes, 0.25)


def test_spectral_readout_basis_state_uniform_spectrum():
    layout = RegisterLayout(4, {"r": (0, 1, 2, 3)})
    s = new_basis_state(4, 5)
    spectrum = spectral_readout(s, layout, "r", consume=True)
    np.testing.assert_allclose(spectrum, np.full(16, 1 / 16), atol=1e-12)


def test_spectral_readout_period_two_comb():
    layout = RegisterLayout(4, {"r": (0, 1, 2, 3)})
    amps = np.zeros(16, dtype=np.complex128)
    amps[::2] = 1 / math.sqrt(8)  # period-2 comb
    spectrum = spectral_readout(StateVector(4, amps), layout, "r")
    support = np.nonzero(spectrum > 1e-12)[0]
    assert set(support) == {0, 8}


# -- kicked maps --------------------------------------------------------------------


def test_kicked_free_rotation_at_K0():
    spec = KickedMapSpec(n_sys=5, K=0.0, hbar=0.7, potential="cosine")
    step = build_kicked_step(spec)
    assert step.kick_diagonal is not None
    np.testing.assert_allclose(step.kick_diagonal, 1.0)
    U = np.empty((32, 32), complex)
    for col in range(32):
        s = new_basis_state(5, col)
        step.apply_to(s)
        U[:, col] = s.amplitudes
    assert np.abs(U - floquet_matrix(spec)).max() < 1e-8


def test_kicked_double_well_dense_oracle():
    step = build_kicked_step(FIG3_SPEC)
    U = np.empty((32, 32), complex)
    for col in range(32):
        s = new_basis_state(5, col)
        step.apply_to(s)
        U[:, col] = s.amplitudes
    assert np.abs(U - floquet_matrix(FIG3_SPEC)).max() < 1e-8


def test_kicked_gate_counts_scaling():
    # rotation O(n^2) multi-controlled phases, quartic kick O(n^4)
    for n in (4, 6, 8):
        spec = KickedMapSpec(n_sys=n, K=0.3, hbar=0.5, potential="double_well", a=1.0)
        summary = build_kicked_step(spec).gate_summary()
        assert summary["rotation_gates"] <= n * (n + 1) // 2 + n
        quartic_budget = (n + n * (n - 1) // 2 + n * (n - 1) * (n - 2) // 6
                          + n * (n - 1) * (n - 2) * (n - 3) // 24)
        assert summary["kick_gates"] <= quartic_budget


def test_kicked_step_inverse():
    step = build_kicked_step(FIG3_SPEC)
    inv = step.inverse()
    s = StateVector(5, gaussian_packet(FIG3_SPEC, center=-1.6))
    ref = s.copy()
    step.apply_to(s)
    inv.apply_to(s)
    assert np.abs(s.amplitudes - ref.amplitudes).max() < 1e-12


def test_well_populations_examples():
    packet = gaussian_packet(FIG3_SPEC, center=-FIG3_SPEC.a)
    left, right = well_populations(np.abs(packet) ** 2, FIG3_SPEC)
    assert left > 0.99 and left + right == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(ValueError):
        well_populations(packet, FIG3_SPEC)  # amplitudes are not probabilities
    sym = np.full(32, 1 / math.sqrt(32))
    left, right = well_populations(np.abs(sym) ** 2, FIG3_SPEC)
    assert left == pytest.approx(0.5) and right == pytest.approx(0.5)


def test_tunneling_oscillation_matches_doublet_period():
    spec = FIG3_SPEC
    packet = gaussian_packet(spec, center=-spec.a)
    period = tunneling_period(spec, packet)
    U = floquet_matrix(spec)
    psi = packet.copy()
    p_left = []
    for _ in range(181):
        p_left.append(float(np.abs(psi[:16]) ** 2 @ np.ones(16)))
        psi = U @ psi
    p_left = np.asarray(p_left)
    # oscillates between about 1 and about 0...
    assert p_left.min() < 0.15 and p_left[0] > 0.99
    # ...with the first full revival near the predicted period
    revival = int(np.argmax(p_left[int(period * 0.6):int(period * 1.4)])) + int(period * 0.6)
    assert abs(revival - period) < 0.2 * period


def test_fit_decay_synthetic():
    t = np.arange(400)
    series = 0.5 + 0.5 * np.exp(-0.05 * t) * np.cos(0.2 * t)
    fit = fit_decay(series)
    assert fit["gamma"] == pytest.approx(0.05, rel=0.05)


def test_fit_decay_zero_noise_flat():
    t = np.arange(400)
    series = 0.5 + 0.49 * np.cos(0.07 * t)
    fit = fit_decay(series)
    assert abs(fit["gamma"]) < 3 * fit["gamma_stderr"] + 1e-4


def test_fit_decay_too_short():
    with pytest.raises(ValueError):
        fit_decay(np.array([1.0, 0.4, 0.9, 0.3]))


def test_classical_params_bridge():
    spec = KickedMapSpec(n_sys=4, K=5.0, hbar=4 * math.pi / 16, potential="cosine")
    params = classical_standard_map_params(spec)
    assert params.K == 5.0 and params.chaotic
    assert not classical_standard_map_params(
        KickedMapSpec(n_sys=4, K=0.0, hbar=1.0, potential="cosine")).chaotic
    mixed = classical_standard_map_params(
        KickedMapSpec(n_sys=4, K=0.5, hbar=1.0, potential="cosine"))
    assert not mixed.chaotic


def test_kicked_spec_validation():
    with pytest.raises(ValueError):
        KickedMapSpec(n_sys=3, K=1.0, hbar=0.0, potential="cosine")
    with pytest.raises(ValueError):
        KickedMapSpec(n_sys=3, K=1.0, hbar=1.0, potential="mexican_hat")
