"""Circuit builders against dense oracles and exhaustive enumeration."""

import math

import numpy as np
import pytest

from qchaos.circuits import (
    Circuit,
    build_diagonal_phase,
    build_modular_adder,
    build_modular_subtractor,
    build_qft,
    circuit_from_text,
    circuit_to_text,
    concat,
    count_gates,
    invert_circuit,
    lower_circuit,
    modular_adder_gate_count,
    qft_core_gate_count,
)
from qchaos.oracle import dense_unitary, dft_matrix
from qchaos.rng import Stream
from qchaos.state import GateOp, StateVector, fidelity, new_basis_state


def random_state(m, seed=0):
    s = Stream(seed)
    amps = s.uniform_block(1 << m, -1, 1) + 1j * s.uniform_block(1 << m, -1, 1)
    amps /= np.linalg.norm(amps)
    return StateVector(m, amps)


# -- QFT -----------------------------------------------------------------------


def test_qft_n1_is_single_hadamard():
    c = build_qft((0,))
    assert len(c) == 1 and c.gates[0].kind == "H"


def test_qft_core_gate_count():
    for n in range(1, 8):
        core = build_qft(range(n), bit_reversal_fix=False)
        assert len(core) == qft_core_gate_count(n) == n * (n + 1) // 2
        fixed = build_qft(range(n))
        assert len(fixed) == len(core) + n // 2


def test_qft_of_zero_state_is_uniform():
    s = new_basis_state(4, 0)
    build_qft(range(4)).apply_to(s)
    np.testing.assert_allclose(s.amplitudes, np.full(16, 0.25), atol=1e-12)


@pytest.mark.parametrize("n", range(1, 7))
def test_qft_dense_equals_dft(n):
    U = dense_unitary(build_qft(range(n)))
    assert np.abs(U - dft_matrix(n)).max() < 1e-10


def test_qft_inverse_flag():
    U = dense_unitary(build_qft(range(3), inverse=True))
    np.testing.assert_allclose(U, dft_matrix(3).conj().T, atol=1e-12)


def test_qft_without_fix_is_bit_reversed_dft():
    n = 3
    U = dense_unitary(build_qft(range(n), bit_reversal_fix=False))
    F = dft_matrix(n)
    # rows appear in bit-reversed order
    rev = [int(format(k, f"0{n}b")[::-1], 2) for k in range(1 << n)]
    np.testing.assert_allclose(U[rev, :], F, atol=1e-12)


def test_qft_empty_register_rejected():
    with pytest.raises(ValueError):
        build_qft(())


# -- modular adder / subtractor ---------------------------------------------------


def adder_registers(w):
    return list(range(w)), list(range(w, 2 * w)), list(range(2 * w, 3 * w - 1))


def basis_index(a, b, w):
    return a | (b << w)


def run_permutation(circuit, m, idx):
    s = new_basis_state(m, idx)
    circuit.apply_to(s)
    out = int(np.argmax(np.abs(s.amplitudes)))
    assert abs(abs(s.amplitudes[out]) - 1.0) < 1e-12
    return out


def test_adder_example_3_plus_5():
    w = 4
    src, dst, carry = adder_registers(w)
    add = build_modular_adder(src, dst, carry)
    out = run_permutation(add, 3 * w - 1, basis_index(3, 5, w))
    assert out == basis_index(3, 8, w)


def test_adder_zero_identity():
    w = 4
    src, dst, carry = adder_registers(w)
    add = build_modular_adder(src, dst, carry)
    for b in range(16):
        assert run_permutation(add, 3 * w - 1, basis_index(0, b, w)) == basis_index(0, b, w)


@pytest.mark.parametrize("w", [2, 3, 4])
def test_adder_exhaustive(w):
    src, dst, carry = adder_registers(w)
    add = build_modular_adder(src, dst, carry)
    m = 3 * w - 1
    for a in range(1 << w):
        for b in range(1 << w):
            out = run_permutation(add, m, basis_index(a, b, w))
            assert out == basis_index(a, (a + b) % (1 << w), w)  # carries back to 0


def test_adder_narrow_source():
    w, ws = 5, 2
    src = list(range(ws))
    dst = list(range(ws, ws + w))
    carry = list(range(ws + w, ws + 2 * w - 1))
    add = build_modular_adder(src, dst, carry)
    m = ws + 2 * w - 1
    for a in range(1 << ws):
        for b in range(1 << w):
            out = run_permutation(add, m, a | (b << ws))
            assert out == (a | (((a + b) % (1 << w)) << ws))


def test_subtractor():
    w = 4
    src, dst, carry = adder_registers(w)
    sub = build_modular_subtractor(src, dst, carry)
    assert run_permutation(sub, 3 * w - 1, basis_index(3, 8, w)) == basis_index(3, 5, w)
    add = build_modular_adder(src, dst, carry)
    assert len(sub) == len(add)
    # gate-for-gate the inverted adder
    assert sub.gates == invert_circuit(add).gates
    # subtractor after adder is the identity on every input
    for a in range(16):
        for b in range(16):
            s = new_basis_state(3 * w - 1, basis_index(a, b, w))
            add.apply_to(s)
            sub.apply_to(s)
            assert np.argmax(np.abs(s.amplitudes)) == basis_index(a, b, w)


def test_adder_count_affine():
    counts = [modular_adder_gate_count(w) for w in range(2, 11)]
    for w, c in zip(range(2, 11), counts):
        assert c == 8 * w - 9
        src, dst, carry = adder_registers(w)
        assert len(build_modular_adder(src, dst, carry)) == c
    diffs = set(np.diff(counts))
    assert diffs == {8}


def test_adder_register_validation():
    with pytest.raises(ValueError):
        build_modular_adder([0, 1], [2, 3, 4], [5])  # carry too small
    with pytest.raises(ValueError):
        build_modular_adder([0, 1], [1, 2], [3])  # overlap
    with pytest.raises(ValueError):
        build_modular_adder([0, 1, 2], [3, 4], [5])  # src wider than dst


# -- diagonal phase polynomials ----------------------------------------------------


def test_zero_polynomial_empty_circuit():
    c = build_diagonal_phase(range(4), [0.0, 0.0, 0.0])
    assert len(c) == 0 and c.global_phase == 0.0


def test_linear_polynomial_single_qubit_phases():
    alpha = 0.21
    c = build_diagonal_phase(range(3), [0.0, alpha])
    assert [g.kind for g in c.gates] == ["PHASE"] * 3
    angles = {g.targets[0]: g.angle for g in c.gates}
    for j in range(3):
        assert angles[j] == pytest.approx(alpha * (1 << j))


def test_quadratic_dense_and_count():
    n, alpha = 5, 0.037
    c = build_diagonal_phase(range(n), [0.0, 0.0, alpha])
    assert len(c) <= n * (n + 1) // 2
    U = dense_unitary(c)
    x = np.arange(1 << n)
    np.testing.assert_allclose(np.diag(U), np.exp(1j * alpha * x * x), atol=1e-10)
    assert np.abs(U - np.diag(np.diag(U))).max() == 0.0


def test_quartic_dense():
    n = 5
    coeffs = [0.002, -0.01, 0.004, 0.0007, -0.00013]
    U = dense_unitary(build_diagonal_phase(range(n), coeffs))
    x = np.arange(1 << n)
    target = np.exp(1j * np.polyval(list(reversed(coeffs)), x))
    np.testing.assert_allclose(np.diag(U), target, atol=1e-10)


def test_phase_polynomial_additivity():
    n = 5
    p = [0.0, 0.03, 0.001, 0.0002, 0.0]
    q = [0.1, -0.01, 0.002, 0.0, 0.00005]
    both = concat(build_diagonal_phase(range(n), p), build_diagonal_phase(range(n), q))
    summed = build_diagonal_phase(range(n), [a + b for a, b in zip(p, q)])
    np.testing.assert_allclose(np.diag(dense_unitary(both)),
                               np.diag(dense_unitary(summed)), atol=1e-10)


def test_signed_reading():
    n = 4
    c = build_diagonal_phase(range(n), [0.0, 0.0, 0.11], signed=True)
    U = dense_unitary(c)
    x = np.arange(1 << n)
    ell = np.where(x < (1 << n) // 2, x, x - (1 << n)).astype(float)
    np.testing.assert_allclose(np.diag(U), np.exp(1j * 0.11 * ell * ell), atol=1e-12)


def test_degree_above_four_rejected():
    with pytest.raises(ValueError):
        build_diagonal_phase(range(3), [0, 0, 0, 0, 0, 1.0])


# -- inversion, counting, unitarity --------------------------------------------------


def test_invert_single_hadamard():
    c = Circuit(1, (GateOp("H", (0,)),))
    assert invert_circuit(c).gates == c.gates


def test_invert_qft_roundtrip():
    c = build_qft(range(5))
    s = random_state(5, seed=2)
    ref = s.copy()
    c.apply_to(s)
    invert_circuit(c).apply_to(s)
    assert fidelity(ref, s) >= 1 - 1e-12


def test_invert_adder_equals_subtractor_behavior():
    w = 4
    src, dst, carry = adder_registers(w)
    inv = invert_circuit(build_modular_adder(src, dst, carry))
    for a in range(16):
        for b in range(16):
            out = run_permutation(inv, 3 * w - 1, basis_index(a, b, w))
            assert out == basis_index(a, (b - a) % 16, w)


def test_count_gates():
    assert count_gates(Circuit(1, ())).total == 0
    counts = count_gates(build_qft(range(3), bit_reversal_fix=False))
    assert counts.total == 6
    assert counts.by_kind == {"H": 3, "CPHASE": 3}
    assert counts.by_arity == {1: 3, 2: 3}


def test_builder_unitarity():
    streams = Stream(55)
    builders = [
        build_qft(range(6)),
        build_modular_adder(range(2), range(2, 4), range(4, 5)),
        build_diagonal_phase(range(5), [0.1, 0.2, 0.03, 0.004, 0.0005]),
    ]
    for c in builders:
        U = dense_unitary(c)
        np.testing.assert_allclose(U @ U.conj().T, np.eye(1 << c.num_qubits), atol=1e-12)


# -- lowering pass ----------------------------------------------------------------


def test_lowering_matches_dense():
    c = build_diagonal_phase(range(4), [0.0, 0.05, 0.01, 0.002, 0.0003])
    low = lower_circuit(c)
    assert all(len(g.targets) <= 2 for g in low.gates)
    np.testing.assert_allclose(dense_unitary(low), dense_unitary(c), atol=1e-10)


def test_lowering_toffoli_and_swap():
    c = Circuit(3, (GateOp("TOFFOLI", (0, 1, 2)), GateOp("SWAP", (0, 2))))
    low = lower_circuit(c)
    assert all(len(g.targets) <= 2 for g in low.gates)
    np.testing.assert_allclose(dense_unitary(low), dense_unitary(c), atol=1e-12)


# -- serialization ----------------------------------------------------------------


def test_serialization_roundtrip_bit_exact():
    c = concat(build_qft(range(4)),
               build_diagonal_phase(range(4), [0.1, 0.2, 0.3, 0.04, 0.005]))
    text = circuit_to_text(c)
    back = circuit_from_text(text)
    assert back.num_qubits == c.num_qubits
    assert back.global_phase == c.global_phase
    assert back.gates == c.gates
    assert circuit_to_text(back) == text


def test_serialization_format():
    c = Circuit(2, (GateOp("CNOT", (0, 1)),), 0.25)
    text = circuit_to_text(c)
    lines = text.strip().splitlines()
    assert lines[0] == "width=2"
    assert lines[1] == "phase=0.25"
    assert lines[2] == "CNOT 0 1"


def test_serialization_bad_kind():
    with pytest.raises(ValueError):
        circuit_from_text("width=2\nBOGUS 0\n")
