"""Dense statevector core: registers, elementary gates, noise, readout.

Conventions fixed here and relied on everywhere else:

* qubit 0 is the least-significant bit of the basis-state index;
* amplitudes are a dense complex128 array of length 2**num_qubits;
* a register is an ordered tuple of qubit indices, entry k carrying
  weight 2**k in the register's value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .rng import Stream

INV_SQRT2 = 1.0 / math.sqrt(2.0)

# kind -> number of target qubits
GATE_ARITY = {
    "H": 1,
    "S": 1,
    "PHASE": 1,
    "CNOT": 2,
    "CPHASE": 2,
    "SWAP": 2,
    "TOFFOLI": 3,
    "CCPHASE": 3,
    "CCCPHASE": 4,
}

# kinds carrying a free angle parameter
PARAMETRIC_KINDS = {"PHASE", "CPHASE", "CCPHASE", "CCCPHASE"}

# diagonal phase gate kind for a given number of qubits
PHASE_KIND_BY_ARITY = {1: "PHASE", 2: "CPHASE", 3: "CCPHASE", 4: "CCCPHASE"}

_SELF_INVERSE = {"H", "CNOT", "SWAP", "TOFFOLI"}


def reduce_angle(angle: float) -> float:
    """Reduce an angle to (-pi, pi]; phase-equivalent for all diagonal gates."""
    r = math.fmod(float(angle), 2.0 * math.pi)
    if r > math.pi:
        r -= 2.0 * math.pi
    elif r <= -math.pi:
        r += 2.0 * math.pi
    return r


@dataclass(frozen=True)
class GateOp:
    """One elementary gate: a kind, its target qubits, optionally an angle.

    Diagonal multi-qubit phases (CPHASE and up) are symmetric in their
    targets; for CNOT the first target is the control, for TOFFOLI the
    first two are controls.
    """

    kind: str
    targets: tuple[int, ...]
    angle: float | None = None

    def __post_init__(self):
        if self.kind not in GATE_ARITY:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        targets = tuple(int(q) for q in self.targets)
        object.__setattr__(self, "targets", targets)
        if len(targets) != GATE_ARITY[self.kind]:
            raise ValueError(f"{self.kind} needs {GATE_ARITY[self.kind]} targets, got {targets}")
        if len(set(targets)) != len(targets):
            raise ValueError(f"duplicate targets in {self.kind} {targets}")
        if any(q < 0 for q in targets):
            raise ValueError(f"negative qubit index in {targets}")
        if self.kind in PARAMETRIC_KINDS:
            if self.angle is None:
                raise ValueError(f"{self.kind} requires an angle")
            object.__setattr__(self, "angle", reduce_angle(self.angle))
        elif self.angle is not None:
            raise ValueError(f"{self.kind} takes no angle")

    def inverse(self) -> "GateOp":
        if self.kind in _SELF_INVERSE:
            return self
        if self.kind == "S":
            return GateOp("PHASE", self.targets, -math.pi / 2.0)
        return GateOp(self.kind, self.targets, -self.angle)


@dataclass(frozen=True)
class RegisterLayout:
    """Named, disjoint registers covering qubits [0, num_qubits)."""

    num_qubits: int
    registers: dict[str, tuple[int, ...]]

    def __post_init__(self):
        seen: set[int] = set()
        for name, qubits in self.registers.items():
            qubits = tuple(int(q) for q in qubits)
            if any(q < 0 or q >= self.num_qubits for q in qubits):
                raise ValueError(f"register {name!r} out of range")
            if seen & set(qubits):
                raise ValueError(f"register {name!r} overlaps another register")
            seen |= set(qubits)
        if len(seen) != self.num_qubits:
            raise ValueError("registers must cover all qubits")

    def __getitem__(self, name: str) -> tuple[int, ...]:
        try:
            return self.registers[name]
        except KeyError:
            raise KeyError(f"unknown register {name!r}") from None

    def width(self, name: str) -> int:
        return len(self[name])


@dataclass
class NoiseSpec:
    """Per-gate unitary error: amplitude epsilon and a deterministic stream.

    Each applied gate has its angle (if any) jittered by an independent
    eta ~ U[-epsilon, epsilon], and is followed by exp(-i eta sigma_z / 2)
    on every qubit it touches, eta independent per qubit.  Every
    perturbation is exactly unitary, so norms are preserved to rounding.
    """

    epsilon: float
    seed: int = 0
    stream: Stream = field(default=None, repr=False)  # type: ignore[assignment]

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if self.stream is None:
            self.stream = Stream(self.seed)


class StateVector:
    """State of an m-qubit register: 2**m complex amplitudes, unit norm."""

    def __init__(self, num_qubits: int, amplitudes: np.ndarray | None = None):
        if num_qubits < 1:
            raise ValueError("num_qubits must be >= 1")
        self.num_qubits = int(num_qubits)
        dim = 1 << self.num_qubits
        if amplitudes is None:
            amplitudes = np.zeros(dim, dtype=np.complex128)
            amplitudes[0] = 1.0
        else:
            amplitudes = np.asarray(amplitudes, dtype=np.complex128)
            if amplitudes.shape != (dim,):
                raise ValueError(f"expected {dim} amplitudes, got {amplitudes.shape}")
        self.amplitudes = amplitudes

    def copy(self) -> "StateVector":
        return StateVector(self.num_qubits, self.amplitudes.copy())

    def norm_sq(self) -> float:
        a = self.amplitudes
        return float(np.real(np.vdot(a, a)))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    # -- gate application -------------------------------------------------

    def _check_targets(self, gate: GateOp) -> None:
        for q in gate.targets:
            if q >= self.num_qubits:
                raise ValueError(f"gate target {q} outside {self.num_qubits}-qubit state")

    def _bit_view(self, qubits: tuple[int, ...]):
        """Reshape amplitudes so each listed qubit gets its own axis of size 2.

        Returns the view and, per qubit, the axis index of its bit.  The
        view is over the same buffer, so in-place edits mutate the state.
        """
        dims: list[int] = []
        axis_of: dict[int, int] = {}
        prev = self.num_qubits
        for q in sorted(qubits, reverse=True):
            dims.append(1 << (prev - 1 - q))
            dims.append(2)
            axis_of[q] = len(dims) - 1
            prev = q
        dims.append(1 << prev)
        return self.amplitudes.reshape(dims), axis_of

    def _controlled_flip(self, controls: tuple[int, ...], target: int) -> None:
        """Flip `target` on the subspace where all `controls` are 1."""
        view, axis_of = self._bit_view(tuple(controls) + (target,))
        base = [slice(None)] * view.ndim
        for c in controls:
            base[axis_of[c]] = 1
        idx0, idx1 = list(base), list(base)
        idx0[axis_of[target]] = 0
        idx1[axis_of[target]] = 1
        i0, i1 = tuple(idx0), tuple(idx1)
        tmp = view[i0].copy()
        view[i0] = view[i1]
        view[i1] = tmp

    def _diagonal_phase(self, qubits: tuple[int, ...], angle: float) -> None:
        """Multiply the all-ones subspace of `qubits` by exp(i angle)."""
        view, axis_of = self._bit_view(qubits)
        idx = [slice(None)] * view.ndim
        for q in qubits:
            idx[axis_of[q]] = 1
        view[tuple(idx)] *= complex(math.cos(angle), math.sin(angle))

    def apply_gate(self, gate: GateOp) -> "StateVector":
        """Apply one ideal gate in place; returns self for chaining."""
        self._check_targets(gate)
        kind = gate.kind
        if kind == "H":
            q = gate.targets[0]
            v = self.amplitudes.reshape(-1, 2, 1 << q)
            a = v[:, 0, :].copy()
            b = v[:, 1, :]
            v[:, 0, :] = (a + b) * INV_SQRT2
            v[:, 1, :] = (a - b) * INV_SQRT2
        elif kind == "S":
            q = gate.targets[0]
            self.amplitudes.reshape(-1, 2, 1 << q)[:, 1, :] *= 1j
        elif kind == "PHASE":
            q = gate.targets[0]
            self._diagonal_phase((q,), gate.angle)
        elif kind == "CNOT":
            control, target = gate.targets
            self._controlled_flip((control,), target)
        elif kind == "TOFFOLI":
            c1, c2, target = gate.targets
            self._controlled_flip((c1, c2), target)
        elif kind == "SWAP":
            q1, q2 = gate.targets
            view, axis_of = self._bit_view(gate.targets)
            idx_a = [slice(None)] * view.ndim
            idx_b = [slice(None)] * view.ndim
            idx_a[axis_of[q1]], idx_a[axis_of[q2]] = 0, 1
            idx_b[axis_of[q1]], idx_b[axis_of[q2]] = 1, 0
            ia, ib = tuple(idx_a), tuple(idx_b)
            tmp = view[ia].copy()
            view[ia] = view[ib]
            view[ib] = tmp
        else:  # CPHASE / CCPHASE / CCCPHASE
            self._diagonal_phase(gate.targets, gate.angle)
        return self

    def apply_gate_noisy(self, gate: GateOp, noise: NoiseSpec) -> "StateVector":
        """Apply a unitarily perturbed gate; epsilon = 0 falls back to ideal.

        Draw order is fixed: first the angle jitter (parametric kinds
        only), then one dephasing angle per target in the gate's listed
        target order.
        """
        eps = noise.epsilon
        if eps == 0.0:
            return self.apply_gate(gate)
        self._check_targets(gate)
        applied = gate
        if gate.kind in PARAMETRIC_KINDS:
            applied = GateOp(gate.kind, gate.targets, gate.angle + noise.stream.uniform(-eps, eps))
        self.apply_gate(applied)
        etas = [noise.stream.uniform(-eps, eps) for _ in gate.targets]
        # one combined pass: each corner of the target-bit hypercube gets
        # prod_q exp(-i eta_q / 2 * (-1)^bit_q)
        view, axis_of = self._bit_view(gate.targets)
        for corner in range(1 << len(gate.targets)):
            phase = 0.0
            for k, eta in enumerate(etas):
                phase += 0.5 * eta if (corner >> k) & 1 else -0.5 * eta
            idx = [slice(None)] * view.ndim
            for k, q in enumerate(gate.targets):
                idx[axis_of[q]] = (corner >> k) & 1
            view[tuple(idx)] *= complex(math.cos(phase), math.sin(phase))
        return self


def new_basis_state(num_qubits: int, index: int) -> StateVector:
    """Computational basis state |index> on num_qubits qubits."""
    dim = 1 << num_qubits
    if not (0 <= index < dim):
        raise ValueError(f"basis index {index} out of range for {num_qubits} qubits")
    state = StateVector(num_qubits)
    state.amplitudes[0] = 0.0
    state.amplitudes[index] = 1.0
    return state


def prepare_uniform(state: StateVector, register: tuple[int, ...]) -> list[GateOp]:
    """Hadamard every register qubit, taking |0..0> to the uniform superposition.

    The register is assumed to hold |0..0>; applied to anything else this
    is still unitary but not a uniform preparation.  Returns the applied
    gates (one H per qubit).
    """
    gates = [GateOp("H", (q,)) for q in register]
    for g in gates:
        state.apply_gate(g)
    return gates


def fidelity(a: StateVector, b: StateVector) -> float:
    """|<a|b>|^2."""
    if a.num_qubits != b.num_qubits:
        raise ValueError("fidelity of states with different qubit counts")
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)


def marginal_distribution(state: StateVector, layout: RegisterLayout, name: str) -> np.ndarray:
    """Probabilities of the named register's values, other qubits summed out.

    Entry v is the probability that the register reads v, where register
    qubit k contributes bit 2**k of v.
    """
    register = layout[name]
    if layout.num_qubits != state.num_qubits:
        raise ValueError("layout does not match state width")
    probs = state.probabilities().reshape([2] * state.num_qubits)
    m = state.num_qubits
    keep_axes = {m - 1 - q for q in register}
    drop = tuple(ax for ax in range(m) if ax not in keep_axes)
    reduced = probs.sum(axis=drop)
    # remaining axes are ordered by descending qubit index; put the
    # register's highest-weight qubit first so C-order flattening matches v
    remaining = sorted(register, reverse=True)
    order = [remaining.index(q) for q in reversed(register)]
    reduced = np.transpose(reduced, axes=order)
    return reduced.reshape(-1)


def sample_measurement(state: StateVector, stream: Stream, shots: int) -> dict[int, int]:
    """Born-rule samples of the full register; returns {basis index: count}."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    cdf = np.cumsum(state.probabilities())
    cdf[-1] = max(cdf[-1], 1.0)
    draws = stream.uniform_block(shots)
    outcomes = np.searchsorted(cdf, draws, side="right")
    values, counts = np.unique(outcomes, return_counts=True)
    return {int(v): int(c) for v, c in zip(values, counts)}
