"""Reusable circuit builders: QFT, reversible modular adders, diagonal phases.

Circuits are immutable once built and carry an explicit global phase so a
dense reconstruction matches the target operator exactly, not just up to
phase.  All builders are pure functions of their arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .state import (
    GATE_ARITY,
    PHASE_KIND_BY_ARITY,
    PARAMETRIC_KINDS,
    GateOp,
    NoiseSpec,
    StateVector,
    reduce_angle,
)


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    gates: tuple[GateOp, ...]
    global_phase: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            if max(g.targets) >= self.num_qubits:
                raise ValueError(f"gate {g} exceeds declared width {self.num_qubits}")

    def __len__(self) -> int:
        return len(self.gates)

    def apply_to(self, state: StateVector, noise: NoiseSpec | None = None) -> StateVector:
        """Run the circuit on `state` in place; noisy if a NoiseSpec is given."""
        if self.global_phase != 0.0:
            state.amplitudes *= complex(math.cos(self.global_phase), math.sin(self.global_phase))
        if noise is None:
            for g in self.gates:
                state.apply_gate(g)
        else:
            for g in self.gates:
                state.apply_gate_noisy(g, noise)
        return state


@dataclass
class GateCount:
    by_kind: dict[str, int] = field(default_factory=dict)
    by_arity: dict[int, int] = field(default_factory=dict)
    total: int = 0


def count_gates(circuit: Circuit) -> GateCount:
    count = GateCount()
    for g in circuit.gates:
        count.by_kind[g.kind] = count.by_kind.get(g.kind, 0) + 1
        arity = GATE_ARITY[g.kind]
        count.by_arity[arity] = count.by_arity.get(arity, 0) + 1
        count.total += 1
    return count


def invert_circuit(circuit: Circuit) -> Circuit:
    """Reverse gate order and invert each gate; composes with the original to identity."""
    return Circuit(
        circuit.num_qubits,
        tuple(g.inverse() for g in reversed(circuit.gates)),
        reduce_angle(-circuit.global_phase) if circuit.global_phase else 0.0,
    )


def concat(*circuits: Circuit) -> Circuit:
    width = max(c.num_qubits for c in circuits)
    gates: list[GateOp] = []
    phase = 0.0
    for c in circuits:
        gates.extend(c.gates)
        phase += c.global_phase
    return Circuit(width, tuple(gates), reduce_angle(phase) if phase else 0.0)


# -- quantum Fourier transform --------------------------------------------


def build_qft(register, inverse: bool = False, bit_reversal_fix: bool = True,
              width: int | None = None) -> Circuit:
    """DFT of size 2**n on the register (entry k weighing 2**k).

    The core sequence is, per qubit j from most significant down: one
    Hadamard followed by controlled phases of pi/2**d from each less
    significant qubit at distance d.  That is n(n+1)/2 gates and yields the
    transform with bit-reversed output order; with the fix, floor(n/2)
    swaps restore value order so the dense matrix is exactly
    F[l, k] = 2**(-n/2) exp(2 pi i k l / 2**n).
    """
    register = tuple(int(q) for q in register)
    n = len(register)
    if n == 0:
        raise ValueError("QFT register is empty")
    if width is None:
        width = max(register) + 1
    gates: list[GateOp] = []
    for j in range(n - 1, -1, -1):
        gates.append(GateOp("H", (register[j],)))
        for k in range(j - 1, -1, -1):
            angle = math.pi / float(1 << (j - k))
            gates.append(GateOp("CPHASE", (register[k], register[j]), angle))
    if bit_reversal_fix:
        for i in range(n // 2):
            gates.append(GateOp("SWAP", (register[i], register[n - 1 - i])))
    circuit = Circuit(width, tuple(gates))
    return invert_circuit(circuit) if inverse else circuit


def qft_core_gate_count(n: int) -> int:
    """Hadamards plus controlled phases of the core sequence: n(n+1)/2."""
    return n * (n + 1) // 2


# -- reversible modular arithmetic -----------------------------------------


def _adder_gates(src, dst, carry) -> list[GateOp]:
    """Ripple-carry gates for dst <- (dst + src) mod 2**len(dst).

    Carries are computed into the ancilla register on the way up and
    uncomputed on the way down, so the ancillas end in |0> again.  src may
    be narrower than dst; missing high source bits contribute nothing.
    """
    a, b, c = list(src), list(dst), list(carry)
    w, ws = len(b), len(a)
    gates: list[GateOp] = []
    if w == 1:
        if ws >= 1:
            gates.append(GateOp("CNOT", (a[0], b[0])))
        return gates
    # carry sweep: c[i] holds the carry into bit i+1
    for i in range(w - 1):
        has_a = i < ws
        if i == 0:
            if has_a:
                gates.append(GateOp("TOFFOLI", (a[0], b[0], c[0])))
                gates.append(GateOp("CNOT", (a[0], b[0])))
        elif has_a:
            gates.append(GateOp("TOFFOLI", (a[i], b[i], c[i])))
            gates.append(GateOp("CNOT", (a[i], b[i])))
            gates.append(GateOp("TOFFOLI", (c[i - 1], b[i], c[i])))
        else:
            gates.append(GateOp("TOFFOLI", (c[i - 1], b[i], c[i])))
    # top sum bit: no carry out, mod 2**w
    if w - 1 < ws:
        gates.append(GateOp("CNOT", (a[w - 1], b[w - 1])))
    gates.append(GateOp("CNOT", (c[w - 2], b[w - 1])))
    # uncompute carries, forming sum bits on the way down
    for i in range(w - 2, 0, -1):
        has_a = i < ws
        if has_a:
            gates.append(GateOp("TOFFOLI", (c[i - 1], b[i], c[i])))
            gates.append(GateOp("CNOT", (a[i], b[i])))
            gates.append(GateOp("TOFFOLI", (a[i], b[i], c[i])))
            gates.append(GateOp("CNOT", (a[i], b[i])))
            gates.append(GateOp("CNOT", (c[i - 1], b[i])))
        else:
            gates.append(GateOp("TOFFOLI", (c[i - 1], b[i], c[i])))
            gates.append(GateOp("CNOT", (c[i - 1], b[i])))
    if ws >= 1:
        gates.append(GateOp("CNOT", (a[0], b[0])))
        gates.append(GateOp("TOFFOLI", (a[0], b[0], c[0])))
        gates.append(GateOp("CNOT", (a[0], b[0])))
    return gates


def _check_adder_registers(src, dst, carry) -> None:
    src, dst, carry = tuple(src), tuple(dst), tuple(carry)
    w = len(dst)
    if len(src) > w:
        raise ValueError("source register wider than destination")
    if len(carry) < w - 1:
        raise ValueError(f"carry register too small: need {w - 1}, have {len(carry)}")
    used = list(src) + list(dst) + list(carry[: max(w - 1, 0)])
    if len(set(used)) != len(used):
        raise ValueError("adder registers overlap")


def build_modular_adder(src, dst, carry, width: int | None = None) -> Circuit:
    """|a>|b>|0> -> |a>|(a+b) mod 2**w>|0> with w = len(dst).

    src holds a (len <= w), dst holds b, carry provides w-1 clean ancillas
    that are restored to |0>.  Gate count is affine in w.
    """
    _check_adder_registers(src, dst, carry)
    src, dst, carry = tuple(src), tuple(dst), tuple(carry)
    gates = _adder_gates(src, dst, carry[: len(dst) - 1])
    if width is None:
        width = max([0, *src, *dst, *carry[: len(dst) - 1]]) + 1
    return Circuit(width, tuple(gates))


def build_modular_subtractor(src, dst, carry, width: int | None = None) -> Circuit:
    """|a>|b>|0> -> |a>|(b-a) mod 2**w>|0>; the inverted adder, gate for gate."""
    return invert_circuit(build_modular_adder(src, dst, carry, width))


def modular_adder_gate_count(w: int, ws: int | None = None) -> int:
    """Exact size of build_modular_adder for dst width w, src width ws."""
    if ws is None:
        ws = w
    return len(_adder_gates(list(range(ws)), list(range(100, 100 + w)), list(range(200, 200 + max(w - 1, 0)))))


# -- diagonal phase polynomials --------------------------------------------


def _multilinear_coeffs(weights: list[float], coeffs) -> dict[frozenset[int], float]:
    """Expand sum_d c_d * (sum_j w_j b_j)**d over idempotent bits b_j.

    Returns {bit subset: coefficient}; the empty set entry is the constant
    (global phase) term.
    """
    coeffs = [float(c) for c in coeffs]
    if len(coeffs) - 1 > 4:
        raise ValueError("polynomial degree above 4 is not supported")
    base = {frozenset([j]): w for j, w in enumerate(weights)}
    result: dict[frozenset[int], float] = {frozenset(): coeffs[0] if coeffs else 0.0}
    power: dict[frozenset[int], float] = {frozenset(): 1.0}
    for d in range(1, len(coeffs)):
        nxt: dict[frozenset[int], float] = {}
        for s, cs in power.items():
            for t, ct in base.items():
                u = s | t
                nxt[u] = nxt.get(u, 0.0) + cs * ct
        power = nxt
        if coeffs[d] != 0.0:
            for s, cs in power.items():
                result[s] = result.get(s, 0.0) + coeffs[d] * cs
    return result


def build_diagonal_phase(register, coeffs, signed: bool = False,
                         width: int | None = None) -> Circuit:
    """|x> -> exp(i poly(x)) |x> for poly of degree <= 4 in the register value.

    Expanding x over register bits and reducing b**k = b leaves one
    monomial per bit subset of size <= degree, emitted as a (multi-)
    controlled phase; the constant term becomes the circuit's global
    phase.  With signed=True the register value is read as two's
    complement, i.e. the top bit weighs -2**(n-1).
    """
    register = tuple(int(q) for q in register)
    n = len(register)
    if n == 0:
        raise ValueError("empty register")
    if width is None:
        width = max(register) + 1
    weights = [float(1 << j) for j in range(n)]
    if signed:
        weights[n - 1] = -weights[n - 1]
    mono = _multilinear_coeffs(weights, coeffs)
    gates: list[GateOp] = []
    for subset in sorted((s for s in mono if s), key=lambda s: (len(s), sorted(s))):
        angle = reduce_angle(mono[subset])
        if angle == 0.0:
            continue
        qubits = tuple(register[j] for j in sorted(subset))
        gates.append(GateOp(PHASE_KIND_BY_ARITY[len(qubits)], qubits, angle))
    phase = reduce_angle(mono.get(frozenset(), 0.0))
    return Circuit(width, tuple(gates), phase)


# -- lowering to one- and two-qubit gates ----------------------------------


def _lower_mcphase(qubits: tuple[int, ...], angle: float) -> list[GateOp]:
    """Recursive halving: an n-controlled phase as three (n-1)-controlled
    halves glued with two CNOTs."""
    if len(qubits) == 1:
        return [GateOp("PHASE", qubits, angle)]
    if len(qubits) == 2:
        return [GateOp("CPHASE", qubits, angle)]
    q1, q2, rest = qubits[0], qubits[1], qubits[2:]
    half = angle / 2.0
    out = _lower_mcphase((q2,) + rest, half)
    out.append(GateOp("CNOT", (q1, q2)))
    out += _lower_mcphase((q2,) + rest, -half)
    out.append(GateOp("CNOT", (q1, q2)))
    out += _lower_mcphase((q1,) + rest, half)
    return out


def lower_circuit(circuit: Circuit) -> Circuit:
    """Rewrite onto the universal {H, S, PHASE, CNOT, CPHASE} set.

    Used for gate-cost accounting; simulation runs the multi-qubit gates
    natively.
    """
    gates: list[GateOp] = []
    for g in circuit.gates:
        if g.kind in ("CCPHASE", "CCCPHASE"):
            gates.extend(_lower_mcphase(g.targets, g.angle))
        elif g.kind == "TOFFOLI":
            c1, c2, t = g.targets
            gates.append(GateOp("H", (t,)))
            gates.extend(_lower_mcphase((c1, c2, t), math.pi))
            gates.append(GateOp("H", (t,)))
        elif g.kind == "SWAP":
            q1, q2 = g.targets
            gates.append(GateOp("CNOT", (q1, q2)))
            gates.append(GateOp("CNOT", (q2, q1)))
            gates.append(GateOp("CNOT", (q1, q2)))
        else:
            gates.append(g)
    return Circuit(circuit.num_qubits, tuple(gates), circuit.global_phase)


# -- serialization ----------------------------------------------------------


def circuit_to_text(circuit: Circuit) -> str:
    """Line format: header `width=m` / `phase=p`, then one gate per line,
    `KIND q0 [q1 [q2 [q3]]] [angle]`.  repr() of floats round-trips exactly."""
    lines = [f"width={circuit.num_qubits}", f"phase={circuit.global_phase!r}"]
    for g in circuit.gates:
        parts = [g.kind, *(str(q) for q in g.targets)]
        if g.angle is not None:
            parts.append(repr(g.angle))
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def circuit_from_text(text: str) -> Circuit:
    width = None
    phase = 0.0
    gates: list[GateOp] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" in line and line.split("=", 1)[0] in ("width", "phase"):
            key, value = line.split("=", 1)
            if key == "width":
                width = int(value)
            else:
                phase = float(value)
            continue
        parts = line.split()
        kind = parts[0]
        if kind not in GATE_ARITY:
            raise ValueError(f"unknown gate kind {kind!r} in circuit text")
        arity = GATE_ARITY[kind]
        targets = tuple(int(p) for p in parts[1 : 1 + arity])
        angle = None
        if kind in PARAMETRIC_KINDS:
            angle = float(parts[1 + arity])
        gates.append(GateOp(kind, targets, angle))
    if width is None:
        raise ValueError("missing width= header")
    return Circuit(width, tuple(gates), phase)
