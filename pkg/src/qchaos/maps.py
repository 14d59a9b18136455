"""Circuits and observables for the simulated dynamical systems.

Three systems share the statevector core: the Arnold cat map (classical
chaos run on quantum registers), the kicked rotator, and the chaotic
double-well map.  Cat map steps are pure modular arithmetic; the kicked
systems alternate diagonal phases with Fourier transforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import curve_fit

from .circuits import (
    Circuit,
    build_diagonal_phase,
    build_modular_adder,
    build_qft,
    concat,
    count_gates,
    invert_circuit,
)
from .rng import Stream
from .state import (
    GateOp,
    NoiseSpec,
    RegisterLayout,
    StateVector,
    fidelity,
    marginal_distribution,
)
from .oracle import circular_second_moment


# -- Arnold cat map -----------------------------------------------------------


def qubits_required(n: int, L: int) -> int:
    """Register budget for the cat map: 3n + 2 log2(L) - 1."""
    ell = _log2_strict(L)
    return 3 * n + 2 * ell - 1


def _log2_strict(L: int) -> int:
    ell = int(L).bit_length() - 1
    if L < 1 or (1 << ell) != L:
        raise ValueError(f"torus height L must be a power of 2 >= 1, got {L}")
    return ell


@dataclass(frozen=True)
class CatMapSpec:
    """Discretized cat map: x = i/2**n on [0,1), y = j/2**n on [0,L).

    Register layout: x register (n qubits), y register (n + log2 L qubits),
    carry register (n + log2 L - 1 qubits), in that order from qubit 0.
    """

    n: int
    L: int = 1

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        _log2_strict(self.L)

    @property
    def ell(self) -> int:
        return _log2_strict(self.L)

    @property
    def num_x(self) -> int:
        return 1 << self.n

    @property
    def num_y(self) -> int:
        return self.L << self.n

    @property
    def num_qubits(self) -> int:
        return qubits_required(self.n, self.L)

    @property
    def layout(self) -> RegisterLayout:
        n, ell = self.n, self.ell
        wy = n + ell
        return RegisterLayout(
            self.num_qubits,
            {
                "x": tuple(range(n)),
                "y": tuple(range(n, n + wy)),
                "carry": tuple(range(n + wy, 3 * n + 2 * ell - 1)),
            },
        )


def prepare_cat_initial(spec: CatMapSpec, mask: np.ndarray) -> StateVector:
    """Equal superposition over occupied lattice cells, carry register |0>."""
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (spec.num_x, spec.num_y):
        raise ValueError(f"mask shape {mask.shape} != ({spec.num_x}, {spec.num_y})")
    i, j = np.nonzero(mask)
    if len(i) == 0:
        raise ValueError("mask selects no lattice cells")
    state = StateVector(spec.num_qubits)
    state.amplitudes[0] = 0.0
    indices = i + (j << spec.n)
    state.amplitudes[indices] = 1.0 / math.sqrt(len(i))
    return state


def build_cat_step(spec: CatMapSpec) -> Circuit:
    """One forward iteration: y += x (mod L), then x += y (mod 1).

    Both updates are in-place modular additions; the second one adds only
    the fractional bits of y (the low n qubits) into x.  The circuit
    permutes lattice basis states exactly as the integer map does.
    """
    layout = spec.layout
    x, y, carry = layout["x"], layout["y"], layout["carry"]
    add_y = build_modular_adder(x, y, carry, width=spec.num_qubits)
    add_x = build_modular_adder(y[: spec.n], x, carry[: spec.n - 1] if spec.n > 1 else (),
                                width=spec.num_qubits)
    return concat(add_y, add_x)


def lattice_distribution(state: StateVector, spec: CatMapSpec) -> np.ndarray:
    """Joint (x, y) probabilities as a (2**n, L 2**n) array; carries summed out."""
    layout = spec.layout
    wxy = 2 * spec.n + spec.ell
    probs = state.probabilities().reshape(-1, 1 << wxy).sum(axis=0)
    return probs.reshape(spec.num_y, spec.num_x).T


def second_moment(dist: np.ndarray, spec: CatMapSpec) -> float:
    """Circular variance of y in torus units, weighted by the distribution.

    Centering on the distribution's own circular mean keeps the statistic
    drift-free; a concentrated packet gives 0, full spread gives L^2/12.
    """
    p_y = np.asarray(dist).sum(axis=0)
    y_values = np.arange(spec.num_y) / (1 << spec.n)
    total = p_y.sum()
    if total <= 0:
        raise ValueError("distribution sums to zero")
    return circular_second_moment(y_values, float(spec.L), weights=p_y / total)


def distribution_overlap(dist: np.ndarray, mask: np.ndarray) -> float:
    """Probability mass sitting on the occupied cells of the mask."""
    return float(np.asarray(dist)[np.asarray(mask, dtype=bool)].sum())


@dataclass
class CatRunResult:
    fidelities: np.ndarray
    second_moments: np.ndarray
    overlaps: np.ndarray
    final_state: StateVector
    distributions: list[np.ndarray] | None = None
    gate_count: int = 0


def run_cat_experiment(spec: CatMapSpec, mask: np.ndarray, t_forward: int,
                       t_reverse: int, noise: NoiseSpec,
                       keep_distributions: bool = False,
                       snapshot_times: tuple[int, ...] = ()) -> CatRunResult:
    """t_forward noisy cat steps, then t_reverse noisy inverse steps.

    Records fidelity against the initial state, the circular <y^2>, and
    overlap with the initial mask after every step (index = time).
    """
    if t_forward < 0 or t_reverse < 0:
        raise ValueError("step counts must be >= 0")
    step = build_cat_step(spec)
    step_inv = invert_circuit(step)
    state = prepare_cat_initial(spec, mask)
    initial = state.copy()
    mask = np.asarray(mask, dtype=bool)

    fids, moments, overlaps = [], [], []
    dists: list[np.ndarray] | None = [] if keep_distributions else None
    snapshots = set(snapshot_times)

    def record(t: int):
        dist = lattice_distribution(state, spec)
        fids.append(fidelity(initial, state))
        moments.append(second_moment(dist, spec))
        overlaps.append(distribution_overlap(dist, mask))
        if dists is not None and (not snapshots or t in snapshots):
            dists.append(dist)

    record(0)
    for t in range(1, t_forward + t_reverse + 1):
        circuit = step if t <= t_forward else step_inv
        circuit.apply_to(state, noise)
        record(t)
    return CatRunResult(
        fidelities=np.asarray(fids),
        second_moments=np.asarray(moments),
        overlaps=np.asarray(overlaps),
        final_state=state,
        distributions=dists,
        gate_count=len(step) * t_forward + len(step_inv) * t_reverse,
    )


def spectral_readout(state: StateVector, layout: RegisterLayout, name: str,
                     consume: bool = False) -> np.ndarray:
    """Marginal of a register after a QFT on it (state restored unless consumed)."""
    register = layout[name]
    work = state if consume else state.copy()
    build_qft(register, width=state.num_qubits).apply_to(work)
    return marginal_distribution(work, layout, name)


# -- kicked rotator and chaotic double well -----------------------------------


@dataclass(frozen=True)
class KickedMapSpec:
    """Kicked map U = exp(-i hbar l^2 / 2) exp(-i K V(theta) / hbar).

    N = 2**n_sys grid points theta_k = -pi + 2 pi k / N; momentum read in
    two's complement, l in [-N/2, N/2).  The potential is either cosine
    (standard rotator) or the chaotic double well (theta^2 - a^2)^2.
    """

    n_sys: int
    K: float
    hbar: float
    potential: str = "cosine"
    a: float = 0.0

    def __post_init__(self):
        if self.n_sys < 1:
            raise ValueError("n_sys must be >= 1")
        if self.hbar <= 0:
            raise ValueError("hbar must be > 0")
        if self.potential not in ("cosine", "double_well"):
            raise ValueError(f"unsupported potential {self.potential!r}")

    @property
    def N(self) -> int:
        return 1 << self.n_sys

    @property
    def theta(self) -> np.ndarray:
        return -math.pi + 2.0 * math.pi * np.arange(self.N) / self.N

    @property
    def momenta(self) -> np.ndarray:
        k = np.arange(self.N)
        return np.where(k < self.N // 2, k, k - self.N)

    def potential_values(self) -> np.ndarray:
        th = self.theta
        if self.potential == "cosine":
            return np.cos(th)
        return (th * th - self.a * self.a) ** 2


def _theta_polynomial(spec: KickedMapSpec) -> list[float]:
    """Kick phase -K V(theta(x)) / hbar as polynomial coefficients in x.

    theta(x) = -pi + h x with h = 2 pi / N is affine in the register value,
    so the double-well quartic expands exactly; returns c_0..c_4.
    """
    h = 2.0 * math.pi / spec.N
    theta_poly = np.polynomial.Polynomial([-math.pi, h])
    V = (theta_poly ** 2 - spec.a**2) ** 2
    coeffs = (-spec.K / spec.hbar) * V.coef
    return [float(c) for c in coeffs]


@dataclass(frozen=True)
class KickedStepOperator:
    """One Floquet iteration: kick in theta, rotate in momentum.

    The register holds theta samples; the momentum rotation is performed
    between an inverse and a forward QFT.  For the double well every factor
    is a gate circuit.  The cosine kick has no finite polynomial expansion
    and is applied as an exact native diagonal, tracked separately from the
    universal-gate count.
    """

    spec: KickedMapSpec
    register: tuple[int, ...]
    width: int
    kick_circuit: Circuit | None
    kick_diagonal: np.ndarray | None = field(repr=False, default=None)
    qft_inv: Circuit = None  # type: ignore[assignment]
    rotation: Circuit = None  # type: ignore[assignment]
    qft_fwd: Circuit = None  # type: ignore[assignment]
    kick_first: bool = True  # False for the inverted step: the kick undoes last

    def _apply_kick(self, state: StateVector, noise: NoiseSpec | None) -> None:
        if self.kick_circuit is not None:
            self.kick_circuit.apply_to(state, noise)
            return
        reg = self.register
        if reg != tuple(range(len(reg))):
            raise NotImplementedError("native diagonal assumes register at qubits 0..n-1")
        view = state.amplitudes.reshape(-1, self.spec.N)
        view *= self.kick_diagonal[None, :]

    def apply_to(self, state: StateVector, noise: NoiseSpec | None = None) -> StateVector:
        if self.kick_first:
            self._apply_kick(state, noise)
        self.qft_inv.apply_to(state, noise)
        self.rotation.apply_to(state, noise)
        self.qft_fwd.apply_to(state, noise)
        if not self.kick_first:
            self._apply_kick(state, noise)
        return state

    def inverse(self) -> "KickedStepOperator":
        return KickedStepOperator(
            spec=self.spec,
            register=self.register,
            width=self.width,
            kick_circuit=None if self.kick_circuit is None else invert_circuit(self.kick_circuit),
            kick_diagonal=None if self.kick_diagonal is None else np.conj(self.kick_diagonal),
            qft_inv=self.qft_inv,
            rotation=invert_circuit(self.rotation),
            qft_fwd=self.qft_fwd,
            kick_first=not self.kick_first,
        )

    def gate_summary(self) -> dict:
        counted = [self.qft_inv, self.rotation, self.qft_fwd]
        if self.kick_circuit is not None:
            counted.append(self.kick_circuit)
        total = sum(len(c) for c in counted)
        return {
            "kick_gates": 0 if self.kick_circuit is None else len(self.kick_circuit),
            "rotation_gates": len(self.rotation),
            "qft_gates": len(self.qft_inv) + len(self.qft_fwd),
            "native_diagonals": 0 if self.kick_diagonal is None else 1,
            "total_gates": total,
        }


def build_kicked_step(spec: KickedMapSpec, register=None, width: int | None = None) -> KickedStepOperator:
    """Assemble the Floquet step for the given spec.

    At epsilon = 0 the dense matrix of the returned operator equals the
    exact N x N Floquet matrix (see `floquet_matrix`) to rounding.
    """
    if register is None:
        register = tuple(range(spec.n_sys))
    register = tuple(int(q) for q in register)
    if width is None:
        width = max(register) + 1

    if spec.potential == "double_well":
        kick_circuit = build_diagonal_phase(register, _theta_polynomial(spec), width=width)
        kick_diagonal = None
    else:
        kick_circuit = None
        phases = -spec.K / spec.hbar * spec.potential_values()
        kick_diagonal = np.exp(1j * phases)

    # momentum rotation: exp(-i hbar l^2 / 2) with l the signed register value
    rotation = build_diagonal_phase(register, [0.0, 0.0, -spec.hbar / 2.0],
                                    signed=True, width=width)
    return KickedStepOperator(
        spec=spec,
        register=register,
        width=width,
        kick_circuit=kick_circuit,
        kick_diagonal=kick_diagonal,
        qft_inv=build_qft(register, inverse=True, width=width),
        rotation=rotation,
        qft_fwd=build_qft(register, width=width),
    )


def floquet_matrix(spec: KickedMapSpec) -> np.ndarray:
    """Direct N x N Floquet operator in the theta basis (the circuit oracle)."""
    N = spec.N
    k = np.arange(N)
    F = np.exp(2j * np.pi * np.outer(k, k) / N) / math.sqrt(N)
    kick = np.exp(-1j * spec.K / spec.hbar * spec.potential_values())
    ell = spec.momenta.astype(float)
    rot = np.exp(-1j * spec.hbar * ell * ell / 2.0)
    return F @ (rot[:, None] * (F.conj().T @ np.diag(kick)))


def gaussian_packet(spec: KickedMapSpec, center: float, sigma: float | None = None) -> np.ndarray:
    """Normalized minimum-uncertainty packet on the theta grid.

    Default width sigma = sqrt(hbar/2), the coherent-state value; at the
    double-well parameters this keeps more than 99 percent of the
    probability on the initial well's side.
    """
    if sigma is None:
        sigma = math.sqrt(spec.hbar / 2.0)
    th = spec.theta
    d = np.angle(np.exp(1j * (th - center)))  # wrap to (-pi, pi]
    psi = np.exp(-(d * d) / (4.0 * sigma * sigma)).astype(np.complex128)
    psi /= np.linalg.norm(psi)
    return psi


def well_populations(state_or_probs, spec: KickedMapSpec,
                     register: tuple[int, ...] | None = None) -> tuple[float, float]:
    """(P_left, P_right): probability on theta < 0 and theta >= 0.

    Accepts either a probability array over the theta grid or a
    StateVector whose low qubits hold the system register.
    """
    if isinstance(state_or_probs, StateVector):
        probs = state_or_probs.probabilities().reshape(-1, spec.N).sum(axis=0)
    else:
        if np.iscomplexobj(state_or_probs):
            raise ValueError("pass probabilities or a StateVector, not raw amplitudes")
        probs = np.asarray(state_or_probs, dtype=float)
    left = float(probs[: spec.N // 2].sum())   # theta_k < 0 iff k < N/2
    right = float(probs[spec.N // 2 :].sum())
    return left, right


def tunneling_period(spec: KickedMapSpec, packet: np.ndarray) -> float:
    """Oscillation period 2 pi / gap of the dominant quasi-energy pair.

    The relevant pair maximizes |c_i c_j (P_left)_{ij}| over Floquet
    eigenstates i, j weighted by the packet's expansion coefficients,
    which is what actually drives the left-well population oscillation.
    """
    U = floquet_matrix(spec)
    evals, evecs = np.linalg.eig(U)
    c = evecs.conj().T @ packet
    proj = np.zeros(spec.N)
    proj[: spec.N // 2] = 1.0
    PL = evecs.conj().T @ (proj[:, None] * evecs)
    weight = np.abs(c[:, None] * np.conj(c[None, :]) * PL)
    np.fill_diagonal(weight, 0.0)
    i, j = np.unravel_index(np.argmax(weight), weight.shape)
    gap = np.angle(evals[i] / evals[j])
    return float(2.0 * math.pi / abs(gap))


def fit_decay(series: np.ndarray, min_extrema: int = 6) -> dict:
    """Fit A exp(-Gamma t) + c to the extrema of |P_left - 1/2|.

    The extrema trace the oscillation envelope; Gamma is the per-iteration
    decay rate of the tunneling contrast.  Raises if the series is too
    short to expose at least `min_extrema` envelope points (about three
    oscillation periods).
    """
    series = np.asarray(series, dtype=float)
    env = np.abs(series - 0.5)
    t_ext, v_ext = [0], [env[0]]
    for t in range(1, len(env) - 1):
        if env[t] >= env[t - 1] and env[t] > env[t + 1]:
            t_ext.append(t)
            v_ext.append(env[t])
    if len(t_ext) < min_extrema:
        raise ValueError(f"series too short: {len(t_ext)} envelope extrema, need {min_extrema}")
    t_ext = np.asarray(t_ext, dtype=float)
    v_ext = np.asarray(v_ext, dtype=float)

    def model(t, amplitude, gamma, offset):
        return amplitude * np.exp(-gamma * t) + offset

    p0 = (max(v_ext[0] - v_ext.min(), 1e-3), 1.0 / max(t_ext[-1], 1.0), float(v_ext.min()))
    params, cov = curve_fit(model, t_ext, v_ext, p0=p0, maxfev=20000)
    residual = float(np.sqrt(np.mean((model(t_ext, *params) - v_ext) ** 2)))
    stderr = float(np.sqrt(np.abs(cov[1, 1]))) if np.all(np.isfinite(cov)) else float("inf")
    return {
        "gamma": float(params[1]),
        "gamma_stderr": stderr,
        "amplitude": float(params[0]),
        "offset": float(params[2]),
        "residual": residual,
        "extrema_times": t_ext,
        "extrema_values": v_ext,
    }


@dataclass(frozen=True)
class ClassicalMapParams:
    """Classical-limit parameters of the kicked map, for oracle comparisons."""

    K: float
    hbar: float
    chaotic: bool
    note: str


def classical_standard_map_params(spec: KickedMapSpec) -> ClassicalMapParams:
    """Chirikov parameters: I = hbar l, kick strength K carried over as is."""
    if spec.K == 0:
        note = "integrable at K = 0"
    elif spec.K > 1:
        note = "chaotic regime (K > 1)"
    else:
        note = "mixed phase space (0 < K <= 1)"
    return ClassicalMapParams(K=spec.K, hbar=spec.hbar, chaotic=spec.K > 1, note=note)
