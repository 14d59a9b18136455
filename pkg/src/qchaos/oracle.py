"""Ground-truth classical dynamics and dense circuit reconstruction.

Everything here is an independent reference for the quantum pipeline: the
exact integer cat map (a lattice permutation), floating-point orbit
ensembles with controlled perturbations, the Chirikov standard map, and a
brute-force dense unitary for small circuits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuits import Circuit
from .rng import Stream
from .state import StateVector, new_basis_state

CAT_TANGENT_MATRIX = np.array([[1.0, 1.0], [1.0, 2.0]])


# -- exact lattice cat map ---------------------------------------------------


def evolve_cat_exact(mask: np.ndarray, t: int, n: int, L: int,
                     direction: str = "forward") -> np.ndarray:
    """Advance a boolean occupation mask on the 2**n x (L 2**n) lattice.

    The map x_bar = x + y_bar (mod 1), y_bar = y + x (mod L) restricted to
    lattice points (i, j) -> (i + j_bar mod 2**n, j + i mod L 2**n) is a
    bijection, so the mask image has the same cardinality.
    """
    N = 1 << n
    M = L * N
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (N, M):
        raise ValueError(f"mask shape {mask.shape} does not match lattice ({N}, {M})")
    i, j = np.nonzero(mask)
    i, j = cat_map_points(i.astype(np.int64), j.astype(np.int64), t, n, L, direction)
    out = np.zeros_like(mask)
    out[i, j] = True
    return out


def cat_map_points(i: np.ndarray, j: np.ndarray, t: int, n: int, L: int,
                   direction: str = "forward"):
    """Exact integer cat map on lattice index arrays, t iterations."""
    N = np.int64(1 << n)
    M = np.int64(L) * N
    i = np.asarray(i, dtype=np.int64).copy()
    j = np.asarray(j, dtype=np.int64).copy()
    if direction == "forward":
        for _ in range(t):
            j = (j + i) % M
            i = (i + j) % N
    elif direction == "inverse":
        for _ in range(t):
            i = (i - j) % N
            j = (j - i) % M
    else:
        raise ValueError(f"direction must be forward or inverse, got {direction!r}")
    return i, j


# -- floating-point ensembles -------------------------------------------------


@dataclass
class OrbitEnsemble:
    """Positions of classical orbits on the torus x in [0,1), y in [0,L)."""

    x: np.ndarray
    y: np.ndarray
    L: int

    @property
    def count(self) -> int:
        return len(self.x)

    def copy(self) -> "OrbitEnsemble":
        return OrbitEnsemble(self.x.copy(), self.y.copy(), self.L)


@dataclass
class PerturbationSpec:
    """Classical error injected into orbits: magnitude, schedule, seed."""

    epsilon_cl: float
    when: str = "at_reversal_only"
    seed: int = 0

    def __post_init__(self):
        if self.epsilon_cl < 0:
            raise ValueError("epsilon_cl must be >= 0")
        if self.when not in ("at_reversal_only", "every_step"):
            raise ValueError(f"bad perturbation schedule {self.when!r}")


def strip_ensemble(count: int, L: int, seed: int, y0: float | None = None) -> OrbitEnsemble:
    """Orbits uniform in x on a line of constant y (default y = L/2)."""
    stream = Stream(seed)
    x = stream.uniform_block(count)
    y = np.full(count, L / 2.0 if y0 is None else y0)
    return OrbitEnsemble(x, y, L)


def cat_step_float(ens: OrbitEnsemble) -> None:
    ens.y = (ens.y + ens.x) % ens.L
    ens.x = (ens.x + ens.y) % 1.0


def cat_step_float_inverse(ens: OrbitEnsemble) -> None:
    ens.x = (ens.x - ens.y) % 1.0
    ens.y = (ens.y - ens.x) % ens.L


def circular_second_moment(y: np.ndarray, L: float, weights: np.ndarray | None = None) -> float:
    """Variance of y on the circle of circumference L.

    Deviations are taken minimum-image around the circular mean, so the
    statistic is immune to the map's net drift and grows from zero for any
    concentrated initial distribution.
    """
    ang = 2.0 * np.pi * np.asarray(y) / L
    if weights is None:
        z = np.exp(1j * ang).mean()
    else:
        z = (np.asarray(weights) * np.exp(1j * ang)).sum()
    if abs(z) < 1e-12:
        mu = 0.0  # mean undefined for balanced distributions; any origin works
    else:
        mu = (float(np.angle(z)) % (2.0 * np.pi)) * L / (2.0 * np.pi)
    d = (np.asarray(y) - mu + L / 2.0) % L - L / 2.0
    if weights is None:
        return float(np.mean(d * d))
    return float(np.sum(np.asarray(weights) * d * d))


def evolve_cat_float(ens: OrbitEnsemble, t_forward: int, t_reverse: int,
                     perturbation: PerturbationSpec) -> dict:
    """Forward steps, a perturbed velocity reversal, then inverse dynamics.

    Returns the circular <y^2> time series (one entry per recorded time,
    t = 0 .. t_forward + t_reverse) and the return overlap, defined as the
    fraction of orbits that end within one initial-spread distance of
    their starting point.
    """
    if ens.count < 1:
        raise ValueError("empty ensemble")
    stream = Stream(perturbation.seed)
    eps = perturbation.epsilon_cl
    x0, y0 = ens.x.copy(), ens.y.copy()
    series = [circular_second_moment(ens.y, ens.L)]

    def perturb():
        if eps > 0:
            ens.x = (ens.x + stream.uniform_block(ens.count, -eps, eps)) % 1.0
            ens.y = (ens.y + stream.uniform_block(ens.count, -eps, eps)) % ens.L

    for _ in range(t_forward):
        cat_step_float(ens)
        if perturbation.when == "every_step":
            perturb()
        series.append(circular_second_moment(ens.y, ens.L))
    if perturbation.when == "at_reversal_only":
        perturb()
    for _ in range(t_reverse):
        cat_step_float_inverse(ens)
        if perturbation.when == "every_step":
            perturb()
        series.append(circular_second_moment(ens.y, ens.L))

    dx = np.abs(ens.x - x0)
    dx = np.minimum(dx, 1.0 - dx)
    dy = np.abs(ens.y - y0)
    dy = np.minimum(dy, ens.L - dy)
    tol = 1.0 / 64.0
    return_overlap = float(np.mean((dx < tol) & (dy < tol)))
    return {"y2": np.asarray(series), "return_overlap": return_overlap}


def mask_overlap(ens: OrbitEnsemble, mask: np.ndarray, n: int) -> float:
    """Fraction of orbits currently inside occupied lattice cells."""
    N = 1 << n
    i = np.floor(ens.x * N).astype(np.int64) % N
    j = np.floor(ens.y * N).astype(np.int64) % (ens.L * N)
    return float(np.mean(mask[i, j]))


def lyapunov_estimate() -> float:
    """ln of the largest eigenvalue of the cat map tangent matrix [[1,1],[1,2]]."""
    eigs = np.linalg.eigvals(CAT_TANGENT_MATRIX)
    return float(np.log(np.max(np.real(eigs))))


def lyapunov_from_orbits(t: int = 20, d0: float = 1e-12, seed: int = 11) -> float:
    """Finite-difference Lyapunov exponent from one orbit pair."""
    stream = Stream(seed)
    x1, y1 = stream.uniform(), stream.uniform()
    x2, y2 = x1 + d0, y1
    for _ in range(t):
        y1 = (y1 + x1) % 1.0
        x1 = (x1 + y1) % 1.0
        y2 = (y2 + x2) % 1.0
        x2 = (x2 + y2) % 1.0
    dx = min(abs(x1 - x2), 1 - abs(x1 - x2))
    dy = min(abs(y1 - y2), 1 - abs(y1 - y2))
    d = math.hypot(dx, dy)
    return math.log(d / d0) / t


# -- Chirikov standard map ----------------------------------------------------


def evolve_standard_map(I: np.ndarray, theta: np.ndarray, t: int, K: float,
                        keep_trajectories: bool = False) -> dict:
    """Iterate I_bar = I + K sin(theta), theta_bar = theta + I_bar.

    The action I is unbounded; theta wraps mod 2 pi.  Records Var(I) per
    step, and the full trajectories when asked.
    """
    I = np.array(I, dtype=float)
    theta = np.array(theta, dtype=float)
    var = [float(np.var(I))]
    traj = [(I.copy(), theta.copy())] if keep_trajectories else None
    for _ in range(t):
        I = I + K * np.sin(theta)
        theta = (theta + I) % (2.0 * np.pi)
        var.append(float(np.var(I)))
        if keep_trajectories:
            traj.append((I.copy(), theta.copy()))
    out = {"var_I": np.asarray(var), "I": I, "theta": theta}
    if keep_trajectories:
        out["trajectories"] = traj
    return out


# -- dense reconstruction -----------------------------------------------------


def dense_unitary(circuit: Circuit, cap: int = 12) -> np.ndarray:
    """Columns are the circuit applied to each basis state at epsilon = 0."""
    m = circuit.num_qubits
    if m > cap:
        raise ValueError(f"dense reconstruction of {m} qubits exceeds cap {cap}")
    dim = 1 << m
    out = np.empty((dim, dim), dtype=np.complex128)
    for col in range(dim):
        state = new_basis_state(m, col)
        circuit.apply_to(state)
        out[:, col] = state.amplitudes
    return out


def dft_matrix(n: int) -> np.ndarray:
    """Reference DFT of size 2**n: F[l, k] = 2**(-n/2) exp(2 pi i k l / 2**n)."""
    dim = 1 << n
    k = np.arange(dim)
    return np.exp(2j * np.pi * np.outer(k, k) / dim) / math.sqrt(dim)
