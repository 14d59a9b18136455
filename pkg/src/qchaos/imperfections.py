"""Static imperfections of an idle quantum computer and its melting.

The register Hamiltonian has per-qubit level splittings spread over an
interval delta plus residual two-qubit sigma_x sigma_x couplings of scale
J.  Exact diagonalization gives eigenstate entropies (the melting order
parameter), level spacings, and gap-ratio statistics; scanning J locates
the chaos border.

The coupling conserves the parity of the number of flipped qubits, so all
spacing statistics are computed within one parity sector; superimposing
the two sectors would hide level repulsion.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .rng import Stream


def topology_edges(topology: str, n: int, grid_shape: tuple[int, int] | None = None):
    """Coupled qubit pairs: every pair, a chain, or a 2D nearest-neighbor grid."""
    if topology == "all_pairs":
        return tuple(itertools.combinations(range(n), 2))
    if topology == "chain":
        return tuple((i, i + 1) for i in range(n - 1))
    if topology == "grid":
        if grid_shape is None or grid_shape[0] * grid_shape[1] != n:
            raise ValueError(f"grid topology needs rows*cols == {n}, got {grid_shape}")
        rows, cols = grid_shape
        edges = []
        for r in range(rows):
            for c in range(cols):
                q = r * cols + c
                if c + 1 < cols:
                    edges.append((q, q + 1))
                if r + 1 < rows:
                    edges.append((q, q + cols))
        return tuple(edges)
    raise ValueError(f"unknown topology {topology!r}")


def default_grid_shape(n: int) -> tuple[int, int]:
    """Most square rows x cols factorization of n."""
    best = (1, n)
    for rows in range(1, int(math.isqrt(n)) + 1):
        if n % rows == 0:
            best = (rows, n // rows)
    return best


@dataclass
class ImperfectionModel:
    """One disorder realization: detunings delta_i and couplings J_ij.

    Level splittings are Delta0 + delta_i with delta_i ~ U[-delta/2,
    delta/2] (splittings spread over an interval delta) and Delta0 = 2
    delta so detunings never reorder a qubit's levels.  Couplings are
    J_ij ~ U[-J, J] on the topology's edges.
    """

    n: int
    delta: float
    J: float
    topology: str = "all_pairs"
    grid_shape: tuple[int, int] | None = None
    seed: int = 0
    detunings: np.ndarray = field(default=None, repr=False)  # type: ignore[assignment]
    couplings: np.ndarray = field(default=None, repr=False)  # type: ignore[assignment]

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if self.delta <= 0:
            raise ValueError("delta must be > 0")
        if self.J < 0:
            raise ValueError("J must be >= 0")
        if self.topology == "grid" and self.grid_shape is None:
            self.grid_shape = default_grid_shape(self.n)
        self.edges = topology_edges(self.topology, self.n, self.grid_shape)
        stream = Stream(self.seed)
        if self.detunings is None:
            self.detunings = stream.uniform_block(self.n, -self.delta / 2.0, self.delta / 2.0)
        if self.couplings is None:
            self.couplings = stream.uniform_block(len(self.edges), -self.J, self.J)

    @property
    def splitting(self) -> float:
        return 2.0 * self.delta  # Delta0, the uniform part of the level splitting


def build_hamiltonian(model: ImperfectionModel, cap: int = 14) -> np.ndarray:
    """Dense real-symmetric H = sum_i (Delta0 + delta_i) sigma_z_i / 2
    + sum_edges J_ij sigma_x_i sigma_x_j."""
    if model.n > cap:
        raise ValueError(f"n = {model.n} exceeds dense-matrix cap {cap}")
    dim = 1 << model.n
    idx = np.arange(dim)
    bits = (idx[:, None] >> np.arange(model.n)[None, :]) & 1
    sz = 1 - 2 * bits  # +1 when the qubit is |0>
    diag = (sz * (model.splitting + model.detunings)[None, :] / 2.0).sum(axis=1)
    H = np.zeros((dim, dim))
    H[idx, idx] = diag
    for (i, j), val in zip(model.edges, model.couplings):
        H[idx, idx ^ ((1 << i) | (1 << j))] += val
    return H


def coupled_states_per_level(model: ImperfectionModel) -> int:
    """Off-diagonal partners of one basis state: the number of edges."""
    return len(model.edges)


def _popcount_parity(n: int) -> np.ndarray:
    idx = np.arange(1 << n)
    pop = np.zeros(1 << n, dtype=np.int64)
    for k in range(n):
        pop += (idx >> k) & 1
    return (pop % 2).astype(np.int64)


def diagonalize_parity_blocks(model: ImperfectionModel):
    """Exact sector-wise diagonalization.

    The coupling flips two qubits at a time, so H is block diagonal in the
    flip parity; diagonalizing the two 2**(n-1) blocks is equivalent to
    (and about twice as fast as) the full problem.  Returns, per sector,
    (eigenvalues ascending, eigenstate entropies).
    """
    dim = 1 << model.n
    idx = np.arange(dim)
    bits = (idx[:, None] >> np.arange(model.n)[None, :]) & 1
    sz = 1 - 2 * bits
    diag = (sz * (model.splitting + model.detunings)[None, :] / 2.0).sum(axis=1)
    parity = _popcount_parity(model.n)
    out = []
    for p in (0, 1):
        sel = np.where(parity == p)[0]
        pos = np.empty(dim, dtype=np.int64)
        pos[sel] = np.arange(len(sel))
        Hb = np.zeros((len(sel), len(sel)))
        Hb[np.arange(len(sel)), np.arange(len(sel))] = diag[sel]
        for (i, j), val in zip(model.edges, model.couplings):
            mask = (1 << i) | (1 << j)
            Hb[pos[sel], pos[sel ^ mask]] += val
        if model.J == 0 or not model.couplings.any():
            order = np.argsort(diag[sel], kind="stable")
            out.append((diag[sel][order], np.zeros(len(sel))))
            continue
        evals, evecs = np.linalg.eigh(Hb)
        W = evecs * evecs
        logs = np.where(W > 0.0, np.log2(np.where(W > 0.0, W, 1.0)), 0.0)
        out.append((evals, -(W * logs).sum(axis=0)))
    return out


@dataclass
class SpectralResult:
    """Eigen-decomposition with computational-basis eigenvectors as columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None
    metadata: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)


def diagonalize(H: np.ndarray, metadata: dict | None = None,
                keep_vectors: bool = True) -> SpectralResult:
    """Full eigen-decomposition of a Hermitian matrix, ascending eigenvalues.

    A matrix with no off-diagonal part (J = 0) short-circuits to a sort of
    its diagonal, which is exact and leaves the eigenvectors a permutation
    of the basis.
    """
    H = np.asarray(H)
    if not np.allclose(H, H.conj().T, atol=1e-12):
        raise ValueError("matrix is not Hermitian")
    off = H.copy()
    np.fill_diagonal(off, 0.0)
    if not off.any():
        order = np.argsort(np.diag(H).real, kind="stable")
        vectors = None
        if keep_vectors:
            vectors = np.zeros_like(H, dtype=float)
            vectors[order, np.arange(len(order))] = 1.0
        return SpectralResult(np.diag(H).real[order], vectors, dict(metadata or {}))
    if keep_vectors:
        evals, evecs = np.linalg.eigh(H)
    else:
        evals, evecs = np.linalg.eigvalsh(H), None
    return SpectralResult(evals, evecs, dict(metadata or {}))


def eigenstate_entropy(result: SpectralResult) -> np.ndarray:
    """Shannon entropy (bits) of each eigenstate over the J = 0 basis,
    S_i = -sum_k w_ik log2 w_ik with w_ik = |<k|psi_i>|^2."""
    if result.eigenvectors is None:
        raise ValueError("spectral result was computed without eigenvectors")
    W = np.abs(result.eigenvectors) ** 2
    logs = np.where(W > 0.0, np.log2(np.where(W > 0.0, W, 1.0)), 0.0)
    return -(W * logs).sum(axis=0)


def _central_slice(num_levels: int, window: float) -> slice:
    half = int(num_levels * window / 2.0)
    mid = num_levels // 2
    return slice(mid - half, mid + half)


def mean_level_spacing(result: SpectralResult, window: float = 0.25) -> float:
    """Mean nearest-neighbor spacing over the central `window` fraction.

    Ten or more levels in the window make this a meaningful statistic;
    anything down to a single pair is still computed (the spacing of a
    two-level window is just their difference).
    """
    sel = np.sort(result.eigenvalues)[_central_slice(result.dim, window)]
    if len(sel) < 2:
        raise ValueError("window holds fewer than 2 levels")
    return float(np.mean(np.diff(sel)))


# -- spacing statistics -------------------------------------------------------


def parity_of_levels(result: SpectralResult) -> np.ndarray:
    """Flip parity (+-1) of each eigenstate, from <prod_i sigma_z_i>.

    sigma_x sigma_x couplings preserve the parity of the number of flipped
    qubits, so eigenstates carry a definite sign.
    """
    if result.eigenvectors is None:
        raise ValueError("parity needs eigenvectors")
    dim = result.dim
    n = dim.bit_length() - 1
    idx = np.arange(dim)
    pop = np.zeros(dim, dtype=np.int64)
    for k in range(n):
        pop += (idx >> k) & 1
    signs = 1 - 2 * (pop % 2)
    expect = (np.abs(result.eigenvectors) ** 2 * signs[:, None]).sum(axis=0)
    return np.where(expect >= 0, 1, -1)


def gap_ratios(eigenvalues: np.ndarray, window: float = 0.25) -> np.ndarray:
    """r_i = min(s_i, s_i+1)/max(s_i, s_i+1) over the central window."""
    e = np.sort(np.asarray(eigenvalues))[_central_slice(len(eigenvalues), window)]
    s = np.diff(e)
    s = s[s > 0]
    return np.minimum(s[:-1], s[1:]) / np.maximum(s[:-1], s[1:])


def unfolded_spacings(eigenvalues: np.ndarray, window: float = 0.25,
                      smooth: int = 20) -> np.ndarray:
    """Nearest-neighbor spacings divided by a sliding local mean spacing."""
    e = np.sort(np.asarray(eigenvalues))[_central_slice(len(eigenvalues), window)]
    s = np.diff(e)
    local = np.convolve(s, np.ones(smooth) / smooth, mode="same")
    good = local > 0
    return s[good] / local[good]


@dataclass
class SpacingStats:
    r_values: np.ndarray
    r_mean: float
    r_stderr: float
    unfolded: np.ndarray


def spacing_statistics(results, window: float = 0.25) -> SpacingStats:
    """Gap-ratio and unfolded-spacing statistics, parity sectors resolved.

    Accepts one SpectralResult or a list (realizations aggregate).  Needs
    at least 100 levels in the analyzed windows overall.
    """
    if isinstance(results, SpectralResult):
        results = [results]
    rs, sp, total = [], [], 0
    for result in results:
        parity = parity_of_levels(result)
        for sign in (1, -1):
            sector = np.sort(result.eigenvalues[parity == sign])
            total += len(sector)
            rs.append(gap_ratios(sector, window))
            sp.append(unfolded_spacings(sector, window))
    if total < 100:
        raise ValueError(f"insufficient statistics: {total} levels, need >= 100")
    r = np.concatenate(rs)
    return SpacingStats(
        r_values=r,
        r_mean=float(r.mean()),
        r_stderr=float(r.std(ddof=1) / math.sqrt(len(r))),
        unfolded=np.concatenate(sp),
    )


def poisson_r_reference(samples: int = 200000, seed: int = 2024) -> float:
    """<r> of an uncorrelated spectrum, from sampled independent spacings."""
    stream = Stream(seed)
    s = -np.log(1.0 - stream.uniform_block(samples + 1))
    r = np.minimum(s[:-1], s[1:]) / np.maximum(s[:-1], s[1:])
    return float(r.mean())


def goe_r_reference(dim: int = 1024, realizations: int = 8, seed: int = 2025,
                    window: float = 0.5) -> float:
    """<r> of dense real-symmetric random matrices of the given size."""
    rs = []
    for k in range(realizations):
        stream = Stream(seed + k)
        A = stream.uniform_block(dim * dim, -math.sqrt(3.0), math.sqrt(3.0)).reshape(dim, dim)
        evals = np.linalg.eigvalsh((A + A.T) / math.sqrt(2.0 * dim))
        rs.append(gap_ratios(evals, window))
    r = np.concatenate(rs)
    return float(r.mean())


def goe_entropy_plateau(dim: int, seed: int = 2026, window: float = 0.2) -> float:
    """Band-center eigenvector entropy of one dense GOE matrix: the melting
    ceiling against which 'half plateau' is measured."""
    stream = Stream(seed)
    A = stream.uniform_block(dim * dim, -math.sqrt(3.0), math.sqrt(3.0)).reshape(dim, dim)
    result = diagonalize((A + A.T) / math.sqrt(2.0 * dim))
    S = eigenstate_entropy(result)
    return float(S[_central_slice(dim, window)].mean())


# -- chaos border -------------------------------------------------------------


@dataclass
class BorderScan:
    J_grid: np.ndarray
    center_entropy: np.ndarray      # disorder-averaged band-center <S> per J
    center_stderr: np.ndarray
    edge_entropy: np.ndarray
    edge_stderr: np.ndarray
    r_means: np.ndarray
    r_stderrs: np.ndarray
    entropy_map: np.ndarray         # (len(J_grid), energy bins) mean entropy
    energy_bins: np.ndarray         # bin centers as fractions of the span
    spans: np.ndarray               # mean E_max - E_0 per J row
    J_c: float
    J_c_entropy: float | None
    plateau: float
    r_poisson: float
    r_goe: float


def _entropy_profile(result: SpectralResult, S: np.ndarray, bins: int) -> np.ndarray:
    """Mean entropy per (E - E0) bin, bins spanning this spectrum's range."""
    E = result.eigenvalues - result.eigenvalues[0]
    edges = np.linspace(0.0, E[-1] + 1e-12, bins + 1)
    which = np.clip(np.digitize(E, edges) - 1, 0, bins - 1)
    out = np.zeros(bins)
    for b in range(bins):
        hit = which == b
        if hit.any():
            out[b] = S[hit].mean()
    return out


def chaos_border_scan(n: int, delta: float, J_grid, realizations: int,
                      topology: str = "grid", grid_shape: tuple[int, int] | None = None,
                      seed: int = 0, window: float = 0.2, energy_bins: int = 48,
                      edge_window: float = 0.1, crossover_fraction: float = 0.5) -> BorderScan:
    """Scan J, measuring melting and locating the quantum chaos border.

    Two border estimates are produced:

    * J_c (primary): the Poisson-to-random-matrix crossover point of the
      band-center gap-ratio statistic, located where <r> crosses
      `crossover_fraction` of the way between the Poisson and GOE
      reference values (midpoint by default).  This follows the paper's
      threshold notion: above the border the levels obey random-matrix
      statistics.
    * J_c_entropy: half-GOE-plateau crossing of the band-center entropy
      (None when the grid never crosses).  Reported for comparison; it is
      a much softer landmark with large realization-to-realization spread.

    Raises when the grid cannot bracket the primary crossing.
    """
    J_grid = np.asarray(sorted(float(j) for j in J_grid))
    if len(J_grid) < 2:
        raise ValueError("J grid too coarse to bracket a crossing")
    if realizations < 1:
        raise ValueError("need at least one realization")

    dim = 1 << n
    r_poisson = poisson_r_reference()
    r_goe = goe_r_reference()
    plateau = goe_entropy_plateau(dim)

    center_S = np.zeros(len(J_grid))
    center_err = np.zeros(len(J_grid))
    edge_S = np.zeros(len(J_grid))
    edge_err = np.zeros(len(J_grid))
    r_mean = np.zeros(len(J_grid))
    r_err = np.zeros(len(J_grid))
    ent_map = np.zeros((len(J_grid), energy_bins))
    spans = np.zeros(len(J_grid))

    for jx, J in enumerate(J_grid):
        profiles, centers, edges_, span_vals = [], [], [], []
        r_parts: list[np.ndarray] = []
        # same seeds across the J sweep: each realization keeps its disorder
        # pattern while only the coupling scale changes
        for rlz in range(realizations):
            model = ImperfectionModel(n=n, delta=delta, J=J, topology=topology,
                                      grid_shape=grid_shape, seed=seed + 7919 * rlz)
            sectors = diagonalize_parity_blocks(model)
            evals = np.concatenate([s[0] for s in sectors])
            S = np.concatenate([s[1] for s in sectors])
            order = np.argsort(evals, kind="stable")
            evals, S = evals[order], S[order]
            sl = _central_slice(dim, window)
            centers.append(S[sl].mean())
            k = max(int(dim * edge_window), 1)
            edges_.append(0.5 * (S[:k].mean() + S[-k:].mean()))
            merged = SpectralResult(evals, None)
            profiles.append(_entropy_profile(merged, S, energy_bins))
            span_vals.append(evals[-1] - evals[0])
            if J > 0:
                for sector_evals, _ in sectors:
                    r_parts.append(gap_ratios(sector_evals, 0.25))
        center_S[jx] = np.mean(centers)
        edge_S[jx] = np.mean(edges_)
        if realizations > 1:
            center_err[jx] = np.std(centers, ddof=1) / math.sqrt(realizations)
            edge_err[jx] = np.std(edges_, ddof=1) / math.sqrt(realizations)
        ent_map[jx] = np.mean(profiles, axis=0)
        spans[jx] = np.mean(span_vals)
        if r_parts:
            r = np.concatenate(r_parts)
            r_mean[jx] = r.mean()
            r_err[jx] = r.std(ddof=1) / math.sqrt(len(r))
        else:
            r_mean[jx], r_err[jx] = float("nan"), float("nan")

    threshold = r_poisson + crossover_fraction * (r_goe - r_poisson)
    J_c = _first_crossing(J_grid, r_mean, threshold)
    if J_c is None:
        raise ValueError("J grid does not bracket the spectral-statistics crossing")
    J_c_entropy = _first_crossing(J_grid, center_S, plateau / 2.0)
    return BorderScan(
        J_grid=J_grid,
        center_entropy=center_S,
        center_stderr=center_err,
        edge_entropy=edge_S,
        edge_stderr=edge_err,
        r_means=r_mean,
        r_stderrs=r_err,
        entropy_map=ent_map,
        energy_bins=(np.arange(energy_bins) + 0.5) / energy_bins,
        spans=spans,
        J_c=J_c,
        J_c_entropy=J_c_entropy,
        plateau=plateau,
        r_poisson=r_poisson,
        r_goe=r_goe,
    )


def _first_crossing(grid: np.ndarray, values: np.ndarray, threshold: float) -> float | None:
    for k in range(len(grid)):
        v = values[k]
        if np.isnan(v) or v < threshold:
            continue
        if k == 0 or np.isnan(values[k - 1]):
            return float(grid[k])
        lo, hi = values[k - 1], v
        frac = (threshold - lo) / (hi - lo)
        return float(grid[k - 1] + frac * (grid[k] - grid[k - 1]))
    return None


# -- timescale ----------------------------------------------------------------


def chaos_timescale(model: ImperfectionModel) -> float:
    """Order-of-magnitude chaos development time n delta / J**2 (hbar = 1).

    Coarse scaling estimate only; J = 0 returns infinity (no chaos ever).
    """
    if model.J == 0:
        return math.inf
    return model.n * model.delta / (model.J * model.J)


def basis_state_fidelity(result: SpectralResult, basis_index: int,
                         times: np.ndarray) -> np.ndarray:
    """|<k| exp(-iHt) |k>|^2 from the spectral decomposition."""
    if result.eigenvectors is None:
        raise ValueError("needs eigenvectors")
    w = np.abs(result.eigenvectors[basis_index, :]) ** 2
    phases = np.exp(-1j * np.outer(np.asarray(times), result.eigenvalues))
    return np.abs(phases @ w) ** 2
