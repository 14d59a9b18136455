"""Experiment runners: figure reproductions, scaling sweeps, verification.

Each runner takes a resolved configuration dict, writes CSV/PPM outputs
plus a manifest into the output directory, and returns a summary dict of
the headline numbers.  All randomness derives from the configured seed.
"""

from __future__ import annotations

import math
import os

import numpy as np

from . import circuits, imperfections, maps, oracle, outputs
from .rng import Stream
from .state import NoiseSpec, StateVector, fidelity

GIB = 1 << 30


class ResourceLimitError(RuntimeError):
    """A run would exceed the configured memory cap."""


DEFAULTS: dict[str, dict] = {
    "fig1": {
        "n": 7, "L": 1, "epsilon": 0.01, "eps_classical": 1.0 / 128.0,
        "t_reverse": 10, "long_panel": True, "t_long_reverse": 200,
        "orbits_per_cell": 4, "seed": 42, "memory_cap_bytes": 2 * GIB,
    },
    "fig2": {
        "preset": "reduced", "epsilon": 0.01, "eps_classical_a": 1e-4,
        "eps_classical_b": 1e-8, "orbits": 1000000, "t_diffusion": 200,
        "seed": 42, "memory_cap_bytes": 2 * GIB,
        # preset full: n=7 L=8 reversal at t=35; reduced: n=5 L=4 at t=20
        "n": 0, "L": 0, "t_reverse": 0, "t_total": 0,
    },
    "fig3": {
        "n_sys": 5, "K": 0.04, "a": 1.6, "hbar": 4.0 * math.pi / 32.0,
        "epsilon": 0.02, "t": 180, "t_gamma": 540, "gamma_eps": "0.01,0.02",
        "gamma_realizations": 3, "seed": 42, "memory_cap_bytes": 2 * GIB,
    },
    "fig4": {
        "n": 12, "delta": 1.0, "realizations": 10, "topology": "grid",
        "j_grid": "0,0.02,0.05,0.1,0.2,0.3,0.4,0.5",
        "window": 0.2, "energy_bins": 48, "seed": 42,
        "memory_cap_bytes": 2 * GIB,
    },
    "scaling-fidelity": {
        "eps_list": "0.005,0.01,0.02", "n_eps": 6, "n_list": "5,6,7",
        "eps_n": 0.01, "L": 1, "threshold": 0.9, "t_max": 2000,
        "seed": 42, "memory_cap_bytes": 2 * GIB,
    },
    "scaling-gamma": {
        "n_sys": 5, "K": 0.04, "a": 1.6, "hbar": 4.0 * math.pi / 32.0,
        "eps_list": "0.01,0.02", "t": 540, "realizations": 3,
        "seed": 42, "memory_cap_bytes": 2 * GIB,
    },
    "localization": {
        "n_sys": 10, "K": 5.0, "hbar": 1.0, "t": 200, "orbits": 100000,
        "seed": 42, "memory_cap_bytes": 2 * GIB,
    },
    "verify": {
        "seed": 42, "memory_cap_bytes": 2 * GIB,
    },
}

_FULL_FIG2 = {"n": 7, "L": 8, "t_reverse": 35, "t_total": 90}
_REDUCED_FIG2 = {"n": 5, "L": 4, "t_reverse": 20, "t_total": 60}


def resolve_config(experiment: str, overrides: dict | None = None) -> dict:
    """Defaults for the experiment, overridden by typed values.

    Unknown keys are rejected; strings are coerced to the default's type.
    """
    if experiment not in DEFAULTS:
        raise ValueError(f"unknown experiment {experiment!r}; choose from {sorted(DEFAULTS)}")
    params = dict(DEFAULTS[experiment])
    for key, value in (overrides or {}).items():
        if key == "experiment":
            if str(value) != experiment:
                raise ValueError(f"config is for experiment {value!r}, not {experiment!r}")
            continue
        if key not in params:
            raise ValueError(f"unknown parameter {key!r} for {experiment}")
        default = params[key]
        if isinstance(default, bool):
            params[key] = str(value).lower() in ("1", "true", "yes") if isinstance(value, str) else bool(value)
        elif isinstance(default, int):
            params[key] = int(value)
        elif isinstance(default, float):
            params[key] = float(value)
        else:
            params[key] = str(value)
    if experiment == "fig2":
        preset = _FULL_FIG2 if params["preset"] == "full" else _REDUCED_FIG2
        for key, val in preset.items():
            if params[key] == 0:  # 0 means "use the preset value"
                params[key] = val
    return params


def parse_float_list(text: str) -> list[float]:
    return [float(p) for p in str(text).split(",") if p.strip()]


def check_memory(num_qubits: int, cap_bytes: int) -> None:
    need = 16 * (1 << num_qubits)
    if need > cap_bytes:
        raise ResourceLimitError(
            f"statevector of {num_qubits} qubits needs {need / GIB:.2f} GiB, "
            f"cap is {cap_bytes / GIB:.2f} GiB; try a reduced preset"
        )


# -- masks and small helpers --------------------------------------------------


def cat_face_mask(n: int, L: int = 1) -> np.ndarray:
    """Compact connected test pattern: a disk with two triangular ears,
    centered at (1/2, L/2) and spanning about a quarter of the unit cell."""
    N = 1 << n
    M = L * N
    cx = N // 2
    cy = (L * N) // 2
    r = max(N // 8, 1)
    i = np.arange(N)[:, None]
    j = np.arange(M)[None, :]
    mask = (i - cx) ** 2 + (j - cy) ** 2 <= r * r
    # ears: triangles sitting on top of the disk
    for ex in (cx - r + r // 4, cx + r - r // 4):
        height = max(r, 1)
        for h in range(height):
            half = max((height - h) * r // (2 * height), 0)
            row = cy + r + h - r // 3
            if row >= M:
                continue
            mask[max(ex - half, 0): min(ex + half + 1, N), row] = True
    return mask


def strip_mask(n: int, L: int) -> np.ndarray:
    """All x, single y row at y = L/2: the diffusion initial condition."""
    N = 1 << n
    mask = np.zeros((N, L * N), dtype=bool)
    mask[:, (L // 2) << n if L > 1 else (N // 2)] = True
    return mask


def block_mask(n: int, L: int = 1) -> np.ndarray:
    """Filled square block, a quarter of the cell on each side."""
    N = 1 << n
    mask = np.zeros((N, L * N), dtype=bool)
    cx = N // 2
    cy = (L * N) // 2
    r = max(N // 8, 1)
    mask[cx - r: cx + r, cy - r: cy + r] = True
    return mask


def mask_cell_orbits(mask: np.ndarray, n: int, L: int, per_cell: int) -> oracle.OrbitEnsemble:
    """Classical orbits matching a lattice mask: a per_cell x per_cell grid
    of points inside every occupied cell."""
    N = 1 << n
    side = max(int(round(math.sqrt(per_cell))), 1)
    i, j = np.nonzero(mask)
    offs = (np.arange(side) + 0.5) / side
    ox, oy = np.meshgrid(offs, offs, indexing="ij")
    x = ((i[:, None] + ox.ravel()[None, :]) / N).ravel()
    y = ((j[:, None] + oy.ravel()[None, :]) / N).ravel()
    return oracle.OrbitEnsemble(x % 1.0, y % float(L), L)


# -- fig 1: cat map reversibility ---------------------------------------------


def run_fig1(params: dict, out_dir: str) -> dict:
    man = outputs.Manifest("fig1", params)
    n, L = params["n"], params["L"]
    spec = maps.CatMapSpec(n=n, L=L)
    check_memory(spec.num_qubits, params["memory_cap_bytes"])
    mask = cat_face_mask(n, L)
    t_rev = params["t_reverse"]
    seed = params["seed"]

    # quantum side: every gate noisy, reversal at t_rev
    noise = NoiseSpec(params["epsilon"], seed=seed)
    result = maps.run_cat_experiment(spec, mask, t_rev, t_rev, noise,
                                     keep_distributions=True,
                                     snapshot_times=(0, t_rev, 2 * t_rev))
    q_overlap = float(result.overlaps[-1])
    ts = np.arange(2 * t_rev + 1)
    man.add_output(outputs.write_timeseries_csv(
        os.path.join(out_dir, "quantum_timeseries.csv"),
        ts, fidelity=result.fidelities, y2=result.second_moments))
    for label, dist in zip(("t0", f"t{t_rev}", f"t{2 * t_rev}"), result.distributions):
        man.add_output(outputs.write_ppm(os.path.join(out_dir, f"quantum_{label}.ppm"), dist.T))

    # classical side: exact start on the lattice, one-cell error at reversal
    ens = mask_cell_orbits(mask, n, L, params["orbits_per_cell"])
    pert = oracle.PerturbationSpec(params["eps_classical"], "at_reversal_only", seed + 1)
    ens_run = ens.copy()
    _snapshot_classical(man, out_dir, ens_run, mask, n, "classical_t0.ppm")
    for _ in range(t_rev):
        oracle.cat_step_float(ens_run)
    _snapshot_classical(man, out_dir, ens_run, mask, n, f"classical_t{t_rev}.ppm")
    stream = Stream(pert.seed)
    e = pert.epsilon_cl
    ens_run.x = (ens_run.x + stream.uniform_block(ens_run.count, -e, e)) % 1.0
    ens_run.y = (ens_run.y + stream.uniform_block(ens_run.count, -e, e)) % L
    for _ in range(t_rev):
        oracle.cat_step_float_inverse(ens_run)
    c_overlap = oracle.mask_overlap(ens_run, mask, n)
    _snapshot_classical(man, out_dir, ens_run, mask, n, f"classical_t{2 * t_rev}.ppm")

    man.record("result_quantum_overlap", q_overlap)
    man.record("result_classical_overlap", c_overlap)
    man.record("result_final_fidelity", float(result.fidelities[-1]))
    man.record("result_gate_count", result.gate_count)

    summary = {"quantum_overlap": q_overlap, "classical_overlap": c_overlap,
               "final_fidelity": float(result.fidelities[-1])}

    if params["long_panel"]:
        t_long = params["t_long_reverse"]
        noise_long = NoiseSpec(params["epsilon"], seed=seed + 2)
        long_run = maps.run_cat_experiment(spec, mask, t_long, t_long, noise_long,
                                           keep_distributions=True,
                                           snapshot_times=(2 * t_long,))
        man.add_output(outputs.write_timeseries_csv(
            os.path.join(out_dir, "quantum_long_timeseries.csv"),
            np.arange(2 * t_long + 1),
            fidelity=long_run.fidelities, y2=long_run.second_moments))
        man.add_output(outputs.write_ppm(
            os.path.join(out_dir, f"quantum_t{2 * t_long}.ppm"), long_run.distributions[-1].T))
        ens_long = ens.copy()
        oracle.evolve_cat_float(ens_long, t_long, t_long,
                                oracle.PerturbationSpec(params["eps_classical"],
                                                        "at_reversal_only", seed + 3))
        _snapshot_classical(man, out_dir, ens_long, mask, n, f"classical_t{2 * t_long}.ppm")
        man.record("result_long_quantum_overlap", float(long_run.overlaps[-1]))
        man.record("result_long_classical_overlap", oracle.mask_overlap(ens_long, mask, n))
        summary["long_quantum_overlap"] = float(long_run.overlaps[-1])

    man.write(out_dir)
    return summary


def _snapshot_classical(man, out_dir, ens, mask, n, name):
    N = 1 << n
    i = np.floor(ens.x * N).astype(np.int64) % N
    j = np.floor(ens.y * N).astype(np.int64) % (ens.L * N)
    hist = np.zeros((N, ens.L * N))
    np.add.at(hist, (i, j), 1.0)
    man.add_output(outputs.write_ppm(os.path.join(out_dir, name), hist.T / max(hist.max(), 1.0)))


# -- fig 2: diffusion and time reversal ----------------------------------------


def run_fig2(params: dict, out_dir: str) -> dict:
    man = outputs.Manifest("fig2", params)
    n, L = params["n"], params["L"]
    t_rev, t_total = params["t_reverse"], params["t_total"]
    seed = params["seed"]
    spec = maps.CatMapSpec(n=n, L=L)
    check_memory(spec.num_qubits, params["memory_cap_bytes"])
    ts = np.arange(t_total + 1)

    # unperturbed long run fixes the diffusion coefficient D
    ens_d = oracle.strip_ensemble(params["orbits"], L, seed + 10)
    free = oracle.evolve_cat_float(ens_d, params["t_diffusion"], 0,
                                   oracle.PerturbationSpec(0.0, "at_reversal_only", 0))
    D, d_err = _fit_diffusion(free["y2"], L)
    man.record("result_D", D)
    man.record("result_D_fit_error", d_err)
    man.add_output(outputs.write_timeseries_csv(
        os.path.join(out_dir, "theory_line.csv"),
        ts, y2=np.minimum(D * ts, L * L / 12.0)))

    summary = {"D": D}
    curves = {}
    for tag, eps in (("a", params["eps_classical_a"]), ("b", params["eps_classical_b"])):
        ens = oracle.strip_ensemble(params["orbits"], L, seed + 10)
        res = oracle.evolve_cat_float(ens, t_rev, t_total - t_rev,
                                      oracle.PerturbationSpec(eps, "at_reversal_only", seed + 20))
        curves[eps] = res["y2"]
        man.add_output(outputs.write_timeseries_csv(
            os.path.join(out_dir, f"classical_eps{eps:g}.csv"), ts, y2=res["y2"]))
        t_min = t_rev + int(np.argmin(res["y2"][t_rev:]))
        man.record(f"result_recovery_min_t_eps{eps:g}", t_min)
        summary[f"recovery_min_t_{tag}"] = t_min
        summary[f"classical_slope_{tag}"] = _early_slope(res["y2"], t_rev, L)

    # quantum run with gate noise
    noise = NoiseSpec(params["epsilon"], seed=seed)
    qres = maps.run_cat_experiment(spec, strip_mask(n, L), t_rev, t_total - t_rev, noise)
    man.add_output(outputs.write_timeseries_csv(
        os.path.join(out_dir, "quantum.csv"),
        ts, fidelity=qres.fidelities, y2=qres.second_moments))
    y2q = qres.second_moments
    q_return = float(y2q[2 * t_rev]) if 2 * t_rev < len(y2q) else float(y2q[-1])
    man.record("result_quantum_y2_at_return", q_return)
    man.record("result_quantum_y2_max", float(y2q.max()))
    summary.update({
        "quantum_slope": _early_slope(y2q, t_rev, L),
        "quantum_y2_at_return": q_return,
        "quantum_y2_peak": float(y2q[t_rev]),
        "recovery_delay": summary["recovery_min_t_b"] - summary["recovery_min_t_a"],
    })
    man.record("result_recovery_delay", summary["recovery_delay"])
    man.write(out_dir)
    return summary


def _presaturation_window(y2: np.ndarray, L: int) -> int:
    """Last index to use for slope fits: before <y^2> nears the torus cap."""
    cap = (L * L / 12.0) / 3.0
    above = np.nonzero(np.asarray(y2) > cap)[0]
    upto = int(above[0]) if len(above) else len(y2)
    return max(upto, 5)


def _fit_diffusion(y2: np.ndarray, L: int) -> tuple[float, float]:
    """Slope of <y^2> before torus saturation; returns (D, stderr)."""
    upto = _presaturation_window(y2, L)
    t = np.arange(len(y2))[1:upto]
    coef, cov = np.polyfit(t, y2[1:upto], 1, cov=True)
    return float(coef[0]), float(np.sqrt(cov[0, 0]))


def _early_slope(y2: np.ndarray, t_rev: int, L: int) -> float:
    upto = min(max(t_rev, 5), _presaturation_window(y2, L))
    t = np.arange(len(y2))[1:upto]
    return float(np.polyfit(t, y2[1:upto], 1)[0])


# -- fig 3: double-well tunneling ----------------------------------------------


def _kicked_spec(params: dict) -> maps.KickedMapSpec:
    return maps.KickedMapSpec(n_sys=params["n_sys"], K=params["K"],
                              hbar=params["hbar"], potential="double_well",
                              a=params["a"])


def _run_double_well(spec, t: int, epsilon: float, seed: int,
                     record_density: bool = False):
    """Noisy double-well run with one idle ancilla qubit; fidelity is taken
    against the parallel noise-free evolution."""
    width = spec.n_sys + 1
    step = maps.build_kicked_step(spec, width=width)
    packet = maps.gaussian_packet(spec, center=-spec.a)
    amps = np.zeros(1 << width, dtype=np.complex128)
    amps[: spec.N] = packet
    noisy = StateVector(width, amps.copy())
    ideal = StateVector(width, amps.copy())
    noise = NoiseSpec(epsilon, seed=seed)

    p_left, p_right, fids = [], [], []
    density = [] if record_density else None
    for t_now in range(t + 1):
        left, right = maps.well_populations(noisy, spec)
        p_left.append(left)
        p_right.append(right)
        fids.append(fidelity(ideal, noisy))
        if density is not None:
            density.append(noisy.probabilities().reshape(-1, spec.N).sum(axis=0))
        if t_now < t:
            step.apply_to(noisy, noise)
            step.apply_to(ideal)
    out = {"p_left": np.asarray(p_left), "p_right": np.asarray(p_right),
           "fidelity": np.asarray(fids)}
    if density is not None:
        out["density"] = np.asarray(density)
    return out


def run_fig3(params: dict, out_dir: str) -> dict:
    man = outputs.Manifest("fig3", params)
    spec = _kicked_spec(params)
    check_memory(spec.n_sys + 1, params["memory_cap_bytes"])
    t, seed = params["t"], params["seed"]
    ts = np.arange(t + 1)

    ideal = _run_double_well(spec, t, 0.0, seed, record_density=True)
    noisy = _run_double_well(spec, t, params["epsilon"], seed + 1, record_density=True)
    man.add_output(outputs.write_timeseries_csv(
        os.path.join(out_dir, "ideal_populations.csv"),
        ts, fidelity=ideal["fidelity"], p_left=ideal["p_left"], p_right=ideal["p_right"]))
    man.add_output(outputs.write_timeseries_csv(
        os.path.join(out_dir, "noisy_populations.csv"),
        ts, fidelity=noisy["fidelity"], p_left=noisy["p_left"], p_right=noisy["p_right"]))
    man.add_output(outputs.write_ppm(
        os.path.join(out_dir, "density_ideal.ppm"), ideal["density"]))
    man.add_output(outputs.write_ppm(
        os.path.join(out_dir, "density_noisy.ppm"), noisy["density"]))

    packet = maps.gaussian_packet(spec, center=-spec.a)
    period = maps.tunneling_period(spec, packet)
    man.record("result_tunneling_period", period)
    man.record("result_packet_sigma", math.sqrt(spec.hbar / 2.0))
    man.record("result_gate_counts", str(maps.build_kicked_step(spec).gate_summary()))

    gammas = _gamma_fits(spec, parse_float_list(params["gamma_eps"]),
                         params["t_gamma"], params["gamma_realizations"], seed + 100)
    for eps, (gamma, err) in gammas.items():
        man.record(f"result_gamma_eps{eps:g}", gamma)
        man.record(f"result_gamma_stderr_eps{eps:g}", err)
    eps_sorted = sorted(gammas)
    ratio = None
    if len(eps_sorted) >= 2:
        ratio = gammas[eps_sorted[-1]][0] / gammas[eps_sorted[0]][0]
        man.record("result_gamma_ratio", ratio)
    man.write(out_dir)
    return {"period": period, "gammas": {e: g for e, (g, _) in gammas.items()},
            "gamma_ratio": ratio,
            "ideal_contrast": float(ideal["p_left"].max() - ideal["p_left"].min()),
            "noisy_contrast_late": _late_contrast(noisy["p_left"]),
            "p_left_ideal": ideal["p_left"], "p_left_noisy": noisy["p_left"]}


def _late_contrast(p_left: np.ndarray) -> float:
    tail = p_left[-len(p_left) // 3 :]
    return float(tail.max() - tail.min())


def _gamma_fits(spec, eps_list, t, realizations, seed) -> dict:
    out = {}
    for k, eps in enumerate(eps_list):
        fits = []
        for r in range(realizations):
            run = _run_double_well(spec, t, eps, seed + 1000 * k + r)
            fits.append(maps.fit_decay(run["p_left"])["gamma"])
        fits = np.asarray(fits)
        out[eps] = (float(fits.mean()),
                    float(fits.std(ddof=1) / math.sqrt(len(fits))) if len(fits) > 1 else 0.0)
    return out


# -- fig 4: melting of the isolated computer ------------------------------------


def run_fig4(params: dict, out_dir: str) -> dict:
    man = outputs.Manifest("fig4", params)
    n = params["n"]
    delta = params["delta"]
    if 16 * (1 << n) * (1 << n) > params["memory_cap_bytes"]:
        raise ResourceLimitError(f"dense {1 << n} x {1 << n} Hamiltonian exceeds memory cap")
    j_over_delta = parse_float_list(params["j_grid"])
    scan = imperfections.chaos_border_scan(
        n=n, delta=delta, J_grid=[j * delta for j in j_over_delta],
        realizations=params["realizations"], topology=params["topology"],
        seed=params["seed"], window=params["window"],
        energy_bins=params["energy_bins"])

    rows = []
    for jx, J in enumerate(scan.J_grid):
        for bx, frac in enumerate(scan.energy_bins):
            rows.append((frac * scan.spans[jx], J / delta, scan.entropy_map[jx, bx]))
    man.add_output(outputs.write_csv(
        os.path.join(out_dir, "melting_map.csv"), ["E_minus_E0", "J_over_delta", "S_mean"], rows))
    # figure orientation: J grows upward, so the top image row is the largest J
    man.add_output(outputs.write_ppm(
        os.path.join(out_dir, "melting_map.ppm"), scan.entropy_map[::-1], vmax=float(n)))
    man.add_output(outputs.write_csv(
        os.path.join(out_dir, "border_scan.csv"),
        ["J_over_delta", "center_S", "edge_S", "r_mean", "r_stderr"],
        [(J / delta, scan.center_entropy[k], scan.edge_entropy[k],
          scan.r_means[k], scan.r_stderrs[k]) for k, J in enumerate(scan.J_grid)]))

    man.record("result_J_c_over_delta", scan.J_c / delta)
    man.record("result_J_c_entropy_over_delta",
               "none" if scan.J_c_entropy is None else scan.J_c_entropy / delta)
    man.record("result_plateau", scan.plateau)
    man.record("result_r_poisson_ref", scan.r_poisson)
    man.record("result_r_goe_ref", scan.r_goe)
    man.record("realization_seeds", ",".join(str(params["seed"] + 7919 * r)
                                             for r in range(params["realizations"])))
    man.write(out_dir)
    return {"J_c": scan.J_c / delta,
            "J_c_entropy": None if scan.J_c_entropy is None else scan.J_c_entropy / delta,
            "scan": scan}


# -- scaling sweeps -------------------------------------------------------------


def _cat_fidelity_lifetime(n: int, L: int, epsilon: float, threshold: float,
                           t_max: int, seed: int) -> tuple[float, float]:
    """Steps until the noisy state's fidelity to the ideal run crosses the
    threshold, log-interpolated between steps; also returns the per-step
    decay rate."""
    spec = maps.CatMapSpec(n=n, L=L)
    step = maps.build_cat_step(spec)
    mask = block_mask(n, L)
    noisy = maps.prepare_cat_initial(spec, mask)
    ideal = noisy.copy()
    noise = NoiseSpec(epsilon, seed=seed)
    prev = 1.0
    for t in range(1, t_max + 1):
        step.apply_to(noisy, noise)
        step.apply_to(ideal)
        f = fidelity(ideal, noisy)
        if f < threshold:
            lo = math.log(max(f, 1e-300))
            hi = math.log(max(prev, 1e-300))
            frac = (hi - math.log(threshold)) / (hi - lo) if hi != lo else 1.0
            t_f = t - 1 + frac
            return t_f, -lo / (t * len(step))
        prev = f
    raise RuntimeError(f"fidelity never crossed {threshold} within {t_max} steps")


def run_scaling_fidelity(params: dict, out_dir: str) -> dict:
    man = outputs.Manifest("scaling-fidelity", params)
    L = params["L"]
    threshold = params["threshold"]
    seed = params["seed"]
    eps_list = parse_float_list(params["eps_list"])
    n_list = [int(v) for v in parse_float_list(params["n_list"])]
    check_memory(maps.qubits_required(max([params["n_eps"], *n_list]), L),
                 params["memory_cap_bytes"])

    rows = []
    eps_tf = []
    for k, eps in enumerate(eps_list):
        t_f, rate = _cat_fidelity_lifetime(params["n_eps"], L, eps, threshold,
                                           params["t_max"], seed + k)
        eps_tf.append(t_f)
        rows.append((eps, params["n_eps"], t_f, rate))
    n_tf = []
    for k, n in enumerate(n_list):
        t_f, rate = _cat_fidelity_lifetime(n, L, params["eps_n"], threshold,
                                           params["t_max"], seed + 100 + k)
        n_tf.append(t_f)
        rows.append((params["eps_n"], n, t_f, rate))
    man.add_output(outputs.write_csv(
        os.path.join(out_dir, "lifetimes.csv"),
        ["epsilon", "n", "t_f", "per_gate_rate"], rows))

    eps_exp = _loglog_slope(eps_list, eps_tf)
    n_exp = _loglog_slope(n_list, n_tf)
    man.record("result_eps_exponent", eps_exp)
    man.record("result_n_exponent", n_exp)
    # per-gate decay rate should scale as epsilon^2
    rate_exp = _loglog_slope(eps_list, [r[3] for r in rows[: len(eps_list)]])
    man.record("result_rate_eps_exponent", rate_exp)
    man.write(out_dir)
    return {"eps_exponent": eps_exp, "n_exponent": n_exp, "rate_exponent": rate_exp,
            "rows": rows}


def _loglog_slope(x, y) -> float:
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])


def run_scaling_gamma(params: dict, out_dir: str) -> dict:
    man = outputs.Manifest("scaling-gamma", params)
    spec = _kicked_spec({**params, "a": params["a"]})
    eps_list = parse_float_list(params["eps_list"])
    gammas = _gamma_fits(spec, eps_list, params["t"], params["realizations"],
                         params["seed"] + 100)
    rows = [(eps, g, err) for eps, (g, err) in sorted(gammas.items())]
    man.add_output(outputs.write_csv(
        os.path.join(out_dir, "gamma.csv"), ["epsilon", "gamma", "gamma_stderr"], rows))
    eps_sorted = sorted(gammas)
    ratio = gammas[eps_sorted[-1]][0] / gammas[eps_sorted[0]][0] if len(eps_sorted) > 1 else None
    exponent = _loglog_slope(eps_sorted, [gammas[e][0] for e in eps_sorted]) if len(eps_sorted) > 1 else None
    man.record("result_gamma_ratio", ratio)
    man.record("result_eps_exponent", exponent)
    man.write(out_dir)
    return {"gammas": gammas, "ratio": ratio, "exponent": exponent}


# -- localization ----------------------------------------------------------------


def run_localization(params: dict, out_dir: str) -> dict:
    man = outputs.Manifest("localization", params)
    spec = maps.KickedMapSpec(n_sys=params["n_sys"], K=params["K"],
                              hbar=params["hbar"], potential="cosine")
    check_memory(spec.n_sys, params["memory_cap_bytes"])
    t, seed = params["t"], params["seed"]

    # quantum: start in the l = 0 momentum state (uniform in theta)
    step = maps.build_kicked_step(spec)
    state = StateVector(spec.n_sys,
                        np.full(spec.N, 1.0 / math.sqrt(spec.N), dtype=np.complex128))
    qft_inv = circuits.build_qft(range(spec.n_sys), inverse=True)
    ell = spec.momenta.astype(float)
    var_q = []
    for t_now in range(t + 1):
        mom = state.copy()
        qft_inv.apply_to(mom)
        p = mom.probabilities()
        mean = float(p @ ell)
        var_q.append(float(p @ (ell - mean) ** 2) * spec.hbar**2)
        if t_now < t:
            step.apply_to(state)

    # classical ensemble with the matching initial condition
    stream = Stream(seed + 5)
    theta0 = stream.uniform_block(params["orbits"], -math.pi, math.pi)
    cl = oracle.evolve_standard_map(np.zeros(params["orbits"]), theta0, t, spec.K)
    ts = np.arange(t + 1)
    man.add_output(outputs.write_csv(
        os.path.join(out_dir, "variance.csv"), ["t", "var_I_quantum", "var_I_classical"],
        list(zip(ts, var_q, cl["var_I"]))))
    ratio = var_q[-1] / cl["var_I"][-1]
    man.record("result_variance_ratio_at_end", ratio)
    man.record("result_classical_params", maps.classical_standard_map_params(spec).note)
    man.write(out_dir)
    return {"ratio": float(ratio), "var_quantum": np.asarray(var_q),
            "var_classical": cl["var_I"]}


# -- verify ----------------------------------------------------------------------


def run_verify(params: dict, out_dir: str) -> dict:
    """Oracle-equivalence and invariant checks; each line one check."""
    from . import verification

    man = outputs.Manifest("verify", params)
    checks = verification.run_all(seed=params["seed"])
    rows = [(c.name, "PASS" if c.ok else "FAIL", c.measured, c.expected) for c in checks]
    man.add_output(outputs.write_csv(
        os.path.join(out_dir, "verify_report.csv"),
        ["check", "status", "measured", "expected"], rows))
    failures = [c for c in checks if not c.ok]
    man.record("result_checks", len(checks))
    man.record("result_failures", len(failures))
    man.write(out_dir)
    return {"checks": checks, "failures": failures}


RUNNERS = {
    "fig1": run_fig1,
    "fig2": run_fig2,
    "fig3": run_fig3,
    "fig4": run_fig4,
    "scaling-fidelity": run_scaling_fidelity,
    "scaling-gamma": run_scaling_gamma,
    "localization": run_localization,
    "verify": run_verify,
}


def run_experiment(experiment: str, overrides: dict | None = None,
                   out_dir: str = ".") -> dict:
    params = resolve_config(experiment, overrides)
    os.makedirs(out_dir, exist_ok=True)
    return RUNNERS[experiment](params, out_dir)
