"""Classical ground-truth dynamics and dense reconstruction."""

import math

import numpy as np
import pytest

from qchaos.circuits import Circuit, build_qft
from qchaos.oracle import (
    OrbitEnsemble,
    PerturbationSpec,
    cat_map_points,
    circular_second_moment,
    dense_unitary,
    dft_matrix,
    evolve_cat_exact,
    evolve_cat_float,
    evolve_standard_map,
    lyapunov_estimate,
    lyapunov_from_orbits,
    strip_ensemble,
)
from qchaos.rng import Stream
from qchaos.state import GateOp

H_CAT = math.log((3.0 + math.sqrt(5.0)) / 2.0)


# -- exact lattice map -----------------------------------------------------------


def test_cat_exact_single_point():
    # n=2, L=1: (x=1, y=2) -> (0, 3)
    i, j = cat_map_points([1], [2], 1, 2, 1)
    assert (i[0], j[0]) == (0, 3)


def test_cat_exact_inverse_roundtrip():
    stream = Stream(6)
    n, L = 5, 4
    mask = stream.uniform_block((1 << n) * (L << n)).reshape(1 << n, L << n) < 0.2
    back = evolve_cat_exact(evolve_cat_exact(mask, 13, n, L), 13, n, L, "inverse")
    assert np.array_equal(back, mask)


def test_cat_exact_bijection_and_full_lattice():
    n, L = 4, 2
    full = np.ones((1 << n, L << n), dtype=bool)
    assert np.array_equal(evolve_cat_exact(full, 7, n, L), full)
    stream = Stream(7)
    mask = stream.uniform_block((1 << n) * (L << n)).reshape(1 << n, L << n) < 0.3
    image = evolve_cat_exact(mask, 29, n, L)
    assert image.sum() == mask.sum()


def test_cat_exact_bad_direction():
    with pytest.raises(ValueError):
        evolve_cat_exact(np.ones((4, 4), bool), 1, 2, 1, "sideways")


# -- float ensembles --------------------------------------------------------------


def test_float_reversal_exact_without_perturbation():
    ens = strip_ensemble(20000, 4, seed=3)
    res = evolve_cat_float(ens, 15, 15, PerturbationSpec(0.0))
    assert res["y2"][-1] < 1e-18  # double round-off only
    assert res["return_overlap"] == 1.0


def test_float_matches_exact_lattice_points():
    # dyadic starting points follow the integer map with no round-off at all
    n, L = 8, 2
    stream = Stream(9)
    i0 = (stream.uniform_block(500, 0, 1 << n)).astype(np.int64)
    j0 = (stream.uniform_block(500, 0, L << n)).astype(np.int64)
    ens = OrbitEnsemble(i0 / (1 << n), j0 / (1 << n), L)
    for _ in range(30):
        ens.y = (ens.y + ens.x) % L
        ens.x = (ens.x + ens.y) % 1.0
    i, j = cat_map_points(i0, j0, 30, n, L)
    np.testing.assert_array_equal(np.round(ens.x * (1 << n)).astype(int) % (1 << n), i)
    np.testing.assert_array_equal(np.round(ens.y * (1 << n)).astype(int) % (L << n), j)


def test_recovery_breakdown_delay():
    # minima of <y^2> after reversal separate by ln(1e4)/h for eps 1e-4 vs 1e-8
    t_rev, t_total = 20, 55
    mins = {}
    for eps in (1e-4, 1e-8):
        ens = strip_ensemble(300000, 4, seed=5)
        res = evolve_cat_float(ens, t_rev, t_total - t_rev, PerturbationSpec(eps, seed=8))
        post = res["y2"][t_rev:]
        mins[eps] = t_rev + int(np.argmin(post))
    delay = mins[1e-8] - mins[1e-4]
    assert abs(delay - math.log(1e4) / H_CAT) <= 3.0


def test_perturbation_every_step_spreads():
    ens = strip_ensemble(5000, 4, seed=2)
    res = evolve_cat_float(ens, 10, 10, PerturbationSpec(0.01, "every_step", seed=3))
    assert res["return_overlap"] < 0.9


def test_perturbation_validation():
    with pytest.raises(ValueError):
        PerturbationSpec(-0.1)
    with pytest.raises(ValueError):
        PerturbationSpec(0.1, "sometimes")


def test_circular_second_moment():
    L = 8.0
    assert circular_second_moment(np.full(10, 3.0), L) == pytest.approx(0.0)
    # two symmetric deltas at +-d around any center
    d = 1.25
    y = np.array([6.0 - d, 6.0 + d])
    assert circular_second_moment(y, L) == pytest.approx(d * d)
    # drift immunity: shifting every point leaves the moment unchanged
    y = Stream(4).uniform_block(1000, 2.0, 3.0)
    base = circular_second_moment(y, L)
    assert circular_second_moment((y + 5.5) % L, L) == pytest.approx(base, abs=1e-9)


# -- Lyapunov ----------------------------------------------------------------------


def test_lyapunov_exact_value():
    assert lyapunov_estimate() == pytest.approx(H_CAT, abs=1e-12)
    assert abs(lyapunov_estimate() - 1.0) < 0.05  # h is about 1


def test_lyapunov_from_orbit_divergence():
    assert lyapunov_from_orbits(t=20) == pytest.approx(0.96, abs=0.05)


# -- standard map -----------------------------------------------------------------


def test_standard_map_integrable_limit():
    stream = Stream(5)
    I0 = stream.uniform_block(1000, -1, 1)
    res = evolve_standard_map(I0, stream.uniform_block(1000, -math.pi, math.pi), 50, 0.0)
    np.testing.assert_allclose(res["var_I"], res["var_I"][0], rtol=1e-12)


def test_standard_map_chaotic_diffusion():
    stream = Stream(6)
    theta = stream.uniform_block(100000, -math.pi, math.pi)
    res = evolve_standard_map(np.zeros(100000), theta, 500, 5.0)
    slope = np.polyfit(np.arange(100, 501), res["var_I"][100:], 1)[0]
    assert abs(slope - 12.5) / 12.5 < 0.3  # quasilinear estimate K^2/2


def test_standard_map_below_threshold_bounded():
    stream = Stream(7)
    theta = stream.uniform_block(2000, -math.pi, math.pi)
    res = evolve_standard_map(np.zeros(2000), theta, 10000, 0.5)
    assert res["var_I"].max() < 1.0  # no unbounded growth for K < 1


def test_standard_map_trajectories_flag():
    res = evolve_standard_map(np.zeros(3), np.array([0.1, 0.2, 0.3]), 5, 1.0,
                              keep_trajectories=True)
    assert len(res["trajectories"]) == 6


# -- dense unitary ----------------------------------------------------------------


def test_dense_identity_and_hadamard():
    ident = Circuit(2, ())
    np.testing.assert_allclose(dense_unitary(ident), np.eye(4))
    h = Circuit(1, (GateOp("H", (0,)),))
    np.testing.assert_allclose(dense_unitary(h),
                               np.array([[1, 1], [1, -1]]) / math.sqrt(2), atol=1e-15)


def test_dense_qft_vs_dft():
    U = dense_unitary(build_qft(range(4)))
    assert np.abs(U - dft_matrix(4)).max() < 1e-10


def test_dense_cap():
    with pytest.raises(ValueError):
        dense_unitary(Circuit(13, ()), cap=12)
