import math

import numpy as np
import pytest

from biastomo.errors import GridTooCoarse, TomographyError
from biastomo.experiments import COHERENT_ALPHA, efficiencies, fig2_state, fig3_grid, fig3_state
from biastomo.fock import DensityMatrix, DimensionPolicy
from biastomo.wigner import (
    TWO_OVER_PI,
    GridSpec,
    back_transform_diagonals,
    displaced_populations,
    grid_back_transform,
    parity_sum,
    point_probabilities,
    reconstruct_frequencies,
    reconstruct_point,
    response_matrix,
    run_grid,
    sigma_w,
    simulate_point_counts,
    wigner_coherent,
    wigner_true,
)

from conftest import random_density

NUS = efficiencies(30)


def test_vacuum_point_tends_to_two_over_pi(backend):
    ws = [reconstruct_point(0, [1000] * 30, [1000] * 30, NUS, 12, its, backend).w
          for its in (1000, 10_000, 100_000)]
    assert ws[0] == pytest.approx(TWO_OVER_PI, abs=1e-2)
    assert abs(ws[2] - TWO_OVER_PI) < abs(ws[1] - TWO_OVER_PI) < abs(ws[0] - TWO_OVER_PI)
    assert ws[2] == pytest.approx(TWO_OVER_PI, abs=1e-3)


def test_single_photon_point_tends_to_minus_two_over_pi():
    f = (1 - NUS)[None, :]
    w = [parity_sum(reconstruct_frequencies(f, NUS, 12, its))[0] for its in (1000, 100_000)]
    assert w[1] < w[0] < 0
    assert w[1] == pytest.approx(-TWO_OVER_PI, abs=1e-3)


def test_point_invariants():
    pt = reconstruct_point(0.3, [900, 700, 500], [1000] * 3, [0.2, 0.5, 0.8], 6, 200)
    assert np.all(pt.r_values >= 0)
    assert pt.w == pytest.approx(parity_sum(pt.r_values))
    assert pt.deficit == pytest.approx(1 - pt.r_values.sum())


def test_backends_agree():
    from biastomo import _backend
    if len(_backend.BACKENDS) < 2:
        pytest.skip("compiled kernels not built")
    f = np.random.default_rng(0).uniform(0.2, 1.0, (7, 30))
    a, b = (reconstruct_frequencies(f, NUS, 12, 300, name) for name in _backend.BACKENDS)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-15)


def test_point_errors():
    with pytest.raises(TomographyError):
        reconstruct_point(0, [5, 5], [10, 10], [0.5, 0.5], 4)
    with pytest.raises(TomographyError):
        reconstruct_point(0, [0, 0], [10, 10], [0.2, 0.5], 4)
    with pytest.raises(ValueError):
        reconstruct_point(0, [5, 5], [10, 10], [0.2, 0.5], 4, iterations=0)
    # non-strict batches let empty rows collapse to zero
    r = reconstruct_frequencies(np.zeros((1, 2)), [0.2, 0.5], 4, 10, strict=False)
    assert np.all(r == 0)


def test_wigner_true_examples():
    assert wigner_true(DensityMatrix.fock(0, 4), 0) == pytest.approx(TWO_OVER_PI, abs=1e-15)
    assert wigner_true(fig2_state(), 0) == pytest.approx(TWO_OVER_PI, abs=1e-15)
    assert wigner_true(DensityMatrix.fock(1, 4), 0) == pytest.approx(-TWO_OVER_PI, abs=1e-15)
    # the 12-level truncation of |alpha> shifts W by a few 1e-6 away from alpha
    rho = fig3_state()
    for g in (0, 0.5 - 1j, 1.7 + 0.2j, 3):
        assert wigner_true(rho, g) == pytest.approx(float(wigner_coherent(COHERENT_ALPHA, g)), abs=1e-5)


def test_wigner_true_padding_refinement():
    rng = np.random.default_rng(8)
    for _ in range(10):
        rho = DensityMatrix(random_density(rng, 6))
        g = complex(*rng.uniform(-2, 2, 2))
        base = wigner_true(rho, g, DimensionPolicy.for_gammas(6, [g]))
        fine = parity_sum(displaced_populations(rho, g, 120))
        assert base == pytest.approx(fine, abs=1e-8)


def test_response_matrix_and_probabilities():
    c = response_matrix([0.5, 1.0], 3)
    assert np.array_equal(c, [[1, 0.5, 0.25], [1, 0, 0]])
    p = point_probabilities(fig3_state(), [0.2], [0.3, 0.6])
    assert np.allclose(p, np.exp(-np.array([0.3, 0.6]) * abs(COHERENT_ALPHA - 0.2) ** 2), atol=1e-12)


def test_simulated_counts_deterministic():
    p = np.full((3, 4), 0.4)
    a = simulate_point_counts(p, [100] * 4, 5)
    assert np.array_equal(a, simulate_point_counts(p, [100] * 4, 5))
    assert not np.array_equal(a, simulate_point_counts(p, [100] * 4, 6))
    assert np.array_equal(simulate_point_counts(np.ones((2, 4)), [100] * 4, 0), np.full((2, 4), 100))


def test_sigma_w_scaling():
    r = reconstruct_frequencies(np.exp(-NUS)[None, :], NUS, 12, 200)
    s1 = sigma_w(r, NUS, [1000] * 30)
    s4 = sigma_w(r, NUS, [4000] * 30)
    assert s1[0] > 0
    assert s4[0] == pytest.approx(s1[0] / 2, rel=1e-6)


def test_back_transform_vacuum_round_trip():
    grid = GridSpec(-3, 3, 61, -3, 3, 61)
    d = grid_back_transform(grid, wigner_coherent(0, grid.points()), 8)
    assert np.max(np.abs(d - np.eye(8)[0])) <= 1e-2


def test_back_transform_coherent_is_poisson():
    grid = fig3_grid()
    d = grid_back_transform(grid, wigner_coherent(COHERENT_ALPHA, grid.points()), 10)
    poisson = [math.exp(-1) / math.factorial(k) for k in range(10)]
    assert np.max(np.abs(d - poisson)) <= 1e-2
    assert abs(d.sum() - 1) <= 5e-2


def test_round_trip_error_shrinks_with_refinement():
    errs = []
    for n in (7, 9, 17, 25):
        grid = GridSpec(-3, 3, n, -3, 3, n)
        d = grid_back_transform(grid, wigner_coherent(0, grid.points()), 12, check=False)
        errs.append(abs(d.sum() - 1))
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert errs[-1] <= 5e-2


def test_coarse_grid_rejected():
    grid = GridSpec(-3, 3, 7, -3, 3, 7)
    with pytest.raises(GridTooCoarse):
        grid_back_transform(grid, np.zeros(grid.size), 4)


def test_negative_values_survive_back_transform():
    grid = GridSpec(-3, 3, 61, -3, 3, 61)
    w = np.array([wigner_true(DensityMatrix.fock(1, 4), g) for g in grid.points()])
    d = back_transform_diagonals(grid.points(), -w, grid.cell_area, 4)
    assert d[1] == pytest.approx(-1, abs=1e-2)


def test_grid_spec():
    g = GridSpec()
    assert g.size == 2500
    pts = g.points()
    assert pts[0] == -2 - 2j and pts[1] == complex(-2, -2 + 4 / 49)
    assert g.cell_area == pytest.approx((4 / 49) ** 2)
    assert GridSpec(0, 0, 1, 0, 0, 1).cell_area == 1.0
    with pytest.raises(ValueError):
        GridSpec(n_re=0)


def test_run_grid_small():
    grid = GridSpec.centered(COHERENT_ALPHA, 1.0, 5)
    run = run_grid(fig3_state(), grid, NUS, 12, 10_000, seed=3, iterations=1000)
    assert run.gammas.shape == (25,) and run.r_values.shape == (25, 12)
    assert np.all(run.r_values >= 0)
    assert np.all(np.abs(run.w_reconstructed) <= TWO_OVER_PI * run.r_values.sum(1) + 1e-12)
    assert run.diagonals is None and "vacuum" in run.grid_error
    csv = run.to_csv("config abc")
    lines = csv.splitlines()
    assert lines[0] == "# config abc"
    assert lines[1] == "gamma_re,gamma_im,w_reconstructed,w_true,deficit"
    assert len(lines) == 27
    again = run_grid(fig3_state(), grid, NUS, 12, 10_000, seed=3, iterations=1000)
    assert again.to_csv("config abc") == csv


def test_run_grid_noiseless_single_point():
    run = run_grid(DensityMatrix.fock(0, 12), GridSpec(0, 0, 1, 0, 0, 1), NUS, 12, None)
    assert run.w_true[0] == pytest.approx(TWO_OVER_PI)
    assert run.w_reconstructed[0] == pytest.approx(TWO_OVER_PI, abs=1e-2)
