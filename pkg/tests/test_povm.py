import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings as hsettings, strategies as st

from biastomo.errors import PlanError, ProbabilityError, TomographyError
from biastomo.experiments import fig1_plan, fig2_state
from biastomo.fock import DensityMatrix, DimensionPolicy
from biastomo.povm import (
    PovmElement,
    Setting,
    build_elements,
    build_povm_element,
    build_transfer_function,
    grid_plan,
    plan_from_json,
    plan_to_json,
    probability,
    split_trials,
)

# Fig. 2 plan spectrum from an independent extended-precision direct summation
# (45 padding levels, mpmath at 40 digits).
FIG2_G_SPECTRUM = [
    94.343205490271519,
    51.051452676795565,
    31.988646907124814,
    22.066285928926152,
    16.190230778732663,
]


def element(nu, gamma, n_tr=6):
    return build_povm_element(Setting(nu, gamma), DimensionPolicy.for_gammas(n_tr, [gamma]))


def test_gamma_zero_is_diagonal():
    a = element(0.3, 0).matrix
    assert np.allclose(a, np.diag(0.7 ** np.arange(6)), atol=1e-15)


def test_unit_efficiency_projects_on_vacuum():
    a = element(1.0, 0).matrix
    expect = np.zeros((6, 6))
    expect[0, 0] = 1
    assert np.allclose(a, expect, atol=1e-15)


def test_coherent_example():
    alpha, gamma, nu = 0.3 + 0.2j, 0.1, 0.4
    rho = DensityMatrix.coherent(alpha, 20)
    p = probability(rho, element(nu, gamma, 20))
    assert p == pytest.approx(math.exp(-nu * abs(alpha - gamma) ** 2), abs=1e-8)


def test_coherent_identity_random():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(60):
        alpha = 1.5 * math.sqrt(rng.uniform()) * cmath.exp(2j * math.pi * rng.uniform())
        gamma = 1.5 * math.sqrt(rng.uniform()) * cmath.exp(2j * math.pi * rng.uniform())
        nu = rng.uniform(0.05, 1.0)
        rho = DensityMatrix.coherent(alpha, 30)
        p = probability(rho, element(nu, gamma, 30))
        worst = max(worst, abs(p - math.exp(-nu * abs(alpha - gamma) ** 2)))
    assert worst <= 1e-7


@pytest.mark.parametrize("rho, nu, expect", [
    (DensityMatrix.fock(0, 4), 0.7, 1.0),
    (DensityMatrix.fock(1, 4), 0.5, 0.5),
    (fig2_state(), 0.5, 0.625),
])
def test_probability_examples(rho, nu, expect):
    assert probability(rho, element(nu, 0, rho.dim)) == pytest.approx(expect, abs=1e-14)


def test_probability_rejects_nonphysical():
    rho = DensityMatrix.fock(0, 2)
    bad = PovmElement(Setting(0.5, 0), np.diag([1.5, 0.0]))
    with pytest.raises(ProbabilityError):
        probability(rho, bad)
    with pytest.raises(TomographyError):
        probability(DensityMatrix.fock(0, 3), bad)


def test_insufficient_padding_detected():
    with pytest.raises(TomographyError):
        build_povm_element(Setting(0.05, 2.0), DimensionPolicy(20, 20))


@hsettings(max_examples=60, deadline=None)
@given(r=st.floats(0, 2), phi=st.floats(0, 2 * math.pi), nu=st.floats(0.05, 1.0))
def test_element_spectrum_in_unit_interval(r, phi, nu):
    w = np.linalg.eigvalsh(element(nu, r * cmath.exp(1j * phi), 8).matrix)
    assert w[0] >= -1e-8
    assert w[-1] <= 1 + 1e-8


def test_monotone_in_efficiency():
    nus = np.linspace(0.05, 1.0, 12)
    diags = [np.diag(element(nu, 0).matrix).real for nu in nus]
    for lo, hi in zip(diags, diags[1:]):
        assert np.all(lo >= hi)


def test_transfer_linearity():
    pol = DimensionPolicy.for_gammas(5, [0.5, 1j])
    p1 = grid_plan([0.5], [0.2, 0.6])
    p2 = grid_plan([1j, -0.3], [0.4])
    g1 = build_transfer_function(p1, pol).g
    g2 = build_transfer_function(p2, pol).g
    g12 = build_transfer_function(p1 + p2, pol).g
    # exact up to summation order
    assert np.max(np.abs(g12 - (g1 + g2))) <= 1e-14


def test_single_setting_spectrum():
    tf = build_transfer_function([Setting(0.5, 0)], DimensionPolicy.for_gammas(3, [0]))
    assert np.allclose(tf.eigenvalues, [1, 0.5, 0.25], atol=1e-15)
    assert tf.report() == {"eigenvalues": [1.0, 0.5, 0.25], "ratios": [1.0, 0.5, 0.25],
                           "kept": 3, "threshold": 1e-6}


def test_transfer_is_sum(fig2):
    g = sum(e.matrix for e in fig2["elements"])
    assert np.max(np.abs(fig2["tf"].g - g)) <= 1e-12


def test_fig2_golden_spectrum(fig2):
    assert np.allclose(fig2["tf"].eigenvalues, FIG2_G_SPECTRUM, rtol=1e-10, atol=0)
    assert fig2["tf"].ratios[-1] >= 1e-3


def test_fig1_panel_d_truncated_sum():
    settings, policy = fig1_plan("d", 5)
    tf = build_transfer_function(settings, policy, fock_sum="truncated")
    assert 1e-6 <= tf.ratios[-1] <= 1e-4


def test_fig1_panel_c_is_flatter():
    settings, policy = fig1_plan("c", 5)
    for mode in ("padded", "truncated"):
        assert build_transfer_function(settings, policy, fock_sum=mode).ratios[-1] >= 1e-3


def test_weighted_transfer_function():
    pol = DimensionPolicy.for_gammas(3, [0])
    tf = build_transfer_function([Setting(0.5, 0, 4)], pol, weighted=True)
    assert np.allclose(tf.eigenvalues, [4, 2, 1])


def test_trust_on_discarded_directions():
    pol = DimensionPolicy.for_gammas(4, [0])
    tf = build_transfer_function([Setting(1.0, 0)], pol)
    assert tf.kept_count == 1
    assert tf.trust(DensityMatrix.fock(0, 4)) == pytest.approx(0, abs=1e-15)
    assert tf.trust(DensityMatrix.fock(2, 4)) == pytest.approx(1, abs=1e-15)


def test_plan_errors():
    with pytest.raises(PlanError):
        Setting(0.0, 0)
    with pytest.raises(PlanError):
        Setting(0.5, 0, -1)
    with pytest.raises(PlanError):
        build_transfer_function([], DimensionPolicy(2, 12))
    with pytest.raises(PlanError):
        grid_plan([0], [0.5], [1, 2])
    with pytest.raises(PlanError):
        plan_from_json({"nu": 0.5})


def test_grid_plan_order_and_split():
    plan = grid_plan([0, 1j], [0.1, 0.9], split_trials(10, 4))
    assert [(s.gamma, s.nu, s.trials) for s in plan] == [
        (0, 0.1, 3), (0, 0.9, 3), (1j, 0.1, 2), (1j, 0.9, 2)]


def test_plan_json_round_trip():
    plan = grid_plan([0.1 - 0.5j, 0.2], [0.1, 0.3], 17)
    assert plan_from_json(plan_to_json(plan)) == plan


def test_element_order_follows_plan(fig2):
    rebuilt = build_elements(fig2["settings"][::-1], fig2["policy"])
    for a, b in zip(rebuilt, fig2["elements"][::-1]):
        assert np.array_equal(a.matrix, b.matrix)
