import numpy as np

from biastomo.fock import DensityMatrix, DimensionPolicy
from biastomo.povm import build_elements, grid_plan
from biastomo.simulate import ExperimentPlan, counts_array, simulate_counts

TOY_PLANS = {
    2: ([0.3, 0.5j, -0.4 + 0.2j], [0.3, 0.7]),
    3: ([0.3, 0.5j, -0.4 + 0.2j, 0.6, -0.5j], [0.2, 0.5, 0.8]),
}


def toy_problem(dim, seed, trials=2000):
    """Random full-rank truth, sampled counts, and elements for a small plan."""
    gammas, nus = TOY_PLANS[dim]
    settings = grid_plan(gammas, nus, trials)
    pol = DimensionPolicy.for_gammas(dim, gammas)
    elements = build_elements(settings, pol)
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    m = x @ x.conj().T
    truth = DensityMatrix(m / np.trace(m).real)
    counts = counts_array(simulate_counts(truth, ExperimentPlan(settings, pol, seed), elements))
    return elements, counts, truth
