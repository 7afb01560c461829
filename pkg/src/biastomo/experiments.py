"""Preset measurement plans for the three reference experiments."""
from __future__ import annotations

import cmath
import math

import numpy as np

from .fock import DensityMatrix, DimensionPolicy
from .povm import grid_plan, split_trials
from .wigner import GridSpec

FIG1_PANELS = {
    # panel: (re range, im range)
    "a": ((-2.0, 2.0), (-2.0, 2.0)),
    "b": ((-2.0, 2.0), (-2.0, 2.0)),
    "c": ((-1.0, 1.0), (0.0, 0.0)),
    "d": ((1.0, 1.01), (0.0, 0.0)),
}

FIG2_GAMMAS = [complex(re, im) for re, im in
               zip((-0.2, -0.1, 0.0, 0.1, 0.2), (0.1, -0.5, 0.0, 0.5, 0.1))]
FIG2_PHASE = 0.5
COHERENT_ALPHA = cmath.exp(1j * math.pi / 4)


def efficiencies(num: int, lo: float = 0.1, hi: float = 0.9) -> np.ndarray:
    return np.linspace(lo, hi, num)


def fig1_gammas(panel: str, n_points: int) -> list[complex]:
    """``n_points`` probe shifts for a panel; 2D panels use a square lattice."""
    (re0, re1), (im0, im1) = FIG1_PANELS[panel]
    if im0 == im1:
        return [complex(x, im0) for x in np.linspace(re0, re1, n_points)]
    side = int(round(math.sqrt(n_points)))
    if side * side != n_points:
        raise ValueError("2D panels need a square number of points")
    return [complex(x, y) for x in np.linspace(re0, re1, side) for y in np.linspace(im0, im1, side)]


def fig1_plan(panel: str, n_points: int, n_eff: int = 10):
    gammas = fig1_gammas(panel, n_points)
    return grid_plan(gammas, efficiencies(n_eff)), DimensionPolicy.for_gammas(15, gammas)


def fig2_state(n_tr: int = 5) -> DensityMatrix:
    return DensityMatrix.superposition([(0, 1.0), (2, cmath.exp(1j * FIG2_PHASE))], n_tr)


def fig2_plan(total: int = 10**7, n_eff: int = 20, n_tr: int = 5, gammas=None):
    gammas = FIG2_GAMMAS if gammas is None else gammas
    nus = efficiencies(n_eff)
    settings = grid_plan(gammas, nus, split_trials(total, len(gammas) * len(nus)))
    return settings, DimensionPolicy.for_gammas(n_tr, gammas)


def fig3_state(n_tr: int = 12) -> DensityMatrix:
    return DensityMatrix.coherent(COHERENT_ALPHA, n_tr)


def fig3_grid(n: int = 50, half_width: float = 2.0) -> GridSpec:
    return GridSpec.centered(COHERENT_ALPHA, half_width, n)
