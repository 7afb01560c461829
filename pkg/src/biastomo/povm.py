"""On/off detector POVM with a coherent probe and the transfer function G."""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import PlanError, ProbabilityError, TomographyError
from .fock import (
    DensityMatrix,
    DimensionPolicy,
    HermitianEigensystem,
    displacement_matrix,
    displacement_operator,
    hermitian_eig,
    inv_sqrt_projected,
)

FOCK_SUMS = ("padded", "truncated")


@dataclass(frozen=True)
class Setting:
    """One measurement configuration: effective efficiency and probe shift."""

    nu: float
    gamma: complex
    trials: int = 0

    def __post_init__(self):
        if not 0 < self.nu <= 1:
            raise PlanError(f"efficiency nu={self.nu} outside (0, 1]")
        if self.trials < 0:
            raise PlanError(f"negative trial count {self.trials}")
        object.__setattr__(self, "gamma", complex(self.gamma))

    def to_json(self) -> dict:
        return {"nu": self.nu, "gamma_re": self.gamma.real,
                "gamma_im": self.gamma.imag, "trials": int(self.trials)}

    @classmethod
    def from_json(cls, obj: dict) -> "Setting":
        return cls(float(obj["nu"]), complex(obj["gamma_re"], obj["gamma_im"]),
                   int(obj.get("trials", 0)))


@dataclass(frozen=True, eq=False)
class PovmElement:
    setting: Setting
    matrix: np.ndarray


def build_povm_element(setting: Setting, policy: DimensionPolicy,
                       fock_sum: str = "padded") -> PovmElement:
    """No-count operator ``sum_n (1-nu)^n D|n><n|D^+`` on the first n_tr levels.

    ``fock_sum="padded"`` sums the Fock series up to ``policy.n_work`` before
    truncating, which reproduces the physical no-count probability.
    ``fock_sum="truncated"`` stops the series at ``n_tr`` as well; it is only
    kept to reproduce spectra computed that way.
    """
    nu, gamma = setting.nu, setting.gamma
    if fock_sum == "padded":
        d = displacement_operator(gamma, policy)
        dim = policy.n_work
    elif fock_sum == "truncated":
        d = displacement_matrix(gamma, policy.n_tr)
        dim = policy.n_tr
    else:
        raise ValueError(f"fock_sum must be one of {FOCK_SUMS}")
    weights = (1.0 - nu) ** np.arange(dim)
    full = (d * weights[None, :]) @ d.conj().T
    a = full[: policy.n_tr, : policy.n_tr]
    a = 0.5 * (a + a.conj().T)
    top = np.linalg.eigvalsh(a)[-1]
    if top > 1 + 1e-8:
        raise TomographyError(
            f"POVM element eigenvalue {top:.12g} > 1; working dimension too small")
    return PovmElement(setting, a)


def build_elements(settings: Sequence[Setting], policy: DimensionPolicy,
                   fock_sum: str = "padded") -> list[PovmElement]:
    return [build_povm_element(s, policy, fock_sum) for s in settings]


def probability(rho: DensityMatrix, element: PovmElement) -> float:
    a = element.matrix
    if a.shape != rho.matrix.shape:
        raise TomographyError(f"dimension mismatch {a.shape} vs {rho.matrix.shape}")
    p = float(np.real(np.sum(a.T * rho.matrix)))
    if p > 1 + 1e-9 or p < -1e-9:
        raise ProbabilityError(f"non-physical probability {p!r}")
    return min(max(p, 0.0), 1.0)


def probabilities(rho, elements: Sequence[PovmElement]) -> np.ndarray:
    """Vector of Tr[A_j rho] without clamping (``rho`` may be a raw matrix)."""
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho)
    stack = np.stack([e.matrix for e in elements])
    return np.real(np.einsum("jab,ba->j", stack, m))


@dataclass(frozen=True, eq=False)
class TransferFunction:
    g: np.ndarray
    spectrum: HermitianEigensystem
    basis_map: np.ndarray
    kept_count: int
    rel_threshold: float
    weighted: bool = False

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.spectrum.eigenvalues

    @property
    def ratios(self) -> np.ndarray:
        return self.eigenvalues / self.eigenvalues[0]

    def report(self) -> dict:
        return {
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "ratios": [float(x) for x in self.ratios],
            "kept": self.kept_count,
            "threshold": self.rel_threshold,
        }

    def trust(self, rho) -> float:
        """Weight of ``rho`` on the discarded eigen-directions of G.

        Large values mean the state lives where the measurement is blind.
        """
        m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho)
        v = self.spectrum.eigenvectors[:, self.kept_count:]
        return float(np.real(np.trace(v.conj().T @ m @ v)))


def transfer_from_elements(elements: Sequence[PovmElement], rel_threshold: float = 1e-6,
                           weighted: bool = False) -> TransferFunction:
    if not elements:
        raise PlanError("empty measurement plan")
    if weighted:
        g = sum(e.setting.trials * e.matrix for e in elements)
    else:
        g = sum(e.matrix for e in elements)
    g = 0.5 * (g + g.conj().T)
    spec = hermitian_eig(g)
    b, k = inv_sqrt_projected(g, rel_threshold)
    if k == 0:
        raise TomographyError("all eigenvalues of G below threshold")
    return TransferFunction(g, spec, b, k, rel_threshold, weighted)


def build_transfer_function(settings: Sequence[Setting], policy: DimensionPolicy,
                            rel_threshold: float = 1e-6, weighted: bool = False,
                            fock_sum: str = "padded") -> TransferFunction:
    if not settings:
        raise PlanError("empty measurement plan")
    return transfer_from_elements(build_elements(settings, policy, fock_sum),
                                  rel_threshold, weighted)


# ---------------------------------------------------------------------------
# plans

def grid_plan(gammas: Iterable[complex], nus: Iterable[float],
              trials: int | Sequence[int] = 0) -> list[Setting]:
    """All (gamma, nu) pairs, gamma-major."""
    gammas = [complex(g) for g in gammas]
    nus = [float(n) for n in nus]
    count = len(gammas) * len(nus)
    if np.ndim(trials) == 0:
        trials = [int(trials)] * count
    if len(trials) != count:
        raise PlanError("trial list length does not match the plan")
    it = iter(trials)
    return [Setting(nu, g, next(it)) for g in gammas for nu in nus]


def split_trials(total: int, count: int) -> list[int]:
    """Split ``total`` as evenly as possible, remainder to the first entries."""
    base, rem = divmod(int(total), count)
    return [base + (i < rem) for i in range(count)]


def plan_to_json(settings: Sequence[Setting]) -> str:
    return json.dumps([s.to_json() for s in settings], indent=1)


def plan_from_json(obj) -> list[Setting]:
    if isinstance(obj, str):
        obj = json.loads(obj)
    if not isinstance(obj, list):
        raise PlanError("plan must be a JSON array")
    return [Setting.from_json(o) for o in obj]
