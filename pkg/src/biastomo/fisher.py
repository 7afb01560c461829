"""Element-wise Fisher information and error bars for reconstructed density matrices.

Each real coordinate ``Re rho_mn`` (all m, n) and ``Im rho_mn`` (m != n) is
treated as a free parameter; the conjugate entry moves with it so the
perturbed matrix stays Hermitian. No trace or positivity constraint is
projected out.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ProbabilityError, TomographyError
from .fock import DensityMatrix
from .povm import PovmElement, probabilities


def dprob(element: PovmElement, m: int, n: int, part: str) -> float:
    """Derivative of ``Tr[A rho]`` with respect to ``Re rho_mn`` or ``Im rho_mn``."""
    a = element.matrix
    dim = a.shape[0]
    if not (0 <= m < dim and 0 <= n < dim):
        raise IndexError(f"({m}, {n}) outside dimension {dim}")
    if part == "re":
        return float(a[m, m].real) if m == n else float(2 * a[m, n].real)
    if part == "im":
        if m == n:
            raise ValueError("Im rho_mm is not a parameter")
        return float(2 * a[m, n].imag)
    raise ValueError(f"part must be 're' or 'im', got {part!r}")


def _derivative_tables(elements):
    a = np.stack([e.matrix for e in elements])
    d_re = 2 * a.real
    idx = np.arange(a.shape[1])
    d_re[:, idx, idx] = a[:, idx, idx].real
    d_im = 2 * a.imag
    d_im[:, idx, idx] = 0.0
    return d_re, d_im


def _fisher_from(p: np.ndarray, dp: np.ndarray) -> np.ndarray:
    # dp has the setting index first; trailing axes are parameters
    s = p.sum()
    q = p / s
    dq = (dp - q.reshape((-1,) + (1,) * (dp.ndim - 1)) * dp.sum(axis=0)) / s
    weight = (s / p).reshape((-1,) + (1,) * (dp.ndim - 1))
    return np.sum(weight * dq**2, axis=0)


def _probs(rho, elements):
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho)
    p = probabilities(m, elements)
    if np.any(p <= 0):
        raise ProbabilityError("Fisher information needs every probability > 0")
    return p


def fisher_information(rho, elements: Sequence[PovmElement], m: int, n: int, part: str) -> float:
    p = _probs(rho, elements)
    dp = np.array([dprob(e, m, n, part) for e in elements])
    return float(_fisher_from(p, dp))


@dataclass(frozen=True, eq=False)
class VarianceTable:
    """Standard deviations ``(F * n_mes)**-1/2``.

    ``sigma_re[m, n]`` and ``sigma_im[m, n]`` are filled for every index pair
    where the parameter exists; ``sigma_im`` has NaN on the diagonal.
    Infinite entries have zero Fisher information.
    """

    sigma_re: np.ndarray
    sigma_im: np.ndarray
    n_mes: float

    @property
    def dim(self) -> int:
        return self.sigma_re.shape[0]

    @property
    def unresolved(self) -> list[tuple[str, int, int]]:
        out = []
        for part, tab in (("re", self.sigma_re), ("im", self.sigma_im)):
            for m, n in zip(*np.nonzero(np.isinf(tab))):
                out.append((part, int(m), int(n)))
        return out

    def layout(self) -> np.ndarray:
        """Single matrix: Re sigmas on and above the diagonal, Im sigmas below."""
        upper = np.triu(np.ones_like(self.sigma_re, dtype=bool))
        return np.where(upper, self.sigma_re, self.sigma_im)

    def to_json(self) -> dict:
        dim = self.dim

        def cell(x):
            return None if not np.isfinite(x) else float(x)

        re = [[cell(self.sigma_re[m, n]) if m <= n else None for n in range(dim)] for m in range(dim)]
        im = [[cell(self.sigma_im[m, n]) if m > n else None for n in range(dim)] for m in range(dim)]
        return {
            "sigma_re": re,
            "sigma_im": im,
            "n_mes": self.n_mes,
            "unresolved": [list(u) for u in self.unresolved],
        }


def fisher_tables(rho, elements: Sequence[PovmElement]):
    """Fisher information for every Re and Im coordinate, as two dim x dim arrays."""
    p = _probs(rho, elements)
    d_re, d_im = _derivative_tables(elements)
    f_re = _fisher_from(p, d_re)
    f_im = _fisher_from(p, d_im)
    np.fill_diagonal(f_im, np.nan)
    return f_re, f_im


def _sigma(f: np.ndarray, n_mes: float) -> np.ndarray:
    out = np.full(f.shape, np.inf)
    ok = f > 0
    out[ok] = 1.0 / np.sqrt(f[ok] * n_mes)
    out[np.isnan(f)] = np.nan
    return out


def variance_table(rho, elements: Sequence[PovmElement], n_mes: float) -> VarianceTable:
    if not n_mes > 0:
        raise TomographyError("n_mes must be positive")
    f_re, f_im = fisher_tables(rho, elements)
    return VarianceTable(_sigma(f_re, n_mes), _sigma(f_im, n_mes), float(n_mes))
