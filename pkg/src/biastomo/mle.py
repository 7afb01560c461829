"""Maximum-likelihood reconstruction with the EM fixed-point iteration."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _backend
from ._kernels_py import STATUS_CONVERGED, STATUS_NONMONOTONE, STATUS_ZERO_PROB
from .errors import DataModelMismatch, TomographyError
from .fock import DensityMatrix, matrix_to_json
from .povm import PovmElement, TransferFunction, probabilities
from .simulate import counts_array


@dataclass(frozen=True)
class ReconstructionConfig:
    max_iterations: int = 10**6
    likelihood_tolerance: float = 1e-10
    rel_threshold: float = 1e-6
    dilution_epsilon: float = 0.1
    monotone_tolerance: float = 1e-9
    backend: str | None = None

    def __post_init__(self):
        for name in ("max_iterations", "likelihood_tolerance", "rel_threshold",
                     "dilution_epsilon", "monotone_tolerance"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True, eq=False)
class ReconstructionResult:
    rho: DensityMatrix
    rho_g: np.ndarray
    loglik_trace: np.ndarray
    iterations_used: int
    extremal_residual: float
    converged: bool
    kept: int
    g_eigenvalues: np.ndarray
    nonmonotone: bool = False

    @property
    def loglik(self) -> float:
        return float(self.loglik_trace[-1])

    def to_json(self, max_trace: int = 10_000) -> dict:
        """JSON payload; the likelihood trace is thinned to about ``max_trace`` entries."""
        trace = self.loglik_trace
        stride = max(1, -(-len(trace) // max_trace))
        kept = list(trace[::stride])
        if (len(trace) - 1) % stride:
            kept.append(trace[-1])
        return {
            "rho": matrix_to_json(self.rho),
            "loglik": [float(x) for x in kept],
            "loglik_stride": stride,
            "iterations": int(self.iterations_used),
            "residual": float(self.extremal_residual),
            "converged": bool(self.converged),
            "kept": int(self.kept),
            "g_eigenvalues": [float(x) for x in self.g_eigenvalues],
        }


def _counts(records) -> np.ndarray:
    if isinstance(records, np.ndarray):
        return records.astype(float)
    return counts_array(records)


def _aligned(records, elements):
    n = _counts(records)
    if len(n) != len(elements):
        raise TomographyError(f"{len(n)} records for {len(elements)} POVM elements")
    return n


def _rho_matrix(rho) -> np.ndarray:
    return rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)


def _checked_probs(rho, elements, n) -> np.ndarray:
    p = probabilities(_rho_matrix(rho), elements)
    bad = (n > 0) & (p <= 0)
    if bad.any():
        j = int(np.flatnonzero(bad)[0])
        raise DataModelMismatch(f"setting {j} has {n[j]} counts but probability {p[j]:.3g}")
    return p


def log_likelihood(rho, records, elements: Sequence[PovmElement]) -> float:
    """``sum_j N_j log(p_j / sum_k p_k)``."""
    n = _aligned(records, elements)
    p = _checked_probs(rho, elements, n)
    s = p.sum()
    pos = n > 0
    return math.fsum(n[pos] * np.log(p[pos] / s))


def r_operator(rho, records, elements: Sequence[PovmElement]) -> np.ndarray:
    n = _aligned(records, elements)
    p = _checked_probs(rho, elements, n)
    w = np.zeros_like(p)
    pos = n > 0
    w[pos] = (p.sum() / n.sum()) * n[pos] / p[pos]
    r = np.tensordot(w, np.stack([e.matrix for e in elements]), axes=1)
    return 0.5 * (r + r.conj().T)


def extremal_residual(rho, records, elements: Sequence[PovmElement]) -> float:
    """``||R rho - G rho||_F / ||G rho||_F``."""
    m = _rho_matrix(rho)
    g = sum(e.matrix for e in elements)
    r = r_operator(rho, records, elements)
    gr = g @ m
    return float(np.linalg.norm(r @ m - gr) / max(np.linalg.norm(gr), 1e-300))


def em_reconstruct(records, elements: Sequence[PovmElement], tf: TransferFunction,
                   config: ReconstructionConfig = ReconstructionConfig()) -> ReconstructionResult:
    """Solve the extremal equation on the kept eigenspace of G.

    Iterates from the maximally mixed point of the whitened space and maps
    back with ``rho = B rho_G B^+``, rescaled to unit trace.
    """
    n = _aligned(records, elements)
    if n.sum() <= 0:
        raise TomographyError("no counts recorded")
    b = tf.basis_map
    k = tf.kept_count
    if k < 1:
        raise TomographyError("empty reconstruction subspace")
    if b.shape[0] != elements[0].matrix.shape[0]:
        raise TomographyError("transfer function does not match the POVM dimension")
    bh = b.conj().T
    at = np.stack([bh @ e.matrix @ b for e in elements])
    btb = bh @ b
    rho0 = np.eye(k, dtype=complex) / np.trace(btb).real

    kern = _backend.get(config.backend)
    rho_g, trace, iters, status = kern.em_loop(
        at, n, rho0, btb, int(config.max_iterations), float(config.likelihood_tolerance),
        float(config.dilution_epsilon), float(config.monotone_tolerance))
    if status == STATUS_ZERO_PROB:
        raise DataModelMismatch("iterate assigns zero probability to an observed setting")
    nonmono = status == STATUS_NONMONOTONE
    if nonmono:
        warnings.warn(f"likelihood decrease not cured by dilution at iteration {iters}",
                      RuntimeWarning, stacklevel=2)
    rho = b @ rho_g @ bh
    rho = 0.5 * (rho + rho.conj().T)
    rho /= np.trace(rho).real
    dm = DensityMatrix(rho)
    return ReconstructionResult(
        rho=dm,
        rho_g=rho_g,
        loglik_trace=np.asarray(trace),
        iterations_used=int(iters),
        extremal_residual=extremal_residual(dm, n, elements),
        converged=status == STATUS_CONVERGED,
        kept=k,
        g_eigenvalues=tf.eigenvalues.copy(),
        nonmonotone=nonmono,
    )
