"""Truncated Fock-space numerics.

Operators are plain ``complex128`` numpy arrays indexed ``[m, n] = <m|X|n>``.
States that must satisfy the density-matrix invariants are wrapped in
:class:`DensityMatrix`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.special import eval_genlaguerre, gammaln

from .errors import DimensionPolicyError, NonHermitianError, TomographyError

MAX_GAMMA = 10.0
MAX_DIM = 256


def padding_for(gamma_abs: float) -> int:
    """Extra Fock levels needed to build a displacement of size ``gamma_abs``."""
    return int(math.ceil(4.0 * gamma_abs**2 + 10.0))


def default_work_dim(n_tr: int, gamma_abs: float) -> int:
    """Working dimension used when none is given.

    The minimum ``n_tr + padding_for`` leaves block errors near 1e-5 once
    ``n_tr`` reaches 15; another ``n_tr`` levels brings them to ~1e-12.
    """
    return 2 * n_tr + padding_for(gamma_abs)


@dataclass(frozen=True)
class DimensionPolicy:
    """Reconstruction dimension ``n_tr`` and padded working dimension ``n_work``.

    ``n_work`` is where displacements and POVM elements are built before
    being cut down to the top-left ``n_tr`` block.
    """

    n_tr: int
    n_work: int

    def __post_init__(self):
        if self.n_tr < 1:
            raise DimensionPolicyError(f"n_tr must be positive, got {self.n_tr}")
        if self.n_work < self.n_tr:
            raise DimensionPolicyError(f"n_work={self.n_work} < n_tr={self.n_tr}")
        if self.n_work > MAX_DIM:
            raise DimensionPolicyError(f"n_work={self.n_work} exceeds {MAX_DIM}")

    @classmethod
    def for_gammas(cls, n_tr: int, gammas: Iterable[complex], n_work: int | None = None):
        gmax = max((abs(complex(g)) for g in gammas), default=0.0)
        need = n_tr + padding_for(gmax)
        if n_work is None:
            n_work = min(default_work_dim(n_tr, gmax), max(MAX_DIM, need))
        elif n_work < need:
            raise DimensionPolicyError(
                f"n_work={n_work} too small for |gamma|={gmax:.3g}; need >= {need}")
        return cls(n_tr, n_work)

    def check(self, gamma: complex) -> None:
        need = self.n_tr + padding_for(abs(gamma))
        if self.n_work < need:
            raise DimensionPolicyError(
                f"n_work={self.n_work} too small for |gamma|={abs(gamma):.3g}; need >= {need}")


# ---------------------------------------------------------------------------
# displacement

def displacement_matrix(gamma: complex, dim: int) -> np.ndarray:
    """Exact Fock matrix elements of D(gamma) for indices ``0..dim-1``.

    Uses the associated-Laguerre closed form; every returned entry is the
    matrix element of the untruncated operator.
    """
    gamma = complex(gamma)
    x = abs(gamma) ** 2
    m = np.arange(dim)[:, None]
    n = np.arange(dim)[None, :]
    lo = np.minimum(m, n)
    hi = np.maximum(m, n)
    k = hi - lo
    with np.errstate(divide="ignore"):
        log_mag = 0.5 * (gammaln(lo + 1) - gammaln(hi + 1)) - 0.5 * x
        if gamma != 0:
            log_mag = log_mag + k * math.log(abs(gamma))
    lag = eval_genlaguerre(lo, k, x)
    if gamma == 0:
        return np.eye(dim, dtype=complex)
    # below the diagonal the phase follows gamma, above it follows -conj(gamma)
    phase_lo = np.exp(1j * k * np.angle(gamma))
    phase_hi = np.exp(1j * k * np.angle(-np.conj(gamma)))
    phase = np.where(m >= n, phase_lo, phase_hi)
    return np.exp(log_mag) * lag * phase


def displacement_operator(gamma: complex, policy: DimensionPolicy) -> np.ndarray:
    """D(gamma) in the padded working space (``n_work x n_work``)."""
    gamma = complex(gamma)
    if not np.isfinite(gamma) or abs(gamma) > MAX_GAMMA:
        raise DimensionPolicyError(f"|gamma|={abs(gamma):.3g} outside [0, {MAX_GAMMA}]")
    policy.check(gamma)
    return displacement_matrix(gamma, policy.n_work)


def number_phase(phi: float, dim: int) -> np.ndarray:
    """exp(i phi n) as a diagonal matrix."""
    return np.diag(np.exp(1j * phi * np.arange(dim)))


# ---------------------------------------------------------------------------
# Hermitian linear algebra

def is_hermitian(m: np.ndarray, rtol: float = 1e-10) -> bool:
    scale = max(np.linalg.norm(m), 1.0)
    return np.linalg.norm(m - m.conj().T) <= rtol * scale


@dataclass(frozen=True)
class HermitianEigensystem:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def hermitian_eig(m, rtol: float = 1e-10) -> HermitianEigensystem:
    """Eigensystem with eigenvalues descending.

    Ties keep the ascending order returned by LAPACK; each eigenvector's
    largest-magnitude component is made real and positive.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise TomographyError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise TomographyError("matrix has non-finite entries")
    if not is_hermitian(m, rtol):
        raise NonHermitianError("matrix is not Hermitian")
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    order = np.argsort(-w, kind="stable")
    w = w[order]
    v = v[:, order]
    idx = np.argmax(np.abs(v), axis=0)
    lead = v[idx, np.arange(v.shape[1])]
    v = v * (np.abs(lead) / lead)[None, :]
    return HermitianEigensystem(w, v)


def inv_sqrt_projected(g, rel_threshold: float = 1e-6):
    """Whitening map onto the dominant eigenspace of ``g``.

    Returns ``(B, k)`` with ``B`` of shape ``(n, k)`` and ``B^+ g B = I_k``;
    only eigenvalues above ``rel_threshold * lambda_max`` are kept.
    """
    if not 0 < rel_threshold < 1:
        raise ValueError("rel_threshold must lie in (0, 1)")
    eig = hermitian_eig(g)
    lam_max = eig.eigenvalues[0]
    if lam_max <= 0:
        raise TomographyError("transfer function has no positive eigenvalue")
    keep = eig.eigenvalues > rel_threshold * lam_max
    k = int(keep.sum())
    b = eig.eigenvectors[:, keep] / np.sqrt(eig.eigenvalues[keep])[None, :]
    return b, k


def psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    return (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T


# ---------------------------------------------------------------------------
# states

@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise TomographyError(f"density matrix must be square, got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise TomographyError("density matrix has non-finite entries")
        if not is_hermitian(m, 1e-12):
            raise NonHermitianError("density matrix is not Hermitian")
        tr = np.trace(m).real
        if abs(tr - 1) > 1e-10:
            raise TomographyError(f"density matrix trace {tr!r} != 1")
        if np.linalg.eigvalsh(m).min() < -1e-10:
            raise TomographyError("density matrix is not positive semidefinite")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_matrix(cls, m, normalize: bool = False) -> "DensityMatrix":
        m = np.asarray(m, dtype=complex)
        m = 0.5 * (m + m.conj().T)
        if normalize:
            m = m / np.trace(m).real
        return cls(m)

    @classmethod
    def from_ket(cls, psi) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls.from_matrix(np.outer(psi, psi.conj()))

    @classmethod
    def fock(cls, n: int, dim: int) -> "DensityMatrix":
        if not 0 <= n < dim:
            raise TomographyError(f"Fock level {n} outside dimension {dim}")
        psi = np.zeros(dim, complex)
        psi[n] = 1
        return cls.from_ket(psi)

    @classmethod
    def coherent(cls, alpha: complex, dim: int) -> "DensityMatrix":
        """Coherent state truncated to ``dim`` levels and renormalized."""
        n = np.arange(dim)
        alpha = complex(alpha)
        with np.errstate(divide="ignore"):
            logmag = n * (math.log(abs(alpha)) if alpha != 0 else -np.inf) - 0.5 * gammaln(n + 1)
        psi = np.exp(logmag - 0.5 * abs(alpha) ** 2) * np.exp(1j * n * np.angle(alpha))
        if alpha == 0:
            psi = np.zeros(dim, complex)
            psi[0] = 1
        return cls.from_ket(psi)

    @classmethod
    def superposition(cls, terms: Sequence[tuple[int, complex]], dim: int) -> "DensityMatrix":
        psi = np.zeros(dim, complex)
        for n, amp in terms:
            if not 0 <= n < dim:
                raise TomographyError(f"Fock level {n} outside dimension {dim}")
            psi[n] += amp
        if np.linalg.norm(psi) == 0:
            raise TomographyError("superposition has zero norm")
        return cls.from_ket(psi)

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityMatrix":
        return cls(np.eye(dim, dtype=complex) / dim)

    def embed(self, dim: int) -> np.ndarray:
        """Zero-pad to a larger Fock space."""
        out = np.zeros((dim, dim), complex)
        out[: self.dim, : self.dim] = self.matrix
        return out


def fidelity(a: DensityMatrix, b: DensityMatrix) -> float:
    """Uhlmann fidelity ``(Tr sqrt(sqrt(a) b sqrt(a)))**2``."""
    if a.dim != b.dim:
        raise TomographyError(f"dimension mismatch {a.dim} vs {b.dim}")
    sa = psd_sqrt(a.matrix)
    inner = sa @ b.matrix @ sa
    w = np.linalg.eigvalsh(0.5 * (inner + inner.conj().T))
    # rounding-level eigenvalues would otherwise add ~sqrt(eps) each
    w[w < 1e-13 * max(w.max(), 0.0)] = 0.0
    f = float(np.sum(np.sqrt(w)) ** 2)
    return min(max(f, 0.0), 1.0)


def trace_distance(a, b) -> float:
    a = a.matrix if isinstance(a, DensityMatrix) else np.asarray(a)
    b = b.matrix if isinstance(b, DensityMatrix) else np.asarray(b)
    d = a - b
    return 0.5 * float(np.abs(np.linalg.eigvalsh(0.5 * (d + d.conj().T))).sum())


# ---------------------------------------------------------------------------
# serialization

def matrix_to_json(m) -> dict:
    m = np.asarray(m.matrix if isinstance(m, DensityMatrix) else m, dtype=complex)
    return {
        "dim": int(m.shape[0]),
        "re": [[float(x) for x in row] for row in m.real],
        "im": [[float(x) for x in row] for row in m.imag],
    }


def matrix_from_json(obj: dict) -> np.ndarray:
    re = np.asarray(obj["re"], dtype=float)
    im = np.asarray(obj["im"], dtype=float)
    dim = int(obj["dim"])
    if re.shape != (dim, dim) or im.shape != (dim, dim):
        raise TomographyError(f"matrix payload does not match dim={dim}")
    return re + 1j * im
