"""Pure-numpy kernels. Same contract as the compiled ``_kernels`` module."""
import math

import numpy as np

STATUS_MAX_ITER = 0
STATUS_CONVERGED = 1
STATUS_NONMONOTONE = 2
STATUS_ZERO_PROB = 3


def _probs(at, rho):
    return np.real(np.einsum("jab,ba->j", at, rho))


def _delta(at, counts, total, p, s, d):
    dp = np.real(np.einsum("jab,ba->j", at, d))
    ds = dp.sum()
    mask = counts > 0
    return float(np.sum(counts[mask] * np.log1p(dp[mask] / p[mask])) - total * math.log1p(ds / s))


def em_loop(at, counts, rho, btb, max_iter, tol, eps0, mono_tol):
    """Fixed-point iteration ``rho <- (I+E) rho (I+E)`` in the whitened basis.

    ``at`` holds the whitened POVM elements, ``rho`` the starting point
    (normalized so that ``Tr[btb rho] = 1``). ``E = sum_j (w_j - 1) at_j``
    with ``w_j = (S/T)(N_j/p_j)``. Any likelihood decrease damps the step to
    ``s E`` with ``s = eps/(1+eps)``, halving ``eps`` until the change is
    above ``-mono_tol``. Damping on tiny decreases matters: the undamped map
    can sit on a 2-cycle whose drops are far below ``mono_tol``.

    Returns ``(rho, trace, iterations, status)``.
    """
    at = np.ascontiguousarray(at, dtype=complex)
    counts = np.ascontiguousarray(counts, dtype=float)
    rho = np.array(rho, dtype=complex)
    total = counts.sum()
    pos = counts > 0

    p = _probs(at, rho)
    if np.any(p[pos] <= 0):
        return rho, np.array([-np.inf]), 0, STATUS_ZERO_PROB
    s = p.sum()
    trace = [float(np.sum(counts[pos] * np.log(p[pos] / s)))]
    status = STATUS_MAX_ITER
    it = 0
    while it < max_iter:
        wm1 = np.full_like(p, -1.0)
        wm1[pos] = (s * counts[pos] - total * p[pos]) / (total * p[pos])
        e = np.tensordot(wm1, at, axes=1)
        er = e @ rho
        d = er + er.conj().T + er @ e
        delta = _delta(at, counts, total, p, s, d)
        if delta < 0.0:
            eps = eps0
            while True:
                scale = eps / (1.0 + eps)
                es = scale * e
                er = es @ rho
                d = er + er.conj().T + er @ es
                delta = _delta(at, counts, total, p, s, d)
                if delta >= -mono_tol:
                    break
                eps *= 0.5
                if eps < 1e-15:
                    return rho, np.array(trace), it, STATUS_NONMONOTONE
        rho = rho + d
        rho = 0.5 * (rho + rho.conj().T)
        rho /= np.real(np.sum(btb.T * rho))
        it += 1
        p = _probs(at, rho)
        if np.any(p[pos] <= 0):
            return rho, np.array(trace), it, STATUS_ZERO_PROB
        s = p.sum()
        trace.append(trace[-1] + delta)
        if abs(delta) < tol:
            status = STATUS_CONVERGED
            break
    return rho, np.array(trace), it, status


def rl_loop(c, f, r, iters):
    """Multiplicative EM for ``f_v ~ sum_n c[v, n] r_n``, batched over rows of ``f``.

    ``r`` is updated in place and returned.
    """
    c = np.ascontiguousarray(c, dtype=float)
    f = np.ascontiguousarray(f, dtype=float)
    colsum = c.sum(axis=0)
    for _ in range(int(iters)):
        p = r @ c.T
        ratio = np.divide(f, p, out=np.zeros_like(f), where=p > 0)
        r *= (ratio @ c) / colsum
    return r
