"""Kernel selection: compiled extension when importable, numpy otherwise.

Set ``BIASTOMO_PURE_PYTHON=1`` to force the numpy kernels. With the
extension present the default takes ``em_loop`` from it and keeps the numpy
``rl_loop``: the batched Richardson-Lucy sweep is two BLAS matrix products,
which beat the compiled per-point loop (see ``benchmarks/bench_kernels.py``).
"""
import os
from types import SimpleNamespace

from . import _kernels_py

BACKENDS = {"python": _kernels_py}

if os.environ.get("BIASTOMO_PURE_PYTHON", "") in ("", "0"):
    try:
        from . import _kernels
        BACKENDS["cython"] = _kernels
    except ImportError:
        pass

if "cython" in BACKENDS:
    NAME = "cython"
    kernels = SimpleNamespace(em_loop=BACKENDS["cython"].em_loop, rl_loop=_kernels_py.rl_loop)
else:
    NAME = "python"
    kernels = _kernels_py


def get(name=None):
    if name is None:
        return kernels
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} not available; have {sorted(BACKENDS)}") from None
