"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy
fallback.  Set ``POLARITON_KERNELS=python`` to force the fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("POLARITON_KERNELS", "").lower() != "python":
    try:
        from . import _kernels as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py


def secular_sandwich(X, cluster, rates):
    return _impl.secular_sandwich(X.astype(complex), cluster.astype("l"), rates.astype(float))


def rk4_run(M0, Mp, Mm, v, t0, dt, nsteps, omega):
    return _impl.rk4_run(M0, Mp, Mm, v, float(t0), float(dt), int(nsteps), float(omega))
