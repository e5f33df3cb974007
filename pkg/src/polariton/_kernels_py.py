"""Pure-numpy implementations of the hot kernels.

These define the reference behaviour; ``_kernels`` (Cython) must agree with
them to rounding.
"""
import numpy as np


def secular_sandwich(X, cluster, rates):
    """Sum over Bohr-frequency blocks of rate * X(w) . X(w)^dagger as a superoperator.

    ``X[a, c]`` moves population c -> a, ``cluster[a, c]`` is the id of its
    Bohr frequency and ``rates[id]`` the corresponding rate.  Output acts on
    column-stacked vectors: entry [a + N*b, c + N*d] couples rho[c, d] to
    rho[a, b].
    """
    N = X.shape[0]
    out = np.zeros((N * N, N * N), dtype=complex)
    Y = X * rates[cluster]
    Xc = X.conj()
    nz_a, nz_c = np.nonzero(X)
    blocks = {}
    for a, c in zip(nz_a, nz_c):
        blocks.setdefault(cluster[a, c], []).append((a, c))
    for members in blocks.values():
        idx = np.array(members)
        a, c = idx[:, 0], idx[:, 1]
        rows = a[:, None] + N * a[None, :]
        cols = c[:, None] + N * c[None, :]
        # pair (a, c) with (b, d) from the same block
        np.add.at(out, (rows, cols), Y[a, c][:, None] * Xc[a, c][None, :])
    return out


def rk4_run(M0, Mp, Mm, v, t0, dt, nsteps, omega):
    """Classic RK4 for dv/dt = -(M0 + f+(t) Mp + f-(t) Mm) v.

    f+-(t) = 2 cos(omega t) exp(+-i omega t).
    """
    n = M0.shape[0]
    B = np.concatenate([M0, Mp, Mm], axis=0)
    v = np.array(v, dtype=complex)

    def rhs(t, y):
        c = 2 * np.cos(omega * t)
        fp = c * np.exp(1j * omega * t)
        fm = c * np.exp(-1j * omega * t)
        z = B @ y
        return -(z[:n] + fp * z[n:2 * n] + fm * z[2 * n:])

    t = t0
    for _ in range(nsteps):
        k1 = rhs(t, v)
        k2 = rhs(t + dt / 2, v + dt / 2 * k1)
        k3 = rhs(t + dt / 2, v + dt / 2 * k2)
        k4 = rhs(t + dt, v + dt * k3)
        v = v + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = t0 + (_ + 1) * dt
    return v
