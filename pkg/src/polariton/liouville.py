"""Superoperators of the time-local master equation d rho/dt = -(D + L_X + L_P + L_d(t)) rho.

All superoperators are dense N^2 x N^2 complex arrays acting on the
column-stacked density matrix in the H_S eigenbasis: position
``alpha*N + beta`` holds <beta|rho|alpha>.  In this layout the free
evolution D has entry -i(lambda_alpha - lambda_beta) at that position.
Stored generators carry the overall minus sign of the equation of motion,
i.e. a generator ``L`` contributes ``-L @ vec(rho)`` to d vec(rho)/dt.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .constants import K_B
from .model import (
    driving_operators,
    exciton_lowering,
    phonon_lowering,
    spectrum_of,
)

DEGENERACY_TOL = 1e-9  # eV; Bohr frequencies closer than this share a block


def vec(rho):
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v):
    N = int(round(np.sqrt(v.size)))
    return np.asarray(v).reshape((N, N), order="F")


def left(A):
    """Superoperator of rho -> A rho."""
    return np.kron(np.eye(A.shape[0]), A)


def right(B):
    """Superoperator of rho -> rho B."""
    return np.kron(B.T, np.eye(B.shape[0]))


def commutator(A):
    return left(A) - right(A)


def trace_functional(N):
    return vec(np.eye(N))


def apply(G, rho):
    """Apply a stored generator to a matrix: returns G(rho) as a matrix."""
    return unvec(G @ vec(rho))


def bose(x, beta):
    with np.errstate(over="ignore"):  # 1/inf -> 0 is the right limit
        return 1.0 / np.expm1(beta * x)


def free_evolution(spectrum):
    lam = spectrum.energies
    return np.diag(-1j * np.subtract.outer(lam, lam).ravel())


def bohr_clusters(energies, tol=DEGENERACY_TOL):
    """Group Bohr frequencies w[a, c] = E_c - E_a into blocks.

    Returns (cluster ids [N, N], mean frequency per id).  Sorted frequencies
    closer than ``tol`` are chained into one block.
    """
    w = np.subtract.outer(energies, energies).T  # w[a, c] = E_c - E_a
    flat = w.ravel()
    order = np.argsort(flat, kind="stable")
    ids = np.empty(flat.size, dtype=np.int64)
    jumps = np.diff(flat[order]) > tol
    ids[order] = np.concatenate([[0], np.cumsum(jumps)])
    centres = np.bincount(ids, weights=flat) / np.bincount(ids)
    return ids.reshape(w.shape), centres


def thermal_rates(freqs, Gamma, beta, tol=DEGENERACY_TOL):
    """Gamma(1 + n) for emission (w > 0), Gamma n for absorption, 0 at w = 0."""
    rates = np.zeros_like(freqs)
    down = freqs > tol
    up = freqs < -tol
    rates[down] = Gamma * (1 + bose(freqs[down], beta))
    rates[up] = Gamma * bose(-freqs[up], beta)
    return rates


def dissipator(spectrum, jump, Gamma, T_env):
    """Secular thermal relaxation generator for bath coupling jump + jump^dagger.

    Each Bohr-frequency component X(w) of the coupling relaxes with
    downward rate Gamma(1+n_B(w)) and upward rate Gamma n_B(|w|), so the
    Gibbs state of H_S is stationary.  Returned with the stored-generator sign.
    """
    if Gamma < 0:
        raise ValueError("damping rate must be >= 0")
    N = spectrum.N
    if Gamma == 0:
        return np.zeros((N * N, N * N), dtype=complex)
    beta = 1.0 / (K_B * T_env)
    X = spectrum.to_eigenbasis(jump + jump.conj().T)
    X[np.abs(X) < 1e-14] = 0
    cluster, freqs = bohr_clusters(spectrum.energies)
    rates = thermal_rates(freqs, Gamma, beta)
    sandwich = kernels.secular_sandwich(X, cluster, rates)
    gam = rates[cluster]
    # K = sum_w gamma(w) X(w)^dagger X(w)
    K = np.zeros((N, N), dtype=complex)
    for ident in np.unique(cluster[X != 0]):
        Xw = np.where(cluster == ident, X, 0)
        K += gam[cluster == ident][0] * Xw.conj().T @ Xw
    return -(sandwich - 0.5 * (left(K) + right(K)))


def filtered_operator(spectrum, Vd, omega_drive, eta, sigma):
    """F_sigma[a, b] = Vd[a, b] / (eta + i(E_a - E_b + sigma*omega'))."""
    lam = spectrum.energies
    return Vd / (eta + 1j * (np.subtract.outer(lam, lam) + sigma * omega_drive))


def driving_generators(spectrum, Vd, omega_drive, eta):
    """Second-order driving generators (A_plus, A_minus).

    ``Vd`` is the Hermitian driving operator in the eigenbasis.  The driving
    part of the generator is L_d(t) = f+(t) A_plus + f-(t) A_minus with
    f+-(t) = 2cos(w't) exp(+-i w't) and A_sigma rho = [Vd, [F_sigma, rho]].
    A_minus(rho) = A_plus(rho^dagger)^dagger, so the sum is Hermiticity
    preserving.
    """
    Vd = np.asarray(Vd)
    dev = np.abs(Vd - Vd.conj().T).max()
    if dev > 1e-10:
        raise ValueError(f"driving operator is not Hermitian (deviation {dev:.3g})")
    if eta <= 0:
        raise ValueError("eta must be > 0")
    comm_V = commutator(Vd)
    out = []
    for sigma in (1, -1):
        F = filtered_operator(spectrum, Vd, omega_drive, eta, sigma)
        out.append(comm_V @ commutator(F))
    return tuple(out)


@dataclass(frozen=True)
class GeneratorSet:
    D: np.ndarray
    L_X: np.ndarray
    L_P: np.ndarray
    dX: tuple  # (A_plus, A_minus) from A_X * X alone
    dP: tuple  # (A_plus, A_minus) from A_P * P alone
    A_plus: np.ndarray
    A_minus: np.ndarray
    omega_drive: float
    spectrum: object = None

    @property
    def A_o(self):
        return self.D + self.L_X + self.L_P

    def L_d(self, t, channel=None):
        """Driving generator at time t; channel 'X', 'P' or None for the total."""
        fp, fm = drive_factors(t, self.omega_drive)
        Ap, Am = {"X": self.dX, "P": self.dP, None: (self.A_plus, self.A_minus)}[channel]
        return fp * Ap + fm * Am

    def drive_image(self, t, rho, channel=None):
        """L_d(t) applied to the matrix rho, without forming L_d(t)."""
        fp, fm = drive_factors(t, self.omega_drive)
        Ap, Am = {"X": self.dX, "P": self.dP, None: (self.A_plus, self.A_minus)}[channel]
        v = vec(rho)
        return unvec(fp * (Ap @ v) + fm * (Am @ v))

    def full(self, t):
        return self.A_o + self.L_d(t)


def drive_factors(t, omega_drive):
    c = 2 * np.cos(omega_drive * t)
    return c * np.exp(1j * omega_drive * t), c * np.exp(-1j * omega_drive * t)


def assemble(spec, spectrum=None):
    if spectrum is None:
        spectrum = spectrum_of(spec)
    N = spectrum.N
    D = free_evolution(spectrum)
    L_X = dissipator(spectrum, exciton_lowering(spec.m_o), spec.Gamma_X, spec.T_env)
    L_P = dissipator(spectrum, phonon_lowering(spec.m_o), spec.Gamma_P, spec.T_env)
    Xop, Pop = driving_operators(spec.m_o)
    zero = np.zeros((N * N, N * N), dtype=complex)

    def channel(amp, op):
        if amp == 0:
            return zero, zero
        return driving_generators(spectrum, spectrum.to_eigenbasis(amp * op),
                                  spec.omega_drive, spec.linewidth)

    dX = channel(spec.A_X, Xop)
    dP = channel(spec.A_P, Pop)
    if spec.cross_terms and spec.A_X and spec.A_P:
        Vd = spectrum.to_eigenbasis(spec.A_X * Xop + spec.A_P * Pop)
        A_plus, A_minus = driving_generators(spectrum, Vd, spec.omega_drive, spec.linewidth)
    else:
        A_plus, A_minus = dX[0] + dP[0], dX[1] + dP[1]
    return GeneratorSet(D, L_X, L_P, dX, dP, A_plus, A_minus, spec.omega_drive, spectrum)
