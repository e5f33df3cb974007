"""Truncated anharmonic Jaynes-Cummings polariton: Hamiltonian, spectrum, operators.

Product basis |i, m> (exciton level i in {1, 2}, phonon mode m < m_o) is
flattened phonon-major with flat index ``2*m + (i - 1)``.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .constants import K_B, ps_to_inv_ev

# eV^-1; the 8.27 ps horizon used for the main-text runs
DEFAULT_T_FINAL = ps_to_inv_ev(8.27)

CONVENTIONS = ("spectrum", "literal")


class SpecError(ValueError):
    """Invalid simulation parameters; ``key`` names the offending field."""

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


class BasisState(NamedTuple):
    i: int  # exciton level, 1 or 2
    m: int  # phonon mode

    @property
    def index(self):
        return 2 * self.m + (self.i - 1)

    @classmethod
    def from_index(cls, k):
        return cls(k % 2 + 1, k // 2)


@dataclass(frozen=True)
class PolaritonSpec:
    """All physical and numerical parameters of one simulation.

    Energies in eV, times in eV^-1, temperature in K.  ``eta`` is the
    linewidth of the driving generators; ``None`` means (Gamma_X + Gamma_P)/2.

    ``anharmonic_convention`` selects the sign of the chi term of the phonon
    diagonal: ``"spectrum"`` gives omega*m - omega*chi*(m+1/2)^2, the form whose
    exact doublet eigenvalues are the closed-form ones in
    :func:`analytic_eigenvalues`; ``"literal"`` gives omega*m + omega*chi*(m+1/2)^2.
    ``zero_point_shift`` removes the m = 0 residual omega*chi/4 from every level.
    """

    eps1: float = 0.0
    eps2: float = 1.0
    omega: float = 1.0
    chi: float = 0.0
    V: complex = 0.0
    omega_drive: float = 1.0
    A_X: float = 0.0
    A_P: float = 0.0
    Gamma_X: float = 0.2
    Gamma_P: float = 0.4
    T_env: float = 300.0
    m_o: int = 8
    t_final: float = DEFAULT_T_FINAL
    eta: Optional[float] = None
    anharmonic_convention: str = "spectrum"
    zero_point_shift: bool = False
    cross_terms: bool = False

    def __post_init__(self):
        checks = [
            ("omega", self.omega > 0, "must be > 0"),
            ("omega_drive", self.omega_drive > 0, "must be > 0"),
            ("m_o", int(self.m_o) == self.m_o and self.m_o >= 2, "must be an integer >= 2"),
            ("Gamma_X", self.Gamma_X >= 0, "must be >= 0"),
            ("Gamma_P", self.Gamma_P >= 0, "must be >= 0"),
            ("A_X", self.A_X >= 0, "must be >= 0"),
            ("A_P", self.A_P >= 0, "must be >= 0"),
            ("T_env", self.T_env > 0, "must be > 0"),
            ("t_final", self.t_final > 0, "must be > 0"),
            ("eta", self.eta is None or self.eta > 0, "must be > 0"),
            ("anharmonic_convention", self.anharmonic_convention in CONVENTIONS,
             f"must be one of {CONVENTIONS}"),
        ]
        for key, ok, msg in checks:
            if not ok:
                raise SpecError(key, msg)
        for name in ("eps1", "eps2", "omega", "chi", "omega_drive", "A_X", "A_P",
                     "Gamma_X", "Gamma_P", "T_env", "t_final"):
            if not np.isfinite(getattr(self, name)):
                raise SpecError(name, "must be finite")
        if not np.isfinite(complex(self.V)):
            raise SpecError("V", "must be finite")
        if self.eta is None and self.Gamma_X + self.Gamma_P == 0 and (self.A_X or self.A_P):
            raise SpecError("eta", "no damping to set a default linewidth; give eta explicitly")

    @property
    def N(self):
        return 2 * self.m_o

    @property
    def beta(self):
        return 1.0 / (K_B * self.T_env)

    @property
    def linewidth(self):
        if self.eta is not None:
            return self.eta
        return 0.5 * (self.Gamma_X + self.Gamma_P)

    @property
    def period(self):
        return 2 * np.pi / self.omega_drive

    @property
    def chi_sign(self):
        return -1.0 if self.anharmonic_convention == "spectrum" else 1.0

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class Spectrum:
    energies: np.ndarray  # ascending, eV
    vectors: np.ndarray  # columns are eigenvectors in the product basis
    branches: Optional[dict] = field(default=None, compare=False)

    @property
    def N(self):
        return len(self.energies)

    def to_eigenbasis(self, op):
        """Express a product-basis operator in the eigenbasis."""
        U = self.vectors
        return U.conj().T @ op @ U


@dataclass(frozen=True)
class DensityMatrix:
    """Density matrix in the H_S eigenbasis at time ``t`` (eV^-1)."""

    matrix: np.ndarray
    t: float = 0.0

    @property
    def trace(self):
        return np.trace(self.matrix).real

    def eigvals(self):
        return np.linalg.eigvalsh(0.5 * (self.matrix + self.matrix.conj().T))

    def check(self, herm_tol=1e-10, trace_tol=1e-8):
        dev = np.abs(self.matrix - self.matrix.conj().T).max()
        if dev > herm_tol:
            raise ValueError(f"density matrix not Hermitian (deviation {dev:.3g})")
        if abs(self.trace - 1) > trace_tol:
            raise ValueError(f"density matrix trace {self.trace!r} != 1")
        return self


def phonon_diagonal(omega, chi, m_o, sign=1.0, zero_point_shift=False):
    """Diagonal of the free anharmonic phonon Hamiltonian for m = 0 .. m_o-1.

    ``sign=+1`` evaluates omega*m + omega*chi*(m + 1/2)^2 exactly as written;
    ``sign=-1`` flips the anharmonic term.
    """
    if m_o < 1:
        raise ValueError("m_o must be >= 1")
    m = np.arange(m_o, dtype=float)
    diag = omega * m + sign * omega * chi * (m + 0.5) ** 2
    if zero_point_shift:
        diag = diag - sign * omega * chi / 4
    return diag


def _phonon_levels(spec):
    return phonon_diagonal(spec.omega, spec.chi, spec.m_o, spec.chi_sign, spec.zero_point_shift)


def exciton_number(m_o, level=2):
    """d_i^dagger d_i in the flat product basis."""
    N = 2 * m_o
    return np.diag((np.arange(N) % 2 == level - 1).astype(float))


def phonon_hamiltonian(spec):
    """H_pho(omega, chi) acting on the full exciton x phonon space."""
    return np.diag(np.repeat(_phonon_levels(spec), 2))


def exciton_lowering(m_o):
    """d_1^dagger d_2 = sum_m |1,m><2,m|."""
    N = 2 * m_o
    J = np.zeros((N, N))
    for m in range(m_o):
        J[2 * m, 2 * m + 1] = 1.0
    return J


def phonon_lowering(m_o):
    """Unit-element phonon ladder a = sum_{i,m} |i,m><i,m+1|.

    Same matrix elements as the ``a`` that enters the interaction term, so the
    closed-form doublet spectrum holds.
    """
    N = 2 * m_o
    a = np.zeros((N, N))
    for m in range(m_o - 1):
        for i in (0, 1):
            a[2 * m + i, 2 * (m + 1) + i] = 1.0
    return a


def coupling_operator(m_o):
    """d_2^dagger d_1 a, connecting |1,m+1> to |2,m>."""
    N = 2 * m_o
    C = np.zeros((N, N))
    for m in range(m_o - 1):
        C[2 * m + 1, 2 * (m + 1)] = 1.0
    return C


def interaction_operator(spec):
    """V d_2^dagger d_1 a + h.c."""
    C = coupling_operator(spec.m_o) * complex(spec.V)
    return C + C.conj().T


def build_hamiltonian(spec):
    if spec.m_o < 2:
        raise SpecError("m_o", "must be >= 2")
    eps = np.tile([spec.eps1, spec.eps2], spec.m_o)
    H = np.diag(eps + np.repeat(_phonon_levels(spec), 2)).astype(complex)
    H += interaction_operator(spec)
    if complex(spec.V).imag == 0:
        H = H.real
    return H


def analytic_eigenvalues(spec, m):
    """Closed-form doublet eigenvalues (lambda_-, lambda_+) for phonon index m.

    Exact for the pair {|2,m>, |1,m+1>} with the ``"spectrum"`` convention and
    no zero-point shift.
    """
    w, chi = spec.omega, spec.chi
    delta = np.sqrt(abs(complex(spec.V)) ** 2
                    + ((spec.eps2 - spec.eps1 - w) / 2 + w * chi * (1 + m)) ** 2)
    centre = (spec.eps1 + spec.eps2) / 2 + w * (0.5 + m) - w * chi * (1.25 + m * (m + 2))
    return centre - delta, centre + delta


def diagonalize(H, tol=1e-10):
    """Hermitian eigendecomposition with deterministic ordering and phases.

    Eigenvalues ascend; exact ties are ordered by the index of each vector's
    largest component, and every vector's largest component is made real
    positive.
    """
    H = np.asarray(H)
    dev = np.abs(H - H.conj().T).max() if H.size else 0.0
    if dev > tol:
        raise ValueError(f"matrix is not Hermitian (max deviation {dev:.3g})")
    w, U = np.linalg.eigh(0.5 * (H + H.conj().T))
    lead = np.argmax(np.abs(U) > np.abs(U).max(axis=0) * (1 - 1e-12), axis=0)
    order = np.lexsort((lead, np.round(w, 12)))
    w, U, lead = w[order], U[:, order], lead[order]
    phase = U[lead, np.arange(len(w))]
    U = U * (np.abs(phase) / phase)
    if np.isrealobj(H):
        U = U.real
    return Spectrum(w, U)


def branch_labels(spectrum, m_o, tol=1e-8):
    """Map eigenstate index -> (branch, m) when each state lies in one doublet.

    Branches are '-' / '+' for the doublet {|2,m>, |1,m+1>}, 'g' for the
    uncoupled |1,0> and 'edge' for the truncation-edge |2,m_o-1>.  Returns
    None if some eigenstate mixes doublets (exact degeneracies).
    """
    weights = np.abs(spectrum.vectors) ** 2
    groups = {("g", 0): [0], ("edge", m_o - 1): [2 * m_o - 1]}
    for m in range(m_o - 1):
        groups[("d", m)] = [2 * m + 1, 2 * (m + 1)]
    owner = {}
    for a in range(spectrum.N):
        for key, idx in groups.items():
            if weights[idx, a].sum() > 1 - tol:
                owner[a] = key
                break
        else:
            return None
    labels = {}
    for key in groups:
        members = sorted((a for a, k in owner.items() if k == key),
                         key=lambda a: spectrum.energies[a])
        if key[0] == "d":
            if len(members) != 2:
                return None
            labels[members[0]] = ("-", key[1])
            labels[members[1]] = ("+", key[1])
        else:
            if len(members) != 1:
                return None
            labels[members[0]] = key
    return labels


def spectrum_of(spec):
    """Diagonalize the Hamiltonian of ``spec`` and attach branch labels."""
    sp = diagonalize(build_hamiltonian(spec))
    return dataclasses.replace(sp, branches=branch_labels(sp, spec.m_o))


def driving_operators(m_o):
    """Exciton flip X and phonon ladder P (both real symmetric, zero diagonal)."""
    if m_o < 2:
        raise ValueError("m_o must be >= 2")
    J = exciton_lowering(m_o)
    a = phonon_lowering(m_o)
    return J + J.T, a + a.T


def gibbs_state(spectrum, T_env):
    """Thermal state exp(-H/kT)/Z, diagonal in the eigenbasis."""
    if T_env <= 0:
        raise ValueError("T_env must be > 0")
    beta = 1.0 / (K_B * T_env)
    e = spectrum.energies - spectrum.energies.min()
    p = np.exp(-beta * e)
    p /= p.sum()
    return DensityMatrix(np.diag(p).astype(complex))


def observables(spec, spectrum):
    """Energy operators in the eigenbasis, keyed by observable name."""
    to = spectrum.to_eigenbasis
    return {
        "E_TLS": spec.eps2 * to(exciton_number(spec.m_o, 2)),
        "E_pho": to(phonon_hamiltonian(spec)),
        "E_int": to(interaction_operator(spec)),
        "E_total": np.diag(spectrum.energies),
        "E_ground_exciton": spec.eps1 * to(exciton_number(spec.m_o, 1)),
    }
