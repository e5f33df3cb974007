import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import expm, null_space

from conftest import product_projector, product_to_eigen, trace_distance
from polariton.liouville import (
    apply,
    assemble,
    bohr_clusters,
    commutator,
    dissipator,
    driving_generators,
    free_evolution,
    left,
    right,
    trace_functional,
    unvec,
    vec,
)
from polariton.model import (
    PolaritonSpec,
    diagonalize,
    exciton_lowering,
    gibbs_state,
    spectrum_of,
)


def random_state(rng, N):
    A = rng.normal(size=(N, N)) + 1j * rng.normal(size=(N, N))
    r = A @ A.conj().T
    return r / np.trace(r)


def test_vec_layout_and_products(rng):
    A, B, R = (rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)) for _ in range(3))
    v = vec(R)
    assert v[1 * 3 + 2] == R[2, 1]  # position alpha*N + beta holds <beta|rho|alpha>
    assert np.allclose(left(A) @ v, vec(A @ R))
    assert np.allclose(right(B) @ v, vec(R @ B))
    assert np.allclose(unvec(v), R)


def test_free_evolution_zero_for_equal_levels():
    sp = diagonalize(np.eye(3) * 0.7)
    assert not np.any(free_evolution(sp))


def test_free_evolution_two_level():
    D = free_evolution(diagonalize(np.diag([0.0, 1.0])))
    assert np.count_nonzero(D) == 2
    assert sorted(np.diag(D).imag[[1, 2]]) == [-1.0, 1.0]
    assert np.diag(D).real.max() == 0


def test_free_evolution_preserves_populations(rng):
    sp = spectrum_of(PolaritonSpec(V=0.4, m_o=4))
    r = random_state(rng, sp.N)
    out = unvec(expm(-free_evolution(sp) * 3.7) @ vec(r))
    assert np.array_equal(np.diag(out).real, np.diag(r).real) or \
        np.abs(np.diag(out) - np.diag(r)).max() < 1e-15


def test_bohr_clusters_groups_degenerate():
    ids, centres = bohr_clusters(np.array([0.0, 1.0, 1.0 + 1e-12, 2.0]))
    assert ids[0, 1] == ids[0, 2]
    assert ids[0, 1] != ids[0, 3]
    assert ids[0, 0] == ids[1, 1]


def test_dissipator_zero_rate():
    sp = spectrum_of(PolaritonSpec(m_o=3))
    assert not np.any(dissipator(sp, exciton_lowering(3), 0.0, 300.0))


def test_dissipator_two_level_detailed_balance():
    sp = diagonalize(np.diag([0.0, 1.0]))
    J = np.array([[0.0, 1.0], [0.0, 0.0]])
    L = dissipator(sp, J, 0.2, 300.0)
    ker = null_space(L)
    assert ker.shape[1] == 1
    rho = unvec(ker[:, 0])
    rho = rho / np.trace(rho)
    g = gibbs_state(sp, 300.0).matrix
    assert np.abs(rho - g).max() < 1e-10
    # populations: excited/ground = n/(1+n)
    n = 1 / np.expm1(1 / (8.617333262e-5 * 300))
    assert rho[1, 1].real / rho[0, 0].real == pytest.approx(n / (1 + n), rel=1e-10)


def test_dissipator_long_time_gibbs():
    spec = PolaritonSpec(V=1.5, m_o=6)
    sp = spectrum_of(spec)
    gen = assemble(spec, sp)
    r0 = product_to_eigen(sp, product_projector(sp.N, 1))
    out = unvec(expm(-gen.A_o * 200.0) @ vec(r0))
    assert trace_distance(out, gibbs_state(sp, spec.T_env).matrix) < 1e-6


@given(V=st.floats(0.05, 3), chi=st.floats(0, 1e-3), T=st.floats(50, 3000),
       gx=st.floats(0, 1), gp=st.floats(0, 1))
def test_gibbs_is_stationary_and_trace_preserved(V, chi, T, gx, gp):
    spec = PolaritonSpec(V=V, chi=chi, T_env=T, Gamma_X=gx, Gamma_P=gp, m_o=4)
    sp = spectrum_of(spec)
    gen = assemble(spec, sp)
    g = gibbs_state(sp, T).matrix
    assert np.abs(gen.A_o @ vec(g)).max() < 1e-12
    tr = trace_functional(sp.N)
    assert np.abs(tr @ gen.A_o).max() < 1e-12


def test_dissipator_completely_positive():
    # Choi matrix of -L (the d rho/dt generator) restricted to the orthogonal
    # complement of the maximally entangled vector must be positive
    spec = PolaritonSpec(V=1.3, chi=2e-4, m_o=3)
    sp = spectrum_of(spec)
    G = -(assemble(spec, sp).L_X + assemble(spec, sp).L_P)
    N = sp.N
    choi = np.zeros((N * N, N * N), dtype=complex)
    for a in range(N):
        for b in range(N):
            E = np.zeros((N, N))
            E[a, b] = 1
            choi += np.kron(E, apply(G, E))
    omega = vec(np.eye(N)) / np.sqrt(N)
    Pperp = np.eye(N * N) - np.outer(omega, omega.conj())
    assert np.linalg.eigvalsh(Pperp @ choi @ Pperp).min() > -1e-12


def test_driving_generators_zero_and_scaling(rng):
    sp = spectrum_of(PolaritonSpec(V=0.7, m_o=3))
    Z = np.zeros((sp.N, sp.N))
    Ap, Am = driving_generators(sp, Z, 1.0, 0.3)
    assert not np.any(Ap) and not np.any(Am)
    A = rng.normal(size=(sp.N, sp.N))
    Vd = A + A.T
    Ap1, Am1 = driving_generators(sp, Vd, 1.0, 0.3)
    Ap3, Am3 = driving_generators(sp, 3 * Vd, 1.0, 0.3)
    assert np.allclose(Ap3, 9 * Ap1, atol=1e-12) and np.allclose(Am3, 9 * Am1, atol=1e-12)


def test_driving_generators_trace_annihilating(rng):
    sp = spectrum_of(PolaritonSpec(V=0.7, chi=1e-3, m_o=4))
    A = rng.normal(size=(sp.N, sp.N)) + 1j * rng.normal(size=(sp.N, sp.N))
    Vd = A + A.conj().T
    tr = trace_functional(sp.N)
    for G in driving_generators(sp, Vd, 1.0, 0.3):
        r = random_state(rng, sp.N)
        assert abs(tr @ (G @ vec(r))) < 1e-10


def test_driving_partner_relation(rng):
    sp = spectrum_of(PolaritonSpec(V=1.1, m_o=3))
    A = rng.normal(size=(sp.N, sp.N))
    Ap, Am = driving_generators(sp, A + A.T, 1.0, 0.25)
    R = rng.normal(size=(sp.N, sp.N)) + 1j * rng.normal(size=(sp.N, sp.N))
    lhs = apply(Am, R)
    rhs = apply(Ap, R.conj().T).conj().T
    assert np.abs(lhs - rhs).max() < 1e-12


def test_driving_generators_validation():
    sp = spectrum_of(PolaritonSpec(m_o=2))
    with pytest.raises(ValueError):
        driving_generators(sp, np.triu(np.ones((4, 4))), 1.0, 0.3)
    with pytest.raises(ValueError):
        driving_generators(sp, np.eye(4), 1.0, 0.0)


def test_assemble_undriven_and_unitary():
    gen = assemble(PolaritonSpec(V=0.9, m_o=4))
    assert not np.any(gen.A_plus) and not np.any(gen.A_minus)
    gen = assemble(PolaritonSpec(V=0.9, m_o=4, Gamma_X=0, Gamma_P=0))
    assert np.abs(gen.A_o + gen.A_o.conj().T).max() == 0
    assert np.all(np.diag(gen.A_o).real == 0)


def test_assemble_swap_changes_structure():
    spec = PolaritonSpec(V=2.0, m_o=3)
    gx = assemble(spec.replace(A_X=0.05, A_P=0.0))
    gp = assemble(spec.replace(A_X=0.0, A_P=0.05))
    mask_x = np.abs(gx.A_plus) > 1e-14
    mask_p = np.abs(gp.A_plus) > 1e-14
    assert mask_x.any() and mask_p.any()
    assert not np.array_equal(mask_x, mask_p)
    assert not np.any(gx.dP[0]) and not np.any(gp.dX[0])


def test_cross_terms_switch():
    spec = PolaritonSpec(V=1.75, A_X=0.04, A_P=0.05, m_o=3)
    off, on = assemble(spec), assemble(spec.replace(cross_terms=True))
    assert np.allclose(off.A_plus, off.dX[0] + off.dP[0])
    assert np.abs(on.A_plus - off.A_plus).max() > 1e-6


def test_commutator_superoperator(rng):
    A = rng.normal(size=(3, 3))
    R = rng.normal(size=(3, 3))
    assert np.allclose(apply(commutator(A), R), A @ R - R @ A)
