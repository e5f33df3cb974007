"""Time evolution: exponential propagator, RK4 oracle and stationary state search."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from . import kernels
from .liouville import assemble, unvec, vec
from .model import DensityMatrix, gibbs_state, spectrum_of, observables

log = logging.getLogger(__name__)

STATIONARY_TOL = 1e-7  # eV, energy drift between consecutive periods
POSITIVITY_ABORT = -1e-4
POSITIVITY_WARN = -1e-7


class PositivityError(RuntimeError):
    pass


@dataclass(frozen=True)
class PropagationResult:
    state: DensityMatrix
    stationary: bool
    residual: float
    spectrum: object = None
    generators: object = None
    min_eigenvalue: float = 0.0


def integrated_phases(t, omega_drive):
    """g+-(t) = int_0^t 2 cos(w' s) exp(+-i w' s) ds in closed form."""
    g_plus = t + (np.exp(2j * omega_drive * t) - 1) / (2j * omega_drive)
    return g_plus, np.conj(g_plus)


def exponent(gen, t, t0=0.0):
    """int_{t0}^{t0+t} of the full generator."""
    gp1, gm1 = integrated_phases(t0 + t, gen.omega_drive)
    gp0, gm0 = integrated_phases(t0, gen.omega_drive)
    return gen.A_o * t + (gp1 - gp0) * gen.A_plus + (gm1 - gm0) * gen.A_minus


def propagator_matrix(gen, t, t0=0.0):
    E = exponent(gen, t, t0)
    if not np.all(np.isfinite(E)):
        raise FloatingPointError("non-finite entries in propagator exponent")
    return expm(-E)


def propagate_expm(gen, rho0, t):
    """exp[-(A_o t + g+ A+ + g- A-)] rho0, with drive phases referenced to rho0.t."""
    if t < 0:
        raise ValueError("t must be >= 0")
    if t == 0:
        return DensityMatrix(np.array(rho0.matrix), rho0.t)
    v = propagator_matrix(gen, t, rho0.t) @ vec(rho0.matrix)
    return DensityMatrix(unvec(v), rho0.t + t)


def _rk4(gen, v, t0, dt, nsteps):
    return kernels.rk4_run(gen.A_o, gen.A_plus, gen.A_minus, v, t0, dt, nsteps, gen.omega_drive)


def check_step(gen, rho, dt, nsteps, tol=1e-9):
    """Step-doubling error estimate over ``nsteps`` steps from rho; raises if any exceeds tol."""
    v = vec(rho.matrix).astype(complex)
    t = rho.t
    worst = 0.0
    for _ in range(nsteps):
        full = _rk4(gen, v, t, dt, 1)
        half = _rk4(gen, v, t, dt / 2, 2)
        worst = max(worst, np.abs(full - half).max() * 16 / 15)
        v, t = half, t + dt
    if worst > tol:
        raise ValueError(f"RK4 local error estimate {worst:.3g} exceeds {tol:g}; reduce dt")
    return worst


def propagate_direct(gen, rho0, t, dt=None, check=True):
    """Fourth-order Runge-Kutta integration of the non-autonomous master equation."""
    period = 2 * np.pi / gen.omega_drive
    if t == 0:
        return DensityMatrix(np.array(rho0.matrix), rho0.t)
    if dt is None:
        # halve from period/512 until the local error estimate is acceptable
        dt = period / 512
        for _ in range(6):
            nsteps = max(1, math.ceil(t / dt - 1e-9))
            try:
                check_step(gen, rho0, t / nsteps, min(nsteps, 64))
                break
            except ValueError:
                dt /= 2
        check = False
    if dt > period / 200 * (1 + 1e-12):
        raise ValueError("dt must resolve the drive: dt <= period/200")
    nsteps = max(1, math.ceil(t / dt - 1e-9))
    dt = t / nsteps
    if check:
        check_step(gen, rho0, dt, min(nsteps, int(round(period / dt))))
    v = _rk4(gen, vec(rho0.matrix).astype(complex), rho0.t, dt, nsteps)
    return DensityMatrix(unvec(v), rho0.t + t)


def _energy_vector(spec, spectrum):
    ops = observables(spec, spectrum)
    return [ops[k] for k in ("E_TLS", "E_pho", "E_int", "E_total")]


def _drift(ops, v1, v2):
    r1, r2 = unvec(v1), unvec(v2)
    return max(abs(np.trace((r2 - r1) @ op).real) for op in ops)


def period_map(gen):
    """One-period propagator; at whole periods g+- = t so the exponent is exact."""
    return propagator_matrix(gen, 2 * np.pi / gen.omega_drive)


def stationary_state(spec, gen=None, spectrum=None, tol=STATIONARY_TOL):
    """Propagate the Gibbs state in whole periods until the energies stop changing.

    Periods are advanced by repeated squaring of the one-period map, so the
    cost is logarithmic in the elapsed time.  The result sits at a period
    boundary (drive phase zero).
    """
    if spec.Gamma_X + spec.Gamma_P <= 0:
        raise ValueError("stationary state requires Gamma_X + Gamma_P > 0")
    if spectrum is None:
        spectrum = spectrum_of(spec)
    if gen is None:
        gen = assemble(spec, spectrum)
    ops = _energy_vector(spec, spectrum)
    period = spec.period
    max_periods = int(spec.t_final // period)
    P = period_map(gen)
    powers = [P]
    v = vec(gibbs_state(spectrum, spec.T_env).matrix)
    n = 0
    residual = _drift(ops, v, P @ v)
    while residual >= tol and n < max_periods:
        step = len(powers) - 1
        while n + 2 ** step > max_periods:
            step -= 1
        with np.errstate(over="ignore", invalid="ignore"):
            v = powers[step] @ v
        n += 2 ** step
        if not np.all(np.isfinite(v)):
            raise PositivityError("propagation diverged: the period map is not contractive "
                                  "(driving too strong for the linewidth)")
        if step == len(powers) - 1:
            with np.errstate(over="ignore", invalid="ignore"):
                powers.append(powers[-1] @ powers[-1])
        residual = _drift(ops, v, P @ v)
    v = v / np.trace(unvec(v))
    rho = unvec(v)
    rho = 0.5 * (rho + rho.conj().T)
    state = DensityMatrix(rho, n * period)
    min_eig = state.eigvals().min()
    if min_eig < POSITIVITY_ABORT:
        raise PositivityError(
            f"stationary state eigenvalue {min_eig:.3g} < {POSITIVITY_ABORT:g}: "
            "driving outside the weak-coupling regime")
    if min_eig < POSITIVITY_WARN:
        log.warning("stationary state has eigenvalue %.3g", min_eig)
    stationary = bool(residual < tol)
    if not stationary:
        log.warning("no stationarity within t_final (residual %.3g eV)", residual)
    return PropagationResult(state, stationary, float(residual), spectrum, gen, float(min_eig))


def edge_population(spec, result):
    """Population of the two product states at the highest phonon index."""
    U = result.spectrum.vectors
    rho_prod = U @ result.state.matrix @ U.conj().T
    return float(np.real(rho_prod[-2, -2] + rho_prod[-1, -1]))


def converged_stationary_state(spec, edge_tol=1e-6, m_step=4, m_max=40):
    """stationary_state with truncation growth until the edge modes are empty."""
    while True:
        res = stationary_state(spec)
        if edge_population(spec, res) < edge_tol or spec.m_o + m_step > m_max:
            if edge_population(spec, res) >= edge_tol:
                log.warning("truncation m_o=%d still populated at the edge", spec.m_o)
            return spec, res
        spec = spec.replace(m_o=spec.m_o + m_step)


def direct_stationary_energy(spec, result, t_relax=None, samples_per_period=512):
    """Period-averaged E_total from RK4 started at the Gibbs state.

    Integrates to ``t_relax`` (default: the time the exponential route needed,
    rounded up to whole periods) and averages over the following period.
    """
    gen, spectrum = result.generators, result.spectrum
    period = spec.period
    if t_relax is None:
        t_relax = result.state.t
    n = max(1, math.ceil(t_relax / period - 1e-9))
    dt = period / samples_per_period
    rho = gibbs_state(spectrum, spec.T_env)
    rho = propagate_direct(gen, rho, n * period, dt=dt)
    H_op = observables(spec, spectrum)["E_total"]
    v = vec(rho.matrix).astype(complex)
    vals = [np.trace(rho.matrix @ H_op).real]
    t = rho.t
    for _ in range(samples_per_period):
        v = _rk4(gen, v, t, dt, 1)
        t += dt
        vals.append(np.trace(unvec(v) @ H_op).real)
    from scipy.integrate import simpson
    return float(simpson(vals, dx=dt) / period)
