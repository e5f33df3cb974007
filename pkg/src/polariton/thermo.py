"""Energies, heat/work/entropy rates, irreversible heat and driving efficiency.

Sign orientation: every rate is the energy (or entropy) flowing INTO the
polariton, so Qdot < 0 when the polariton relaxes into a bath and Wdot > 0
when the field pumps it.  With stored generators (d rho/dt = -L rho) this is
Qdot = -Tr[L(rho) H_S], Wdot = -Tr[L_d(t)(rho) H_S], Sdot = Tr[L(rho) ln rho].
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, asdict, field

import numpy as np
from scipy.integrate import simpson

from .constants import rate_to_ev_per_fs
from .liouville import apply, unvec, vec
from .model import observables

log = logging.getLogger(__name__)

SIGN_CONVENTION = "rates are energy/entropy flowing into the polariton (Qdot<0: heat to bath)"

LOG_FLOOR = 1e-300
PLOGP_CUTOFF = 1e-15
CLIP_TOL = 1e-7
FAIL_TOL = -1e-4


class EntropyError(ValueError):
    pass


def _rho_matrix(rho):
    return rho.matrix if hasattr(rho, "matrix") else np.asarray(rho)


def _eigh_state(rho):
    r = _rho_matrix(rho)
    p, U = np.linalg.eigh(0.5 * (r + r.conj().T))
    if p.min() < FAIL_TOL:
        raise EntropyError(f"state eigenvalue {p.min():.3g} below {FAIL_TOL:g}")
    if p.min() < -CLIP_TOL:
        log.warning("clipping state eigenvalue %.3g", p.min())
    p = np.clip(p, 0.0, None)
    return p / p.sum(), U


def log_state(rho):
    """ln rho via the state eigenbasis, eigenvalues floored at 1e-300."""
    p, U = _eigh_state(rho)
    return (U * np.log(np.maximum(p, LOG_FLOOR))) @ U.conj().T


def entropy(rho):
    p, _ = _eigh_state(rho)
    p = p[p >= PLOGP_CUTOFF]
    return float(-(p * np.log(p)).sum())


def energies(rho, spec, spectrum, ops=None):
    """(E_TLS, E_pho, E_int, E_total) as expectation values."""
    ops = ops or observables(spec, spectrum)
    r = _rho_matrix(rho)
    return tuple(float(np.trace(r @ ops[k]).real) for k in ("E_TLS", "E_pho", "E_int", "E_total"))


def _flow(G, r, A):
    return -float(np.trace(apply(G, r) @ A).real)


def _image_flow(image, A):
    return -float(np.trace(image @ A).real)


def heat_rates(gen, rho, H):
    r = _rho_matrix(rho)
    return _flow(gen.L_X, r, H), _flow(gen.L_P, r, H)


def work_rates(gen, rho, H, t=None):
    """(Wdot_X, Wdot_P) at time t (defaults to rho.t)."""
    r = _rho_matrix(rho)
    t = rho.t if t is None else t
    return (_image_flow(gen.drive_image(t, r, "X"), H),
            _image_flow(gen.drive_image(t, r, "P"), H))


def total_work_rate(gen, rho, H, t=None):
    """Work rate of the full driving generator (includes cross terms when enabled)."""
    t = rho.t if t is None else t
    return _image_flow(gen.drive_image(t, _rho_matrix(rho)), H)


def entropy_rates(gen, rho, t=None):
    """(Sdot_X, Sdot_P, Sdot_dX, Sdot_dP) with Sdot = Tr[L(rho) ln rho]."""
    r = _rho_matrix(rho)
    t = rho.t if t is None else t
    lr = log_state(r)
    images = (apply(gen.L_X, r), apply(gen.L_P, r),
              gen.drive_image(t, r, "X"), gen.drive_image(t, r, "P"))
    return tuple(-_image_flow(im, lr) for im in images)


def log_gibbs(spectrum, beta):
    e = spectrum.energies - spectrum.energies.min()
    return np.diag(-beta * e - np.log(np.exp(-beta * e).sum()))


def irreversible_heat_rate(gen, rho, spec, return_check=False):
    """Irreversible heat rate from the relative-entropy trace form.

    Uses the dissipative part in its d rho/dt orientation, which makes it the
    Spohn entropy production times k_B T (non-negative).  The heat/entropy
    balance form beta^-1 (Sdot_X + Sdot_P) - (Qdot_X + Qdot_P) is returned as
    a cross-check with ``return_check``.
    """
    r = _rho_matrix(rho)
    beta = spec.beta
    spectrum = gen.spectrum
    diss = gen.L_X + gen.L_P
    drho = -apply(diss, r)
    value = float(np.trace(drho @ (log_gibbs(spectrum, beta) - log_state(r))).real) / beta
    if not return_check:
        return value
    H = np.diag(spectrum.energies)
    sx, sp, _, _ = entropy_rates(gen, r, 0.0)
    qx, qp = heat_rates(gen, r, H)
    check = (sx + sp) / beta - (qx + qp)
    return value, check


def efficiency(Wbar, Qbar_irr):
    """(W - Q_irr)/W; NaN when |W| < 1e-15."""
    if abs(Wbar) < 1e-15:
        log.warning("efficiency undefined for vanishing work %.3g", Wbar)
        return math.nan
    return (Wbar - Qbar_irr) / Wbar


@dataclass
class Cycle:
    """Observables sampled over one stationary drive period."""

    times: np.ndarray
    states: list
    rates: dict = field(default_factory=dict)


def sample_cycle(gen, rho_stationary, samples=129):
    """Phase grid over one period in the stationary regime.

    Under the exponential propagator the state at t = n*tau + s is
    exp(-(M n tau + Y(s))) rho(0), whose s-dependence dies off like 1/(n tau);
    the stationary cycle is therefore the period-map fixed point at every
    phase, and only the drive factors f+-(s) vary along it.
    """
    if samples < 3 or samples % 2 == 0:
        raise ValueError("samples must be odd and >= 3 for Simpson quadrature")
    period = 2 * np.pi / gen.omega_drive
    times = np.linspace(0.0, period, samples)
    return Cycle(times, [rho_stationary.matrix] * samples)


def cycle_rates(spec, gen, cycle):
    H = np.diag(gen.spectrum.energies)
    keys = ("Qdot_X", "Qdot_P", "Wdot_X", "Wdot_P", "Wdot", "Qdot_irrev", "Qdot_irrev_check", "S")
    rates = {k: [] for k in keys}
    for t, r in zip(cycle.times, cycle.states):
        qx, qp = heat_rates(gen, r, H)
        wx, wp = work_rates(gen, r, H, t)
        qi, qc = irreversible_heat_rate(gen, r, spec, return_check=True)
        for k, val in zip(keys, (qx, qp, wx, wp, total_work_rate(gen, r, H, t), qi, qc, entropy(r))):
            rates[k].append(val)
    cycle.rates = {k: np.array(v) for k, v in rates.items()}
    return cycle


def period_integral(times, values):
    return float(simpson(values, x=times))


def period_averages(spec, gen, result, samples=129, cycle=None):
    """Work and irreversible heat per period (eV) in the stationary cycle."""
    if not result.stationary:
        raise ValueError("period averages require a stationary state")
    if cycle is None:
        cycle = cycle_rates(spec, gen, sample_cycle(gen, result.state, samples))
    Wbar = period_integral(cycle.times, cycle.rates["Wdot"])
    Qbar = period_integral(cycle.times, cycle.rates["Qdot_irrev"])
    return Wbar, Qbar


@dataclass
class ThermoRecord:
    E_TLS: float
    E_pho: float
    E_int: float
    E_total: float
    Qdot_X: float
    Qdot_P: float
    Wdot_X: float
    Wdot_P: float
    S: float
    Sdot_X: float
    Sdot_P: float
    Sdot_dX: float
    Sdot_dP: float
    Qdot_irrev: float
    Wbar: float
    Qbar_irr: float
    Eff: float
    # diagnostics
    first_law_residual: float = 0.0
    min_Qdot_irrev: float = 0.0
    irrev_sign_discrepancy: float = 0.0
    trace_error: float = 0.0
    min_eigenvalue: float = 0.0

    @property
    def percent_eff(self):
        return 100.0 * self.Eff

    def to_dict(self, converted=True):
        d = asdict(self)
        d["percent_Eff"] = self.percent_eff
        if converted:
            for k in ("Qdot_X", "Qdot_P", "Wdot_X", "Wdot_P", "Qdot_irrev"):
                d[k + "_eV_per_fs"] = rate_to_ev_per_fs(d[k])
        return d


def thermo_record(spec, result, samples=129):
    """All stationary observables for one propagation result.

    Energies and rates are averages over the stationary period.
    """
    gen, spectrum = result.generators, result.spectrum
    cycle = cycle_rates(spec, gen, sample_cycle(gen, result.state, samples))
    period = spec.period
    ops = observables(spec, spectrum)
    Es = np.array([energies(r, spec, spectrum, ops) for r in cycle.states])
    mean = lambda a: period_integral(cycle.times, a) / period  # noqa: E731
    E = [mean(Es[:, k]) for k in range(4)]
    sdots = np.array([entropy_rates(gen, r, t) for t, r in zip(cycle.times, cycle.states)])
    R = cycle.rates
    Wbar = period_integral(cycle.times, R["Wdot"])
    Qbar = period_integral(cycle.times, R["Qdot_irrev"])
    closure = period_integral(cycle.times, R["Wdot"] + R["Qdot_X"] + R["Qdot_P"])
    traces = [abs(np.trace(r).real - 1) for r in cycle.states]
    return ThermoRecord(
        *E,
        Qdot_X=mean(R["Qdot_X"]), Qdot_P=mean(R["Qdot_P"]),
        Wdot_X=mean(R["Wdot_X"]), Wdot_P=mean(R["Wdot_P"]),
        S=mean(R["S"]),
        Sdot_X=mean(sdots[:, 0]), Sdot_P=mean(sdots[:, 1]),
        Sdot_dX=mean(sdots[:, 2]), Sdot_dP=mean(sdots[:, 3]),
        Qdot_irrev=mean(R["Qdot_irrev"]),
        Wbar=Wbar, Qbar_irr=Qbar, Eff=efficiency(Wbar, Qbar),
        first_law_residual=closure,
        min_Qdot_irrev=float(R["Qdot_irrev"].min()),
        irrev_sign_discrepancy=float(np.abs(R["Qdot_irrev"] - R["Qdot_irrev_check"]).max()),
        trace_error=float(max(traces)),
        min_eigenvalue=result.min_eigenvalue,
    )
