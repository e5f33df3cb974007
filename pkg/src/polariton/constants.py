"""Physical constants and unit conversions (energies in eV, hbar = 1)."""

K_B = 8.617333262e-5  # eV / K
HBAR_EV_FS = 0.6582119569  # eV * fs


def ps_to_inv_ev(t_ps):
    """Convert a time in picoseconds to eV^-1."""
    return t_ps * 1000.0 / HBAR_EV_FS


def inv_ev_to_ps(t):
    return t * HBAR_EV_FS / 1000.0


def rate_to_ev_per_fs(rate):
    """Convert an energy rate in eV^2 (eV per eV^-1) to eV/fs."""
    return rate / HBAR_EV_FS
