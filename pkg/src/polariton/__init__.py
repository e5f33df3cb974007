"""Periodically driven anharmonic exciton-phonon polaritons: stationary states and thermodynamics."""
__version__ = "0.1.0"

from .model import PolaritonSpec, SpecError, Spectrum, DensityMatrix, spectrum_of  # noqa: E402
from .kernels import BACKEND  # noqa: E402

__all__ = ["PolaritonSpec", "SpecError", "Spectrum", "DensityMatrix", "spectrum_of", "BACKEND",
           "__version__"]
