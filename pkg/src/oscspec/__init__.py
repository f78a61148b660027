"""Forward and inverse spectral toolkit for the perturbed harmonic oscillator
on the half line with a Dirichlet condition at the origin."""

from .config import InputError, NumericalError, RunConfig
from .potential import (CoeffVec, Potential, potential_from_hermite,
                        potential_from_samples, zero_potential)
from .spectral import SpectralDataSet, spectral_data
from .isospectral import DarbouxMove, darboux, flow
from .inverse import ReconstructionProblem, reconstruct

__version__ = "0.1.0"

__all__ = [
    "CoeffVec",
    "DarbouxMove",
    "InputError",
    "NumericalError",
    "Potential",
    "ReconstructionProblem",
    "RunConfig",
    "SpectralDataSet",
    "darboux",
    "flow",
    "potential_from_hermite",
    "potential_from_samples",
    "reconstruct",
    "spectral_data",
    "zero_potential",
    "__version__",
]
