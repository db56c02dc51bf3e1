"""Two-photon absorption driven by bright squeezed vacuum from a CW-pumped crystal."""

__version__ = "0.1.0"

from .numerics import DetuningGrid, QuadratureResult, integrate, sinhc_ratio
from .pdc import (CrystalParams, GatedPulseParams, SpectralGain, ValidityWarning, gain_at,
                  gain_functions, photon_number, photon_rate, photons_per_mode)
from .dispersion import DispersionParams, G2Result, ResolutionError, g2_zero, optimal_d2
from .tpa import MoleculeParams, TpaResult, TpaSetup, p_coherent, p_incoherent, sweep

__all__ = [
    "DetuningGrid", "QuadratureResult", "integrate", "sinhc_ratio",
    "CrystalParams", "GatedPulseParams", "SpectralGain", "ValidityWarning", "gain_at",
    "gain_functions", "photon_number", "photon_rate", "photons_per_mode",
    "DispersionParams", "G2Result", "ResolutionError", "g2_zero", "optimal_d2",
    "MoleculeParams", "TpaResult", "TpaSetup", "p_coherent", "p_incoherent", "sweep",
]
