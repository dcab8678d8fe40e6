"""Bloch-Floquet spectra of square-lattice quantum graphs with general vertex coupling."""

from .asymptotics import (AsymptoticReport, Comparison, Regime, classify, compare_asymptotics,
                          predicted_band_width)
from .coupling import (ABCoupling, CouplingClass, CouplingError, STCoupling, classify_coupling,
                       preset, st_to_ab, validate_ab)
from .fiber import FiberPoint, dispersion_real, spectral_det
from .polynomial import OracleMismatch, dispersion_coeffs, oracle_match
from .spectrum import Band, ScanConfig, SpectrumReport, negative_spectrum, scan_bands

__version__ = "0.1.0"

__all__ = [
    "ABCoupling", "AsymptoticReport", "Band", "Comparison", "CouplingClass", "CouplingError",
    "FiberPoint", "OracleMismatch", "Regime", "STCoupling", "ScanConfig", "SpectrumReport",
    "classify", "classify_coupling", "compare_asymptotics", "dispersion_coeffs", "dispersion_real",
    "negative_spectrum", "oracle_match", "predicted_band_width", "preset", "scan_bands",
    "spectral_det", "st_to_ab", "validate_ab",
]
