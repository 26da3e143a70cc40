"""Numerical toolkit for dyadic-dilation Fourier multipliers at desk scale.

Subpackages: ``grid`` (FFT calculus), ``bumps`` (smooth cutoff profiles),
``analysis`` (Littlewood-Paley pieces, shifted square functions, maximal
operators), ``norms`` (Lebesgue/Hardy/BMO/Orlicz/log-weighted functionals),
``operators`` (linear and bilinear dyadic multiplier operators), ``multiband``
(exact carrier+envelope representation for widely separated spectra),
``rough`` (rough bilinear singular integrals and their smooth decomposition),
``extremals`` (sharpness families), ``experiments`` (CLI sweeps).
"""

from . import analysis, bumps, extremals, grid, multiband, norms, operators, rough

__all__ = [
    "analysis",
    "bumps",
    "extremals",
    "grid",
    "multiband",
    "norms",
    "operators",
    "rough",
]

__version__ = "0.1.0"
