"""Exact multi-band representation: integer carriers times band-limited envelopes.

The sharpness families pair spatial translates of order ``2^{c(N-1)}`` with
carrier frequencies of order ``2^{cN}``; a single uniform grid resolving both
would need ``~2^{2cN}`` samples.  Instead a function

    f(x) = Σ_b  env_b(x) · e^{2πi ω_b x},      ω_b ∈ ℤ distinct,

is stored as a list of bands: an exact integer carrier ``ω_b`` and a
band-limited envelope on a shared modest grid.  All carrier/translate phases
reduce to ``exp(-2πi k/D)`` with integer ``k, D`` (grid period and carriers
are powers of two in practice), evaluated after exact modular reduction, so
no large-argument trigonometry ever happens.

L² and L⁴ norms are computed exactly: a product of four bands integrates to
zero unless its net carrier is small enough to fall inside the envelope
bandwidth, which is an integer test; surviving terms are envelope quadratures.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NyquistError
from .grid import Grid1D, SampledFunction1D, Spectrum1D, forward_transform, inverse_transform


def _require_integer_period(grid: Grid1D) -> int:
    L = int(round(grid.L))
    if abs(grid.L - L) > 0 or L <= 0:
        raise ValueError("multi-band grids need an integer period L")
    return L


def unit_phase(numer, denom: int) -> np.ndarray:
    """``exp(-2πi · numer/denom)`` with the ratio reduced mod 1 in integers."""
    r = np.mod(np.asarray(numer, dtype=np.int64), denom)
    return np.exp(-2j * np.pi * (r / denom))


def translation_phase(grid: Grid1D, shift_num: int, shift_log2_den: int = 0) -> np.ndarray:
    """Spectrum multiplier realizing ``f(· - s)`` for ``s = shift_num / 2^shift_log2_den``."""
    L = _require_integer_period(grid)
    m = grid.freq_indices().astype(np.int64)
    return unit_phase(m * int(shift_num), (1 << shift_log2_den) * L)


@dataclass(frozen=True)
class Band:
    carrier: int
    spectrum: np.ndarray  # envelope coefficients, centered order, Spectrum1D scaling

    def __post_init__(self):
        s = np.asarray(self.spectrum, dtype=complex).copy()
        s.flags.writeable = False
        object.__setattr__(self, "spectrum", s)
        object.__setattr__(self, "carrier", int(self.carrier))

    def band_radius_index(self) -> int:
        """Largest |m| with a nonzero envelope coefficient."""
        nz = np.nonzero(self.spectrum)[0]
        if len(nz) == 0:
            return 0
        M = len(self.spectrum)
        return int(np.max(np.abs(nz - M // 2)))


@dataclass(frozen=True)
class MultibandFunction1D:
    """A finite sum of carrier-modulated envelopes on a shared grid."""

    grid: Grid1D
    bands: tuple

    def __post_init__(self):
        _require_integer_period(self.grid)
        carriers = [b.carrier for b in self.bands]
        if len(set(carriers)) != len(carriers):
            raise ValueError("carriers must be distinct; merge spectra first")
        object.__setattr__(self, "bands", tuple(self.bands))

    def envelope(self, band: Band) -> SampledFunction1D:
        return inverse_transform(Spectrum1D(self.grid, band.spectrum))

    def values_at_samples(self) -> np.ndarray:
        """Exact values at the grid points (carrier phases reduced in integers)."""
        g = self.grid
        L = _require_integer_period(g)
        M = g.M
        i = np.arange(M, dtype=np.int64)
        total = np.zeros(M, dtype=complex)
        for b in self.bands:
            env = self.envelope(b).values
            # x_i = L*(2i - M)/(2M);  carrier phase = exp(2πi ω x_i)
            total += env * unit_phase(-b.carrier * L * (2 * i - M), 2 * M)
        return total

    def max_band_radius(self) -> float:
        if not self.bands:
            return 0.0
        return max(b.band_radius_index() for b in self.bands) / self.grid.L


def band_from_profile(grid: Grid1D, carrier: int, profile, translate_num: int = 0,
                      translate_log2_den: int = 0) -> Band:
    """Band with envelope ``p(x + t)`` sampled from a frequency profile ``p̂``.

    ``t = translate_num / 2^translate_log2_den``.  The envelope spectrum is
    ``p̂(ξ) e^{2πi t ξ}`` with the phase reduced exactly.
    """
    xi = grid.freqs()
    c = profile(xi).astype(complex)
    if translate_num:
        c = c * np.conj(translation_phase(grid, translate_num, translate_log2_den))
    nyq = grid.nyquist
    lo, hi = profile.support
    if hi >= nyq:
        raise NyquistError(f"envelope profile support {hi} exceeds Nyquist {nyq}")
    return Band(carrier, c)


def merge_bands(grid: Grid1D, bands) -> MultibandFunction1D:
    """Sum bands, combining spectra that share a carrier and dropping zero bands."""
    acc: dict[int, np.ndarray] = {}
    for b in bands:
        if not np.any(b.spectrum):
            continue
        if b.carrier in acc:
            acc[b.carrier] = acc[b.carrier] + b.spectrum
        else:
            acc[b.carrier] = np.array(b.spectrum)
    ordered = tuple(Band(w, acc[w]) for w in sorted(acc))
    return MultibandFunction1D(grid, ordered)


def _quadrature_with_residual_carrier(grid: Grid1D, values: np.ndarray, omega: int) -> complex:
    """``h Σ values(x_i) e^{2πi ω x_i}`` with the carrier phase exact."""
    L = _require_integer_period(grid)
    M = grid.M
    if omega == 0:
        return complex(grid.h * np.sum(values))
    i = np.arange(M, dtype=np.int64)
    ph = unit_phase(-omega * L * (2 * i - M), 2 * M)
    return complex(grid.h * np.sum(values * ph))


def l2_norm(f: MultibandFunction1D) -> float:
    """Exact ``L²`` norm: cross terms are kept whenever the carrier gap is
    inside the summed envelope bandwidths (integer test), else they vanish."""
    bands = f.bands
    envs = [f.envelope(b).values for b in bands]
    radii = [b.band_radius_index() for b in bands]
    L = _require_integer_period(f.grid)
    total = 0.0 + 0.0j
    for a in range(len(bands)):
        for b in range(len(bands)):
            gap = bands[a].carrier - bands[b].carrier
            if abs(gap) * L > radii[a] + radii[b]:
                continue
            total += _quadrature_with_residual_carrier(
                f.grid, envs[a] * np.conj(envs[b]), gap)
    return float(np.sqrt(max(total.real, 0.0)))


def l4_norm(f: MultibandFunction1D) -> float:
    """Exact ``L⁴`` norm by enumerating carrier quadruples with small net carrier."""
    bands = f.bands
    n = len(bands)
    envs = [f.envelope(b).values for b in bands]
    radii = [b.band_radius_index() for b in bands]
    L = _require_integer_period(f.grid)
    total = 0.0 + 0.0j
    for a in range(n):
        for b in range(n):
            for c in range(n):
                for d in range(n):
                    net = bands[a].carrier + bands[b].carrier \
                        - bands[c].carrier - bands[d].carrier
                    if abs(net) * L > radii[a] + radii[b] + radii[c] + radii[d]:
                        continue
                    prod = envs[a] * envs[b] * np.conj(envs[c]) * np.conj(envs[d])
                    total += _quadrature_with_residual_carrier(f.grid, prod, net)
    return float(max(total.real, 0.0)) ** 0.25


def linf_at_samples(f: MultibandFunction1D) -> float:
    """Max of |f| over the grid samples (the direct 'max over grid' measurement)."""
    return float(np.max(np.abs(f.values_at_samples())))


def lp_norm_multiband(f: MultibandFunction1D, p) -> float:
    if p == 2:
        return l2_norm(f)
    if p == 4:
        return l4_norm(f)
    if p == np.inf or p == "inf":
        return linf_at_samples(f)
    raise ValueError(
        "multi-band norms are exact only for p in {2, 4, inf}; "
        "sample onto a literal grid for other exponents")


def to_sampled_function(f: MultibandFunction1D, target: Grid1D) -> SampledFunction1D:
    """Literal single-grid rendering; requires all carriers inside the band.

    Only feasible for small carriers -- used to cross-check the multi-band
    algebra against the plain grid route.
    """
    L = _require_integer_period(f.grid)
    if int(round(target.L)) != L or target.L != f.grid.L:
        raise ValueError("target grid must share the envelope period")
    c_out = np.zeros(target.M, dtype=complex)
    idx0 = target.M // 2
    for b in f.bands:
        env_spec = b.spectrum
        M_env = f.grid.M
        for pos in np.nonzero(env_spec)[0]:
            m_env = pos - M_env // 2
            m_tot = m_env + b.carrier * L
            if not (-target.M // 2 <= m_tot < target.M // 2):
                raise NyquistError("carrier content does not fit the target grid")
            c_out[idx0 + m_tot] += env_spec[pos]
    return inverse_transform(Spectrum1D(target, c_out))
