"""Littlewood-Paley pieces, shifted square functions, and maximal operators.

Pieces are frequency localizations ``ψ_k * f`` (annulus ``|ξ| ~ 2^k``); the
shifted piece translates by the scale-adapted amount ``2^{-k} y``.  On the
torus every translation is exact, so per-piece L² norms are shift-invariant
to round-off; interpreting a shifted piece as an object on the line is valid
only while ``|2^{-k} y| < L/4`` (the wrap guard below).  A full square
function inevitably contains coarse scales that wrap for large ``y``; it is
therefore computed with the periodic shift, which is the exact torus model.

Both plain grid functions and multi-band functions are accepted; for the
latter every operation acts band by band on envelopes with exact phases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import maximum_filter1d

from .bumps import BumpFamily
from .errors import DyadicLabError, FeasibilityError
from .grid import (
    Grid1D,
    SampledFunction1D,
    Spectrum1D,
    forward_transform,
    inverse_transform,
)
from .multiband import Band, MultibandFunction1D, merge_bands, unit_phase


def admissible_k_range(grid: Grid1D, profile) -> range:
    """All k for which the dilated annulus meets the grid's frequency band."""
    lo, hi = profile.support
    k_max = math.floor(math.log2(grid.nyquist / lo))
    k_min = math.ceil(math.log2(1.0 / (grid.L * hi)))
    return range(k_min, k_max + 1)


def nonzero_k_range(f, profile) -> range:
    """Exact finite set of k with ``ψ_k * f != 0`` for band-limited ``f``."""
    if isinstance(f, MultibandFunction1D):
        ks: set[int] = set()
        for b in f.bands:
            ks.update(_band_k_range(f.grid, b, profile))
        if not ks:
            return range(0, 0)
        return range(min(ks), max(ks) + 1)
    spec = forward_transform(f)
    nz = np.nonzero(np.abs(spec.coeffs) > 1e-300)[0]
    if len(nz) == 0:
        return range(0, 0)
    m = np.abs(nz - f.grid.M // 2)
    m_pos = m[m > 0]
    lo, hi = profile.support
    if len(m_pos) == 0:
        return range(0, 0)
    xi_min = float(np.min(m_pos)) / f.grid.L
    xi_max = float(np.max(m_pos)) / f.grid.L
    k_min = math.ceil(math.log2(xi_min / hi))
    k_max = math.floor(math.log2(xi_max / lo))
    return range(k_min, k_max + 1)


def _band_k_range(grid: Grid1D, band: Band, profile) -> range:
    lo, hi = profile.support
    r = band.band_radius_index() / grid.L
    w_lo = max(abs(band.carrier) - r, 1.0 / (2 * grid.L))
    w_hi = abs(band.carrier) + r
    k_min = math.ceil(math.log2(w_lo / hi))
    k_max = math.floor(math.log2(w_hi / lo))
    return range(k_min, k_max + 1)


def _piece_multiplier_grid(grid: Grid1D, k: int, profile) -> np.ndarray:
    return profile(grid.freqs() * 2.0 ** (-k))


def lp_piece(f, k: int, fam: BumpFamily):
    """``ψ_k * f`` by frequency multiplication (exact for band-limited f)."""
    prof = fam.psi.hat
    if isinstance(f, MultibandFunction1D):
        out = []
        for b in f.bands:
            mult = prof((b.carrier + f.grid.freqs()) * 2.0 ** (-k))
            out.append(Band(b.carrier, b.spectrum * mult))
        return merge_bands(f.grid, out)
    if k not in admissible_k_range(f.grid, prof):
        raise FeasibilityError(f"k={k} outside the admissible dyadic range of the grid")
    spec = forward_transform(f)
    return inverse_transform(
        Spectrum1D(f.grid, spec.coeffs * _piece_multiplier_grid(f.grid, k, prof)))


def decompose(f, fam: BumpFamily):
    ks = nonzero_k_range(f, fam.psi.hat)
    pieces = {k: lp_piece(f, k, fam) for k in ks}
    return LPDecomposition(f, pieces, ks, fam.c_partition)


@dataclass(frozen=True)
class LPDecomposition:
    base: object
    pieces: dict
    k_range: range
    c_partition: float

    def reconstruct(self):
        """``(1/C) Σ_k ψ_k * f``; equals ``f`` minus its zero-frequency mode."""
        if isinstance(self.base, MultibandFunction1D):
            raise DyadicLabError("reconstruction is a grid-path diagnostic")
        g = self.base.grid
        acc = np.zeros(g.M, dtype=complex)
        for p in self.pieces.values():
            acc = acc + p.values
        return SampledFunction1D(g, acc / self.c_partition)


def _shift_phase(grid: Grid1D, y, k: int) -> np.ndarray:
    """Spectrum multiplier for translation by ``2^{-k} y`` (exact for integer y)."""
    m = grid.freq_indices()
    L_int = int(round(grid.L))
    y_int = int(round(y)) if float(y) == int(round(y)) else None
    if y_int is not None and grid.L == L_int:
        if k >= 0:
            return unit_phase(m.astype(np.int64) * y_int, (1 << k) * L_int)
        return unit_phase(m.astype(np.int64) * (y_int << (-k)), L_int)
    arg = np.mod(m / grid.L * (y * 2.0 ** (-k)), 1.0)
    return np.exp(-2j * np.pi * arg)


@dataclass(frozen=True)
class ShiftedPiece:
    k: int
    y: float
    values: object  # SampledFunction1D or MultibandFunction1D


def shifted_piece(f, k: int, y, fam: BumpFamily, enforce_wrap: bool = True) -> ShiftedPiece:
    """``(ψ_k)^y * f``: the k-th piece translated by ``2^{-k} y``.

    Implemented as frequency-side modulation of ``ψ_k * f``.  With
    ``enforce_wrap`` the translation must satisfy ``|2^{-k} y| < L/4`` so the
    result is meaningful as a function on the line, not just on the torus.
    """
    shift = abs(y) * 2.0 ** (-k)
    if enforce_wrap and shift >= f.grid.L / 4:
        raise FeasibilityError(
            f"shift 2^({-k})*{y} = {shift} wraps the torus (L/4 = {f.grid.L / 4})")
    prof = fam.psi.hat
    if isinstance(f, MultibandFunction1D):
        out = []
        for b in f.bands:
            u = f.grid.freqs()
            mult = prof((b.carrier + u) * 2.0 ** (-k))
            if not np.any(mult):
                continue
            ph = _band_shift_phase(f.grid, b.carrier, y, k)
            out.append(Band(b.carrier, b.spectrum * mult * ph))
        return ShiftedPiece(k, y, merge_bands(f.grid, out))
    piece = lp_piece(f, k, fam)
    spec = forward_transform(piece)
    vals = inverse_transform(
        Spectrum1D(f.grid, spec.coeffs * _shift_phase(f.grid, y, k)))
    return ShiftedPiece(k, y, vals)


def _band_shift_phase(grid: Grid1D, carrier: int, y, k: int) -> np.ndarray:
    """Phase of translating a carrier-``ω`` band by ``2^{-k} y``:
    ``exp(-2πi (ω + m/L) 2^{-k} y)``, reduced exactly for integer y."""
    m = grid.freq_indices().astype(np.int64)
    L_int = int(round(grid.L))
    y_int = int(round(y)) if float(y) == int(round(y)) else None
    if y_int is not None and grid.L == L_int:
        if k >= 0:
            den = (1 << k) * L_int
            big = (carrier * L_int % den) * y_int % den
            return unit_phase(big + np.mod(m * y_int, den), den)
        yy = y_int << (-k)
        big = (carrier * L_int % L_int) * yy % L_int
        return unit_phase(big + np.mod(m * yy, L_int), L_int)
    arg = np.mod((carrier + m / grid.L) * (y * 2.0 ** (-k)), 1.0)
    return np.exp(-2j * np.pi * arg)


def square_function(f, y, fam: BumpFamily, k_range=None) -> SampledFunction1D:
    """``S^y f = (Σ_k |(ψ_k)^y * f|²)^{1/2}`` over the exact nonzero k-range.

    Coarse scales of a full decomposition always wrap for large ``y``; the
    periodic shift is used, which keeps every piece's L² norm exact.
    """
    ks = k_range if k_range is not None else nonzero_k_range(f, fam.psi.hat)
    if isinstance(f, MultibandFunction1D):
        g = f.grid
        acc = np.zeros(g.M)
        for k in ks:
            p = shifted_piece(f, k, y, fam, enforce_wrap=False).values
            if len(p.bands) == 0:
                continue
            if len(p.bands) == 1:
                acc += np.abs(p.envelope(p.bands[0]).values) ** 2
            else:
                acc += np.abs(p.values_at_samples()) ** 2
        return SampledFunction1D(g, np.sqrt(acc))
    g = f.grid
    acc = np.zeros(g.M)
    for k in ks:
        p = shifted_piece(f, k, y, fam, enforce_wrap=False).values
        acc += np.abs(p.values) ** 2
    return SampledFunction1D(g, np.sqrt(acc))


def hl_maximal(f: SampledFunction1D, r: float) -> SampledFunction1D:
    """Modified Hardy-Littlewood maximal function over grid-aligned intervals.

    ``M_r f(x) = sup_Q (avg_Q |f|^r)^{1/r}`` with Q running over all
    grid-aligned periodic intervals of dyadic length ``2^s h <= L``.
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    g = f.grid
    a = np.abs(f.values) ** r
    M = g.M
    best = np.array(a)  # window of one sample
    cs = np.concatenate([[0.0], np.cumsum(np.concatenate([a, a]))])
    s = 1
    while (1 << s) <= M:
        W = 1 << s
        means = (cs[W:W + M] - cs[:M]) / W
        # out[x] = max over window starts in [x-W+1, x] (windows containing x)
        windowed = maximum_filter1d(means, size=W, mode="wrap", origin=(W - 1) // 2)
        np.maximum(best, windowed, out=best)
        s += 1
    return SampledFunction1D(g, best ** (1.0 / r))


def peetre_maximal(f: SampledFunction1D, sigma: float, k: int,
                   window: bool = False, window_drop: float = 1e-6) -> SampledFunction1D:
    """``sup_y |f(x-y)| / (1 + 2^k |y|)^σ`` over grid points (periodic distance).

    The exhaustive O(M²) scan is the reference mode; ``window`` restricts the
    scan to offsets where the weight exceeds ``window_drop`` (the two modes
    agree to that tolerance times ``max |f|``).
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    g = f.grid
    M = g.M
    absf = np.abs(f.values)
    yj = g.h * np.arange(M)
    dist = np.minimum(yj, g.L - yj)  # periodic |y| for offsets j*h
    w = (1.0 + (2.0 ** k) * dist) ** (-sigma)
    if window:
        keep = w > window_drop
    else:
        keep = np.ones(M, dtype=bool)
    offs = np.nonzero(keep)[0]
    i = np.arange(M)
    out = np.zeros(M)
    chunk = max(1, int(2e7) // M)
    for start in range(0, len(offs), chunk):
        js = offs[start:start + chunk]
        vals = absf[(i[None, :] - js[:, None]) % M] * w[js][:, None]
        np.maximum(out, vals.max(axis=0), out=out)
    return SampledFunction1D(g, out)
