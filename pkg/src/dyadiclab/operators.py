"""Dyadic-dilation multiplier operators, linear and bilinear.

A symbol is the sum of all dyadic dilations of one annulus-supported profile
``m0``; with band-limited inputs only finitely many dilations meet the grid,
and that truncation is exact.  Two input representations are supported:

* plain grid functions, with the symbol sampled on the grid and the bilinear
  operator evaluated as a 2D inverse transform restricted to the diagonal
  (O(M² log M)), guarded by a direct-sum oracle;
* multi-band functions paired with shifted-annulus kernels, where each band
  meets exactly the dilations selected by support arithmetic and all kernel
  phases reduce exactly (see :mod:`dyadiclab.multiband`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import FeasibilityError, NyquistError
from .grid import (
    Grid1D,
    Grid2D,
    SampledFunction1D,
    SampledFunction2D,
    Spectrum1D,
    Spectrum2D,
    _alt_signs,
    convolve,
    forward_transform,
    inverse_transform,
    quadrature,
)
from .multiband import Band, MultibandFunction1D, merge_bands, unit_phase


def _active_dilations(support, xi_min: float, xi_max: float) -> range:
    """Integers j with ``2^j [xi_min, xi_max]`` meeting ``support``."""
    lo, hi = support
    if xi_max <= 0:
        return range(0, 0)
    j_lo = math.ceil(math.log2(lo / xi_max))
    j_hi = math.floor(math.log2(hi / max(xi_min, 1e-300)))
    return range(j_lo, j_hi + 1)


class ProfileM0:
    """Annulus-supported symbol seed given by a callable profile."""

    def __init__(self, profile, support=None):
        self.profile = profile
        self.support = support if support is not None else profile.support

    def value(self, xi):
        return np.asarray(self.profile(xi), dtype=complex)

    def band_factor(self, grid: Grid1D, omega: int, j: int):
        xi = (omega + grid.freqs()) * 2.0 ** j
        return self.value(xi)


class ShiftedAnnulusM0:
    """``m0(ξ) = p̂(ξ) e^{-2πi a ξ}``: the symbol of a shifted bump kernel.

    ``offset`` is the integer shift ``a``.  Band factors reduce the phase
    ``a 2^j (ω + m/L)`` modulo one in integer arithmetic, so the huge integer
    part (which contributes nothing) never touches floating point.
    """

    def __init__(self, profile, offset: int):
        self.profile = profile
        self.offset = int(offset)
        self.support = profile.support

    def value(self, xi):
        xi = np.asarray(xi, dtype=float)
        mag = self.profile(xi)
        arg = np.mod(self.offset * xi, 1.0)
        return mag * np.exp(-2j * np.pi * arg)

    def band_factor(self, grid: Grid1D, omega: int, j: int):
        L = int(round(grid.L))
        m = grid.freq_indices().astype(np.int64)
        xi = (omega + grid.freqs()) * 2.0 ** j
        mag = self.profile(xi).astype(complex)
        if not np.any(mag):
            return mag
        # phase argument: a * 2^j * (ω + m/L) = a (ωL + m) / (2^{-j} L)
        if j <= 0:
            den = (1 << (-j)) * L
            big = (self.offset % den) * (omega * L % den) % den
            return mag * unit_phase(big + np.mod(m * (self.offset % den), den), den)
        num_scale = self.offset << j
        big = (num_scale % L) * (omega * L % L) % L
        return mag * unit_phase(big + np.mod(m * (num_scale % L), L), L)


@dataclass
class DyadicSymbol1D:
    """``m(ξ) = Σ_j m0(2^j ξ)`` with the truncation exact on the grid band."""

    m0: object  # ProfileM0 or ShiftedAnnulusM0
    name: str = "symbol"

    def j_range(self, grid: Grid1D) -> range:
        return _active_dilations(self.m0.support, 1.0 / grid.L, grid.nyquist)

    def sample_on(self, grid: Grid1D) -> np.ndarray:
        xi = grid.freqs()
        out = np.zeros(grid.M, dtype=complex)
        absxi = np.abs(xi)
        lo, hi = self.m0.support
        for j in self.j_range(grid):
            s = 2.0 ** j
            mask = (absxi * s >= lo) & (absxi * s <= hi)
            if not np.any(mask):
                continue
            out[mask] += self.m0.value(xi[mask] * s)
        return out

    def band_multiplier(self, grid: Grid1D, band: Band) -> np.ndarray:
        r = band.band_radius_index() / grid.L
        w = abs(band.carrier)
        out = np.zeros(grid.M, dtype=complex)
        for j in _active_dilations(self.m0.support,
                                   max(w - r, 1.0 / (2 * grid.L)), w + r):
            out += self.m0.band_factor(grid, band.carrier, j)
        return out

    def per_scale_pieces(self, grid: Grid1D):
        """Spatial kernels ``K_j`` whose convolutions sum to the operator."""
        xi = grid.freqs()
        for j in self.j_range(grid):
            term = np.zeros(grid.M, dtype=complex)
            mask = (np.abs(xi) * 2.0 ** j >= self.m0.support[0]) & \
                   (np.abs(xi) * 2.0 ** j <= self.m0.support[1])
            if not np.any(mask):
                continue
            term[mask] = self.m0.value(xi[mask] * 2.0 ** j)
            yield j, inverse_transform(Spectrum1D(grid, term))


def apply_linear(symbol: DyadicSymbol1D, f, via: str = "multiplier"):
    """Apply the dyadic multiplier operator.

    ``via='multiplier'`` multiplies the assembled symbol in frequency;
    ``via='per_scale'`` convolves the per-dilation kernels one by one and
    sums, which exercises the truncation logic independently.
    """
    if isinstance(f, MultibandFunction1D):
        out = [Band(b.carrier, b.spectrum * symbol.band_multiplier(f.grid, b))
               for b in f.bands]
        return merge_bands(f.grid, out)
    if via == "per_scale":
        acc = np.zeros(f.grid.M, dtype=complex)
        for _, kj in symbol.per_scale_pieces(f.grid):
            acc = acc + convolve(kj, f).values
        return SampledFunction1D(f.grid, acc)
    m = symbol.sample_on(f.grid)
    spec = forward_transform(f)
    return inverse_transform(Spectrum1D(f.grid, spec.coeffs * m))


# ---------------------------------------------------------------------------
# bilinear kernels on the plane


def _measured_radial_support(spec: Spectrum2D, rel_tol: float = 1e-12):
    g = spec.grid
    xi = g.freqs()
    X1, X2 = np.meshgrid(xi, xi, indexing="ij")
    R = np.hypot(X1, X2)
    mag = np.abs(spec.coeffs)
    mask = mag > rel_tol * max(float(np.max(mag)), 1e-300)
    if not np.any(mask):
        return (0.0, 0.0)
    return (float(np.min(R[mask])), float(np.max(R[mask])))


@dataclass
class BilinearKernel:
    """Kernel on the plane with annulus-supported transform.

    Carries the sampled kernel, its transform, exact-as-stored radial
    frequency support bounds, and (for transposes) the primal kernel's
    support that fixes the dilation truncation.
    """

    sf: SampledFunction2D
    support_radial: tuple
    primal_support: tuple | None = None

    def dilation_range(self, grid2: Grid2D) -> range:
        lo, hi = self.primal_support or self.support_radial
        if hi <= 0:
            return range(0, 0)
        xi_min = 1.0 / grid2.L
        xi_max = grid2.nyquist * np.sqrt(2.0)
        return range(math.ceil(math.log2(xi_min / hi)),
                     math.floor(math.log2(xi_max / max(lo, 1e-300))) + 1)

    @classmethod
    def from_spectrum(cls, grid: Grid2D, coeffs: np.ndarray, support=None):
        spec = Spectrum2D(grid, coeffs)
        sup = support if support is not None else _measured_radial_support(spec)
        k = cls(inverse_transform(spec), sup)
        k.__dict__["spectrum"] = spec
        return k

    @classmethod
    def from_values(cls, sf: SampledFunction2D, support=None):
        k = cls(sf, (0.0, 0.0))
        if support is None:
            k.support_radial = _measured_radial_support(k.spectrum)
        else:
            k.support_radial = support
        return k

    @cached_property
    def spectrum(self) -> Spectrum2D:
        return forward_transform(self.sf)

    def spatial_radius(self, rel_tol: float = 1e-10) -> float:
        g = self.sf.grid
        X, Y = g.points()
        mag = np.abs(self.sf.values)
        mask = mag > rel_tol * max(float(np.max(mag)), 1e-300)
        if not np.any(mask):
            return 0.0
        return float(np.max(np.maximum(np.abs(X[mask]), np.abs(Y[mask]))))


def transpose_kernel(K: BilinearKernel, which: int, on_wrap: str = "reject") -> BilinearKernel:
    """Transpose kernels by the exact coordinate remaps

    ``K*1(y1, y2) = K(-y1, -y1+y2)``,  ``K*2(y1, y2) = K(y1-y2, -y2)``.

    The maps are unimodular, so mass functionals are preserved up to the
    bounded distortion of ``|y|``.  Content outside ``|y| <= L/4`` would wrap
    around the torus under the remap; by default that is rejected.
    """
    if which not in (1, 2):
        raise ValueError("which must be 1 or 2")
    g = K.sf.grid
    M = g.M
    if on_wrap == "reject" and K.spatial_radius() > g.L / 4 * (1 + 1e-9):
        raise FeasibilityError(
            "kernel support exceeds L/4; transpose remap would wrap "
            "(construct on a larger torus or pass on_wrap='allow')")
    i1 = np.arange(M)[:, None]
    i2 = np.arange(M)[None, :]
    if which == 1:
        src1 = (M - i1) % M
        src2 = (M // 2 + i2 - i1) % M
    else:
        src1 = (M // 2 + i1 - i2) % M
        src2 = (M - i2) % M
    vals = K.sf.values[src1, src2]
    lo, hi = K.support_radial
    phi = (1 + 5 ** 0.5) / 2  # extreme singular values of the frequency remap
    out = BilinearKernel.from_values(
        SampledFunction2D(g, vals), support=(lo / phi, hi * phi))
    out.primal_support = K.primal_support or K.support_radial
    return out


def assemble_symbol2d(K: BilinearKernel, grid2: Grid2D,
                      l_range: range | None = None) -> np.ndarray:
    """``m(ξ⃗) = Σ_l K̂(2^{-l} ξ⃗)`` sampled on the pair-frequency grid.

    Dilations are taken in the torus sense: ``l <= 0`` terms are exact
    spectrum gathers and ``l > 0`` terms transform the index-decimated
    samples ``K(2^l y mod torus)``, the same periodization model as
    ``grid.dyadic_dilate``.  Torus dilation commutes with the transpose
    coordinate maps, so the operator/transpose duality identities hold
    exactly; kernels that decay inside the fundamental domain also agree
    with the line reading up to wrap-around.

    ``l_range`` defaults to the dilations whose line supports meet the grid
    band; transposed kernels inherit the primal kernel's range so that both
    sides of a duality pairing truncate identically.
    """
    if grid2.L != K.sf.grid.L or grid2.M != K.sf.grid.M:
        raise FeasibilityError("kernel and pair grid must coincide")
    M = grid2.M
    out = np.zeros((M, M), dtype=complex)
    if l_range is None:
        l_range = K.dilation_range(grid2)
    khat = K.spectrum.coeffs
    idx = grid2.freq_indices()
    for l in l_range:
        if l <= 0:
            F1, F2 = np.broadcast_arrays(idx[:, None] * (1 << (-l)),
                                         idx[None, :] * (1 << (-l)))
            use = (np.abs(F1) < M // 2) & (np.abs(F2) < M // 2)
            out[use] += khat[F1[use] + M // 2, F2[use] + M // 2]
        else:
            i = np.arange(M)
            src = (((i - M // 2) << l) + M // 2) % M
            out += forward_transform(
                SampledFunction2D(grid2, K.sf.values[np.ix_(src, src)])).coeffs
    return out


def _char_matrix(grid: Grid1D) -> np.ndarray:
    """``W[q, i] = e^{2πi q x_i / L}`` on centered indices."""
    M = grid.M
    q = grid.freq_indices()
    i = np.arange(M)
    ph = np.exp(2j * np.pi * ((q[:, None] * i[None, :]) % M) / M)
    return _alt_signs(M)[:, None] * ph


def _check_safe_band(c1: np.ndarray, c2: np.ndarray, M: int):
    def extent(c):
        nz = np.nonzero(np.abs(c) > 1e-13 * max(float(np.max(np.abs(c))), 1e-300))[0]
        return 0 if len(nz) == 0 else int(np.max(np.abs(nz - M // 2)))
    if extent(c1) + extent(c2) > M // 2 - 1:
        raise NyquistError("input spectra too wide: the product band leaves the grid")


def apply_bilinear(kernel, f1, f2):
    """Bilinear dyadic multiplier operator ``(f1, f2) -> Σ_l K_l * (f1 ⊗ f2)`` on the diagonal.

    Grid route: assemble the pair symbol, multiply the tensor spectrum, invert
    along rows and restrict to the diagonal — O(M² log M).  Multi-band route
    (shifted product kernels): per band pair, support arithmetic selects the
    exact dilation set and each factor acts separably on the envelopes.
    """
    if isinstance(f1, MultibandFunction1D):
        return _apply_bilinear_multiband(kernel, f1, f2)
    g = f1.grid
    if f2.grid != g:
        raise FeasibilityError("inputs must share a grid")
    c1 = forward_transform(f1).coeffs
    c2 = forward_transform(f2).coeffs
    M = g.M
    _check_safe_band(c1, c2, M)
    m2d = kernel if isinstance(kernel, np.ndarray) else assemble_symbol2d(
        kernel, Grid2D(g.L, g.M))
    A = m2d * np.outer(c1, c2)
    # rows: s_{q1}(x_i) = Σ_{q2} A[q1, q2] e^{2πi q2 x_i / L}
    rows = M * np.fft.ifft(np.fft.ifftshift(_alt_signs(M)[None, :] * A, axes=1), axis=1)
    W = _char_matrix(g)
    vals = np.sum(W * rows, axis=0) / (g.L ** 2)
    return SampledFunction1D(g, vals)


def bilinear_oracle(kernel, f1, f2):
    """Direct triple-sum evaluation; size-guarded independent reference."""
    g = f1.grid
    M = g.M
    if M > 128:
        raise FeasibilityError("oracle is O(M^3); use M <= 128")
    c1 = forward_transform(f1).coeffs
    c2 = forward_transform(f2).coeffs
    _check_safe_band(c1, c2, M)
    m2d = kernel if isinstance(kernel, np.ndarray) else assemble_symbol2d(
        kernel, Grid2D(g.L, g.M))
    A = m2d * np.outer(c1, c2)
    W = _char_matrix(g)
    vals = np.einsum("qi,qp,pi->i", W, A, W) / (g.L ** 2)
    return SampledFunction1D(g, vals)


def trilinear_form(kernel, f1, f2, f3) -> complex:
    """``Λ(f1, f2, f3) = ∫ B(f1, f2) f3 dx``."""
    b = apply_bilinear(kernel, f1, f2)
    return complex(quadrature(SampledFunction1D(b.grid, b.values * f3.values)))


@dataclass
class ProductShiftedKernel:
    """``K(y1, y2) = p(y1 - a) p(y2 - a)``: the separable shifted-bump kernel.

    ``p`` is determined by an annulus profile ``p̂``; the transform is
    ``K̂(ξ1, ξ2) = p̂(ξ1) p̂(ξ2) e^{-2πi a (ξ1 + ξ2)}``, supported where both
    factors live in the annulus.  Each dyadic dilation acts separably, so the
    bilinear operator on multi-band inputs reduces to products of 1D band
    multipliers with exact phases.
    """

    profile: object  # RadialProfile of the bump transform
    offset: int

    @property
    def factor_m0(self) -> ShiftedAnnulusM0:
        return ShiftedAnnulusM0(self.profile, self.offset)

    def pair_support(self):
        lo, hi = self.profile.support
        return (lo * np.sqrt(2.0), hi * np.sqrt(2.0))

    def envelope_1d(self, grid: Grid1D) -> SampledFunction1D:
        """The un-shifted bump ``p`` on a grid (for mass functionals)."""
        c = self.profile(grid.freqs()).astype(complex)
        return inverse_transform(Spectrum1D(grid, c))

    def d_lambda(self, lam: float, grid: Grid1D, chunk: int = 256) -> float:
        """``∫∫ |K| log(e+|y|)^λ dy`` with the shift handled in the weight."""
        p = np.abs(self.envelope_1d(grid).values)
        z = grid.points() + self.offset
        total = 0.0
        for start in range(0, grid.M, chunk):
            z1 = z[start:start + chunk, None]
            w = np.log(np.e + np.hypot(z1, z[None, :])) ** lam
            total += float(np.sum(p[start:start + chunk, None] * p[None, :] * w))
        return (grid.h ** 2) * total


def _band_dilation_candidates(kernel: ProductShiftedKernel, grid: Grid1D, band: Band) -> set:
    lo, hi = kernel.profile.support
    r = band.band_radius_index() / grid.L
    w_lo = max(abs(band.carrier) - r, 1.0 / (2 * grid.L))
    w_hi = abs(band.carrier) + r
    # l with 2^{-l}(|ω| ± r) meeting [lo, hi]
    l_lo = math.ceil(math.log2(w_lo / hi))
    l_hi = math.floor(math.log2(w_hi / lo))
    return set(range(l_lo, l_hi + 1))


def _apply_bilinear_multiband(kernel: ProductShiftedKernel,
                              f1: MultibandFunction1D,
                              f2: MultibandFunction1D) -> MultibandFunction1D:
    g = f1.grid
    if f2.grid != g:
        raise FeasibilityError("inputs must share an envelope grid")
    m0 = kernel.factor_m0
    out = []
    for b1 in f1.bands:
        ls1 = _band_dilation_candidates(kernel, g, b1)
        for b2 in f2.bands:
            ls = ls1 & _band_dilation_candidates(kernel, g, b2)
            if (b1.band_radius_index() + b2.band_radius_index()) > g.M // 2 - 1:
                raise NyquistError("envelope product leaves the envelope band")
            for l in sorted(ls):
                m1 = m0.band_factor(g, b1.carrier, -l)
                if not np.any(m1):
                    continue
                m2 = m0.band_factor(g, b2.carrier, -l)
                if not np.any(m2):
                    continue
                e1 = inverse_transform(Spectrum1D(g, b1.spectrum * m1))
                e2 = inverse_transform(Spectrum1D(g, b2.spectrum * m2))
                prod = forward_transform(
                    SampledFunction1D(g, e1.values * e2.values))
                out.append(Band(b1.carrier + b2.carrier, prod.coeffs))
    return merge_bands(g, out)
