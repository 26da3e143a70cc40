"""Rough bilinear singular integrals on the plane (one-dimensional inputs).

The rough kernel is ``K(y) = Ω(y/|y|) / |y|²`` with ``Ω`` mean-zero on the
circle.  Following the smooth-decomposition approach, ``K`` is cut into
spatial dyadic annuli ``K_k = Γ̂(2^k |y|) K(y)`` and each annulus is further
smoothed at frequency scale ``2^{j+k}``:

    K^j_k = Γ_{j+k} * K_k,        K^j = Σ_k K^j_k,

so ``K̂^j(ξ) = Σ_k K̂_k(ξ) Γ̂(2^{-(j+k)} ξ)``.  On the grid the annulus
profile is exact, so each piece's frequency support is exact and the dyadic
truncation is the set of spatially resolvable annuli.

``Ω`` is modelled as the step function taking the sampled value on each arc
of width ``2π/Q`` (nearest-sample evaluation), which makes the circle
quadrature and the plane sampling consistent.  Discrete vanishing moments
are enforced per annulus: the plane quadrature of each ``K_k`` is made
exactly zero by subtracting a multiple of the ``Ω ≡ 1`` profile, the
discrete analogue of the mean-zero hypothesis (angular quadrature on a
Cartesian grid would otherwise leave an O(h) residue that floors the
small-frequency decay).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .bumps import BumpFamily
from .errors import FeasibilityError
from .grid import (
    Grid2D,
    SampledFunction1D,
    SampledFunction2D,
    forward_transform,
    fourier_at,
    quadrature,
)
from .operators import apply_bilinear


@dataclass(frozen=True)
class SphereFunction:
    """Samples of Ω at ``θ_i = 2πi/Q`` with the normalized measure (weights 1/Q).

    ``smooth_fn``, when present, is the analytic angular profile the samples
    came from; plane evaluations then use it instead of the step extension,
    which keeps kernels built from smooth Ω spectrally smooth.  Rough Ω
    (jump functions, spikes) stay on the step model.
    """

    values: np.ndarray
    smooth_fn: object = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).copy()
        if v.ndim != 1 or len(v) % 2 != 0:
            raise ValueError("need a 1D sample array of even length")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def Q(self) -> int:
        return len(self.values)

    @property
    def weights(self) -> np.ndarray:
        return np.full(self.Q, 1.0 / self.Q)

    def mean(self) -> float:
        return float(np.mean(self.values))

    def l1(self) -> float:
        """``‖Ω‖_{L¹(dν)}`` with the normalized measure."""
        return float(np.mean(np.abs(self.values)))

    def value_at(self, theta: np.ndarray) -> np.ndarray:
        """Analytic evaluation when available, else the nearest sampled arc."""
        if self.smooth_fn is not None:
            return self.smooth_fn(np.asarray(theta))
        idx = np.mod(np.rint(np.asarray(theta) / (2 * np.pi / self.Q)).astype(int), self.Q)
        return self.values[idx]

    @classmethod
    def from_csv(cls, path):
        thetas, vals = [], []
        with open(path, newline="") as fh:
            r = csv.reader(fh)
            next(r)
            for row in r:
                thetas.append(float(row[0]))
                vals.append(float(row[1]))
        Q = len(vals)
        expected = 2 * np.pi * np.arange(Q) / Q
        if np.max(np.abs(np.array(thetas) - expected)) > 1e-9:
            raise ValueError("CSV thetas must be the uniform grid 2*pi*i/Q")
        return cls(np.array(vals))


def odd_harmonic(Q: int, n: int = 1, amplitude: float = 1.0) -> SphereFunction:
    th = 2 * np.pi * np.arange(Q) / Q
    return SphereFunction(amplitude * np.cos(n * th),
                          smooth_fn=lambda t: amplitude * np.cos(n * t))


def harmonic_mixture(Q: int, terms=((1, 1.0), (3, 4.0), (8, 16.0))) -> SphereFunction:
    """Weighted sum of harmonics ``Σ a_n cos(nθ)``.

    A single harmonic saturates the multiplier bound only in the frequency
    window matched to its order; the default lacunary mixture (weights rise
    with the order to offset the transform's amplitude decay) saturates it
    across several dyadic windows at once, which is the right witness when
    checking that the normalized multiplier constants are scale-uniform.
    """
    th = 2 * np.pi * np.arange(Q) / Q
    vals = np.zeros(Q)
    for n, a in terms:
        vals += a * np.cos(n * th)
    terms = tuple(terms)

    def fn(t):
        out = np.zeros_like(np.asarray(t, dtype=float))
        for n, a in terms:
            out += a * np.cos(n * t)
        return out

    return SphereFunction(vals, smooth_fn=fn)


def two_level(Q: int, mu: int) -> SphereFunction:
    """Two-valued ``±2^mu`` on half-circles; exactly mean-zero."""
    v = np.where(np.arange(Q) < Q // 2, 2.0 ** mu, -(2.0 ** mu))
    return SphereFunction(v)


def spike(Q: int, a: float = 2.0, scale: float = 1.0) -> SphereFunction:
    """Antisymmetric near-integrable spike with ``∫|Ω| log^a(e+|Ω|) < ∞``.

    ``g(d) = d^{-1} (log(e + 1/d))^{-a-2}`` mollified at half an arc width,
    placed at θ=0 and subtracted at θ=π.
    """
    th = 2 * np.pi * np.arange(Q) / Q
    delta = np.pi / Q

    def g(d):
        d = np.abs(d) + delta
        return scale / d / np.log(np.e + 1.0 / d) ** (a + 2.0)

    def circ(t, c):
        d = np.mod(t - c, 2 * np.pi)
        return np.minimum(d, 2 * np.pi - d)

    return SphereFunction(g(circ(th, 0.0)) - g(circ(th, np.pi)))


def project_vanishing(omega: SphereFunction) -> SphereFunction:
    """Subtract the ν-mean so the vanishing moment condition holds exactly."""
    mean = omega.mean()
    fn = omega.smooth_fn
    smooth = (lambda t: fn(t) - mean) if fn is not None else None
    return SphereFunction(omega.values - mean, smooth_fn=smooth)


@dataclass(frozen=True)
class LevelSetSplit:
    """Pieces ``Ω^μ = Ω χ_{D^μ} - ∫_{D^μ} Ω dν`` on the sets where |Ω| ~ 2^μ."""

    omega: SphereFunction
    pieces: dict
    masks: dict
    mu_max: int

    def reconstruction_residual(self) -> float:
        total = np.zeros(self.omega.Q)
        for p in self.pieces.values():
            total = total + p.values
        target = self.omega.values - self.omega.mean()
        return float(np.max(np.abs(total - target)))


def level_split(omega: SphereFunction) -> LevelSetSplit:
    a = np.abs(omega.values)
    mu_max = 0 if np.max(a) <= 1 else int(math.ceil(math.log2(np.max(a))))
    pieces, masks = {}, {}
    for mu in range(mu_max + 1):
        if mu == 0:
            mask = a <= 1.0
        else:
            mask = (a > 2.0 ** (mu - 1)) & (a <= 2.0 ** mu)
        chunk = np.where(mask, omega.values, 0.0)
        pieces[mu] = SphereFunction(chunk - np.mean(chunk))
        masks[mu] = mask
    return LevelSetSplit(omega, pieces, masks, mu_max)


def _resolvable_annuli(grid2: Grid2D, inner_cells: float = 2.0,
                       outer_fraction: float = 0.25) -> range:
    """k with the spatial annulus ``[2^{-k-1}, 2^{-k+1}]`` resolvable on the grid."""
    k_hi = math.floor(math.log2(1.0 / (2 * inner_cells * grid2.h)))
    k_lo = math.ceil(math.log2(2.0 / (outer_fraction * grid2.L)))
    if k_lo > k_hi:
        raise FeasibilityError("grid cannot resolve any dyadic annulus of the kernel")
    return range(k_lo, k_hi + 1)


@dataclass
class KernelDecomposition:
    """The smooth dyadic decomposition of a rough kernel on a 2D grid."""

    omega: SphereFunction
    fam: BumpFamily
    grid2: Grid2D
    k_range: range
    kernels_k: dict = field(default_factory=dict)   # k -> SampledFunction2D (K_k)
    corrections: dict = field(default_factory=dict)  # k -> subtracted moment ratio

    @cached_property
    def khat_k(self) -> dict:
        return {k: forward_transform(v).coeffs for k, v in self.kernels_k.items()}

    @cached_property
    def _pair_radii(self) -> np.ndarray:
        xi = self.grid2.freqs()
        X1, X2 = np.meshgrid(xi, xi, indexing="ij")
        return np.hypot(X1, X2)

    def gamma_factor(self, scale_k: int) -> np.ndarray:
        """``Γ̂(2^{-scale_k} |ξ|)`` on the pair grid (exact support)."""
        return self.fam.gamma.hat.radial(self._pair_radii * 2.0 ** (-scale_k))

    def symbol_j(self, j: int) -> np.ndarray:
        """``K̂^j`` on the pair grid: ``Σ_k K̂_k(ξ) Γ̂(2^{-(j+k)} ξ)``."""
        out = np.zeros((self.grid2.M, self.grid2.M), dtype=complex)
        for k in self.k_range:
            out += self.khat_k[k] * self.gamma_factor(j + k)
        return out

    def piece(self, j: int, k: int) -> SampledFunction2D:
        """``K^j_k = Γ_{j+k} * K_k`` (inverse transform of the exact product)."""
        from .grid import Spectrum2D, inverse_transform
        coeffs = self.khat_k[k] * self.gamma_factor(j + k)
        return inverse_transform(Spectrum2D(self.grid2, coeffs))

    def khat0_at(self, points: np.ndarray) -> np.ndarray:
        """``K̂_0`` at arbitrary frequencies by the direct sum over its support."""
        return fourier_at(self.kernels_k[0], points)


def drf_decompose(omega: SphereFunction, fam: BumpFamily, grid2: Grid2D,
                  k_range: range | None = None,
                  enforce_discrete_moment: bool = True) -> KernelDecomposition:
    """Build the annulus pieces ``K_k`` of ``K(y) = Ω(θ_y)/|y|²`` on the grid.

    Each ``K_k`` is sampled analytically (the annulus profile kills the
    singularity), optionally with its plane quadrature forced to zero, see
    the module docstring.  Passing ``enforce_discrete_moment=False`` also
    skips the mean-zero requirement: that mode exists for the paired
    contrast tests showing what breaks without the vanishing moment.
    """
    if enforce_discrete_moment and abs(omega.mean()) > 1e-10 * max(omega.l1(), 1e-300):
        raise FeasibilityError("omega must be mean-zero; call project_vanishing first")
    if k_range is None:
        k_range = _resolvable_annuli(grid2)
    X, Y = grid2.points()
    R = np.hypot(X, Y)
    theta = np.arctan2(Y, X)
    omega_plane = omega.value_at(theta)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_r2 = np.where(R > 0, 1.0 / np.where(R > 0, R, 1.0) ** 2, 0.0)
    dec = KernelDecomposition(omega, fam, grid2, k_range)
    prof = fam.gamma.hat
    for k in k_range:
        cut = prof.radial(R * 2.0 ** k)
        base = cut * inv_r2
        vals = base * omega_plane
        c = 0.0
        if enforce_discrete_moment:
            mass = float(np.sum(base))
            if mass > 0:
                c = float(np.sum(vals)) / mass
                vals = vals - c * base
        dec.kernels_k[k] = SampledFunction2D(grid2, vals)
        dec.corrections[k] = c
    return dec


def telescoping_residual(dec: KernelDecomposition, j_range: range) -> float:
    """Max relative residual of ``Σ_j K̂^j_0 = K̂_0`` on the band where the
    dilation sum of the annulus profile is complete."""
    khat0 = dec.khat_k[0]
    R = dec._pair_radii
    total = np.zeros_like(khat0)
    for j in j_range:
        total += khat0 * dec.gamma_factor(j)
    lo = 2.0 ** (j_range.start + 1)
    hi = 2.0 ** (j_range.stop - 2)
    band = (R >= lo) & (R <= hi)
    scale = max(float(np.max(np.abs(khat0[band]))), 1e-300)
    return float(np.max(np.abs(total[band] - khat0[band]))) / scale


def out_of_band_energy(dec: KernelDecomposition, j: int) -> float:
    """Energy fraction of ``K̂^j_0`` outside the annulus ``[2^{j-1}, 2^{j+1}]``."""
    coeffs = dec.khat_k[0] * dec.gamma_factor(j)
    R = dec._pair_radii
    inside = (R >= 2.0 ** (j - 1)) & (R <= 2.0 ** (j + 1))
    tot = float(np.sum(np.abs(coeffs) ** 2))
    if tot == 0:
        return 0.0
    return float(np.sum(np.abs(coeffs[~inside]) ** 2)) / tot


def _radial_derivatives(profile, rho: np.ndarray, rel_step: float = 1e-5):
    """First and second derivatives of a radial profile by central differences."""
    d = np.maximum(np.abs(rho), 1e-6) * rel_step
    f_p = profile.radial(rho + d)
    f_m = profile.radial(np.maximum(rho - d, 0.0))
    f_0 = profile.radial(rho)
    d1 = (f_p - f_m) / (2 * d)
    d2 = (f_p - 2 * f_0 + f_m) / (d * d)
    return d1, d2


@dataclass
class MikhlinReport:
    rows: list = field(default_factory=list)  # (j, alpha, constant)

    def constant(self, j: int, alpha: tuple) -> float:
        for jj, aa, c in self.rows:
            if jj == j and aa == alpha:
                return c
        raise KeyError((j, alpha))

    def spread(self, alpha: tuple) -> float:
        cs = [c for _, aa, c in self.rows if aa == alpha]
        return max(cs) / max(min(cs), 1e-300)


def mikhlin_check(dec: KernelDecomposition, j_list, alpha_max: int = 2) -> MikhlinReport:
    """Constants ``sup_ξ |ξ|^{|α|} |∂^α K̂^j(ξ)| / (2^j ‖Ω‖_{L¹(dν)})``.

    ``∂^α`` falls on the product ``K̂_k · Γ̂`` by the Leibniz rule; kernel
    factors are transforms of ``(-2πi y)^β K_k`` (exact: the pieces are
    compactly supported) and the annulus factor is differentiated on its
    radial profile.
    """
    for j in j_list:
        if j > 0:
            raise ValueError("the multiplier bound is checked for j <= 0")
    g2 = dec.grid2
    xi = g2.freqs()
    X1, X2 = np.meshgrid(xi, xi, indexing="ij")
    R = dec._pair_radii
    omega_l1 = dec.omega.l1()
    alphas = [(0, 0)]
    if alpha_max >= 1:
        alphas += [(1, 0), (0, 1)]
    if alpha_max >= 2:
        alphas += [(2, 0), (1, 1), (0, 2)]
    rep = MikhlinReport()
    beta_needed = sorted({(b1, b2) for a1, a2 in alphas
                          for b1 in range(a1 + 1) for b2 in range(a2 + 1)})
    X, Y = g2.points()
    from math import comb

    # accumulate per (j, alpha); loop k outermost so only one annulus piece's
    # moment transforms are alive at a time
    totals = {(j, a): np.zeros((g2.M, g2.M), dtype=complex)
              for j in j_list for a in alphas}
    for k in dec.k_range:
        base = dec.kernels_k[k].values
        moment_hat = {}
        for (b1, b2) in beta_needed:
            vals = base * (-2j * np.pi * X) ** b1 * (-2j * np.pi * Y) ** b2
            moment_hat[(b1, b2)] = forward_transform(
                SampledFunction2D(g2, vals)).coeffs
        for j in j_list:
            s = 2.0 ** (-(j + k))
            rho = R * s
            g0 = dec.fam.gamma.hat.radial(rho)
            g1, g2d = _radial_derivatives(dec.fam.gamma.hat, rho)
            for alpha in alphas:
                a1, a2 = alpha
                acc = totals[(j, alpha)]
                for b1 in range(a1 + 1):
                    for b2 in range(a2 + 1):
                        c1, c2 = a1 - b1, a2 - b2
                        gfac = _gamma_partial(s, rho, g0, g1, g2d, X1, X2, c1, c2)
                        if gfac is None:
                            continue
                        acc += (comb(a1, b1) * comb(a2, b2)
                                * moment_hat[(b1, b2)] * gfac)
    for j in j_list:
        for alpha in alphas:
            a1, a2 = alpha
            weight = np.where(R > 0, R, 1.0) ** (a1 + a2)
            const = float(np.max(weight * np.abs(totals[(j, alpha)]))) \
                / (2.0 ** j * omega_l1)
            rep.rows.append((j, alpha, const))
    return rep


def _gamma_partial(s, rho, g0, g1, g2d, X1, X2, c1: int, c2: int):
    """``∂^{(c1,c2)}_ξ [Γ̂(s|ξ|)]`` for orders up to 2, in closed form from
    radial derivatives (finite at ξ=0 since the profile vanishes there)."""
    order = c1 + c2
    safe = np.where(rho > 0, rho, 1.0)
    u1 = np.where(rho > 0, s * X1 / safe * s, 0.0)  # ∂1 rho = s^2 X1 / rho
    u2 = np.where(rho > 0, s * X2 / safe * s, 0.0)
    if order == 0:
        return g0
    if order == 1:
        return g1 * (u1 if c1 == 1 else u2)
    if order == 2:
        if c1 == 2 or c2 == 2:
            u = u1 if c1 == 2 else u2
            other = np.where(rho > 0, (s ** 2) / safe - u ** 2 / safe, 0.0)
            return g2d * u ** 2 + g1 * other
        cross = np.where(rho > 0, -u1 * u2 / safe, 0.0)
        return g2d * u1 * u2 + g1 * cross
    return None


def small_xi_slope(dec: KernelDecomposition, xi_lo: float = 1e-3,
                   xi_hi: float = 1e-1, n_points: int = 40) -> float:
    """Fitted slope of ``log |K̂_0|`` vs ``log |ξ|`` along four directions."""
    radii = np.exp(np.linspace(np.log(xi_lo), np.log(xi_hi), n_points))
    dirs = np.array([[1.0, 0.0], [0.0, 1.0],
                     [np.sqrt(0.5), np.sqrt(0.5)], [np.sqrt(0.5), -np.sqrt(0.5)]])
    mags = np.zeros(n_points)
    for d in dirs:
        pts = radii[:, None] * d[None, :]
        mags = np.maximum(mags, np.abs(dec.khat0_at(pts)))
    mask = mags > 1e-300
    coef = np.polyfit(np.log(radii[mask]), np.log(mags[mask]), 1)
    return float(coef[0])


def apply_T_omega(omega: SphereFunction, f1: SampledFunction1D, f2: SampledFunction1D,
                  fam: BumpFamily, j_range, grid2: Grid2D | None = None,
                  dec: KernelDecomposition | None = None):
    """``Σ_j T^j(f1, f2)`` with per-scale output norms reported.

    The input grid and the kernel pair grid must share (L, M) so the
    assembled symbol lands exactly on the input pair frequencies.
    """
    if dec is None:
        if grid2 is None:
            grid2 = Grid2D(f1.grid.L, f1.grid.M)
        dec = drf_decompose(omega, fam, grid2)
    g2 = dec.grid2
    if g2.L != f1.grid.L or g2.M != f1.grid.M:
        raise FeasibilityError("input grid and kernel grid must share (L, M)")
    total = np.zeros(f1.grid.M, dtype=complex)
    rows = []
    for j in j_range:
        out = apply_bilinear(dec.symbol_j(j), f1, f2)
        nrm = float(np.sqrt((f1.grid.h * np.sum(np.abs(out.values) ** 2)).real))
        rows.append({"j": j, "l2_norm": nrm})
        total = total + out.values
    return SampledFunction1D(f1.grid, total), rows


def estimate_bilinear_norm(symbol2d: np.ndarray, grid, rng: np.random.Generator,
                           n_triples: int = 6, exponents=(2, 2, 2)) -> float:
    """Lower bound on the operator norm from a seeded random dictionary.

    Maximizes ``|∫ B(f1,f2) f3| / (‖f1‖_{p1} ‖f2‖_{p2} ‖f3‖_{p'})`` over
    random band-limited triples; reported curves are envelopes from below.
    """
    from .grid import random_band_limited
    from .norms import lp_norm

    p1, p2, p = exponents
    pprime = np.inf if p == 1 else p / (p - 1)
    best = 0.0
    for _ in range(n_triples):
        f1 = random_band_limited(grid, rng, 0.2)
        f2 = random_band_limited(grid, rng, 0.2)
        f3 = random_band_limited(grid, rng, 0.2)
        out = apply_bilinear(symbol2d, f1, f2)
        val = abs(complex(quadrature(
            SampledFunction1D(grid, out.values * f3.values))))
        den = lp_norm(f1, p1) * lp_norm(f2, p2) * lp_norm(f3, pprime)
        if den > 0:
            best = max(best, val / den)
    return best
