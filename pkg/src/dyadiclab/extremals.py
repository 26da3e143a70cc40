"""Generators for the modulated-bump sharpness families.

The linear family pairs

    f(x) = Σ_{k=1..N} η(x + 2^{ζ_N - ζ_k}) e^{2πi x 2^{ζ_k}},
    K(y) = β(y - 2^{ζ_N}),                       ζ_k = c·k,

and the bilinear family adds ``g`` (conjugate carriers) and the product
kernel ``K(y1, y2) = β(y1 - 2^{ζ_N}) β(y2 - 2^{ζ_N})``.  Because carriers
and translates are exact powers of two and the kernel profile is exactly 1
on its plateau, the operator identities reduce to exact envelope algebra:
each band of ``Tf`` is exactly ``η``, and the bilinear operator returns
``N·η²`` on the zero carrier.

Instances live in the multi-band representation (see
:mod:`dyadiclab.multiband`): the envelope grid only has to host the
translates, not the carriers, which keeps ``c = 4`` with ``N <= 6`` at desk
scale.  A literal single-grid rendering would need ``~2^{2cN}`` samples and
is refused with the required size reported.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bumps import BumpFamily
from .errors import FeasibilityError
from .grid import Grid1D, SampledFunction1D, inverse_transform, Spectrum1D
from .multiband import MultibandFunction1D, band_from_profile, merge_bands
from .norms import bmo_norm, d_lambda, lp_norm
from .operators import (
    DyadicSymbol1D,
    ProductShiftedKernel,
    ShiftedAnnulusM0,
    apply_bilinear,
    apply_linear,
)


def zeta(c: int, k: int) -> int:
    return c * k


def required_envelope_period(N: int, c: int) -> int:
    """Torus period needed to host the largest translate with decay headroom."""
    return 4 * (1 << (c * (N - 1)))


def check_feasible(N: int, c: int, grid: Grid1D, fam: BumpFamily) -> None:
    need_L = required_envelope_period(N, c)
    if grid.L < need_L:
        raise FeasibilityError(
            f"envelope grid period L={grid.L} too small for N={N}, c={c}: "
            f"need L >= {need_L} (with spacing <= {grid.h}, M >= {need_L / grid.h:.0f})")
    _, eta_hi = fam.eta.hat.support
    if grid.nyquist < 1.2 * eta_hi:
        raise FeasibilityError(
            f"envelope Nyquist {grid.nyquist} below 1.2x the envelope band {eta_hi}")
    # plateau condition: the envelope band scaled into the kernel annulus must
    # sit inside the plateau for every carrier (smallest one is binding)
    pl_lo, pl_hi = fam.beta.hat.plateau
    margin = min(1.0 - pl_lo, pl_hi - 1.0)
    if eta_hi * 2.0 ** (-zeta(c, 1)) >= margin:
        raise FeasibilityError(
            f"spacing c={c} too small: envelope band leaves the kernel plateau")


@dataclass(frozen=True)
class ExtremalInstance:
    N: int
    c: int
    family: str  # "linear" | "bilinear"
    f: MultibandFunction1D
    g: MultibandFunction1D | None
    kernel_symbol: DyadicSymbol1D | None
    kernel: ProductShiftedKernel | None
    kernel_offset: int
    kernel_envelope: SampledFunction1D
    metadata: dict = field(default_factory=dict)


def _eta_bands(N: int, c: int, fam: BumpFamily, grid: Grid1D, sign: int):
    zN = zeta(c, N)
    bands = []
    for k in range(1, N + 1):
        t = 1 << (zN - zeta(c, k))
        carrier = sign * (1 << zeta(c, k))
        bands.append(band_from_profile(grid, carrier, fam.eta.hat, translate_num=t))
    return bands


def _beta_envelope(fam: BumpFamily, grid: Grid1D) -> SampledFunction1D:
    return inverse_transform(
        Spectrum1D(grid, fam.beta.hat(grid.freqs()).astype(complex)))


def make_linear_extremal(N: int, c: int, fam: BumpFamily, grid: Grid1D) -> ExtremalInstance:
    """Instance of the linear family; all support identities hold exactly."""
    check_feasible(N, c, grid, fam)
    offset = 1 << zeta(c, N)
    f = merge_bands(grid, _eta_bands(N, c, fam, grid, +1))
    sym = DyadicSymbol1D(ShiftedAnnulusM0(fam.beta.hat, offset), name="shifted-annulus")
    return ExtremalInstance(
        N=N, c=c, family="linear", f=f, g=None,
        kernel_symbol=sym, kernel=None, kernel_offset=offset,
        kernel_envelope=_beta_envelope(fam, grid),
        metadata={"zetas": [zeta(c, k) for k in range(1, N + 1)]})


def make_bilinear_extremal(N: int, c: int, fam: BumpFamily, grid: Grid1D) -> ExtremalInstance:
    check_feasible(N, c, grid, fam)
    offset = 1 << zeta(c, N)
    f = merge_bands(grid, _eta_bands(N, c, fam, grid, +1))
    g = merge_bands(grid, _eta_bands(N, c, fam, grid, -1))
    return ExtremalInstance(
        N=N, c=c, family="bilinear", f=f, g=g,
        kernel_symbol=None, kernel=ProductShiftedKernel(fam.beta.hat, offset),
        kernel_offset=offset, kernel_envelope=_beta_envelope(fam, grid),
        metadata={"zetas": [zeta(c, k) for k in range(1, N + 1)]})


def combine_condition_residual(inst: ExtremalInstance, fam: BumpFamily) -> float:
    """Max of ``|β̂(ξ/2^l) η̂(ξ - 2^{ζ_k}) - [l = ζ_k] η̂(ξ - 2^{ζ_k})|`` on the grid.

    The product vanishes for every dilation except the matching one, where
    the kernel factor is exactly 1; both facts are support arithmetic and the
    residual should be exactly zero.
    """
    grid = inst.f.grid
    u = grid.freqs()
    beta_hat = fam.beta.hat
    worst = 0.0
    for k in range(1, inst.N + 1):
        zk = zeta(inst.c, k)
        eta_vals = fam.eta.hat(u)
        for l in range(max(zk - 2 * inst.c, 0), zk + 2 * inst.c + 1):
            bv = beta_hat(((1 << zk) + u) * 2.0 ** (-l))
            expected = eta_vals if l == zk else 0.0
            worst = max(worst, float(np.max(np.abs(bv * eta_vals - expected))))
    return worst


def eta_reference(fam: BumpFamily, grid: Grid1D) -> SampledFunction1D:
    """The envelope bump ``η`` sampled on the grid (real part is exact)."""
    vals = inverse_transform(
        Spectrum1D(grid, fam.eta.hat(grid.freqs()).astype(complex))).values
    return SampledFunction1D(grid, vals.real)


def linear_identity_deviation(inst: ExtremalInstance, fam: BumpFamily) -> float:
    """``max |Tf - Σ_k η e^{2πi x 2^{ζ_k}}|`` measured band by band."""
    Tf = apply_linear(inst.kernel_symbol, inst.f)
    grid = inst.f.grid
    eta = eta_reference(fam, grid).values
    expected = {1 << zeta(inst.c, k) for k in range(1, inst.N + 1)}
    dev = 0.0
    seen = set()
    for b in Tf.bands:
        env = Tf.envelope(b).values
        if b.carrier in expected:
            dev = max(dev, float(np.max(np.abs(env - eta))))
            seen.add(b.carrier)
        else:
            dev = max(dev, float(np.max(np.abs(env))))
    for w in expected - seen:
        dev = max(dev, float(np.max(np.abs(eta))))
    return dev


def bilinear_identity_deviation(inst: ExtremalInstance, fam: BumpFamily) -> float:
    """``max_x |B(f, g)(x) - N η(x)²|`` (exact sample values)."""
    B = apply_bilinear(inst.kernel, inst.f, inst.g)
    grid = inst.f.grid
    eta = eta_reference(fam, grid).values
    target = inst.N * eta ** 2
    return float(np.max(np.abs(B.values_at_samples() - target)))


@dataclass(frozen=True)
class GrowthFit:
    quantity: str
    parameters: tuple
    values: tuple
    slope: float
    intercept: float
    residual: float

    def csv_rows(self):
        return [[self.quantity, f"{n:.12g}", f"{v:.17g}",
                 f"{self.slope:.12g}", f"{self.residual:.12g}"]
                for n, v in zip(self.parameters, self.values)]


def fit_loglog(params, values, quantity: str = "") -> GrowthFit:
    x = np.log(np.asarray(params, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.max(np.abs(y - (slope * x + intercept))))
    return GrowthFit(quantity, tuple(params), tuple(values),
                     float(slope), float(intercept), residual)


def measure_growth(builder, N_list, quantity: str, fam: BumpFamily,
                   lam: float | None = None) -> GrowthFit:
    """Evaluate a norm along the family and fit ``log(norm)`` vs ``log N``.

    ``builder(N)`` returns an instance.  Quantities: ``f_l2 | f_l4 | f_linf |
    f_bmo | Tf_l2 | Tf_l4 | Tf_bmo | Bfg_max | dlambda`` (the last needs
    ``lam``).  The infinity-norm routes report grid-sample maxima; BMO uses
    the dyadic Carleson expression.
    """
    vals = []
    for N in N_list:
        inst = builder(N)
        if quantity == "dlambda":
            if inst.kernel is not None:
                v = inst.kernel.d_lambda(lam, inst.f.grid)
            else:
                v = d_lambda(inst.kernel_envelope, lam, origin_offset=inst.kernel_offset)
        elif quantity.startswith("Tf_"):
            Tf = apply_linear(inst.kernel_symbol, inst.f)
            v = _norm_of(Tf, quantity[3:], fam)
        elif quantity.startswith("f_"):
            v = _norm_of(inst.f, quantity[2:], fam)
        elif quantity == "Bfg_max":
            B = apply_bilinear(inst.kernel, inst.f, inst.g)
            v = float(np.max(np.abs(B.values_at_samples())))
        else:
            raise ValueError(f"unknown quantity {quantity!r}")
        vals.append(v)
    return fit_loglog(list(N_list), vals, quantity)


def _norm_of(f, which: str, fam: BumpFamily) -> float:
    if which == "l2":
        return lp_norm(f, 2)
    if which == "l4":
        return lp_norm(f, 4)
    if which == "linf":
        return lp_norm(f, np.inf)
    if which == "bmo":
        return bmo_norm(f, fam)
    raise ValueError(f"unknown norm {which!r}")
