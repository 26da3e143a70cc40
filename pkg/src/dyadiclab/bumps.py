"""Smooth frequency-side cutoff profiles and the seven-bump family.

All profiles are built from the classical C^∞ transition

    g(t) = exp(-1/t)  (t > 0),      S(t) = g(t) / (g(t) + g(1-t)),

so they are exactly 0 outside their stated support, exactly 1 on their
plateau, and satisfy S(t) + S(1-t) = 1, which makes dyadic partition sums
exactly constant when transitions are placed log-symmetrically.

The family consists of

* ``phi``       low-pass, ``φ̂(0) = 1``, support ``|ξ| <= 1``;
* ``psi``       annulus ``[1/2, 2]`` with ``Σ_k ψ̂(2^k ξ) = C`` (here C = 1,
                by the telescoping construction ``ψ̂(ξ) = φ̂(ξ/2) - φ̂(ξ)``);
* ``psi_tilde`` reproducing bump, ``= 1`` on supp ``ψ̂``;
* ``vartheta``  support ``[1/4, 4]``, ``= 1`` on ``[1/2, 2]``;
* ``gamma``     radial annulus profile on the plane with
                ``Σ_k Γ̂(2^{-k}ξ) = 1`` for ``ξ ≠ 0``;
* ``eta``       narrow low-pass (support ``|ξ| <= 1/100``) with a Gaussian
                core that sets the spatial localization scale;
* ``beta``      annulus ``[10/11, 11/10]``, ``= 1`` on ``[20/21, 21/20]``.

A note on ``vartheta``: no smooth profile can simultaneously be supported in
``[1/4, 4]``, equal 1 on all of ``[1/2, 2]`` *and* have dyadic dilation sum
equal to 2 (at ``|ξ| = 1`` three dilates already equal 1, so the sum is at
least 3 there).  The construction here keeps the two structural properties
and yields the exactly constant dilation sum 3, which the validator records.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import FeasibilityError
from .grid import (
    Grid1D,
    Grid2D,
    SampledFunction1D,
    SampledFunction2D,
    Spectrum1D,
    Spectrum2D,
    inverse_transform,
)


def smoothstep(t):
    """C^∞ step: 0 for t <= 0, 1 for t >= 1, strictly increasing in between."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    out[t >= 1.0] = 1.0
    mid = (t > 0.0) & (t < 1.0)
    tm = t[mid]
    with np.errstate(over="ignore", divide="ignore"):
        a = np.exp(-1.0 / tm)
        b = np.exp(-1.0 / (1.0 - tm))
    out[mid] = a / (a + b)
    return out


class RadialProfile:
    """Base class: a radial frequency profile ``r = |ξ| -> value``.

    Subclasses provide ``radial(r)`` plus exact ``support`` and ``plateau``
    interval metadata used for truncation arithmetic downstream.
    """

    support: tuple[float, float]  # value is exactly 0 outside [lo, hi]
    plateau: tuple[float, float] | None  # value is exactly 1 inside, if any

    def radial(self, r: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, xi) -> np.ndarray:
        return self.radial(np.abs(np.asarray(xi, dtype=float)))

    def radial2d(self, xi1, xi2) -> np.ndarray:
        return self.radial(np.hypot(np.asarray(xi1, float), np.asarray(xi2, float)))


@dataclass(frozen=True)
class LogBump(RadialProfile):
    """Plateau bump with smoothstep transitions in ``u = log2 r``.

    Zero for ``u <= u0`` or ``u >= u3``, one on ``[u1, u2]``.  ``u0 = -inf``
    gives a low-pass profile (value 1 at r = 0).
    """

    u0: float
    u1: float
    u2: float
    u3: float

    def __post_init__(self):
        if not (self.u0 <= self.u1 <= self.u2 <= self.u3):
            raise ValueError("log-scale knots must be ordered")

    @property
    def support(self):
        lo = 0.0 if np.isinf(self.u0) else 2.0 ** self.u0
        return (lo, 2.0 ** self.u3)

    @property
    def plateau(self):
        lo = 0.0 if np.isinf(self.u1) else 2.0 ** self.u1
        return (lo, 2.0 ** self.u2)

    def radial(self, r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        pos = r > 0.0
        u = np.full_like(r, -np.inf)
        u[pos] = np.log2(r[pos])
        if np.isinf(self.u0):
            rise = np.ones_like(r)
        else:
            rise = smoothstep((u - self.u0) / (self.u1 - self.u0))
            rise[~pos] = 0.0
        fall = smoothstep((self.u3 - u) / (self.u3 - self.u2))
        out = rise * fall
        if np.isinf(self.u0):
            out[~pos] = 1.0
        return out


@dataclass(frozen=True)
class LinBump(RadialProfile):
    """Plateau bump with smoothstep transitions linear in ``r``."""

    r0: float
    r1: float
    r2: float
    r3: float

    def __post_init__(self):
        if not (0 <= self.r0 <= self.r1 <= self.r2 <= self.r3):
            raise ValueError("knots must be ordered and nonnegative")

    @property
    def support(self):
        return (self.r0, self.r3)

    @property
    def plateau(self):
        return (self.r1, self.r2)

    def radial(self, r):
        r = np.asarray(r, dtype=float)
        if self.r1 > self.r0:
            rise = smoothstep((r - self.r0) / (self.r1 - self.r0))
        else:
            rise = (r >= self.r0).astype(float)
        if self.r3 > self.r2:
            fall = smoothstep((self.r3 - r) / (self.r3 - self.r2))
        else:
            fall = (r <= self.r3).astype(float)
        return rise * fall


@dataclass(frozen=True)
class DifferenceAnnulus(RadialProfile):
    """``A(ξ) = P(ξ/2) - P(ξ)`` for a low-pass ``P``: the telescoping annulus.

    The dyadic dilation sum ``Σ_k A(2^k ξ)`` telescopes to exactly 1 for
    ``ξ ≠ 0`` (partition constant 1), independent of the transition shape.
    """

    lowpass: RadialProfile

    @property
    def support(self):
        _, hi = self.lowpass.support
        p_lo = self.lowpass.plateau[1]
        return (p_lo, 2.0 * hi)

    @property
    def plateau(self):
        return None

    def radial(self, r):
        r = np.asarray(r, dtype=float)
        return self.lowpass.radial(r / 2.0) - self.lowpass.radial(r)


@dataclass(frozen=True)
class DilationSum(RadialProfile):
    """``(1/C) Σ_{|j| <= k0} B(2^{-j} ξ)`` — the reproducing bump construction."""

    base: RadialProfile
    k0: int
    c_partition: float

    @property
    def support(self):
        lo, hi = self.base.support
        return (lo * 2.0 ** (-self.k0), hi * 2.0 ** self.k0)

    @property
    def plateau(self):
        return self.base.support  # equals 1 there by construction; validated

    def radial(self, r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        for j in range(-self.k0, self.k0 + 1):
            out += self.base.radial(r * 2.0 ** (-j))
        return out / self.c_partition


@dataclass(frozen=True)
class GaussianLowpass(RadialProfile):
    """Gaussian core times a smooth cutoff; compactly supported low-pass.

    ``sigma_x`` is the spatial standard deviation of the (untruncated) core;
    the frequency-side Gaussian width is ``1/(2π sigma_x)``.  The cutoff sits
    where the core has already decayed to ~1e-14, so the profile is Gaussian
    for all practical purposes while keeping an exact support bound.
    """

    sigma_x: float
    cut_start: float
    cut_end: float

    @property
    def support(self):
        return (0.0, self.cut_end)

    @property
    def plateau(self):
        return None

    def radial(self, r):
        r = np.asarray(r, dtype=float)
        sigma_xi = 1.0 / (2.0 * np.pi * self.sigma_x)
        core = np.exp(-0.5 * (r / sigma_xi) ** 2)
        cut = smoothstep((self.cut_end - r) / (self.cut_end - self.cut_start))
        return core * cut


@dataclass(frozen=True)
class Bump:
    """A named profile together with its samples on the family grids."""

    name: str
    hat: RadialProfile
    grid: Grid1D | Grid2D

    @cached_property
    def hat_sampled(self):
        if isinstance(self.grid, Grid1D):
            return Spectrum1D(self.grid, self.hat(self.grid.freqs()).astype(complex))
        xi = self.grid.freqs()
        X1, X2 = np.meshgrid(xi, xi, indexing="ij")
        return Spectrum2D(self.grid, self.hat.radial2d(X1, X2).astype(complex))

    @cached_property
    def spatial(self):
        return inverse_transform(self.hat_sampled)


def _partition_constant(profile: RadialProfile, n_samples: int = 512) -> tuple[float, float]:
    """Mean and max deviation of the dyadic dilation sum over one log period."""
    r = np.exp2(np.linspace(0.0, 1.0, n_samples, endpoint=False))
    lo, hi = profile.support
    ks = np.arange(int(np.floor(np.log2(max(lo, 1e-300)))) - 2,
                   int(np.ceil(np.log2(hi))) + 3)
    total = np.zeros_like(r)
    for k in ks:
        total += profile.radial(r * 2.0 ** float(k))
    c = float(np.mean(total))
    return c, float(np.max(np.abs(total - c)))


def _minimal_k0(psi: RadialProfile, c_partition: float, tol: float = 1e-12) -> int:
    lo, hi = psi.support
    r = np.linspace(lo, hi, 2049)
    for k0 in range(1, 12):
        total = np.zeros_like(r)
        for j in range(-k0, k0 + 1):
            total += psi.radial(r * 2.0 ** (-j))
        if np.max(np.abs(total / c_partition - 1.0)) < tol:
            return k0
    raise FeasibilityError("could not determine a reproducing-range k0")


@dataclass(frozen=True)
class BumpFamily:
    """The seven frequency-localized profiles with validated properties."""

    phi: Bump
    psi: Bump
    psi_tilde: Bump
    vartheta: Bump
    gamma: Bump
    eta: Bump
    beta: Bump
    c_partition: float
    k0: int
    vartheta_sum: float
    eta_sigma_x: float
    grid: Grid1D
    grid2d: Grid2D | None = None


def make_family(grid: Grid1D, grid2d: Grid2D | None = None,
                eta_sigma_x: float = 256.0) -> BumpFamily:
    """Construct the bump family on the given grids.

    The 1D grid must resolve the widest support in use, ``|ξ| <= 4`` (so the
    Nyquist frequency must be at least 4); dyadic headroom for particular
    decompositions is checked by the operations that need it.
    """
    if grid.nyquist < 4.0:
        raise FeasibilityError(
            f"grid Nyquist {grid.nyquist} < 4; too coarse to host the profiles")
    phi_hat = LogBump(-np.inf, -np.inf, -1.0, 0.0)     # 1 on |ξ|<=1/2, 0 at |ξ|>=1
    psi_hat = DifferenceAnnulus(phi_hat)               # supp [1/2, 2], sum = 1
    c_part, c_dev = _partition_constant(psi_hat)
    if c_dev > 1e-10:
        raise FeasibilityError("partition constant is not constant; bad construction")
    k0 = _minimal_k0(psi_hat, c_part)
    psi_tilde_hat = DilationSum(psi_hat, k0, c_part)
    vartheta_hat = LogBump(-2.0, -1.0, 1.0, 2.0)       # supp [1/4,4], 1 on [1/2,2]
    vt_sum, vt_dev = _partition_constant(vartheta_hat)
    gamma_hat = DifferenceAnnulus(phi_hat)             # used radially on the plane
    eta_hat = GaussianLowpass(eta_sigma_x, cut_start=1.0 / 150.0, cut_end=1.0 / 100.0)
    beta_hat = LinBump(10.0 / 11.0, 20.0 / 21.0, 21.0 / 20.0, 11.0 / 10.0)

    g2 = grid2d
    return BumpFamily(
        phi=Bump("phi", phi_hat, grid),
        psi=Bump("psi", psi_hat, grid),
        psi_tilde=Bump("psi_tilde", psi_tilde_hat, grid),
        vartheta=Bump("vartheta", vartheta_hat, grid),
        gamma=Bump("gamma", gamma_hat, g2 if g2 is not None else grid),
        eta=Bump("eta", eta_hat, grid),
        beta=Bump("beta", beta_hat, grid),
        c_partition=c_part,
        k0=k0,
        vartheta_sum=vt_sum,
        eta_sigma_x=eta_sigma_x,
        grid=grid,
        grid2d=g2,
    )


@dataclass
class ValidationReport:
    rows: list = field(default_factory=list)  # (check, residual, threshold, passed)
    notes: dict = field(default_factory=dict)

    def add(self, check: str, residual: float, threshold: float):
        self.rows.append((check, float(residual), float(threshold),
                          bool(residual < threshold)))

    @property
    def passed(self) -> bool:
        return all(r[3] for r in self.rows)

    def failures(self):
        return [r for r in self.rows if not r[3]]


def validate_family(fam: BumpFamily, rng: np.random.Generator | None = None,
                    tol: float = 1e-8) -> ValidationReport:
    """Numerically check every structural property of the family.

    Returns a report with one row per check; failures do not raise.  The
    report also records the construction parameters (partition constant,
    reproducing range ``k0``, the vartheta dilation-sum value, and the eta
    localization scale) so that measured constants downstream are
    reproducible.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    rep = ValidationReport()
    rep.notes.update(
        c_partition=fam.c_partition,
        k0=fam.k0,
        vartheta_sum=fam.vartheta_sum,
        eta_sigma_x=fam.eta_sigma_x,
    )

    rep.add("phi_hat(0) == 1", abs(fam.phi.hat.radial(np.array([0.0]))[0] - 1.0), tol)
    r_out = np.linspace(1.0, 8.0, 101)
    rep.add("phi support in |xi|<=1", np.max(np.abs(fam.phi.hat.radial(r_out))), tol)

    # partition of unity at random frequencies inside the safe band
    r_rand = np.exp2(rng.uniform(-3.0, 3.0, size=100))
    ks = np.arange(-16, 17)
    total = np.zeros_like(r_rand)
    for k in ks:
        total += fam.psi.hat.radial(r_rand * 2.0 ** float(k))
    rep.add("psi partition of unity (100 random xi)",
            np.max(np.abs(total - fam.c_partition)), tol)

    lo, hi = fam.psi.hat.support
    inside = np.linspace(lo, hi, 513)
    outside = np.concatenate([np.linspace(0, lo, 64, endpoint=False),
                              np.linspace(hi * 1.0000001, 4 * hi, 64)])
    rep.add("psi support in annulus", np.max(np.abs(fam.psi.hat.radial(outside))), tol)

    rep.add("psi_tilde == 1 on supp psi",
            np.max(np.abs(fam.psi_tilde.hat.radial(inside) - 1.0)), tol)
    pt_sum, pt_dev = _partition_constant(fam.psi_tilde.hat)
    rep.add("psi_tilde partition sum == 2*k0+1",
            abs(pt_sum - (2 * fam.k0 + 1)) + pt_dev, tol)

    vt = fam.vartheta.hat
    rep.add("vartheta == 1 on [1/2, 2]",
            np.max(np.abs(vt.radial(np.linspace(0.5, 2.0, 257)) - 1.0)), tol)
    vt_out = np.concatenate([np.linspace(0.0, 0.25, 64, endpoint=False),
                             np.linspace(4.0000001, 16.0, 64)])
    rep.add("vartheta support in [1/4, 4]", np.max(np.abs(vt.radial(vt_out))), tol)
    _, vt_dev = _partition_constant(vt)
    rep.add("vartheta dilation sum constant", vt_dev, tol)

    # gamma telescoping on the plane: sum over k of dilates is 1 away from 0
    theta = rng.uniform(0, 2 * np.pi, 64)
    rad = np.exp2(rng.uniform(-4.0, 4.0, 64))
    x1, x2 = rad * np.cos(theta), rad * np.sin(theta)
    tot = np.zeros_like(rad)
    for k in range(-10, 11):
        tot += fam.gamma.hat.radial2d(x1 * 2.0 ** k, x2 * 2.0 ** k)
    rep.add("gamma telescoping == 1", np.max(np.abs(tot - 1.0)), tol)

    rep.add("eta_hat(0) == 1", abs(fam.eta.hat.radial(np.array([0.0]))[0] - 1.0), tol)
    rep.add("eta support in |xi|<=1/100",
            np.max(np.abs(fam.eta.hat.radial(np.linspace(0.01, 0.1, 64)))), tol)

    bt = fam.beta.hat
    rep.add("beta == 1 on [20/21, 21/20]",
            np.max(np.abs(bt.radial(np.linspace(20 / 21, 21 / 20, 257)) - 1.0)), tol)
    bt_out = np.concatenate([np.linspace(0.0, 10 / 11, 64, endpoint=False),
                             np.linspace(1.1000001, 4.0, 64)])
    rep.add("beta support in [10/11, 11/10]", np.max(np.abs(bt.radial(bt_out))), tol)

    # profiles are real and even in frequency, so spatial bumps are real
    for b in (fam.phi, fam.psi, fam.eta, fam.beta):
        if isinstance(b.grid, Grid1D):
            v = b.spatial.values
            scale = max(np.max(np.abs(v)), 1e-300)
            rep.add(f"{b.name} spatial profile real",
                    np.max(np.abs(v.imag)) / scale, 1e-10)
    return rep
