"""Norm and functional evaluations: Lᵖ, Hardy, dyadic BMO, Orlicz, and the
log-weighted kernel functional.

The Hardy norm uses the maximal characterization ``‖sup_k |φ_k * f|‖_p`` over
the finite admissible scale range; BMO uses the dyadic Carleson expression
anchored at the torus origin.  Both are equivalence-class norms (constants
depend on the chosen profiles), so downstream assertions about them are
ratio- or regression-style, never absolute.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .analysis import admissible_k_range, lp_piece, nonzero_k_range
from .bumps import BumpFamily
from .errors import ConvergenceError
from .grid import (
    Grid1D,
    SampledFunction1D,
    SampledFunction2D,
    Spectrum1D,
    forward_transform,
    inverse_transform,
    quadrature,
)
from .multiband import MultibandFunction1D, lp_norm_multiband


@dataclass(frozen=True)
class NormReport:
    kind: str  # Lp | Hp | BMO | Orlicz | Dlambda
    parameter: float
    value: float
    diagnostics: dict = field(default_factory=dict)

    def csv_row(self):
        return [self.kind, f"{self.parameter:.12g}", f"{self.value:.12g}"]


def lp_norm(f, p) -> float:
    """``L^p`` norm by quadrature (grid max for p = ∞)."""
    if isinstance(f, MultibandFunction1D):
        return lp_norm_multiband(f, p)
    if p == np.inf or p == "inf":
        return float(np.max(np.abs(f.values)))
    if p < 1:
        raise ValueError("p must be >= 1")
    n = 1 if isinstance(f, SampledFunction1D) else 2
    return float((f.grid.h ** n) * np.sum(np.abs(f.values) ** p)) ** (1.0 / p)


def hardy_norm(f: SampledFunction1D, p: float, fam: BumpFamily) -> float:
    """Maximal-function Hardy norm ``‖ sup_k |φ_k * f| ‖_p``.

    For p = 1 a warning is emitted when ``∫f`` is not numerically zero, since
    a nonzero mean rules out membership in the p = 1 space on the line.
    """
    if not (1 <= p < np.inf):
        raise ValueError("hardy_norm takes p in [1, inf); use bmo_norm at p = inf")
    g = f.grid
    if p == 1:
        mean = abs(complex(quadrature(f)))
        l1 = lp_norm(f, 1)
        if l1 > 0 and mean > 1e-8 * l1:
            warnings.warn("p=1 input has a nonzero mean; the continuum norm diverges",
                          stacklevel=2)
    prof = fam.phi.hat
    spec = forward_transform(f).coeffs
    xi = g.freqs()
    # k large enough that the low-pass covers the whole band acts as identity
    k_hi = math.ceil(math.log2(max(g.nyquist, 1.0))) + 1
    k_lo = -math.ceil(math.log2(g.L)) - 1
    best = np.zeros(g.M)
    for k in range(k_lo, k_hi + 1):
        piece = inverse_transform(Spectrum1D(g, spec * prof(xi * 2.0 ** (-k))))
        np.maximum(best, np.abs(piece.values), out=best)
    return lp_norm(SampledFunction1D(g, best), p)


def _dyadic_scales(grid: Grid1D) -> list[int]:
    # interval lengths L / 2^s down to the grid spacing
    return list(range(0, int(math.log2(grid.M)) + 1))


def bmo_norm(f, fam: BumpFamily) -> float:
    """Dyadic Carleson BMO expression.

    ``sup_P ( (1/|P|) ∫_P Σ_{k >= -log2 ℓ(P)} |ψ_k * f|² )^{1/2}`` with P
    running over origin-anchored dyadic intervals of all grid scales.
    """
    if isinstance(f, MultibandFunction1D):
        g = f.grid
        piece_sq = {}
        for k in nonzero_k_range(f, fam.psi.hat):
            p = lp_piece(f, k, fam)
            if len(p.bands) == 0:
                continue
            if len(p.bands) == 1:
                piece_sq[k] = np.abs(p.envelope(p.bands[0]).values) ** 2
            else:
                piece_sq[k] = np.abs(p.values_at_samples()) ** 2
    else:
        g = f.grid
        piece_sq = {k: np.abs(lp_piece(f, k, fam).values) ** 2
                    for k in nonzero_k_range(f, fam.psi.hat)}
    if not piece_sq:
        return 0.0
    ks = sorted(piece_sq)
    M = g.M
    best = 0.0
    for s in _dyadic_scales(g):
        ell = g.L / (1 << s)
        k_floor = -math.floor(math.log2(ell))  # k >= -log2 ell
        acc = np.zeros(M)
        for k in ks:
            if k >= k_floor:
                acc += piece_sq[k]
        n_cells = 1 << s
        cell = M // n_cells
        sums = acc.reshape(n_cells, cell).sum(axis=1) * g.h
        best = max(best, float(np.max(sums)) / ell)
    return math.sqrt(best)


def bmo_supremizer_scale(f, fam: BumpFamily) -> float:
    """Interval length attaining the BMO supremum (diagnostic for tests)."""
    if isinstance(f, MultibandFunction1D):
        raise ValueError("diagnostic is grid-path only")
    g = f.grid
    piece_sq = {k: np.abs(lp_piece(f, k, fam).values) ** 2
                for k in nonzero_k_range(f, fam.psi.hat)}
    ks = sorted(piece_sq)
    best, best_ell = -1.0, g.L
    for s in _dyadic_scales(g):
        ell = g.L / (1 << s)
        k_floor = -math.floor(math.log2(ell))
        acc = np.zeros(g.M)
        for k in ks:
            if k >= k_floor:
                acc += piece_sq[k]
        n_cells = 1 << s
        sums = acc.reshape(n_cells, g.M // n_cells).sum(axis=1) * g.h
        val = float(np.max(sums)) / ell
        if val > best:
            best, best_ell = val, ell
    return best_ell


def _luxemburg_integral(absvals: np.ndarray, weights: np.ndarray,
                        lam: float, alpha: float) -> float:
    t = absvals / lam
    return float(np.sum(weights * t * np.log(np.e + t) ** alpha))


def orlicz_norm(omega, alpha: float, tol: float = 1e-10, max_iter: int = 500) -> float:
    """Luxemburg norm on the circle with normalized measure.

    Finds the unique ``λ > 0`` with ``∫ (|Ω|/λ) log(e + |Ω|/λ)^α dν = 1`` by
    bisection; the defining integral is strictly decreasing in ``λ``.
    """
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    absv = np.abs(omega.values)
    w = omega.weights
    l1 = float(np.sum(w * absv))
    if l1 == 0.0:
        return 0.0
    linf = float(np.max(absv))
    lo = 0.1 * l1 / (1.0 + np.log(np.e + linf / l1)) ** alpha
    hi = 10.0 * linf * (1.0 + alpha)
    for _ in range(200):
        if _luxemburg_integral(absv, w, lo, alpha) >= 1.0:
            break
        lo /= 4.0
    for _ in range(200):
        if _luxemburg_integral(absv, w, hi, alpha) <= 1.0:
            break
        hi *= 4.0
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if _luxemburg_integral(absv, w, mid, alpha) >= 1.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * hi:
            lam = 0.5 * (lo + hi)
            return lam
    raise ConvergenceError("Luxemburg bisection did not converge")


def d_lambda(K, lam: float, origin_offset=None) -> float:
    """``∫ |K(y)| log(e + |y|)^λ dy`` on the non-periodized fundamental domain.

    ``origin_offset`` places the stored samples at ``y = x + offset`` on the
    line, so kernels that live at a large translate keep their true weight
    without the grid having to contain the translate.
    """
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    g = K.grid
    if isinstance(K, SampledFunction1D):
        y = g.points() + (float(origin_offset) if origin_offset else 0.0)
        wgt = np.log(np.e + np.abs(y)) ** lam
        return float(g.h * np.sum(np.abs(K.values) * wgt))
    X, Y = g.points()
    if origin_offset is not None:
        ox, oy = (origin_offset if np.ndim(origin_offset) else (origin_offset, origin_offset))
        X, Y = X + float(ox), Y + float(oy)
    wgt = np.log(np.e + np.hypot(X, Y)) ** lam
    return float((g.h ** 2) * np.sum(np.abs(K.values) * wgt))
