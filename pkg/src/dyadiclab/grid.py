"""Periodic band-limited functions on uniform grids, with an exact FFT calculus.

A function is represented by its samples on ``x_i = -L/2 + i*h`` (``h = L/M``,
``M`` a power of two) and *means* the unique trigonometric interpolant through
those samples.  With that semantics the forward transform below reproduces the
continuum Fourier transform ``∫ f(x) e^{-2πi x ξ} dx`` exactly at the grid
frequencies ``ξ = m/L``, ``m ∈ [-M/2, M/2)``, for any function whose spectrum
lives inside the Nyquist band.  Convolution, dilation by powers of two and
quadrature are then exact operations on that class, up to floating point.

Functions on the line are modelled by choosing ``L`` large enough that all
constructed functions decay below ~1e-10 at the torus boundary; the remaining
error is periodization (wrap-around), which is the only aliasing mechanism in
the toolkit.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import GridMismatchError, NyquistError


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def _centered_indices(M: int) -> np.ndarray:
    return np.arange(-(M // 2), M // 2)


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid of ``M`` points on the torus ``[-L/2, L/2)``."""

    L: float
    M: int

    def __post_init__(self):
        if self.L <= 0:
            raise ValueError("period L must be positive")
        if not _is_power_of_two(self.M):
            raise ValueError(f"M={self.M} is not a power of two")

    @property
    def h(self) -> float:
        return self.L / self.M

    @property
    def nyquist(self) -> float:
        """Largest representable frequency magnitude, M/(2L)."""
        return self.M / (2.0 * self.L)

    def points(self) -> np.ndarray:
        return -self.L / 2 + self.h * np.arange(self.M)

    def freq_indices(self) -> np.ndarray:
        return _centered_indices(self.M)

    def freqs(self) -> np.ndarray:
        return self.freq_indices() / self.L


@dataclass(frozen=True)
class Grid2D:
    """Square ``M x M`` grid on ``[-L/2, L/2)^2``."""

    L: float
    M: int

    def __post_init__(self):
        if self.L <= 0:
            raise ValueError("period L must be positive")
        if not _is_power_of_two(self.M):
            raise ValueError(f"M={self.M} is not a power of two")

    @property
    def h(self) -> float:
        return self.L / self.M

    @property
    def nyquist(self) -> float:
        return self.M / (2.0 * self.L)

    def points(self) -> tuple[np.ndarray, np.ndarray]:
        ax = -self.L / 2 + self.h * np.arange(self.M)
        return np.meshgrid(ax, ax, indexing="ij")

    def axis_points(self) -> np.ndarray:
        return -self.L / 2 + self.h * np.arange(self.M)

    def freq_indices(self) -> np.ndarray:
        return _centered_indices(self.M)

    def freqs(self) -> np.ndarray:
        return self.freq_indices() / self.L


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=complex).copy()
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class SampledFunction1D:
    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        v = _frozen(self.values)
        if v.shape != (self.grid.M,):
            raise ValueError("values length must equal grid.M")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class SampledFunction2D:
    grid: Grid2D
    values: np.ndarray

    def __post_init__(self):
        v = _frozen(self.values)
        if v.shape != (self.grid.M, self.grid.M):
            raise ValueError("values must be an M x M array")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class Spectrum1D:
    """Fourier coefficients at ``ξ = m/L`` in centered order ``m = -M/2 .. M/2-1``."""

    grid: Grid1D
    coeffs: np.ndarray

    def __post_init__(self):
        c = _frozen(self.coeffs)
        if c.shape != (self.grid.M,):
            raise ValueError("coeffs length must equal grid.M")
        object.__setattr__(self, "coeffs", c)


@dataclass(frozen=True)
class Spectrum2D:
    grid: Grid2D
    coeffs: np.ndarray

    def __post_init__(self):
        c = _frozen(self.coeffs)
        if c.shape != (self.grid.M, self.grid.M):
            raise ValueError("coeffs must be an M x M array")
        object.__setattr__(self, "coeffs", c)


def _alt_signs(M: int) -> np.ndarray:
    # (-1)^m on centered indices; encodes the x-origin shift to -L/2
    s = np.ones(M)
    s[_centered_indices(M) % 2 != 0] = -1.0
    return s


def forward_transform(f: SampledFunction1D | SampledFunction2D):
    """Discrete realization of ``f̂(ξ) = ∫ f(x) e^{-2πi x ξ} dx`` at grid frequencies."""
    g = f.grid
    if isinstance(f, SampledFunction1D):
        c = g.h * _alt_signs(g.M) * np.fft.fftshift(np.fft.fft(f.values))
        return Spectrum1D(g, c)
    s = _alt_signs(g.M)
    c = (g.h ** 2) * np.outer(s, s) * np.fft.fftshift(np.fft.fft2(f.values))
    return Spectrum2D(g, c)


def inverse_transform(spec: Spectrum1D | Spectrum2D):
    g = spec.grid
    if isinstance(spec, Spectrum1D):
        v = np.fft.ifft(np.fft.ifftshift(_alt_signs(g.M) * spec.coeffs)) / g.h
        return SampledFunction1D(g, v)
    s = _alt_signs(g.M)
    v = np.fft.ifft2(np.fft.ifftshift(np.outer(s, s) * spec.coeffs)) / (g.h ** 2)
    return SampledFunction2D(g, v)


def convolve(f, g):
    """Continuum-normalized periodic convolution ``(f*g)(x) = ∫ f(y) g(x-y) dy``.

    Exact (via the convolution theorem) for the trigonometric interpolants;
    interpreting the result as a convolution on the line is subject to the
    wrap-around model described in the module docstring.
    """
    if f.grid != g.grid:
        raise GridMismatchError("convolve requires a common grid")
    cf = forward_transform(f)
    cg = forward_transform(g)
    cls = Spectrum1D if isinstance(cf, Spectrum1D) else Spectrum2D
    return inverse_transform(cls(f.grid, cf.coeffs * cg.coeffs))


def multiply_spectrum(f, multiplier: np.ndarray):
    """Apply a frequency multiplier given as an array over centered grid frequencies."""
    spec = forward_transform(f)
    cls = Spectrum1D if isinstance(spec, Spectrum1D) else Spectrum2D
    return inverse_transform(cls(f.grid, spec.coeffs * np.asarray(multiplier)))


def dyadic_dilate(f, j: int):
    """The L¹-normalized dilation ``f_j = 2^{jn} f(2^j ·)`` by an exact index map.

    Frequency side this is ``f̂(2^{-j}ξ)``.  For ``j >= 0`` the spectrum is
    spread onto indices ``2^j m`` and the operation is exact provided the
    dilated support stays inside the Nyquist band (otherwise ``NyquistError``).
    For ``j < 0`` the spectrum is subsampled, which realizes the torus
    periodization of the dilated function; it is exact when the spectrum is
    supported on multiples of ``2^{-j}``, and otherwise drops the complementary
    coefficients (the wrap-around model).
    """
    spec = forward_transform(f)
    g = f.grid
    M = g.M
    n = 1 if isinstance(f, SampledFunction1D) else 2
    c = spec.coeffs
    idx = _centered_indices(M)
    if j == 0:
        return f
    out = np.zeros_like(np.asarray(c))
    if j > 0:
        s = 1 << j
        keep = np.abs(idx) * s < M // 2
        if n == 1:
            bad = ~keep
            if np.max(np.abs(c[bad]), initial=0.0) > 1e-12 * max(np.max(np.abs(c)), 1e-300):
                raise NyquistError(f"dilation by 2^{j} leaves the Nyquist band")
            out[(idx[keep] * s) + M // 2] = c[keep]
        else:
            keep2 = np.outer(keep, keep)
            bad = ~keep2
            if np.max(np.abs(c[bad]), initial=0.0) > 1e-12 * max(np.max(np.abs(c)), 1e-300):
                raise NyquistError(f"dilation by 2^{j} leaves the Nyquist band")
            src = np.where(keep)[0]
            tgt = (idx[src] * s) + M // 2
            out[np.ix_(tgt, tgt)] = c[np.ix_(src, src)]
    else:
        s = 1 << (-j)
        small = np.abs(idx) * s < M // 2
        if n == 1:
            out[small] = c[(idx[small] * s) + M // 2]
        else:
            tgt = np.where(small)[0]
            src = (idx[tgt] * s) + M // 2
            out[np.ix_(tgt, tgt)] = c[np.ix_(src, src)]
    cls = Spectrum1D if n == 1 else Spectrum2D
    return inverse_transform(cls(g, out))


def quadrature(f, weight=None) -> complex:
    """``h^n · Σ f(x_i) w(x_i)``; exact for band-limited integrands."""
    g = f.grid
    n = 1 if isinstance(f, SampledFunction1D) else 2
    vals = f.values
    if weight is not None:
        if isinstance(f, SampledFunction1D):
            vals = vals * weight(g.points())
        else:
            X, Y = g.points()
            vals = vals * weight(X, Y)
    return complex((g.h ** n) * np.sum(vals))


def fourier_at(f, xi: np.ndarray) -> np.ndarray:
    """Direct evaluation of the transform at arbitrary frequencies.

    ``xi`` has shape (n_points,) in 1D or (n_points, 2) in 2D.  The sum runs
    only over samples where ``f`` is nonzero, so this is cheap for compactly
    supported kernels; cost is O(n_points * support size).
    """
    g = f.grid
    if isinstance(f, SampledFunction1D):
        x = g.points()
        mask = f.values != 0
        xs, vs = x[mask], f.values[mask]
        ph = np.exp(-2j * np.pi * np.outer(np.atleast_1d(xi), xs))
        return g.h * ph @ vs
    X, Y = g.points()
    mask = f.values != 0
    xs, ys, vs = X[mask], Y[mask], f.values[mask]
    xi = np.atleast_2d(xi)
    out = np.empty(xi.shape[0], dtype=complex)
    chunk = max(1, int(4e7 // max(len(vs), 1)))
    for i in range(0, xi.shape[0], chunk):
        blk = xi[i : i + chunk]
        ph = np.exp(-2j * np.pi * (np.outer(blk[:, 0], xs) + np.outer(blk[:, 1], ys)))
        out[i : i + chunk] = ph @ vs
    return (g.h ** 2) * out


def random_band_limited(grid: Grid1D, rng: np.random.Generator,
                        band_fraction: float = 0.125) -> SampledFunction1D:
    """Random function with spectrum confined to ``|m| <= band_fraction * M``.

    The margin keeps powers up to |f|^4 inside the Nyquist band, so norm
    quadratures downstream stay exact.
    """
    M = grid.M
    idx = _centered_indices(M)
    keep = np.abs(idx) <= int(band_fraction * M)
    c = np.zeros(M, dtype=complex)
    k = int(np.sum(keep))
    c[keep] = rng.standard_normal(k) + 1j * rng.standard_normal(k)
    return inverse_transform(Spectrum1D(grid, c))


def function_to_csv(f: SampledFunction1D, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "re", "im"])
        for x, v in zip(f.grid.points(), f.values):
            w.writerow([f"{x:.17g}", f"{v.real:.17g}", f"{v.imag:.17g}"])


def function_from_csv(grid: Grid1D, path) -> SampledFunction1D:
    vals = []
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        next(r)
        for row in r:
            vals.append(float(row[1]) + 1j * float(row[2]))
    return SampledFunction1D(grid, np.array(vals))


def spectrum_to_csv(spec: Spectrum1D, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["m", "re", "im"])
        for m, c in zip(spec.grid.freq_indices(), spec.coeffs):
            w.writerow([int(m), f"{c.real:.17g}", f"{c.imag:.17g}"])


def function2d_to_csv(f: SampledFunction2D, path) -> None:
    ax = f.grid.axis_points()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x1", "x2", "re", "im"])
        for i in range(f.grid.M):
            for k in range(f.grid.M):
                v = f.values[i, k]
                w.writerow([f"{ax[i]:.17g}", f"{ax[k]:.17g}", f"{v.real:.17g}", f"{v.imag:.17g}"])
