import numpy as np
import pytest

from dyadiclab.bumps import GaussianLowpass, LinBump, make_family
from dyadiclab.errors import FeasibilityError, NyquistError
from dyadiclab.grid import (
    Grid1D,
    Grid2D,
    SampledFunction1D,
    Spectrum1D,
    forward_transform,
    inverse_transform,
    quadrature,
    random_band_limited,
)
from dyadiclab.multiband import band_from_profile, merge_bands, to_sampled_function
from dyadiclab.norms import d_lambda, lp_norm
from dyadiclab.operators import (
    BilinearKernel,
    DyadicSymbol1D,
    ProductShiftedKernel,
    ProfileM0,
    ShiftedAnnulusM0,
    apply_bilinear,
    apply_linear,
    assemble_symbol2d,
    bilinear_oracle,
    transpose_kernel,
    trilinear_form,
)


@pytest.fixture(scope="module")
def fam():
    return make_family(Grid1D(32.0, 1024))


GRID = Grid1D(32.0, 1024)


# --- 1D symbols ---------------------------------------------------------------


def test_assemble_partition_symbol(fam):
    sym = DyadicSymbol1D(ProfileM0(fam.psi.hat))
    m = sym.sample_on(GRID)
    xi = GRID.freqs()
    safe = (np.abs(xi) >= 2.0 / GRID.L) & (np.abs(xi) <= GRID.nyquist / 2)
    assert np.max(np.abs(m[safe] - fam.c_partition)) < 1e-12


def test_assemble_disjoint_dilates():
    m0 = LinBump(0.5, 0.6, 0.9, 1.0)  # support inside [1/2, 1]: dilates disjoint
    sym = DyadicSymbol1D(ProfileM0(m0))
    m = sym.sample_on(GRID)
    xi = np.abs(GRID.freqs())
    pos = xi > 0
    j = np.zeros_like(xi)
    j[pos] = np.ceil(np.log2(0.5 / xi[pos]))
    direct = np.zeros_like(xi)
    direct[pos] = m0(xi[pos] * 2.0 ** j[pos]) + m0(xi[pos] * 2.0 ** (j[pos] + 1))
    assert np.max(np.abs(m[pos] - direct[pos])) < 1e-12


class RandomLogSymbol:
    """Smooth random profile on the annulus: trig polynomial in log2|xi|."""

    support = (0.5, 2.0)

    def __init__(self, seed):
        rng = np.random.default_rng(seed)
        self.coef = rng.standard_normal(4) + 1j * rng.standard_normal(4)

    def __call__(self, xi):
        xi = np.abs(np.asarray(xi, dtype=float))
        out = np.zeros_like(xi, dtype=complex)
        mask = (xi >= 0.5) & (xi <= 2.0)
        u = np.log2(xi[mask])
        vals = np.zeros_like(u, dtype=complex)
        for n, c in enumerate(self.coef):
            vals += c * np.sin(np.pi * (u + 1) / 2 * (n + 1))
        out[mask] = vals
        return out


def test_dyadic_periodicity_of_assembled_symbol():
    sym = DyadicSymbol1D(ProfileM0(RandomLogSymbol(0), support=(0.5, 2.0)))
    m = sym.sample_on(GRID)
    idx = GRID.freq_indices()
    M = GRID.M
    safe = (np.abs(idx) >= 2) & (np.abs(idx) * 2 < M // 2 - 1) & (idx != 0)
    sel = np.where(safe)[0]
    m_at_2xi = m[2 * (sel - M // 2) + M // 2]
    scale = max(np.max(np.abs(m)), 1e-300)
    assert np.max(np.abs(m_at_2xi - m[sel])) < 1e-10 * scale


def test_overlap_count_at_most_two(fam):
    lo, hi = fam.psi.hat.support
    xi = np.exp2(np.linspace(-3, 3, 1001))
    count = np.zeros_like(xi)
    for k in range(-30, 31):
        count += (fam.psi.hat.radial(xi * 2.0 ** k) > 0).astype(float)
    assert np.max(count) <= 2 + 1e-12


# --- linear operator ----------------------------------------------------------


def test_apply_linear_identity_symbol(fam):
    # symbol == partition constant on supp f-hat: acts as C * identity
    f = random_band_limited(GRID, np.random.default_rng(1), 0.2)
    mean = complex(quadrature(f)) / GRID.L
    sym = DyadicSymbol1D(ProfileM0(fam.psi.hat))
    out = apply_linear(sym, f)
    target = fam.c_partition * (f.values - mean)
    assert np.max(np.abs(out.values - target)) < 1e-9 * np.max(np.abs(f.values))


def test_apply_linear_character(fam):
    m0 = 48
    c = np.zeros(GRID.M, dtype=complex)
    c[GRID.M // 2 + m0] = GRID.L
    f = inverse_transform(Spectrum1D(GRID, c))
    sym = DyadicSymbol1D(ProfileM0(RandomLogSymbol(2), support=(0.5, 2.0)))
    out = apply_linear(sym, f)
    expected = sym.sample_on(GRID)[GRID.M // 2 + m0]
    assert np.max(np.abs(out.values - expected * f.values)) < 1e-10 * GRID.L


def test_apply_linear_per_scale_route(fam):
    f = random_band_limited(GRID, np.random.default_rng(3), 0.2)
    sym = DyadicSymbol1D(ProfileM0(RandomLogSymbol(4), support=(0.5, 2.0)))
    a = apply_linear(sym, f, via="multiplier")
    b = apply_linear(sym, f, via="per_scale")
    assert np.max(np.abs(a.values - b.values)) < 1e-9 * max(np.max(np.abs(a.values)), 1e-300)


def test_apply_linear_multiband_matches_grid():
    # shifted-annulus kernel at small carrier: multi-band route vs literal grid
    env = Grid1D(64.0, 256)
    lit = Grid1D(64.0, 2048)
    prof = GaussianLowpass(sigma_x=2.0, cut_start=0.4, cut_end=0.8)
    f_mb = merge_bands(env, [band_from_profile(env, 2, prof, translate_num=4),
                             band_from_profile(env, 4, prof, translate_num=-8)])
    f_lit = to_sampled_function(f_mb, lit)
    beta_like = LinBump(10 / 11, 20 / 21, 21 / 20, 11 / 10)
    sym = DyadicSymbol1D(ShiftedAnnulusM0(beta_like, offset=16))
    out_mb = apply_linear(sym, f_mb)
    out_lit = apply_linear(sym, f_lit)
    rendered = to_sampled_function(out_mb, lit)
    scale = max(np.max(np.abs(out_lit.values)), 1e-300)
    assert np.max(np.abs(rendered.values - out_lit.values)) < 1e-10 * scale


# --- bilinear operator --------------------------------------------------------


def _random_annulus_kernel(grid2, rng, support=(0.5, 2.0)):
    xi = grid2.freqs()
    X1, X2 = np.meshgrid(xi, xi, indexing="ij")
    R = np.hypot(X1, X2)
    mask = (R >= support[0]) & (R <= support[1])
    c = np.zeros((grid2.M, grid2.M), dtype=complex)
    c[mask] = rng.standard_normal(mask.sum()) + 1j * rng.standard_normal(mask.sum())
    return BilinearKernel.from_spectrum(grid2, c, support=support)


G1 = Grid1D(8.0, 64)
G2 = Grid2D(8.0, 64)


def test_bilinear_flat_symbol_is_product():
    f1 = random_band_limited(G1, np.random.default_rng(5), 0.2)
    f2 = random_band_limited(G1, np.random.default_rng(6), 0.2)
    m = np.ones((G1.M, G1.M), dtype=complex)
    out = apply_bilinear(m, f1, f2)
    target = f1.values * f2.values
    assert np.max(np.abs(out.values - target)) < 1e-10 * max(np.max(np.abs(target)), 1e-300)


def test_bilinear_degenerates_to_linear():
    # symbol independent of xi2 acts on f1 only
    rng = np.random.default_rng(7)
    f1 = random_band_limited(G1, rng, 0.2)
    f2 = random_band_limited(G1, rng, 0.2)
    m1d = rng.standard_normal(G1.M) + 1j * rng.standard_normal(G1.M)
    m = np.tile(m1d[:, None], (1, G1.M))
    out = apply_bilinear(m, f1, f2)
    spec1 = forward_transform(f1)
    tf1 = inverse_transform(Spectrum1D(G1, spec1.coeffs * m1d))
    target = tf1.values * f2.values
    assert np.max(np.abs(out.values - target)) < 1e-9 * max(np.max(np.abs(target)), 1e-300)


def test_bilinear_oracle_agreement_20_seeds():
    worst = 0.0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        K = _random_annulus_kernel(G2, rng)
        f1 = random_band_limited(G1, rng, 0.2)
        f2 = random_band_limited(G1, rng, 0.2)
        a = apply_bilinear(K, f1, f2)
        b = bilinear_oracle(K, f1, f2)
        scale = max(np.max(np.abs(b.values)), 1e-300)
        worst = max(worst, float(np.max(np.abs(a.values - b.values))) / scale)
    assert worst < 1e-9


def test_bilinear_zero_symbol():
    f1 = random_band_limited(G1, np.random.default_rng(8), 0.2)
    out = apply_bilinear(np.zeros((G1.M, G1.M), dtype=complex), f1, f1)
    assert np.max(np.abs(out.values)) == 0.0


def test_bilinear_symmetric_swap():
    rng = np.random.default_rng(9)
    K = _random_annulus_kernel(G2, rng)
    sym_coeffs = K.spectrum.coeffs + K.spectrum.coeffs.T
    Ks = BilinearKernel.from_spectrum(G2, sym_coeffs, support=K.support_radial)
    f = random_band_limited(G1, rng, 0.2)
    g = random_band_limited(G1, rng, 0.2)
    out1 = apply_bilinear(Ks, f, g)
    out2 = apply_bilinear(Ks, g, f)
    scale = max(np.max(np.abs(out1.values)), 1e-300)
    assert np.max(np.abs(out1.values - out2.values)) < 1e-10 * scale


def test_safe_band_guard():
    f_wide = random_band_limited(G1, np.random.default_rng(10), 0.45)
    with pytest.raises(NyquistError):
        apply_bilinear(np.ones((G1.M, G1.M), dtype=complex), f_wide, f_wide)


def test_oracle_size_guard():
    g1 = Grid1D(8.0, 256)
    f = random_band_limited(g1, np.random.default_rng(11), 0.1)
    with pytest.raises(FeasibilityError):
        bilinear_oracle(np.ones((256, 256), dtype=complex), f, f)


# --- transposes ---------------------------------------------------------------


def test_transpose_involutions():
    K = _random_annulus_kernel(G2, np.random.default_rng(12))
    K11 = transpose_kernel(transpose_kernel(K, 1, on_wrap="allow"), 1, on_wrap="allow")
    assert np.array_equal(K11.sf.values, K.sf.values)
    K22 = transpose_kernel(transpose_kernel(K, 2, on_wrap="allow"), 2, on_wrap="allow")
    assert np.array_equal(K22.sf.values, K.sf.values)


def test_transpose_order_three():
    K = _random_annulus_kernel(G2, np.random.default_rng(13))
    K3 = K
    for _ in range(3):
        K3 = transpose_kernel(transpose_kernel(K3, 2, on_wrap="allow"), 1,
                              on_wrap="allow")
    assert np.array_equal(K3.sf.values, K.sf.values)


def test_transpose_dlambda_comparable():
    # measure-preserving remap: mass functionals move by a bounded factor
    rng = np.random.default_rng(14)
    g2 = Grid2D(16.0, 128)
    K = _random_annulus_kernel(g2, rng)
    K1 = transpose_kernel(K, 1, on_wrap="allow")
    for lam in (0.0, 1.0):
        a = d_lambda(K.sf, lam)
        b = d_lambda(K1.sf, lam)
        assert b / a < 4.0 and a / b < 4.0


def test_duality_identities_10_triples():
    worst1 = worst2 = 0.0
    for seed in range(10):
        rng = np.random.default_rng(100 + seed)
        K = _random_annulus_kernel(G2, rng)
        f1 = random_band_limited(G1, rng, 0.15)
        f2 = random_band_limited(G1, rng, 0.15)
        f3 = random_band_limited(G1, rng, 0.15)
        lam = trilinear_form(K, f1, f2, f3)
        lam1 = trilinear_form(transpose_kernel(K, 1, on_wrap="allow"), f3, f2, f1)
        lam2 = trilinear_form(transpose_kernel(K, 2, on_wrap="allow"), f1, f3, f2)
        den = lp_norm(f1, 2) * lp_norm(f2, 2) * lp_norm(f3, 2)
        worst1 = max(worst1, abs(lam - lam1) / den)
        worst2 = max(worst2, abs(lam - lam2) / den)
    assert worst1 <= 1e-8 and worst2 <= 1e-8


def test_transpose_wrap_rejection():
    # kernel with mass right up to the domain boundary cannot be remapped
    g2 = Grid2D(8.0, 64)
    X, Y = g2.points()
    vals = np.exp(-((np.abs(X) - 3.5) ** 2 + (np.abs(Y) - 3.5) ** 2))
    K = BilinearKernel.from_values(
        __import__("dyadiclab.grid", fromlist=["SampledFunction2D"]).SampledFunction2D(g2, vals))
    with pytest.raises(FeasibilityError):
        transpose_kernel(K, 1)


# --- multi-band bilinear vs literal grid ---------------------------------------


def test_bilinear_multiband_matches_grid_route():
    # narrow envelopes whose band sits inside the kernel plateau after the
    # matching dilation; the literal route restricts to the dilations where
    # the torus and line readings of the kernel coincide (no alias overlap)
    env = Grid1D(256.0, 1024)
    lit = Grid1D(256.0, 2048)
    lit2 = Grid2D(256.0, 2048)
    prof = GaussianLowpass(sigma_x=16.0, cut_start=0.03, cut_end=0.045)
    beta_like = LinBump(10 / 11, 20 / 21, 21 / 20, 11 / 10)
    offset = 16
    f = merge_bands(env, [band_from_profile(env, 1, prof, translate_num=4)])
    g = merge_bands(env, [band_from_profile(env, -1, prof, translate_num=4)])
    kernel = ProductShiftedKernel(beta_like, offset)
    out_mb = apply_bilinear(kernel, f, g)

    xi = lit2.freqs()
    X1, X2 = np.meshgrid(xi, xi, indexing="ij")
    phase = np.exp(-2j * np.pi * np.mod(offset * (X1 + X2), 1.0))
    coeffs = beta_like(X1) * beta_like(X2) * phase
    K_lit = BilinearKernel.from_spectrum(lit2, coeffs,
                                         support=kernel.pair_support())
    m = assemble_symbol2d(K_lit, lit2, l_range=range(-9, 1))
    out_lit = apply_bilinear(m, to_sampled_function(f, lit),
                             to_sampled_function(g, lit))
    rendered = to_sampled_function(out_mb, lit)
    scale = max(np.max(np.abs(out_lit.values)), 1e-300)
    assert scale > 1e-5  # the plateau passes the envelopes: output ~ eta^2
    assert np.max(np.abs(rendered.values - out_lit.values)) < 1e-9 * scale
