import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dyadiclab.bumps import (
    LogBump,
    _partition_constant,
    make_family,
    smoothstep,
    validate_family,
)
from dyadiclab.errors import FeasibilityError
from dyadiclab.grid import Grid1D, convolve, random_band_limited, multiply_spectrum


@pytest.fixture(scope="module")
def fam():
    return make_family(Grid1D(32.0, 1024))


def test_family_validates(fam):
    rep = validate_family(fam)
    assert rep.passed, rep.failures()
    assert all(r[1] < 1e-8 for r in rep.rows)


def test_phi_normalization(fam):
    assert abs(fam.phi.hat(np.array([0.0]))[0] - 1.0) < 1e-12


def test_beta_plateau_exact_on_grid(fam):
    g = fam.grid
    xi = g.freqs()
    sel = (np.abs(xi) >= 20 / 21) & (np.abs(xi) <= 21 / 20)
    assert np.all(fam.beta.hat(xi[sel]) == 1.0)


def test_partition_constant_random_frequencies(fam):
    rng = np.random.default_rng(3)
    xi = np.exp2(rng.uniform(-4, 4, 100))
    total = np.zeros_like(xi)
    for k in range(-20, 21):
        total += fam.psi.hat.radial(xi * 2.0 ** k)
    assert np.max(np.abs(total - fam.c_partition)) <= 1e-8


def test_broken_family_fails_partition():
    # widened annulus whose overlapping dilates are mis-normalized: the rise
    # and fall transitions have different log-widths, so the sum oscillates
    bad_psi = LogBump(-3.0, -2.0, 2.0, 2.5)
    _, dev = _partition_constant(bad_psi)
    assert dev > 1e-3


def test_gamma_telescoping(fam):
    xi = np.exp2(np.linspace(-4, 4, 257))
    total = np.zeros_like(xi)
    for k in range(-5, 6):
        total += fam.gamma.hat.radial(xi * 2.0 ** (-k))
    assert np.max(np.abs(total - 1.0)) < 1e-12


def test_psi_tilde_reproduces_pieces(fam):
    # psi_tilde * (psi_k * f) = psi_k * f for band-limited f
    g = fam.grid
    f = random_band_limited(g, np.random.default_rng(11), 0.2)
    xi = g.freqs()
    for k in (-1, 0, 1, 2):
        piece = multiply_spectrum(f, fam.psi.hat(xi * 2.0 ** (-k)))
        tilde_k = multiply_spectrum(piece, fam.psi_tilde.hat(xi * 2.0 ** (-k)))
        scale = max(np.max(np.abs(piece.values)), 1e-300)
        assert np.max(np.abs(tilde_k.values - piece.values)) < 1e-9 * scale


def test_k0_minimal(fam):
    assert fam.k0 >= 1
    lo, hi = fam.psi.hat.support
    r = np.linspace(lo, hi, 513)
    partial = np.zeros_like(r)
    for j in range(-(fam.k0 - 1), fam.k0):
        partial += fam.psi.hat.radial(r * 2.0 ** (-j))
    assert np.max(np.abs(partial / fam.c_partition - 1.0)) > 1e-12


def test_vartheta_dilation_sum_value(fam):
    # plateau + support force the constant to be 3, recorded by construction
    assert abs(fam.vartheta_sum - 3.0) < 1e-10


def test_eta_spatial_scale(fam):
    eta = fam.eta.spatial
    x = fam.grid.points()
    vals = np.abs(eta.values)
    half = vals >= 0.5 * np.max(vals)
    width = np.sum(half) * fam.grid.h
    # FWHM of a Gaussian with sigma_x = 256 is ~603; grid (L=32) wraps it,
    # so just check the profile is flat at this window (wide envelope)
    assert width > 8.0


def test_too_coarse_grid_rejected():
    with pytest.raises(FeasibilityError):
        make_family(Grid1D(1024.0, 1024))


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=0.0, max_value=1.0, allow_nan=False))
def test_smoothstep_symmetry(t):
    s = smoothstep(np.array([t, 1.0 - t]))
    assert abs(s[0] + s[1] - 1.0) < 1e-12


def test_smoothstep_exact_tails():
    assert smoothstep(np.array([-1.0, 0.0]))[0] == 0.0
    assert smoothstep(np.array([1.0, 2.0]))[1] == 1.0
