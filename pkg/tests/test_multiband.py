"""The multi-band algebra is validated against the literal single-grid route
at small carriers, where both representations are feasible."""

import numpy as np
import pytest

from dyadiclab.bumps import GaussianLowpass
from dyadiclab.errors import NyquistError
from dyadiclab.grid import Grid1D
from dyadiclab.multiband import (
    Band,
    MultibandFunction1D,
    band_from_profile,
    l2_norm,
    l4_norm,
    merge_bands,
    to_sampled_function,
    unit_phase,
)
from dyadiclab.norms import lp_norm


ENV = Grid1D(64.0, 256)       # envelope grid, Nyquist 2
LIT = Grid1D(64.0, 2048)      # literal grid, Nyquist 16
PROFILE = GaussianLowpass(sigma_x=2.0, cut_start=0.5, cut_end=0.9)


def small_instance(carriers=(1, 3), translates=(4, -6)):
    bands = [band_from_profile(ENV, w, PROFILE, translate_num=t)
             for w, t in zip(carriers, translates)]
    return merge_bands(ENV, bands)


def test_unit_phase_reduces_large_arguments():
    n = np.array([3 + (1 << 40)], dtype=np.int64)
    assert abs(unit_phase(n, 8)[0] - np.exp(-2j * np.pi * 3 / 8)) < 1e-14


def test_values_at_samples_match_literal():
    f = small_instance()
    lit = to_sampled_function(f, LIT)
    stride = LIT.M // ENV.M
    direct = f.values_at_samples()
    assert np.max(np.abs(direct - lit.values[::stride])) < 1e-12 * np.max(np.abs(lit.values))


def test_l2_l4_match_literal_quadrature():
    f = small_instance()
    lit = to_sampled_function(f, LIT)
    assert abs(l2_norm(f) - lp_norm(lit, 2)) < 1e-10 * lp_norm(lit, 2)
    assert abs(l4_norm(f) - lp_norm(lit, 4)) < 1e-10 * lp_norm(lit, 4)


def test_l2_handles_near_carriers():
    # adjacent integer carriers: the cross term is inside the envelope band
    f = small_instance(carriers=(2, 3), translates=(0, 0))
    lit = to_sampled_function(f, LIT)
    assert abs(l2_norm(f) - lp_norm(lit, 2)) < 1e-10 * lp_norm(lit, 2)
    assert abs(l4_norm(f) - lp_norm(lit, 4)) < 1e-10 * lp_norm(lit, 4)


def test_merge_bands_combines_carriers():
    b1 = band_from_profile(ENV, 5, PROFILE)
    b2 = band_from_profile(ENV, 5, PROFILE, translate_num=1)
    merged = merge_bands(ENV, [b1, b2])
    assert len(merged.bands) == 1
    assert np.allclose(merged.bands[0].spectrum, b1.spectrum + b2.spectrum)


def test_zero_bands_dropped():
    z = Band(7, np.zeros(ENV.M, dtype=complex))
    merged = merge_bands(ENV, [z, band_from_profile(ENV, 1, PROFILE)])
    assert [b.carrier for b in merged.bands] == [1]


def test_duplicate_carriers_rejected():
    b = band_from_profile(ENV, 1, PROFILE)
    with pytest.raises(ValueError):
        MultibandFunction1D(ENV, (b, b))


def test_literal_rendering_band_guard():
    f = small_instance(carriers=(20,), translates=(0,))
    with pytest.raises(NyquistError):
        to_sampled_function(f, Grid1D(64.0, 1024))  # Nyquist 8 < 20


def test_lp_norm_dispatch():
    f = small_instance()
    assert lp_norm(f, 2) == l2_norm(f)
    with pytest.raises(ValueError):
        lp_norm(f, 3)
