import math
from dataclasses import replace

import numpy as np
import pytest
from scipy import integrate

from paracrystal import materials
from paracrystal.layout import (BeamGeometry, SourceLayout, emission_mismatch, emission_offsets,
                                gaussian_mode_overlap, lateral_displacement, overlap_table)
from paracrystal.materials import walkoff_angle

NOMINAL = SourceLayout(crystal_length=5.0, cut_angle=28.8)


def test_displacement_is_length_times_tan_walkoff():
    rho = math.radians(walkoff_angle("BBO", 28.8, 405))
    assert lateral_displacement("BBO", 28.8, 405, 5.0) == pytest.approx(5e3 * math.tan(rho))
    # a few hundred microns for 5 mm of BBO
    assert 300 < lateral_displacement("BBO", 28.8, 405, 5.0) < 360


def test_offsets_follow_stack_model():
    d1, d2 = emission_offsets(NOMINAL)
    dp = lateral_displacement("BBO", 28.8, 405, 5.0)
    de = lateral_displacement("BBO", 28.8, 810, 5.0)
    assert d1 == pytest.approx(dp + de)
    assert d2 == pytest.approx(2 * dp)


def test_mismatch_value_and_length_invariance():
    m = emission_mismatch(NOMINAL)
    assert 0.045 <= m <= 0.075
    for L in (0.5, 1.0, 2.0, 20.0):
        assert emission_mismatch(replace(NOMINAL, crystal_length=L)) == m


def test_mismatch_matches_offset_ratio():
    d1, d2 = emission_offsets(NOMINAL)
    dp = lateral_displacement("BBO", 28.8, 405, 5.0)
    assert abs(d1 - d2) / dp == pytest.approx(emission_mismatch(NOMINAL), rel=1e-12)


def test_dispersionless_crystal_has_no_mismatch(custom_db):
    materials.use_database(custom_db(
        "[BBO]\nsign = negative\nform = eimerl\nordinary = 2.75 0 0 0\n"
        "extraordinary = 2.38 0 0 0\nvalid_range_nm = 200 2000\n"))
    assert emission_mismatch(NOMINAL) == pytest.approx(0.0, abs=1e-15)


def gaussian(x, fwhm, x0=0.0):
    w = fwhm / math.sqrt(2 * math.log(2))
    return (2 / (math.pi * w * w)) ** 0.25 * np.exp(-((x - x0) / w) ** 2)


@pytest.mark.parametrize("d,fa,fb", [(0, 53, 53), (20, 53, 53), (0, 63, 53), (35, 133, 53)])
def test_overlap_against_quadrature(d, fa, fb):
    val, _ = integrate.quad(lambda x: gaussian(x, fa) * gaussian(x, fb, d), -2000, 2000,
                            points=[0, d], limit=200)
    assert gaussian_mode_overlap(d, fa, fb) == pytest.approx(val ** 2, rel=1e-8)


def test_overlap_limits():
    assert gaussian_mode_overlap(0.0, 53, 53) == pytest.approx(1.0)
    assert gaussian_mode_overlap(1e4, 53, 53) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        gaussian_mode_overlap(0.0, 0.0, 53)


def test_overlap_table_keys():
    table = overlap_table(NOMINAL, BeamGeometry())
    assert table["emission_mismatch"] == emission_mismatch(NOMINAL)
    assert 0 < table["overlap_crystal1_vs_crystal2"] <= 1


def test_layout_validation():
    with pytest.raises(ValueError):
        SourceLayout(crystal_length=-1, cut_angle=28.8)
    with pytest.raises(ValueError):
        SourceLayout(crystal_length=5, cut_angle=0.0)
    with pytest.raises(ValueError):
        BeamGeometry(50, 60, 53)
    assert SourceLayout(5, 28.8).degenerate_wavelength == 810.0
