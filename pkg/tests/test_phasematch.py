import math

import numpy as np
import pytest

from paracrystal.errors import NotPhaseMatchableError
from paracrystal.materials import effective_extraordinary_index, refractive_index
from paracrystal.phasematch import emission_wavelengths, idler_wavelength, solve_cut_angle


def test_idler_energy_conservation():
    assert idler_wavelength(405, 776) == pytest.approx(1 / (1 / 405 - 1 / 776), rel=1e-14)
    assert idler_wavelength(405, 810) == pytest.approx(810.0)


def test_idler_requires_longer_signal():
    with pytest.raises(ValueError):
        idler_wavelength(405, 400)


def test_cut_angle_satisfies_momentum_conservation():
    p, s = 405.0, 776.0
    i = float(idler_wavelength(p, s))
    theta = solve_cut_angle(p, s, i)
    lhs = effective_extraordinary_index("BBO", theta, p) / p
    rhs = refractive_index("BBO", "o", s) / s + refractive_index("BBO", "o", i) / i
    assert lhs == pytest.approx(rhs, rel=1e-10)
    assert theta == pytest.approx(28.8, abs=0.2)


def test_degenerate_cut_angle_close_to_nondegenerate():
    assert solve_cut_angle(405, 810, 810) == pytest.approx(28.82, abs=0.02)


def test_energy_precondition():
    with pytest.raises(ValueError):
        solve_cut_angle(405, 776, 800)


@pytest.mark.parametrize("signal", np.arange(760.0, 810.1, 5.0))
def test_round_trip(signal):
    idler = float(idler_wavelength(405, signal))
    theta = solve_cut_angle(405, signal, idler)
    s, i = emission_wavelengths(405, theta)
    assert s == pytest.approx(signal, abs=1e-3)
    assert i == pytest.approx(idler, abs=1e-3)


def test_emission_spreads_below_degenerate_angle():
    th0 = solve_cut_angle(405, 810, 810)
    gaps = [np.subtract(*emission_wavelengths(405, th0 - d)[::-1]) for d in (0.01, 0.05, 0.1)]
    assert gaps[0] < gaps[1] < gaps[2]


def test_emission_at_nominal_cut_brackets_band():
    s, i = emission_wavelengths(405, 28.8)
    assert s < 810 < i
    assert 1 / s + 1 / i == pytest.approx(1 / 405, rel=1e-9)
    # strongly angle-sensitive; the nominal angle lands within ~10 nm of 776/847
    assert s == pytest.approx(776, abs=10)
    assert i == pytest.approx(847, abs=10)


@pytest.mark.parametrize("theta", [0.0, 5.0, 20.0, 29.5])
def test_not_phase_matchable(theta):
    with pytest.raises(NotPhaseMatchableError):
        emission_wavelengths(405, theta)


def test_isotropic_crystal_never_phase_matches(custom_db):
    from paracrystal import materials
    coeffs = "2.7359 0.01878 0.01822 0.01354"
    materials.use_database(custom_db(
        f"[BBO]\nsign = negative\nform = eimerl\nordinary = {coeffs}\n"
        f"extraordinary = {coeffs}\nvalid_range_nm = 220 1060\n"))
    with pytest.raises(NotPhaseMatchableError):
        solve_cut_angle(405, 810, 810)
