import math

import numpy as np
import pytest

from paracrystal import materials
from paracrystal.errors import AngleDomainError, WavelengthRangeError
from paracrystal.materials import (effective_extraordinary_index, get_material,
                                   refractive_index, walkoff_angle)

# Eimerl BBO, typed independently of the shipped database
BBO_O = (2.7359, 0.01878, 0.01822, 0.01354)
BBO_E = (2.3753, 0.01224, 0.01667, 0.01516)


def eimerl(c, lam_nm):
    l2 = (lam_nm / 1000) ** 2
    return math.sqrt(c[0] + c[1] / (l2 - c[2]) - c[3] * l2)


@pytest.mark.parametrize("lam", [405.0, 532.0, 776.0, 810.0, 847.1, 1060.0])
def test_bbo_matches_sellmeier_oracle(lam):
    assert refractive_index("BBO", "o", lam) == pytest.approx(eimerl(BBO_O, lam), abs=1e-12)
    assert refractive_index("BBO", "e", lam) == pytest.approx(eimerl(BBO_E, lam), abs=1e-12)


@pytest.mark.parametrize("name,sign", [("BBO", -1), ("YVO4", +1), ("MgF2", +1), ("quartz", +1)])
def test_birefringence_sign(name, sign):
    lam = np.linspace(450, 1000, 12)
    dn = refractive_index(name, "e", lam) - refractive_index(name, "o", lam)
    assert np.all(np.sign(dn) == sign)


@pytest.mark.parametrize("name", ["BBO", "YVO4", "MgF2", "quartz"])
def test_normal_dispersion(name):
    lam = np.linspace(420, 1050, 50)
    for pol in "oe":
        assert np.all(np.diff(refractive_index(name, pol, lam)) < 0)


def test_yvo4_and_quartz_sanity():
    # textbook values near 800 nm
    assert refractive_index("YVO4", "o", 800) == pytest.approx(1.97, abs=0.01)
    assert refractive_index("YVO4", "e", 800) == pytest.approx(2.19, abs=0.01)
    assert refractive_index("quartz", "o", 800) == pytest.approx(1.5383, abs=5e-4)
    assert refractive_index("MgF2", "o", 800) == pytest.approx(1.3751, abs=5e-4)


def test_scalar_in_scalar_out():
    assert isinstance(refractive_index("BBO", "o", 800.0), float)
    assert refractive_index("BBO", "o", [700.0, 800.0]).shape == (2,)


def test_effective_index_endpoints_and_bounds():
    lam = 810.0
    no, ne = refractive_index("BBO", "o", lam), refractive_index("BBO", "e", lam)
    assert effective_extraordinary_index("BBO", 0.0, lam) == pytest.approx(no, abs=1e-14)
    assert effective_extraordinary_index("BBO", 90.0, lam) == pytest.approx(ne, abs=1e-14)
    th = np.linspace(0, 90, 91)
    n = effective_extraordinary_index("BBO", th, lam)
    assert np.all((n <= no + 1e-15) & (n >= ne - 1e-15))
    assert np.all(np.diff(n) < 0)


def test_walkoff_against_poynting_oracle():
    # the Poynting vector sits at tan(theta_S) = (n_o/n_e)^2 tan(theta)
    lam, theta = 405.0, 28.8
    no, ne = eimerl(BBO_O, lam), eimerl(BBO_E, lam)
    t = math.radians(theta)
    rho = math.degrees(math.atan((no / ne) ** 2 * math.tan(t)) - t)
    assert walkoff_angle("BBO", theta, lam) == pytest.approx(rho, abs=1e-9)
    assert walkoff_angle("BBO", theta, lam) == pytest.approx(3.85, abs=0.02)


def test_walkoff_vanishes_on_axes():
    assert walkoff_angle("BBO", 0.0, 800) == pytest.approx(0.0, abs=1e-12)
    assert walkoff_angle("BBO", 90.0, 800) == pytest.approx(0.0, abs=1e-12)


def test_range_and_angle_errors():
    with pytest.raises(WavelengthRangeError):
        refractive_index("BBO", "o", 2000.0)
    with pytest.raises(WavelengthRangeError):
        refractive_index("YVO4", "e", [500.0, 300.0])
    with pytest.raises(AngleDomainError):
        effective_extraordinary_index("BBO", 95.0, 800)
    with pytest.raises(AngleDomainError):
        walkoff_angle("BBO", -1.0, 800)
    with pytest.raises(ValueError):
        refractive_index("BBO", "x", 800)
    with pytest.raises(KeyError):
        get_material("unobtainium")


def test_lookup_is_case_insensitive():
    assert get_material("bbo") is get_material("BBO")
    assert get_material("Quartz").name == "quartz"


def test_checksum_is_sha256_of_file():
    import hashlib
    path = materials.default_database_path()
    assert materials.database_checksum() == hashlib.sha256(path.read_bytes()).hexdigest()


def test_use_database_swaps_lookup(custom_db):
    path = custom_db("[BBO]\nsign = negative\nform = eimerl\nordinary = 4 0 0 0\n"
                     "extraordinary = 2.25 0 0 0\nvalid_range_nm = 200 2000\n")
    materials.use_database(path)
    assert refractive_index("BBO", "o", 800) == pytest.approx(2.0)
    assert refractive_index("BBO", "e", 1500) == pytest.approx(1.5)
    materials.use_database(None)
    assert refractive_index("BBO", "o", 800) == pytest.approx(eimerl(BBO_O, 800))
