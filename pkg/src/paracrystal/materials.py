"""Dispersion of uniaxial crystals.

Principal indices come from closed-form Sellmeier-type expressions whose
coefficients live in a plain-text database (``data/materials.ini``). On top
of those, this module evaluates the angle-dependent extraordinary index and
the Poynting-vector walk-off of an extraordinary beam.

Wavelengths are vacuum wavelengths in nm at every public entry point and
are converted to micrometres only inside the dispersion formulas. Angles
are in degrees.
"""

from __future__ import annotations

import configparser
import enum
import hashlib
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import AngleDomainError, WavelengthRangeError

__all__ = [
    "Polarization",
    "Material",
    "load_materials",
    "get_material",
    "use_database",
    "database_checksum",
    "default_database_path",
    "refractive_index",
    "effective_extraordinary_index",
    "walkoff_angle",
]

FORMS = ("eimerl", "sellmeier")


class Polarization(str, enum.Enum):
    ORDINARY = "o"
    EXTRAORDINARY = "e"

    @classmethod
    def parse(cls, value) -> "Polarization":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {"o": cls.ORDINARY, "ordinary": cls.ORDINARY,
                   "e": cls.EXTRAORDINARY, "extraordinary": cls.EXTRAORDINARY}
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown polarization class {value!r}") from None


@dataclass(frozen=True)
class Material:
    """A uniaxial medium with one dispersion formula per principal index."""

    name: str
    form: str
    sellmeier_o: tuple[float, ...]
    sellmeier_e: tuple[float, ...]
    uniaxial_sign: str
    valid_range: tuple[float, float]
    source: str = ""

    def __post_init__(self):
        if self.form not in FORMS:
            raise ValueError(f"{self.name}: unknown dispersion form {self.form!r}")
        if self.uniaxial_sign not in ("positive", "negative"):
            raise ValueError(f"{self.name}: uniaxial_sign must be 'positive' or 'negative'")
        for coeffs in (self.sellmeier_o, self.sellmeier_e):
            if self.form == "eimerl" and len(coeffs) != 4:
                raise ValueError(f"{self.name}: eimerl form takes 4 coefficients")
            if self.form == "sellmeier" and len(coeffs) % 2 != 1:
                raise ValueError(f"{self.name}: sellmeier form takes A plus (B, C) pairs")
        lo, hi = self.valid_range
        if not 0 < lo < hi:
            raise ValueError(f"{self.name}: bad valid range {self.valid_range}")

    def check_range(self, wavelength) -> np.ndarray:
        lam = np.asarray(wavelength, dtype=float)
        lo, hi = self.valid_range
        bad = ~((lam >= lo) & (lam <= hi))
        if np.any(bad):
            offender = lam[bad].flat[0] if lam.ndim else float(lam)
            raise WavelengthRangeError(self.name, float(offender), self.valid_range)
        return lam


def _n_squared(form, coeffs, lam_um):
    l2 = lam_um * lam_um
    if form == "eimerl":
        a, b, c, d = coeffs
        return a + b / (l2 - c) - d * l2
    n2 = coeffs[0] + 0.0 * l2
    for b, c in zip(coeffs[1::2], coeffs[2::2]):
        n2 = n2 + b * l2 / (l2 - c)
    return n2


def _floats(text):
    return tuple(float(tok) for tok in text.split())


def default_database_path() -> Path:
    return Path(str(resources.files("paracrystal") / "data" / "materials.ini"))


def database_checksum(path=None) -> str:
    """SHA-256 of a material database file (the shipped one by default)."""
    path = Path(path) if path is not None else default_database_path()
    return hashlib.sha256(path.read_bytes()).hexdigest()


def load_materials(path=None) -> dict[str, Material]:
    path = Path(path) if path is not None else default_database_path()
    if not path.is_file():
        raise FileNotFoundError(f"material database not found: {path}")
    parser = configparser.ConfigParser(interpolation=None)
    parser.read(path, encoding="utf-8")
    out = {}
    for name in parser.sections():
        sec = parser[name]
        lo, hi = _floats(sec["valid_range_nm"])
        out[name] = Material(
            name=name,
            form=sec["form"].strip(),
            sellmeier_o=_floats(sec["ordinary"]),
            sellmeier_e=_floats(sec["extraordinary"]),
            uniaxial_sign=sec["sign"].strip(),
            valid_range=(lo, hi),
            source=sec.get("source", "").strip(),
        )
    return out


@lru_cache(maxsize=None)
def _default_materials():
    return load_materials()


_active = None


def use_database(path=None):
    """Make ``path`` the database behind name lookups (None restores the shipped one)."""
    global _active
    _active = None if path is None else load_materials(path)


def get_material(name: str) -> Material:
    """Look up a material by name (case-insensitive) in the active database."""
    table = _active if _active is not None else _default_materials()
    for key, mat in table.items():
        if key.lower() == name.lower():
            return mat
    raise KeyError(f"unknown material {name!r}; known: {sorted(table)}")


def _as_material(m) -> Material:
    return m if isinstance(m, Material) else get_material(m)


def _scalar_or_array(x):
    return float(x) if np.ndim(x) == 0 else x


def refractive_index(m, pol, wavelength):
    """Principal refractive index of ``m`` for ordinary or extraordinary light."""
    m = _as_material(m)
    pol = Polarization.parse(pol)
    lam = m.check_range(wavelength)
    coeffs = m.sellmeier_o if pol is Polarization.ORDINARY else m.sellmeier_e
    n2 = _n_squared(m.form, coeffs, lam * 1e-3)
    return _scalar_or_array(np.sqrt(n2))


def _check_angle(theta):
    th = np.asarray(theta, dtype=float)
    if np.any(~((th >= 0.0) & (th <= 90.0))):
        raise AngleDomainError(f"propagation angle must lie in [0, 90] deg, got {theta}")
    return th


def effective_extraordinary_index(m, theta, wavelength):
    """Index seen by the extraordinary wave at ``theta`` degrees to the optic axis.

    From the index ellipsoid: 1/n^2 = cos^2(theta)/n_o^2 + sin^2(theta)/n_e^2.
    """
    m = _as_material(m)
    th = np.radians(_check_angle(theta))
    no = refractive_index(m, Polarization.ORDINARY, wavelength)
    ne = refractive_index(m, Polarization.EXTRAORDINARY, wavelength)
    inv = np.cos(th) ** 2 / no**2 + np.sin(th) ** 2 / ne**2
    return _scalar_or_array(1.0 / np.sqrt(inv))


def walkoff_angle(m, theta, wavelength):
    """Walk-off angle (deg) between wavevector and Poynting vector.

    tan(rho) = (n_eff^2 / 2) sin(2 theta) |1/n_e^2 - 1/n_o^2|

    The magnitude is returned. For a negative crystal such as BBO the
    energy flow tilts away from the optic axis; for a positive crystal it
    tilts towards it.
    """
    m = _as_material(m)
    th = np.radians(_check_angle(theta))
    no = refractive_index(m, Polarization.ORDINARY, wavelength)
    ne = refractive_index(m, Polarization.EXTRAORDINARY, wavelength)
    n = effective_extraordinary_index(m, theta, wavelength)
    tan_rho = 0.5 * n**2 * np.sin(2 * th) * np.abs(1 / ne**2 - 1 / no**2)
    return _scalar_or_array(np.degrees(np.arctan(tan_rho)))
