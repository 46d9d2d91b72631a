"""Collinear type-I (e -> o + o) critical phase matching in a uniaxial crystal."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect, brentq

from .errors import NotPhaseMatchableError
from .materials import Polarization, effective_extraordinary_index, get_material, refractive_index

ENERGY_TOL = 1e-6  # nm^-1
ANGLE_BRACKET = (0.1, 89.9)
# Bisection is run well past the 1e-4 deg requirement: near degeneracy the
# emission wavelength varies with the square root of the angle offset, so the
# inverse problem needs a much tighter angle to round-trip to 0.5 nm.
ANGLE_XTOL = 1e-9
DEGENERACY_ANGLE_TOL = 1e-6


@dataclass(frozen=True)
class PhaseMatchSpec:
    pump_wavelength: float
    signal_wavelength: float
    idler_wavelength: float
    cut_angle: float

    def __post_init__(self):
        _check_energy(self.pump_wavelength, self.signal_wavelength, self.idler_wavelength)
        if self.signal_wavelength > self.idler_wavelength:
            raise ValueError("signal must be the shorter of the two down-converted wavelengths")


def _check_energy(pump, signal, idler):
    mismatch = abs(1.0 / pump - 1.0 / signal - 1.0 / idler)
    if mismatch > ENERGY_TOL:
        raise ValueError(
            f"energy not conserved: 1/{pump} - 1/{signal} - 1/{idler} = {mismatch:.3g} nm^-1"
        )


def idler_wavelength(pump_wavelength, signal_wavelength):
    """Idler wavelength (nm) fixed by energy conservation."""
    if np.any(np.asarray(signal_wavelength) <= pump_wavelength):
        raise ValueError("signal wavelength must be longer than the pump wavelength")
    return 1.0 / (1.0 / pump_wavelength - 1.0 / np.asarray(signal_wavelength, dtype=float))


def _mismatch(crystal, theta, pump, signal, idler):
    # k-vector mismatch divided by 2*pi, in nm^-1
    return (effective_extraordinary_index(crystal, theta, pump) / pump
            - refractive_index(crystal, Polarization.ORDINARY, signal) / signal
            - refractive_index(crystal, Polarization.ORDINARY, idler) / idler)


def solve_cut_angle(pump_wavelength, signal_wavelength, idler_wavelength, crystal="BBO"):
    """Angle (deg) between optic axis and beam that phase matches the triplet."""
    _check_energy(pump_wavelength, signal_wavelength, idler_wavelength)
    crystal = get_material(crystal) if isinstance(crystal, str) else crystal

    def f(theta):
        return _mismatch(crystal, theta, pump_wavelength, signal_wavelength, idler_wavelength)

    lo, hi = ANGLE_BRACKET
    if np.sign(f(lo)) == np.sign(f(hi)):
        raise NotPhaseMatchableError(
            f"{crystal.name}: {pump_wavelength} -> {signal_wavelength} + {idler_wavelength} nm "
            "is not phase-matchable for any angle in "
            f"[{lo}, {hi}] deg"
        )
    return bisect(f, lo, hi, xtol=ANGLE_XTOL, maxiter=200)


def emission_wavelengths(pump_wavelength, cut_angle, crystal="BBO", scan_step=0.25):
    """Collinear (signal, idler) pair, nearest degeneracy, emitted at ``cut_angle``.

    The signal is scanned downward from the degenerate wavelength until the
    phase mismatch changes sign, then the root is polished with Brent's method.
    """
    crystal = get_material(crystal) if isinstance(crystal, str) else crystal
    degenerate = 2.0 * pump_wavelength
    try:
        theta_deg = solve_cut_angle(pump_wavelength, degenerate, degenerate, crystal)
    except NotPhaseMatchableError:
        theta_deg = None
    if theta_deg is not None and abs(cut_angle - theta_deg) <= DEGENERACY_ANGLE_TOL:
        return degenerate, degenerate

    def g(signal):
        return _mismatch(crystal, cut_angle, pump_wavelength, signal,
                         idler_wavelength(pump_wavelength, signal))

    lo_range, hi_range = crystal.valid_range
    # keep the partner idler inside the dispersion data as well
    lowest = max(lo_range, 1.0 / (1.0 / pump_wavelength - 1.0 / hi_range), pump_wavelength + 1.0)
    grid = np.arange(degenerate, lowest, -scan_step)
    if grid.size < 2:
        raise NotPhaseMatchableError("no signal wavelengths to scan")
    values = g(grid)
    sign_change = np.nonzero(np.sign(values[1:]) != np.sign(values[:-1]))[0]
    if sign_change.size == 0:
        raise NotPhaseMatchableError(
            f"{crystal.name}: no collinear type-I emission for a {pump_wavelength} nm pump "
            f"at {cut_angle} deg"
        )
    k = sign_change[0]
    signal = brentq(g, grid[k + 1], grid[k], xtol=1e-9)
    return signal, float(idler_wavelength(pump_wavelength, signal))
