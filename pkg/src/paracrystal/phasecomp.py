"""Wavelength-dependent relative phase of the two pair-emission paths.

Pairs born in the first crystal cross the composite half-wave plate and the
second crystal (now as extraordinary light) before reaching the YVO4
compensator with ordinary polarization. Pairs born in the second crystal see
only the compensator, extraordinary. Pump-photon terms are constants for a
narrow-band pump and are left out; every curve is referenced to its value at
the degenerate wavelength.

Lengths are in mm, wavelengths in nm, phases in rad.
"""

from __future__ import annotations

import dataclasses
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import linprog

from ._search import golden_section
from .errors import InfeasibleDesignError
from .materials import Polarization, effective_extraordinary_index, get_material, refractive_index

TWO_PI = 2.0 * np.pi
HWP_MODES = ("mean", "constant")


def wrap_phase(phi):
    """Map phases onto [-pi, pi)."""
    return (np.asarray(phi) + np.pi) % TWO_PI - np.pi


@dataclass(frozen=True)
class CompositeWaveplate:
    """MgF2 and quartz plates with crossed optic axes (thicknesses in mm)."""

    t_mgf2: float
    t_quartz: float

    def __post_init__(self):
        if not (self.t_mgf2 >= 0 and self.t_quartz >= 0):
            raise ValueError("waveplate thicknesses must be non-negative")

    @property
    def total_thickness(self):
        return self.t_mgf2 + self.t_quartz


@dataclass(frozen=True)
class PhaseCurve:
    wavelengths: np.ndarray
    phase: np.ndarray
    reference_wavelength: float = 810.0

    def __post_init__(self):
        if len(self.wavelengths) != len(self.phase):
            raise ValueError("wavelengths and phase must have equal length")

    @property
    def band_max(self):
        return float(np.max(np.abs(self.phase)))


class CompensatorOptimum(NamedTuple):
    length: float
    residual: float
    multimodal: bool


class MultipleMinimaWarning(UserWarning):
    pass


def element_phase(material, pol, wavelength, length, theta=None):
    """Dynamic phase 2*pi*n*L/lambda through one element.

    ``pol`` is ``"o"`` or ``"e"``; an extraordinary wave with ``theta`` given
    uses the effective index at that angle to the optic axis.
    """
    pol = Polarization.parse(pol)
    if pol is Polarization.EXTRAORDINARY and theta is not None:
        n = effective_extraordinary_index(material, theta, wavelength)
    else:
        n = refractive_index(material, pol, wavelength)
    return TWO_PI * n * (length * 1e6) / np.asarray(wavelength, dtype=float)


def _birefringence(name, wavelength):
    m = get_material(name)
    return refractive_index(m, "e", wavelength) - refractive_index(m, "o", wavelength)


def hwp_phase(hwp: CompositeWaveplate, wavelength, mode="mean"):
    """Phase a pair photon picks up in the composite plate.

    ``mode="mean"`` takes the average of the two principal dynamic phases
    of each plate; ``mode="constant"`` drops the plate from the dispersion
    budget altogether (useful for sensitivity studies).
    """
    if mode not in HWP_MODES:
        raise ValueError(f"hwp mode must be one of {HWP_MODES}")
    if mode == "constant":
        return np.zeros_like(np.asarray(wavelength, dtype=float))
    total = 0.0
    for name, t in (("MgF2", hwp.t_mgf2), ("quartz", hwp.t_quartz)):
        total = total + 0.5 * (element_phase(name, "o", wavelength, t)
                               + element_phase(name, "e", wavelength, t))
    return total


def hwp_retardance(hwp: CompositeWaveplate, wavelength):
    """Net retardance of the crossed MgF2/quartz pair (unwrapped)."""
    lam = np.asarray(wavelength, dtype=float)
    path = (_birefringence("quartz", lam) * hwp.t_quartz
            - _birefringence("MgF2", lam) * hwp.t_mgf2)
    return TWO_PI * path * 1e6 / lam


def _lp_refine(dq, dm, lam, target, pump_row, pump_target, pump_tol, max_thickness):
    # variables (t_mgf2, t_quartz, s); minimise s subject to |G t - target| <= s
    g = TWO_PI * 1e6 * np.column_stack([-dm / lam, dq / lam])
    n = len(lam)
    a_ub = np.vstack([
        np.column_stack([g, -np.ones(n)]),
        np.column_stack([-g, -np.ones(n)]),
        np.append(pump_row, 0.0),
        np.append(-pump_row, 0.0),
    ])
    b_ub = np.concatenate([target, -target, [pump_target + pump_tol, pump_tol - pump_target]])
    res = linprog([0.0, 0.0, 1.0], A_ub=a_ub, b_ub=b_ub,
                  bounds=[(0, max_thickness), (0, max_thickness), (0, None)], method="highs")
    if not res.success:
        return None
    t_m, t_q, s = res.x
    return float(s), float(t_m), float(t_q)


def hwp_objective(hwp, band, pump_wavelength, n_band=41):
    """(band-max |retardance - pi|, |pump retardance|), both wrapped."""
    lam = np.linspace(min(band), max(band), n_band)
    band_err = np.max(np.abs(wrap_phase(hwp_retardance(hwp, lam) - np.pi)))
    pump_err = abs(float(wrap_phase(hwp_retardance(hwp, pump_wavelength))))
    return float(band_err), pump_err


def design_hwp(band, pump_wavelength, *, pump_tol=0.1, max_thickness=3.0, step=0.005,
               n_band=41, n_candidates=30):
    """Choose MgF2/quartz thicknesses for an achromatic half-wave plate.

    The retardance should stay at pi (mod 2*pi) over ``band`` while being a
    whole number of waves at the pump. A grid over the MgF2 thickness, paired
    with every quartz thickness that makes the plate half-wave at band centre,
    locates the candidate interference orders. Inside a fixed order the
    retardance is linear in both thicknesses, so each candidate is polished
    exactly as a minimax linear program. The lowest band error wins; ties go
    to the thinner plate.
    """
    lo, hi = sorted(band)
    if lo <= pump_wavelength:
        raise ValueError("the half-wave band must lie at longer wavelengths than the pump")
    lam = np.linspace(lo, hi, n_band)
    dq, dm = _birefringence("quartz", lam), _birefringence("MgF2", lam)
    dq_p, dm_p = _birefringence("quartz", pump_wavelength), _birefringence("MgF2", pump_wavelength)
    lam_c = 0.5 * (lo + hi)
    dq_c, dm_c = _birefringence("quartz", lam_c), _birefringence("MgF2", lam_c)

    t_m = np.arange(0.0, max_thickness + 0.5 * step, step)
    path_max = dq_c * max_thickness * 1e6
    orders = np.arange(-np.ceil(dm_c * max_thickness * 1e6 / lam_c) - 1, np.ceil(path_max / lam_c) + 1)
    tm_grid, k_grid = np.meshgrid(t_m, orders, indexing="ij")
    tq_grid = (dm_c * tm_grid * 1e6 + (k_grid + 0.5) * lam_c) / dq_c / 1e6
    ok = (tq_grid >= 0) & (tq_grid <= max_thickness)
    tm_flat, tq_flat = tm_grid[ok], tq_grid[ok]
    if tm_flat.size == 0:
        raise InfeasibleDesignError("no half-wave thickness pairs within the size limit")

    gam = TWO_PI * 1e6 * (dq[None, :] * tq_flat[:, None] - dm[None, :] * tm_flat[:, None]) / lam
    gam_p = TWO_PI * 1e6 * (dq_p * tq_flat - dm_p * tm_flat) / pump_wavelength
    band_err = np.max(np.abs(wrap_phase(gam - np.pi)), axis=1)
    pump_err = np.abs(wrap_phase(gam_p))
    score = band_err + 10.0 * np.maximum(pump_err - pump_tol, 0.0)

    pump_row = TWO_PI * 1e6 * np.array([-dm_p, dq_p]) / pump_wavelength
    # the LP enforces the pump bound with a hair of margin so the inequality stays strict
    lp_tol = pump_tol * (1 - 1e-6)
    seen, results = set(), []
    for idx in np.argsort(score, kind="stable"):
        band_orders = tuple(np.round((gam[idx] - np.pi) / TWO_PI).astype(int))
        pump_order = int(np.round(gam_p[idx] / TWO_PI))
        key = band_orders + (pump_order,)
        if key in seen:
            continue
        seen.add(key)
        target = np.pi + TWO_PI * np.array(band_orders)
        sol = _lp_refine(dq, dm, lam, target, pump_row, TWO_PI * pump_order, lp_tol, max_thickness)
        if sol is not None:
            results.append(sol)
        if len(seen) >= n_candidates:
            break

    best_grid = int(np.argmin(score))
    best_found = CompositeWaveplate(float(tm_flat[best_grid]), float(tq_flat[best_grid]))
    if not results:
        raise InfeasibleDesignError(
            f"no plate keeps the pump retardance within {pump_tol} rad", best=best_found)
    s_best = min(r[0] for r in results)
    ties = [r for r in results if r[0] <= s_best + 1e-9]
    _, t_m_best, t_q_best = min(ties, key=lambda r: r[1] + r[2])
    return CompositeWaveplate(t_m_best, t_q_best)


def _pair_phase(layout, lam, hwp_mode):
    phi1 = (hwp_phase(layout.hwp, lam, hwp_mode)
            + element_phase(layout.crystal, "e", lam, layout.crystal_length, theta=layout.cut_angle)
            + element_phase(layout.compensator, "o", lam, layout.compensator_length))
    phi2 = element_phase(layout.compensator, "e", lam, layout.compensator_length)
    return phi1 - phi2


def _delta_phi(layout, signal, hwp_mode):
    signal = np.asarray(signal, dtype=float)
    idler = 1.0 / (1.0 / layout.pump_wavelength - 1.0 / signal)
    return _pair_phase(layout, signal, hwp_mode) + _pair_phase(layout, idler, hwp_mode)


def relative_phase_curve(layout, signal_grid, hwp_mode="mean") -> PhaseCurve:
    """Relative phase between the |VV> and |HH> amplitudes across a signal grid.

    Idler wavelengths follow from energy conservation. The value at the
    degenerate wavelength is subtracted.
    """
    signal = np.atleast_1d(np.asarray(signal_grid, dtype=float))
    ref = layout.degenerate_wavelength
    phase = _delta_phi(layout, signal, hwp_mode) - _delta_phi(layout, ref, hwp_mode)
    return PhaseCurve(signal, phase, ref)


def band_residual(layout, band, n_band=72, hwp_mode="mean"):
    grid = np.linspace(min(band), max(band), n_band)
    return relative_phase_curve(layout, grid, hwp_mode).band_max


def optimize_compensator(layout, band, *, step=0.01, tol=1e-3, max_length=None, n_band=72,
                         hwp_mode="mean") -> CompensatorOptimum:
    """Compensator length (mm) minimising the band-max phase excursion.

    A scan at ``step`` in fixed order from zero locates the best grid point
    (ties resolve toward the shorter crystal); golden-section search then
    refines within one step on either side.
    """
    if max_length is None:
        max_length = max(10.0, 2.0 * layout.crystal_length)
    grid = np.arange(0.0, max_length + 0.5 * step, step)
    signal = np.linspace(min(band), max(band), n_band)

    def objective(lc):
        trial = dataclasses.replace(layout, compensator_length=max(lc, 0.0))
        return relative_phase_curve(trial, signal, hwp_mode).band_max

    values = np.array([objective(lc) for lc in grid])
    i = int(np.argmin(values))
    interior = (values[1:-1] < values[:-2]) & (values[1:-1] <= values[2:])
    n_minima = int(np.count_nonzero(interior)) + int(values[0] < values[1]) + int(values[-1] < values[-2])
    multimodal = n_minima > 1
    if multimodal:
        warnings.warn("compensator objective has several local minima; returning the global "
                      "scan minimum", MultipleMinimaWarning, stacklevel=2)
    lo, hi = max(grid[i] - step, 0.0), min(grid[i] + step, grid[-1])
    x, fx = golden_section(objective, lo, hi, tol)
    if values[i] < fx:
        x, fx = float(grid[i]), float(values[i])
    return CompensatorOptimum(float(x), float(fx), multimodal)
