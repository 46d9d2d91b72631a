"""Walk-off geometry of the parallel-axis crystal stack.

Both crystals have their optic axes in the same vertical plane, so the pump
walks off vertically in each, and pairs from the first crystal (turned
extraordinary by the half-wave plate) walk off the same way in the second.
Emission is treated as if born at the exit face of its crystal.

Displacements are in micrometres, lengths in mm, angles in degrees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .materials import walkoff_angle
from .phasecomp import CompositeWaveplate

FWHM_TO_AMPLITUDE_RADIUS = 1.0 / math.sqrt(2.0 * math.log(2.0))


@dataclass(frozen=True)
class SourceLayout:
    crystal_length: float
    cut_angle: float
    pump_wavelength: float = 405.0
    degenerate_wavelength: float | None = None
    hwp: CompositeWaveplate = field(default_factory=lambda: CompositeWaveplate(0.0, 0.0))
    compensator_length: float = 0.0
    crystal: str = "BBO"
    compensator: str = "YVO4"

    def __post_init__(self):
        if self.degenerate_wavelength is None:
            object.__setattr__(self, "degenerate_wavelength", 2.0 * self.pump_wavelength)
        if not (self.crystal_length >= 0 and math.isfinite(self.crystal_length)):
            raise ValueError("crystal length must be finite and non-negative")
        if not (self.compensator_length >= 0 and math.isfinite(self.compensator_length)):
            raise ValueError("compensator length must be finite and non-negative")
        if not 0.0 < self.cut_angle < 90.0:
            raise ValueError("cut angle must lie strictly between 0 and 90 deg")


@dataclass(frozen=True)
class BeamGeometry:
    pump_fwhm_major: float = 133.0
    pump_fwhm_minor: float = 63.0
    collection_fwhm: float = 53.0

    def __post_init__(self):
        if min(self.pump_fwhm_major, self.pump_fwhm_minor, self.collection_fwhm) <= 0:
            raise ValueError("beam widths must be positive")
        if self.pump_fwhm_major < self.pump_fwhm_minor:
            raise ValueError("major axis must not be shorter than minor axis")


def lateral_displacement(material, theta, wavelength, length):
    """Sideways shift (um) of an extraordinary beam after ``length`` mm."""
    rho = np.radians(walkoff_angle(material, theta, wavelength))
    return 1e3 * length * np.tan(rho)


def emission_offsets(layout: SourceLayout):
    """Vertical centroid offsets (um) at the stack exit for pairs from crystal 1 and 2.

    Crystal-1 pairs ride the pump through crystal 1, then walk off as
    extraordinary light through crystal 2. Crystal-2 pairs ride the pump
    through both crystals.
    """
    L = layout.crystal_length
    pump = lateral_displacement(layout.crystal, layout.cut_angle, layout.pump_wavelength, L)
    pair = lateral_displacement(layout.crystal, layout.cut_angle, layout.degenerate_wavelength, L)
    return float(pump + pair), float(2.0 * pump)


def emission_mismatch(layout: SourceLayout):
    """Relative offset of the two emission centroids, per crystal of pump walk-off.

    |tan rho_pump - tan rho_pair| / tan rho_pump, independent of crystal length.
    """
    tp = math.tan(math.radians(walkoff_angle(layout.crystal, layout.cut_angle, layout.pump_wavelength)))
    te = math.tan(math.radians(walkoff_angle(layout.crystal, layout.cut_angle,
                                             layout.degenerate_wavelength)))
    if tp == 0.0:
        raise ValueError("pump has no walk-off; the mismatch is undefined")
    return abs(tp - te) / tp


def gaussian_mode_overlap(displacement, fwhm_a, fwhm_b):
    """Power overlap of two offset 1-D Gaussian modes given intensity FWHMs.

    eta = 2 w_a w_b / (w_a^2 + w_b^2) * exp(-2 d^2 / (w_a^2 + w_b^2)),
    with w the 1/e amplitude radius.
    """
    if fwhm_a <= 0 or fwhm_b <= 0:
        raise ValueError("mode widths must be positive")
    wa = fwhm_a * FWHM_TO_AMPLITUDE_RADIUS
    wb = fwhm_b * FWHM_TO_AMPLITUDE_RADIUS
    s = wa * wa + wb * wb
    d = np.asarray(displacement, dtype=float)
    out = 2.0 * wa * wb / s * np.exp(-2.0 * d * d / s)
    return float(out) if out.ndim == 0 else out


def overlap_table(layout: SourceLayout, beam: BeamGeometry):
    """Walk-off displacements and the mode overlaps they imply, for reporting."""
    d1, d2 = emission_offsets(layout)
    sep = abs(d1 - d2)
    return {
        "pump_walkoff_deg": walkoff_angle(layout.crystal, layout.cut_angle, layout.pump_wavelength),
        "pair_walkoff_deg": walkoff_angle(layout.crystal, layout.cut_angle, layout.degenerate_wavelength),
        "crystal1_offset_um": d1,
        "crystal2_offset_um": d2,
        "emission_separation_um": sep,
        "emission_mismatch": emission_mismatch(layout),
        "overlap_crystal1_vs_crystal2": gaussian_mode_overlap(sep, beam.collection_fwhm,
                                                              beam.collection_fwhm),
        "overlap_pump_minor_vs_collection": gaussian_mode_overlap(0.0, beam.pump_fwhm_minor,
                                                                  beam.collection_fwhm),
        "overlap_pump_major_vs_collection": gaussian_mode_overlap(0.0, beam.pump_fwhm_major,
                                                                  beam.collection_fwhm),
    }
