"""Run configuration: sectioned key-value files layered over the shipped defaults."""

from __future__ import annotations

import configparser
import hashlib
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from . import materials
from .errors import ConfigError
from .expsim import DetectorModel, ExperimentConfig
from .layout import BeamGeometry, SourceLayout
from .phasecomp import CompositeWaveplate
from .qstate import TwoPhotonState


def default_config_path() -> Path:
    return Path(str(resources.files("paracrystal") / "data" / "default.ini"))


@dataclass
class RunConfig:
    parser: configparser.ConfigParser
    source: Path | None
    checksum: str

    def get(self, section, key):
        try:
            return self.parser[section][key].strip()
        except KeyError:
            raise ConfigError(f"missing [{section}] {key}") from None

    def number(self, section, key):
        raw = self.get(section, key)
        try:
            value = float(raw)
        except ValueError:
            raise ConfigError(f"[{section}] {key} = {raw!r} is not a number") from None
        if not math.isfinite(value):
            raise ConfigError(f"[{section}] {key} must be finite")
        return value

    def numbers(self, section, key):
        raw = self.get(section, key)
        try:
            return [float(tok) for tok in raw.replace(",", " ").split()]
        except ValueError:
            raise ConfigError(f"[{section}] {key} = {raw!r} is not a list of numbers") from None

    def integer(self, section, key):
        value = self.number(section, key)
        if value != int(value):
            raise ConfigError(f"[{section}] {key} must be an integer")
        return int(value)

    def flag(self, section, key):
        try:
            return self.parser.getboolean(section, key)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key}: {exc}") from None

    # --- typed views --------------------------------------------------------

    @property
    def database(self):
        raw = self.get("materials", "database")
        return Path(raw) if raw else None

    def activate_database(self):
        path = self.database
        if path is None:
            materials.use_database(None)
            return materials.database_checksum()
        if not path.is_file():
            raise ConfigError(f"material database not found: {path}")
        materials.use_database(path)
        return materials.database_checksum(path)

    @property
    def pump_nm(self):
        return self.number("layout", "pump_nm")

    @property
    def signal_nm(self):
        return self.number("layout", "signal_nm")

    @property
    def band(self):
        band = self.numbers("band", "signal_nm")
        if len(band) != 2:
            raise ConfigError("[band] signal_nm needs two wavelengths")
        return tuple(sorted(band))

    @property
    def hwp_design_band(self):
        return tuple(sorted(self.numbers("hwp", "design_band_nm")))

    @property
    def hwp_mode(self):
        return self.get("hwp", "phase_mode")

    def hwp(self):
        try:
            return CompositeWaveplate(self.number("hwp", "t_mgf2_mm"),
                                      self.number("hwp", "t_quartz_mm"))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def cut_angle_setting(self):
        """Configured cut angle in degrees, or None for "auto"."""
        raw = self.get("layout", "cut_angle_deg").lower()
        return None if raw == "auto" else self.number("layout", "cut_angle_deg")

    def compensator_setting(self):
        """Configured compensator length in mm, or None for "optimize"."""
        raw = self.get("layout", "compensator_length_mm").lower()
        return None if raw == "optimize" else self.number("layout", "compensator_length_mm")

    def layout(self, cut_angle, compensator_length=0.0):
        try:
            return SourceLayout(
                crystal_length=self.number("layout", "crystal_length_mm"),
                cut_angle=cut_angle,
                pump_wavelength=self.pump_nm,
                degenerate_wavelength=self.number("layout", "degenerate_nm"),
                hwp=self.hwp(),
                compensator_length=compensator_length,
                crystal=self.get("layout", "crystal"),
                compensator=self.get("layout", "compensator"),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def beam(self):
        try:
            return BeamGeometry(self.number("beam", "pump_fwhm_major_um"),
                                self.number("beam", "pump_fwhm_minor_um"),
                                self.number("beam", "collection_fwhm_um"))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def angles(self):
        return self.numbers("experiment", "angles_deg")

    @property
    def seed(self):
        return self.integer("experiment", "seed")

    def experiment(self, seed=None):
        n = self.number
        try:
            state = TwoPhotonState(n("experiment", "state_p"), n("experiment", "state_x"),
                                   n("experiment", "state_theta_rad"))
            det = DetectorModel(efficiency=n("experiment", "detector_efficiency"),
                                dark_rate=n("experiment", "dark_rate_per_s"),
                                dead_time=n("experiment", "dead_time_us") * 1e-6)
            return ExperimentConfig(
                pump_power=n("experiment", "pump_power_mw"),
                brightness=n("experiment", "brightness_pairs_per_s_mw"),
                coincidence_window=n("experiment", "coincidence_window_ns") * 1e-9,
                integration_time=n("experiment", "integration_s"),
                state=state,
                heralding_s=n("experiment", "heralding_signal"),
                heralding_i=n("experiment", "heralding_idler"),
                detectors=(det, det),
                seed=self.seed if seed is None else int(seed),
                heralding_convention=self.get("experiment", "heralding_convention"),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None


def load_config(path=None) -> RunConfig:
    """Read the shipped defaults, then overlay ``path`` if given."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.read(default_config_path(), encoding="utf-8")
    digest = hashlib.sha256(default_config_path().read_bytes())
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        text = path.read_text(encoding="utf-8")
        try:
            parser.read_string(text, source=str(path))
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from None
        digest.update(text.encode())
    return RunConfig(parser, path, digest.hexdigest())
