"""Synthetic photon-counting experiments and count-rate bookkeeping.

Brightness and heralding efficiencies are detected quantities, so they
already fold in detector and collection losses; ``DetectorModel.efficiency``
is an extra factor on top of that calibration (1.0 leaves it unchanged).

Heralding follows the partner-arm convention by default: the signal
heralding efficiency is coincidences / idler singles, so
singles_idler = pairs / heralding_signal and vice versa.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .qstate import (TwoPhotonState, projector_rate, single_photon_transmission,
                     single_polarizer_rate, to_density_matrix)
from .tomofit import TWO_POLARIZER_SETTINGS, MeasurementRecord

CONVENTIONS = ("partner", "same")


@dataclass(frozen=True)
class DetectorModel:
    efficiency: float = 1.0
    dark_rate: float = 0.0
    dead_time: float = 1e-6

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise ValueError("efficiency must lie in [0, 1]")
        if self.dark_rate < 0 or self.dead_time < 0:
            raise ValueError("dark rate and dead time must be non-negative")


@dataclass(frozen=True)
class ExperimentConfig:
    pump_power: float = 0.1                 # mW
    brightness: float = 65000.0             # detected pairs / s / mW
    coincidence_window: float = 4e-9        # s
    integration_time: float = 1.0           # s per setting
    state: TwoPhotonState = field(default_factory=lambda: TwoPhotonState(1.0, 0.5))
    heralding_s: float = 0.27
    heralding_i: float = 0.22
    detectors: tuple[DetectorModel, DetectorModel] = (DetectorModel(), DetectorModel())
    seed: int = 0
    heralding_convention: str = "partner"

    def __post_init__(self):
        if min(self.pump_power, self.brightness, self.integration_time) < 0:
            raise ValueError("powers, rates and times must be non-negative")
        if self.coincidence_window <= 0:
            raise ValueError("coincidence window must be positive")
        if self.heralding_convention not in CONVENTIONS:
            raise ValueError(f"heralding convention must be one of {CONVENTIONS}")
        if not (0 <= self.heralding_s <= 1 and 0 <= self.heralding_i <= 1):
            raise ValueError("heralding efficiencies must lie in [0, 1]")


def true_rates(cfg: ExperimentConfig):
    """(pair rate, signal singles, idler singles) in 1/s, before saturation and darks."""
    if cfg.heralding_s == 0 or cfg.heralding_i == 0:
        raise ZeroDivisionError("heralding efficiencies must be non-zero to infer singles rates; "
                                "a heralding efficiency of 0 means no coincidences at all")
    pairs = cfg.brightness * cfg.pump_power
    if cfg.heralding_convention == "partner":
        return pairs, pairs / cfg.heralding_i, pairs / cfg.heralding_s
    return pairs, pairs / cfg.heralding_s, pairs / cfg.heralding_i


def accidental_rate(singles_1, singles_2, window):
    """Uncorrelated coincidence rate S1 * S2 * tau."""
    return np.asarray(singles_1) * np.asarray(singles_2) * window


def saturate(true_rate, dead_time):
    """Non-paralyzable dead time: detected = true / (1 + true * dead_time)."""
    r = np.asarray(true_rate, dtype=float)
    out = r / (1.0 + r * dead_time)
    return float(out) if out.ndim == 0 else out


def expected_rates(cfg: ExperimentConfig, pair_probability, t_signal=1.0, t_idler=1.0):
    """Mean detected (coincidence, signal singles, idler singles) rates.

    ``pair_probability`` is the chance a pair passes the analyzers together;
    ``t_signal``/``t_idler`` are the single-photon transmissions. A pair is
    only recorded when both detectors are live, so coincidences take the
    product of the two dead-time survival fractions. Accidentals use the
    detected singles, darks included.
    """
    pairs, s_sig, s_idl = true_rates(cfg)
    det_s, det_i = cfg.detectors
    eff = det_s.efficiency * det_i.efficiency
    raw_s = s_sig * det_s.efficiency * np.asarray(t_signal) + det_s.dark_rate
    raw_i = s_idl * det_i.efficiency * np.asarray(t_idler) + det_i.dark_rate
    live_s = _survival(raw_s, det_s.dead_time)
    live_i = _survival(raw_i, det_i.dead_time)
    singles_s, singles_i = raw_s * live_s, raw_i * live_i
    coinc = (pairs * eff * np.asarray(pair_probability) * live_s * live_i
             + accidental_rate(singles_s, singles_i, cfg.coincidence_window))
    return coinc, singles_s, singles_i


def _survival(rate, dead_time):
    return 1.0 / (1.0 + np.asarray(rate) * dead_time)


def _draw(means, seed, stream, index):
    return np.random.default_rng([seed, stream, index]).poisson(means)


def _sweep(cfg, angles, stream, probs, t_s, t_i):
    coinc, s1, s2 = expected_rates(cfg, probs, t_s, t_i)
    T = cfg.integration_time
    counts = np.empty((3, len(angles)))
    for k in range(len(angles)):
        counts[:, k] = _draw([coinc[k] * T, s1[k] * T, s2[k] * T], cfg.seed, stream, k)
    return MeasurementRecord(angles, counts[0], T, counts[1], counts[2])


def generate_sweep(cfg: ExperimentConfig, angles) -> MeasurementRecord:
    """Seeded Poisson counts for a single polarizer swept through ``angles`` (deg).

    Mean coincidences per setting are (pair rate x pass probability x
    dead-time factors + accidentals) x integration time. Each setting has
    its own substream keyed by (seed, stream, index).
    """
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    if angles.size == 0:
        raise ValueError("need at least one angle")
    probs = single_polarizer_rate(cfg.state, angles)
    t = single_photon_transmission(cfg.state, angles)
    return _sweep(cfg, angles, 0, np.atleast_1d(probs), np.atleast_1d(t), np.atleast_1d(t))


def generate_two_polarizer_sweeps(cfg: ExperimentConfig, angles) -> dict:
    """Records for the H/V, D/A and L/R two-analyzer measurements.

    The signal analyzer is held at the basis' fixed setting and the idler
    analyzer is swept through ``angles``.
    """
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    rho = to_density_matrix(cfg.state)
    out = {}
    for stream, (basis, (family, fixed, _)) in enumerate(TWO_POLARIZER_SETTINGS.items(), start=1):
        probs = np.atleast_1d(projector_rate(rho, fixed, angles, family))
        # marginal of each photon through its own analyzer
        t_s = projector_rate(rho, fixed, 0.0, family) + projector_rate(rho, fixed, 90.0, family)
        t_i = (np.atleast_1d(projector_rate(rho, 0.0, angles, family))
               + np.atleast_1d(projector_rate(rho, 90.0, angles, family)))
        out[basis] = _sweep(cfg, angles, stream, probs, np.full(angles.shape, t_s), t_i)
    return out


def generate_heralding_counts(cfg: ExperimentConfig):
    """One integration without analyzers: (coincidences, signal singles, idler singles)."""
    coinc, s1, s2 = expected_rates(cfg, 1.0)
    T = cfg.integration_time
    c, n1, n2 = _draw([float(coinc) * T, float(s1) * T, float(s2) * T], cfg.seed, 99, 0)
    return int(c), int(n1), int(n2)


def heralding_efficiency(coincidences, singles, dark, integration=None):
    """Coincidences-to-singles ratio after dark-count subtraction.

    ``dark`` is a count; if ``integration`` (s) is given it is taken as a
    rate and scaled to counts first.
    """
    dark_counts = dark * integration if integration is not None else dark
    if singles <= dark_counts:
        raise ValueError("singles must exceed dark counts")
    return coincidences / (singles - dark_counts)


def coincidence_vs_power(cfg: ExperimentConfig, powers, alpha=0.0):
    """Mean detected coincidence rate and its linear extrapolation at each power (mW).

    The analyzer stays in place at ``alpha``, as in a power scan of the
    correlation measurement.
    """
    powers = np.atleast_1d(np.asarray(powers, dtype=float))
    prob = single_polarizer_rate(cfg.state, alpha)
    t = single_photon_transmission(cfg.state, alpha)
    detected = np.array([float(expected_rates(replace(cfg, pump_power=P), prob, t, t)[0])
                         for P in powers])
    d_s, d_i = cfg.detectors
    linear = cfg.brightness * powers * prob * d_s.efficiency * d_i.efficiency
    return detected, linear
