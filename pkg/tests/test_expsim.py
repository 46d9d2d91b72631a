import numpy as np
import pytest

from paracrystal.expsim import (DetectorModel, ExperimentConfig, accidental_rate,
                                coincidence_vs_power, expected_rates, generate_heralding_counts,
                                generate_sweep, generate_two_polarizer_sweeps,
                                heralding_efficiency, saturate, true_rates)
from paracrystal.qstate import PHI_MINUS

IDEAL = (DetectorModel(dead_time=0.0), DetectorModel(dead_time=0.0))


def test_true_rates_partner_convention():
    cfg = ExperimentConfig(pump_power=0.1, brightness=65000)
    pairs, s1, s2 = true_rates(cfg)
    assert pairs == pytest.approx(6500)
    # signal heralding = coincidences / idler singles
    assert pairs / s2 == pytest.approx(0.27)
    assert pairs / s1 == pytest.approx(0.22)


def test_accidentals_formula():
    assert accidental_rate(1e5, 2e5, 4e-9) == pytest.approx(80.0)


def test_saturate_closed_form_monotone_concave():
    r = np.linspace(0, 5e6, 200)
    d = saturate(r, 1e-6)
    assert np.allclose(d, r / (1 + r * 1e-6))
    assert np.all(np.diff(d) > 0)
    assert np.all(np.diff(d, 2) < 0)
    assert saturate(1e5, 0.0) == 1e5


def test_expected_rates_without_losses():
    cfg = ExperimentConfig(detectors=IDEAL, coincidence_window=1e-15)
    coinc, s1, s2 = expected_rates(cfg, 0.5, 1.0, 1.0)
    assert coinc == pytest.approx(6500 * 0.5, rel=1e-6)
    assert s1 == pytest.approx(6500 / 0.22)


def test_dark_counts_enter_singles():
    det = DetectorModel(dark_rate=500.0, dead_time=0.0)
    cfg = ExperimentConfig(detectors=(det, det))
    _, s1, _ = expected_rates(cfg, 0.0, 0.0, 0.0)
    assert s1 == pytest.approx(500.0)


def test_counts_scale_with_integration_time():
    angles = np.arange(-90, 91, 10.0)
    base = ExperimentConfig(state=PHI_MINUS, integration_time=1.0, seed=1)
    long = ExperimentConfig(state=PHI_MINUS, integration_time=100.0, seed=1)
    r1 = generate_sweep(base, angles).coincidences.sum()
    r100 = generate_sweep(long, angles).coincidences.sum()
    assert r100 / r1 == pytest.approx(100, rel=0.05)


def test_poisson_statistics():
    cfg = ExperimentConfig(state=PHI_MINUS)
    mean, _, _ = expected_rates(cfg, 0.5, 0.5, 0.5)
    draws = np.array([generate_sweep(ExperimentConfig(state=PHI_MINUS, seed=s), [0.0]).coincidences[0]
                      for s in range(400)])
    assert draws.mean() == pytest.approx(float(mean), rel=0.01)
    assert draws.var() == pytest.approx(float(mean), rel=0.2)


def test_reproducible_and_seed_sensitive():
    angles = np.arange(-90, 91, 10.0)
    cfg = ExperimentConfig(state=PHI_MINUS, seed=42)
    a, b = generate_sweep(cfg, angles), generate_sweep(cfg, angles)
    assert a.checksum() == b.checksum()
    c = generate_sweep(ExperimentConfig(state=PHI_MINUS, seed=43), angles)
    assert a.checksum() != c.checksum()
    sweeps = generate_two_polarizer_sweeps(cfg, angles)
    assert set(sweeps) == {"HV", "DA", "LR"}
    assert sweeps["HV"].checksum() != a.checksum()


def test_heralding_recovered_without_dead_time():
    cfg = ExperimentConfig(detectors=IDEAL, integration_time=100.0, seed=3)
    coinc, s_sig, s_idl = generate_heralding_counts(cfg)
    # partner convention: signal heralding uses the idler singles
    assert heralding_efficiency(coinc, s_idl, 0) == pytest.approx(0.27, rel=0.01)
    assert heralding_efficiency(coinc, s_sig, 0) == pytest.approx(0.22, rel=0.01)


def test_heralding_subtracts_darks():
    assert heralding_efficiency(270, 1500, 500) == pytest.approx(0.27)
    assert heralding_efficiency(270, 1500, 50, integration=10) == pytest.approx(0.27)
    with pytest.raises(ValueError):
        heralding_efficiency(10, 100, 100)


def test_zero_heralding_rejected():
    with pytest.raises(ZeroDivisionError):
        true_rates(ExperimentConfig(heralding_s=0.0))


def test_saturation_curve():
    cfg = ExperimentConfig(state=PHI_MINUS)
    powers = np.array([0.01, 0.1, 0.5, 1.0, 2.0])
    detected, linear = coincidence_vs_power(cfg, powers)
    frac = detected / linear
    assert np.all(np.diff(frac) < 0)
    assert 1 - frac[1] <= 0.05
    assert 1 - frac[-1] > 0.20
    ideal, lin = coincidence_vs_power(ExperimentConfig(state=PHI_MINUS, detectors=IDEAL,
                                                       coincidence_window=1e-15), powers)
    assert np.allclose(ideal, lin, rtol=1e-5)


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(coincidence_window=0)
    with pytest.raises(ValueError):
        ExperimentConfig(heralding_convention="other")
    with pytest.raises(ValueError):
        DetectorModel(efficiency=1.5)
