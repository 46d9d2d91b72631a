"""Acceptance criteria; each test prints one PASS/FAIL line (run with -s to see them)."""

import pytest

from paracrystal.config import load_config
from paracrystal import replicate


@pytest.fixture(scope="module")
def cfg():
    config = load_config()
    config.activate_database()
    return config


def report(row):
    print("\n" + row.line())
    assert not row.error, row.error
    assert row.passed, row.line()


def test_01_cut_angle(cfg):
    report(replicate.check_cut_angle(cfg))


def test_02_idler_wavelength(cfg):
    report(replicate.check_idler(cfg))


def test_03_compensator_length(cfg):
    report(replicate.check_compensation(cfg))


def test_04_walkoff_mismatch(cfg):
    report(replicate.check_mismatch(cfg))


def test_05_correlation_signatures(cfg):
    report(replicate.check_signatures(cfg))


def test_06_visibility_fidelity(cfg):
    report(replicate.check_visibility_fidelity(cfg))


def test_07_fidelity_identity(cfg):
    report(replicate.check_fidelity_identity(cfg, n_draws=10_000))


def test_08_tomography_round_trip(cfg):
    # 500 experiments at 6 500 pairs/s, 1 s per point, 19 angles, F = 0.995
    exp = cfg.experiment()
    assert exp.brightness * exp.pump_power == pytest.approx(6500)
    assert len(cfg.angles) == 19
    report(replicate.check_tomography(cfg, n_experiments=500))


def test_09_two_routes_agree(cfg):
    report(replicate.check_two_routes(cfg))


def test_10_saturation(cfg):
    report(replicate.check_saturation(cfg))
