import json
import subprocess
import sys

import pytest

from paracrystal import __version__
from paracrystal.cli import main
from paracrystal.config import load_config
from paracrystal.errors import ConfigError


def run(tmp_path, *args, config=None):
    argv = list(args) + ["--out", str(tmp_path / "out")]
    if config is not None:
        cfg = tmp_path / "run.ini"
        cfg.write_text(config)
        argv += ["--config", str(cfg)]
    return main(argv)


def test_config_defaults_and_overlay(tmp_path):
    base = load_config()
    assert base.pump_nm == 405.0
    assert base.cut_angle_setting() == 28.8
    assert base.compensator_setting() is None
    user = tmp_path / "u.ini"
    user.write_text("[layout]\ncrystal_length_mm = 2\n")
    cfg = load_config(user)
    assert cfg.number("layout", "crystal_length_mm") == 2.0
    assert cfg.checksum != base.checksum


def test_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.ini")
    bad = tmp_path / "bad.ini"
    bad.write_text("[layout]\npump_nm = blue\n")
    with pytest.raises(ConfigError):
        load_config(bad).pump_nm


def test_design_writes_report_with_provenance(tmp_path):
    assert run(tmp_path, "design") == 0
    report = json.loads((tmp_path / "out" / "design.json").read_text())
    assert report["cut_angle_for_signal_idler_deg"] == pytest.approx(28.8, abs=0.2)
    assert 0.05 <= report["walkoff"]["emission_mismatch"] <= 0.06
    prov = report["provenance"]
    assert prov["version"] == __version__
    assert len(prov["config_sha256"]) == 64 and len(prov["material_db_sha256"]) == 64
    table = (tmp_path / "out" / "walkoff.tsv").read_text().splitlines()
    assert table[0].startswith("# tool")
    assert "wavelength_nm\twalkoff_deg\tdisplacement_um" in table


def test_design_missing_database_is_config_error(tmp_path):
    assert run(tmp_path, "design", config="[materials]\ndatabase = /no/such/db.ini\n") == 2


def test_design_zero_angle_not_phase_matchable(tmp_path, capsys):
    assert run(tmp_path, "design", config="[layout]\ncut_angle_deg = 0\n") == 3
    assert "no collinear type-I emission" in capsys.readouterr().err


def test_compensate_and_hwp_design(tmp_path):
    assert run(tmp_path, "compensate") == 0
    comp = json.loads((tmp_path / "out" / "compensate.json").read_text())
    assert comp["compensator_length_mm"] == pytest.approx(3.12, abs=0.25)
    assert (tmp_path / "out" / "phase_curve.tsv").exists()
    assert run(tmp_path, "hwp-design") == 0
    hwp = json.loads((tmp_path / "out" / "hwp.json").read_text())
    assert hwp["pump_retardance_rad"] <= 0.1


def test_curves(tmp_path):
    assert run(tmp_path, "curves") == 0
    assert (tmp_path / "out" / "single_polarizer.tsv").exists()
    assert (tmp_path / "out" / "two_polarizer.tsv").exists()


def test_simulate_then_fit(tmp_path):
    assert run(tmp_path, "simulate", "--seed", "5", "--two-polarizer") == 0
    sweep = tmp_path / "out" / "measurement.csv"
    assert "# seed: 5" in sweep.read_text()
    assert (tmp_path / "out" / "measurement_LR.csv").exists()
    assert run(tmp_path, "fit", str(sweep), "--n-bootstrap", "200") == 0
    fit = json.loads((tmp_path / "out" / "fit.json").read_text())
    assert fit["result"]["fidelity"] == pytest.approx(0.995, abs=0.005)
    assert fit["provenance"]["n_bootstrap"] == 200
    assert run(tmp_path, "fit", "--input", str(sweep), "--n-bootstrap", "100") == 0


def test_fit_missing_input(tmp_path):
    assert run(tmp_path, "fit", str(tmp_path / "nope.csv")) == 2
    assert run(tmp_path, "fit") == 2


FAST = "[replicate]\ncoverage_experiments = 40\ncoverage_bootstrap = 100\n"


def test_replicate_negative_control(tmp_path):
    code = run(tmp_path, "replicate", config=FAST + "[layout]\ncompensator_length_mm = 0\n")
    assert code == 0  # failed criteria are results, not errors
    rows = json.loads((tmp_path / "out" / "replicate.json").read_text())["criteria"]
    status = {r["number"]: r["passed"] for r in rows}
    assert status[3] is False
    assert all(status[n] for n in status if n not in (3, 8))
    assert (tmp_path / "out" / "replicate.txt").read_text().count("\n") == 10


def test_replicate_deterministic(tmp_path):
    run(tmp_path, "replicate", config=FAST)
    first = json.loads((tmp_path / "out" / "replicate.json").read_text())
    run(tmp_path, "replicate", config=FAST)
    second = json.loads((tmp_path / "out" / "replicate.json").read_text())
    strip = lambda d: [{k: v for k, v in r.items() if k != "seconds"} for r in d["criteria"]]
    assert strip(first) == strip(second)


def test_console_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "paracrystal.cli", "--version"],
                         capture_output=True, text=True)
    assert out.returncode == 0 and __version__ in out.stdout
