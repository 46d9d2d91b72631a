"""End-to-end replication checks against the published source parameters.

Each check returns a ``Criterion`` row (measured value, target, tolerance,
pass flag). ``run_all`` never raises for a failing stage; the error is
recorded in the row instead.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace

import numpy as np

from .expsim import coincidence_vs_power, generate_sweep, generate_two_polarizer_sweeps
from .layout import emission_mismatch
from .phasecomp import band_residual, optimize_compensator
from .phasematch import idler_wavelength, solve_cut_angle
from .qstate import (PHI_MINUS, PHI_PLUS, TwoPhotonState, fidelity_from_visibilities,
                     fidelity_trace, fidelity_to_phi_minus, single_polarizer_rate,
                     to_density_matrix)
from .tomofit import bootstrap, fidelity_from_two_polarizer, fit_single_polarizer

TARGETS = {
    "cut_angle_deg": 28.8,
    "idler_nm": 847.1,
    "compensator_mm": 3.12,
    "mismatch": 0.06,
    "fidelity_visibility": 0.996,
    "fidelity_ci_halfwidth": 0.0022,
}
PUBLISHED_VISIBILITIES = (0.9970, 0.9832, 0.986)


@dataclass
class Criterion:
    number: int
    name: str
    measured: str
    target: str
    tolerance: str
    passed: bool
    seconds: float = 0.0
    error: str = ""

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        extra = f"  [{self.error}]" if self.error else ""
        return (f"{status}  #{self.number:<2d} {self.name:<32s} measured={self.measured}  "
                f"target={self.target}  tol={self.tolerance}  ({self.seconds:.2f}s){extra}")


def _timed(fn, *args, **kwargs):
    t0 = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - t0


def check_cut_angle(cfg):
    pump, signal = cfg.pump_nm, cfg.signal_nm
    theta, dt = _timed(solve_cut_angle, pump, signal, float(idler_wavelength(pump, signal)),
                       cfg.get("layout", "crystal"))
    ok = abs(theta - TARGETS["cut_angle_deg"]) <= 0.2 and dt < 1.0
    return Criterion(1, "phase-matching cut angle", f"{theta:.4f} deg", "28.8 deg",
                     "0.2 deg, <1 s", ok, dt)


def check_idler(cfg):
    idler = float(idler_wavelength(405.0, 776.0))
    ok = abs(idler - TARGETS["idler_nm"]) <= 0.5
    return Criterion(2, "energy conservation", f"{idler:.3f} nm", "847.1 nm", "0.5 nm", ok)


def compensator_length(cfg, layout):
    fixed = cfg.compensator_setting()
    if fixed is not None:
        return fixed
    return optimize_compensator(layout, cfg.band, hwp_mode=cfg.hwp_mode).length


def check_compensation(cfg):
    t0 = time.perf_counter()
    cut = cfg.cut_angle_setting()
    layout = cfg.layout(cut if cut is not None else TARGETS["cut_angle_deg"])
    lc = compensator_length(cfg, layout)
    compensated = band_residual(replace(layout, compensator_length=lc), cfg.band,
                                hwp_mode=cfg.hwp_mode)
    bare = band_residual(replace(layout, compensator_length=0.0), cfg.band, hwp_mode=cfg.hwp_mode)
    dt = time.perf_counter() - t0
    ratio = bare / compensated if compensated > 0 else math.inf
    ok = abs(lc - TARGETS["compensator_mm"]) <= 0.25 and ratio >= 10.0 and dt < 10.0
    return Criterion(3, "YVO4 compensator length", f"{lc:.3f} mm (flattening x{ratio:.1f})",
                     "3.12 mm, >=10x", "0.25 mm, <10 s", ok, dt)


def check_mismatch(cfg):
    cut = cfg.cut_angle_setting()
    base = cfg.layout(cut if cut is not None else TARGETS["cut_angle_deg"])
    values = [emission_mismatch(replace(base, crystal_length=L)) for L in (1.0, 5.0, 20.0)]
    invariant = len(set(values)) == 1
    ok = 0.045 <= values[0] <= 0.075 and invariant
    return Criterion(4, "walk-off emission mismatch",
                     f"{100 * values[0]:.2f}% (length-invariant={invariant})", "6%",
                     "[4.5%, 7.5%], exact invariance", ok)


def check_signatures(cfg):
    alpha = np.arange(-180.0, 180.0 + 0.5, 1.0)
    err_minus = np.max(np.abs(single_polarizer_rate(PHI_MINUS, alpha)
                              - 0.5 * np.cos(np.radians(2 * alpha)) ** 2))
    err_plus = np.max(np.abs(single_polarizer_rate(PHI_PLUS, alpha) - 0.5))
    err = max(err_minus, err_plus)
    return Criterion(5, "single-polarizer signatures", f"max err {err:.2e}",
                     "1/2 cos^2(2a) and 1/2", "1e-9", bool(err <= 1e-9))


def check_visibility_fidelity(cfg):
    f = fidelity_from_visibilities(*PUBLISHED_VISIBILITIES)
    ok = abs(f - TARGETS["fidelity_visibility"]) <= 0.0005
    return Criterion(6, "fidelity from visibilities", f"{f:.5f}", "0.996", "0.0005", ok)


def fidelity_identity_error(n_draws, seed):
    rng = np.random.default_rng(seed)
    sigma = to_density_matrix(PHI_MINUS)
    worst = 0.0
    for p, x, th in zip(rng.uniform(0, 1, n_draws), rng.uniform(0, 1, n_draws),
                        rng.uniform(-math.pi, math.pi, n_draws)):
        state = TwoPhotonState(p, x, th)
        f = fidelity_trace(to_density_matrix(state), sigma)
        closed = 0.5 - p * math.sqrt(x * (1 - x)) * math.cos(th)
        worst = max(worst, abs(f * f - closed))
    return worst


def check_fidelity_identity(cfg, n_draws=10_000):
    err, dt = _timed(fidelity_identity_error, n_draws, cfg.seed)
    return Criterion(7, "trace-fidelity identity", f"max err {err:.2e} over {n_draws}",
                     "F^2 = 1/2 - p sqrt(x(1-x)) cos(theta)", "1e-10", bool(err <= 1e-10), dt)


def coverage_study(exp_cfg, angles, n_experiments, n_bootstrap, seed):
    """Repeat simulate -> fit -> bootstrap; returns arrays of estimates and intervals."""
    truth = fidelity_to_phi_minus(exp_cfg.state)
    est, lo, hi = np.empty(n_experiments), np.empty(n_experiments), np.empty(n_experiments)
    for k in range(n_experiments):
        rec = generate_sweep(replace(exp_cfg, seed=seed + k), angles)
        res = bootstrap(rec, n_bootstrap, seed=seed + 1_000_003 * (k + 1))
        est[k] = res.fidelity
        lo[k], hi[k] = res.ci_fidelity
    return truth, est, lo, hi


def check_tomography(cfg, n_experiments=None, n_bootstrap=None):
    n_experiments = n_experiments or cfg.integer("replicate", "coverage_experiments")
    n_bootstrap = n_bootstrap or cfg.integer("replicate", "coverage_bootstrap")
    exp_cfg = cfg.experiment()
    (truth, est, lo, hi), dt = _timed(coverage_study, exp_cfg, cfg.angles, n_experiments,
                                      n_bootstrap, cfg.seed)
    bias = float(np.mean(est) - truth)
    coverage = float(np.mean((lo <= truth) & (truth <= hi)))
    half = float(np.mean(hi - lo) / 2)
    scale_ok = TARGETS["fidelity_ci_halfwidth"] / 10 <= half <= TARGETS["fidelity_ci_halfwidth"] * 10
    ok = abs(bias) < 0.001 and 0.60 <= coverage <= 0.76 and scale_ok and dt < 300
    return Criterion(8, "tomography round trip",
                     f"bias {100 * bias:+.3f} pp, coverage {100 * coverage:.1f}%, "
                     f"CI +/-{100 * half:.3f} pp",
                     f"F={truth:.4f}, CI +/-0.22 pp",
                     "|bias|<0.1 pp, coverage 60-76%, CI within 10x, <300 s", ok, dt)


def check_two_routes(cfg, n_experiments=200):
    """Agreement of single- and two-polarizer fidelities across repeated experiments.

    Agreement within one combined standard error should happen in about 68%
    of runs if both error bars are honest; the check passes when the observed
    rate lies in [55%, 85%] and no run disagrees by more than 4 combined sigma.
    """
    exp_cfg = cfg.experiment()
    t0 = time.perf_counter()
    z = np.empty(n_experiments)
    for k in range(n_experiments):
        run = replace(exp_cfg, seed=cfg.seed + 7919 * (k + 1))
        single = fit_single_polarizer(generate_sweep(run, cfg.angles))
        two = fidelity_from_two_polarizer(generate_two_polarizer_sweeps(run, cfg.angles))
        z[k] = (single.fidelity - two.fidelity) / math.hypot(single.fidelity_stderr,
                                                            two.fidelity_stderr)
    dt = time.perf_counter() - t0
    within = float(np.mean(np.abs(z) <= 1.0))
    ok = 0.55 <= within <= 0.85 and float(np.max(np.abs(z))) <= 4.0
    return Criterion(9, "single vs two-polarizer fidelity",
                     f"{100 * within:.1f}% within 1 sigma, max |z|={np.max(np.abs(z)):.2f}",
                     "agreement within combined uncertainty", "55-85% within 1 sigma, |z|<=4",
                     ok, dt)


def check_saturation(cfg):
    detected, linear = coincidence_vs_power(cfg.experiment(), [0.1, 2.0])
    dev = 1.0 - detected / linear
    ok = dev[0] <= 0.05 and dev[1] > 0.20
    return Criterion(10, "detector saturation", f"{100 * dev[0]:.1f}% @0.1 mW, "
                     f"{100 * dev[1]:.1f}% @2 mW", "linear at 0.1 mW, saturated at 2 mW",
                     "<=5% / >20%", bool(ok))


CHECKS = (check_cut_angle, check_idler, check_compensation, check_mismatch, check_signatures,
          check_visibility_fidelity, check_fidelity_identity, check_tomography,
          check_two_routes, check_saturation)


def run_all(cfg, checks=CHECKS):
    rows = []
    for number, check in enumerate(checks, start=1):
        try:
            rows.append(check(cfg))
        except Exception as exc:  # a failing stage is reported, not fatal
            rows.append(Criterion(number, check.__name__, "-", "-", "-", False,
                                  error=f"{type(exc).__name__}: {exc}"))
    return rows
