"""Command-line front end.

    paracrystal design      phase matching, walk-off and mode-overlap report
    paracrystal compensate  relative-phase curves and the optimal YVO4 length
    paracrystal hwp-design  achromatic MgF2/quartz half-wave plate thicknesses
    paracrystal curves      single- and two-polarizer theory curves
    paracrystal simulate    synthetic single-polarizer sweep (and two-polarizer sweeps)
    paracrystal fit         fidelity fit with bootstrap interval
    paracrystal replicate   every check against the published numbers

Exit codes: 0 success (for ``replicate``: no stage raised, whatever the
pass/fail table says), 2 configuration error, 3 computation error (e.g. not
phase-matchable).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import load_config
from .errors import ConfigError, ParacrystalError
from .expsim import generate_sweep, generate_two_polarizer_sweeps
from .layout import lateral_displacement, overlap_table
from .materials import walkoff_angle
from .phasecomp import (design_hwp, hwp_objective, hwp_retardance, optimize_compensator,
                        relative_phase_curve)
from .phasematch import emission_wavelengths, idler_wavelength, solve_cut_angle
from .qstate import PHI_MINUS, PHI_PLUS, single_polarizer_rate, two_polarizer_rate
from .replicate import run_all
from .tomofit import (bootstrap, read_measurement, write_fit_result, write_measurement)

EXIT_OK, EXIT_CONFIG, EXIT_COMPUTE = 0, 2, 3


class Context:
    def __init__(self, args):
        self.cfg = load_config(args.config)
        self.db_checksum = self.cfg.activate_database()
        self.out = Path(args.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.seed = args.seed if args.seed is not None else self.cfg.seed

    def provenance(self, **extra):
        prov = {"tool": "paracrystal", "version": __version__,
                "config_sha256": self.cfg.checksum, "material_db_sha256": self.db_checksum,
                "seed": self.seed}
        prov.update(extra)
        return prov

    def write_json(self, name, payload):
        payload = {**payload, "provenance": self.provenance()}
        path = self.out / name
        path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_jsonable) + "\n")
        return path

    def write_table(self, name, header, rows):
        path = self.out / name
        with path.open("w", newline="") as fh:
            for key, value in self.provenance().items():
                fh.write(f"# {key}: {value}\n")
            writer = csv.writer(fh, delimiter="\t")
            writer.writerow(header)
            for row in rows:
                writer.writerow([f"{v:.10g}" if isinstance(v, float) else v for v in row])
        return path


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if dataclasses.is_dataclass(obj):
        return dataclasses.asdict(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _cut_angle(ctx):
    cut = ctx.cfg.cut_angle_setting()
    if cut is not None:
        return cut
    pump, signal = ctx.cfg.pump_nm, ctx.cfg.signal_nm
    return solve_cut_angle(pump, signal, float(idler_wavelength(pump, signal)),
                           ctx.cfg.get("layout", "crystal"))


def cmd_design(ctx, args):
    cfg = ctx.cfg
    crystal = cfg.get("layout", "crystal")
    pump, signal = cfg.pump_nm, cfg.signal_nm
    idler = float(idler_wavelength(pump, signal))
    cut = _cut_angle(ctx)
    emitted = emission_wavelengths(pump, cut, crystal)
    solved = solve_cut_angle(pump, signal, idler, crystal)
    degenerate = solve_cut_angle(pump, 2 * pump, 2 * pump, crystal)
    layout = cfg.layout(cut)
    report = {
        "cut_angle_deg": cut,
        "cut_angle_for_signal_idler_deg": solved,
        "cut_angle_degenerate_deg": degenerate,
        "signal_nm": signal,
        "idler_nm": idler,
        "emission_at_cut_nm": list(emitted),
        "walkoff": overlap_table(layout, cfg.beam()),
    }
    ctx.write_json("design.json", report)
    lam = np.arange(pump, 2.6 * pump + 1, 5.0)
    lam = lam[lam <= 1060]
    rho = walkoff_angle(crystal, cut, lam)
    disp = lateral_displacement(crystal, cut, lam, layout.crystal_length)
    ctx.write_table("walkoff.tsv", ["wavelength_nm", "walkoff_deg", "displacement_um"],
                    zip(lam.tolist(), np.atleast_1d(rho).tolist(), np.atleast_1d(disp).tolist()))
    print(f"cut angle {cut:.4f} deg; emission {emitted[0]:.2f}/{emitted[1]:.2f} nm; "
          f"mismatch {100 * report['walkoff']['emission_mismatch']:.2f}%")
    return EXIT_OK


def cmd_compensate(ctx, args):
    cfg = ctx.cfg
    layout = cfg.layout(_cut_angle(ctx))
    fixed = cfg.compensator_setting()
    if fixed is None:
        opt = optimize_compensator(layout, cfg.band, hwp_mode=cfg.hwp_mode)
        length, multimodal = opt.length, opt.multimodal
    else:
        length, multimodal = fixed, False
    grid = np.linspace(cfg.band[0], cfg.band[1], 141)
    bare = relative_phase_curve(dataclasses.replace(layout, compensator_length=0.0), grid,
                                cfg.hwp_mode)
    comp = relative_phase_curve(dataclasses.replace(layout, compensator_length=length), grid,
                                cfg.hwp_mode)
    idler = idler_wavelength(layout.pump_wavelength, grid)
    ctx.write_table("phase_curve.tsv",
                    ["signal_nm", "idler_nm", "dphi_uncompensated_rad", "dphi_compensated_rad"],
                    zip(grid.tolist(), idler.tolist(), bare.phase.tolist(), comp.phase.tolist()))
    ctx.write_json("compensate.json", {
        "compensator_length_mm": length,
        "optimized": fixed is None,
        "multiple_minima": multimodal,
        "band_nm": list(cfg.band),
        "band_max_uncompensated_rad": bare.band_max,
        "band_max_compensated_rad": comp.band_max,
        "hwp_phase_mode": cfg.hwp_mode,
    })
    print(f"compensator {length:.3f} mm; band-max |dphi| {bare.band_max:.3f} -> "
          f"{comp.band_max:.2e} rad")
    return EXIT_OK


def cmd_hwp_design(ctx, args):
    cfg = ctx.cfg
    band, pump = cfg.hwp_design_band, cfg.pump_nm
    hwp = design_hwp(band, pump)
    band_err, pump_err = hwp_objective(hwp, band, pump)
    lam = np.linspace(pump, band[1] + 40, 200)
    ctx.write_table("retardance.tsv", ["wavelength_nm", "retardance_rad"],
                    zip(lam.tolist(), hwp_retardance(hwp, lam).tolist()))
    ctx.write_json("hwp.json", {"t_mgf2_mm": hwp.t_mgf2, "t_quartz_mm": hwp.t_quartz,
                                "band_nm": list(band), "pump_nm": pump,
                                "band_max_error_rad": band_err, "pump_retardance_rad": pump_err})
    print(f"MgF2 {hwp.t_mgf2:.4f} mm, quartz {hwp.t_quartz:.4f} mm; band error "
          f"{band_err:.3f} rad, pump {pump_err:.3f} rad")
    return EXIT_OK


def cmd_curves(ctx, args):
    state = ctx.cfg.experiment().state
    alpha = np.arange(-90.0, 90.0 + 0.5, 1.0)
    ctx.write_table("single_polarizer.tsv",
                    ["angle_deg", "p_phi_minus", "p_phi_plus", "p_configured_state"],
                    zip(alpha.tolist(), single_polarizer_rate(PHI_MINUS, alpha).tolist(),
                        single_polarizer_rate(PHI_PLUS, alpha).tolist(),
                        single_polarizer_rate(state, alpha).tolist()))
    rows = []
    for fixed, family, label in ((0.0, "linear", "H"), (90.0, "linear", "V"),
                                 (45.0, "linear", "D"), (-45.0, "linear", "A"),
                                 (45.0, "circular", "L"), (-45.0, "circular", "R")):
        probs = two_polarizer_rate(state, fixed, alpha, family)
        rows += [(label, family, a, p) for a, p in zip(alpha.tolist(), probs.tolist())]
    ctx.write_table("two_polarizer.tsv", ["fixed_analyzer", "family", "swept_angle_deg",
                                          "probability"], rows)
    print(f"wrote theory curves to {ctx.out}")
    return EXIT_OK


def cmd_simulate(ctx, args):
    exp = ctx.cfg.experiment(seed=ctx.seed)
    angles = ctx.cfg.angles
    rec = generate_sweep(exp, angles)
    write_measurement(rec, ctx.out / "measurement.csv", ctx.provenance(kind="single-polarizer"))
    if args.two_polarizer:
        for basis, r in generate_two_polarizer_sweeps(exp, angles).items():
            write_measurement(r, ctx.out / f"measurement_{basis}.csv",
                              ctx.provenance(kind=f"two-polarizer {basis}"))
    print(f"simulated {len(rec)} settings, {int(rec.coincidences.sum())} coincidences")
    return EXIT_OK


def cmd_fit(ctx, args):
    if (args.input or args.input_flag) is None:
        raise ConfigError("fit needs a measurement file")
    path = Path(args.input or args.input_flag)
    if not path.is_file():
        raise ConfigError(f"measurement file not found: {path}")
    rec = read_measurement(path)
    n = args.n_bootstrap or ctx.cfg.integer("fit", "n_bootstrap")
    window = ctx.cfg.number("experiment", "coincidence_window_ns") * 1e-9
    res = bootstrap(rec, n, ctx.seed, window=window,
                    subtract_accidentals=ctx.cfg.flag("fit", "subtract_accidentals"))
    write_fit_result(res, ctx.out / "fit.json",
                     ctx.provenance(input=str(path), input_sha256=rec.checksum(),
                                    n_bootstrap=n))
    lo, hi = res.ci_fidelity
    print(f"fidelity {100 * res.fidelity:.2f}% (68% CI {100 * lo:.2f}-{100 * hi:.2f}%)")
    return EXIT_OK


def cmd_replicate(ctx, args):
    rows = run_all(ctx.cfg)
    lines = [r.line() for r in rows]
    (ctx.out / "replicate.txt").write_text("\n".join(lines) + "\n")
    ctx.write_json("replicate.json", {"criteria": [dataclasses.asdict(r) for r in rows],
                                      "all_passed": all(r.passed for r in rows)})
    print("\n".join(lines))
    # a failed criterion is a result, not an error; only crashed stages change the exit code
    return EXIT_COMPUTE if any(r.error for r in rows) else EXIT_OK


COMMANDS = {
    "design": cmd_design,
    "compensate": cmd_compensate,
    "hwp-design": cmd_hwp_design,
    "curves": cmd_curves,
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "replicate": cmd_replicate,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="paracrystal", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key-value config file layered over the defaults")
    common.add_argument("--out", default="out", help="output directory (default: ./out)")
    common.add_argument("--seed", type=int, help="override the configured random seed")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "simulate":
            p.add_argument("--two-polarizer", action="store_true",
                           help="also write H/V, D/A and L/R two-analyzer sweeps")
        if name == "fit":
            p.add_argument("input", nargs="?", help="measurement file (angle_deg, coincidences, ...)")
            p.add_argument("--input", dest="input_flag", help="same as the positional argument")
            p.add_argument("--n-bootstrap", type=int)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        ctx = Context(args)
        return COMMANDS[args.command](ctx, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ParacrystalError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
