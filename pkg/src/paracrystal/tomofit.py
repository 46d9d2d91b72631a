"""Fidelity estimation from polarizer sweeps.

A single polarizer in front of both photons sees

    R(alpha) = amplitude * [(1 + a)/2 cos^4 + (1 - a)/2 sin^4 + b cos^2 sin^2],

with a = p(2x - 1) and b = 2 p sqrt(x(1-x)) cos(theta). Only (amplitude, a, b)
are identifiable from such a curve, and the fidelity to |Phi-> depends on b
alone: F = sqrt((1 - b)/2). The curve is linear in (amplitude(1+a)/2,
amplitude(1-a)/2, amplitude*b), so the weighted least-squares problem is
solved exactly without iteration.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import BootstrapUnstableError, DegenerateInputError, FitConvergenceError
from .qstate import TwoPhotonState, fidelity_from_visibilities

DEFAULT_WINDOW = 4e-9
MIN_ANGLES = 8
MIN_SPAN = 135.0

# basis -> (analyzer family, fixed setting of the other arm in deg, sign of the
# Phi- correlation in that basis)
TWO_POLARIZER_SETTINGS = {
    "HV": ("linear", 0.0, +1),
    "DA": ("linear", 45.0, -1),
    "LR": ("circular", 45.0, +1),
}


@dataclass
class MeasurementRecord:
    """A polarizer sweep: coincidences (and optionally singles) per analyzer angle."""

    angles: np.ndarray
    coincidences: np.ndarray
    integration_time: np.ndarray | float = 1.0
    singles_1: np.ndarray | None = None
    singles_2: np.ndarray | None = None

    def __post_init__(self):
        self.angles = np.asarray(self.angles, dtype=float)
        self.coincidences = np.asarray(self.coincidences, dtype=float)
        n = self.angles.shape[0]
        self.integration_time = np.broadcast_to(
            np.asarray(self.integration_time, dtype=float), (n,)).copy()
        if self.coincidences.shape != (n,):
            raise ValueError("angles and coincidences must have equal length")
        if np.any(self.coincidences < 0):
            raise ValueError("counts must be non-negative")
        if np.any(self.integration_time <= 0):
            raise ValueError("integration times must be positive")
        if (self.singles_1 is None) != (self.singles_2 is None):
            raise ValueError("give both singles columns or neither")
        if self.singles_1 is not None:
            self.singles_1 = np.asarray(self.singles_1, dtype=float)
            self.singles_2 = np.asarray(self.singles_2, dtype=float)
            if self.singles_1.shape != (n,) or self.singles_2.shape != (n,):
                raise ValueError("singles columns must match the angle column")
            if np.any(self.singles_1 < 0) or np.any(self.singles_2 < 0):
                raise ValueError("counts must be non-negative")

    def __len__(self):
        return self.angles.shape[0]

    @property
    def has_singles(self):
        return self.singles_1 is not None

    def accidentals(self, window=DEFAULT_WINDOW):
        """Expected accidental coincidence counts per point, S1*S2*tau/T."""
        if not self.has_singles:
            return np.zeros(len(self))
        return self.singles_1 * self.singles_2 * window / self.integration_time

    def checksum(self):
        h = hashlib.sha256()
        for arr in (self.angles, self.coincidences, self.integration_time,
                    self.singles_1, self.singles_2):
            if arr is not None:
                h.update(np.ascontiguousarray(arr, dtype=float).tobytes())
        return h.hexdigest()


@dataclass
class FitResult:
    a: float
    b: float
    amplitude: float
    fidelity: float
    fidelity_stderr: float
    ci_fidelity: tuple[float, float] | None = None
    ci_level: float = 0.68
    n_bootstrap: int = 0
    converged: bool = True
    projected: bool = False
    chi2: float = float("nan")
    dof: int = 0
    covariance: np.ndarray | None = field(default=None, repr=False)

    def state(self, constraint="theta_pi") -> TwoPhotonState:
        """A (p, x, theta) state consistent with the fit under an explicit constraint.

        ``"theta_pi"`` fixes theta = pi (b <= 0 required); ``"pure"`` fixes p = 1.
        The single-polarizer curve cannot tell these apart.
        """
        a, b = self.a, self.b
        if constraint == "theta_pi":
            if b > 1e-12:
                raise ValueError("theta = pi needs a non-positive coherence term b")
            p = min(math.hypot(a, b), 1.0)
            x = 0.5 if p == 0 else min(max((1 + a / p) / 2, 0.0), 1.0)
            return TwoPhotonState(p, x, math.pi)
        if constraint == "pure":
            x = min(max((1 + a) / 2, 0.0), 1.0)
            denom = 2 * math.sqrt(x * (1 - x))
            cos_t = 0.0 if denom == 0 else min(max(b / denom, -1.0), 1.0)
            return TwoPhotonState(1.0, x, math.acos(cos_t))
        raise ValueError("constraint must be 'theta_pi' or 'pure'")

    def to_dict(self):
        d = dataclasses.asdict(self)
        d.pop("covariance")
        if self.ci_fidelity is not None:
            d["ci_fidelity"] = list(self.ci_fidelity)
        return d


def _design(angles):
    a = np.radians(angles)
    c2, s2 = np.cos(a) ** 2, np.sin(a) ** 2
    return np.column_stack([c2 * c2, s2 * s2, c2 * s2])


def _check_sweep(angles):
    distinct = np.unique(np.round(np.mod(angles, 180.0), 9))
    if distinct.size < 3:
        raise DegenerateInputError("fewer than three distinct polarizer settings; the curve "
                                   "shape is not determined")
    if distinct.size < MIN_ANGLES or np.ptp(angles) < MIN_SPAN:
        raise DegenerateInputError(
            f"need at least {MIN_ANGLES} distinct angles spanning {MIN_SPAN} deg, got "
            f"{distinct.size} spanning {np.ptp(angles):g} deg")


def _wls(x, y, var):
    """Batched weighted least squares. x: (n, k); y, var: (m, n)."""
    w = 1.0 / var
    xtwx = np.einsum("ni,mn,nj->mij", x, w, x)
    xtwy = np.einsum("ni,mn,mn->mi", x, w, y)
    cov = np.linalg.inv(xtwx)
    coef = np.einsum("mij,mj->mi", cov, xtwy)
    resid = y - coef @ x.T
    chi2 = np.sum(resid * resid * w, axis=1)
    return coef, cov, chi2


def _shape_params(coef):
    u, v, w = coef[..., 0], coef[..., 1], coef[..., 2]
    amp = u + v
    with np.errstate(divide="ignore", invalid="ignore"):
        a = (u - v) / amp
        b = w / amp
    r = np.hypot(a, b)
    projected = r > 1.0
    scale = np.where(projected, 1.0 / np.where(r > 0, r, 1.0), 1.0)
    return amp, a * scale, b * scale, projected


def fidelity_from_b(b):
    return np.sqrt(np.clip((1.0 - b) / 2.0, 0.0, 1.0))


def _prepare(rec, window, subtract_accidentals):
    y = rec.coincidences.copy()
    if subtract_accidentals and rec.has_singles:
        y = y - rec.accidentals(window)
    var = np.maximum(rec.coincidences, 1.0)
    x = _design(rec.angles) * rec.integration_time[:, None]
    return x, y, var


def fit_single_polarizer(rec: MeasurementRecord, *, window=DEFAULT_WINDOW,
                         subtract_accidentals=True) -> FitResult:
    """Weighted least-squares fit of a single-polarizer sweep.

    Poisson weights use the observed counts (floored at 1). Amplitude is in
    counts per second. Accidentals S1*S2*tau are subtracted when singles are
    present. A fit landing outside a^2 + b^2 <= 1 is projected radially back
    onto the unit disk.
    """
    _check_sweep(rec.angles)
    x, y, var = _prepare(rec, window, subtract_accidentals)
    if np.linalg.matrix_rank(x) < 3:
        raise DegenerateInputError("sweep does not determine all three curve coefficients")
    coef, cov, chi2 = _wls(x, y[None, :], var[None, :])
    coef, cov = coef[0], cov[0]
    amp, a, b, projected = _shape_params(coef)
    if not amp > 0:
        raise FitConvergenceError("fitted amplitude is not positive", best=coef)
    fid = float(fidelity_from_b(b))
    # propagate (u, v, w) covariance to b, then to F
    u, v, w = coef
    grad_b = np.array([-w / amp**2, -w / amp**2, 1.0 / amp])
    var_b = float(grad_b @ cov @ grad_b)
    stderr = math.sqrt(var_b) / (4.0 * fid) if fid > 0 else float("nan")
    return FitResult(a=float(a), b=float(b), amplitude=float(amp), fidelity=fid,
                     fidelity_stderr=stderr, converged=True, projected=bool(projected),
                     chi2=float(chi2[0]), dof=len(rec) - 3, covariance=cov)


def bootstrap(rec: MeasurementRecord, n=1000, seed=0, *, level=0.68, window=DEFAULT_WINDOW,
              subtract_accidentals=True) -> FitResult:
    """Fit plus a parametric bootstrap interval on the fidelity.

    Every resample redraws each count from a Poisson law whose mean is the
    observed count, and is refitted. Resample ``i`` uses its own generator
    seeded by ``(seed, i)``, so the result does not depend on evaluation order.
    """
    if n < 100:
        raise ValueError("use at least 100 bootstrap resamples")
    base = fit_single_polarizer(rec, window=window, subtract_accidentals=subtract_accidentals)
    fids = bootstrap_fidelities(rec, n, seed, window=window,
                                subtract_accidentals=subtract_accidentals)
    ok = np.isfinite(fids)
    if np.count_nonzero(~ok) > 0.1 * n:
        raise BootstrapUnstableError(f"{np.count_nonzero(~ok)} of {n} resample fits failed")
    tail = 50.0 * (1.0 - level)
    lo, hi = np.percentile(fids[ok], [tail, 100.0 - tail])
    return dataclasses.replace(base, ci_fidelity=(float(lo), float(hi)), ci_level=level,
                               n_bootstrap=n)


def _resample(rec, n, seed):
    cols = [rec.coincidences]
    if rec.has_singles:
        cols += [rec.singles_1, rec.singles_2]
    means = np.stack(cols)
    out = np.empty((n,) + means.shape)
    for i in range(n):
        out[i] = np.random.default_rng([seed, i]).poisson(means)
    return out


def bootstrap_fidelities(rec, n, seed, *, window=DEFAULT_WINDOW, subtract_accidentals=True):
    """Fidelity of every bootstrap refit; failed refits are NaN."""
    draws = _resample(rec, n, seed)
    counts = draws[:, 0, :]
    x = _design(rec.angles) * rec.integration_time[:, None]
    y = counts.copy()
    if subtract_accidentals and rec.has_singles:
        y -= draws[:, 1, :] * draws[:, 2, :] * window / rec.integration_time
    var = np.maximum(counts, 1.0)
    coef, _, _ = _wls(x, y, var)
    amp, _, b, _ = _shape_params(coef)
    fids = fidelity_from_b(b)
    return np.where((amp > 0) & np.isfinite(b), fids, np.nan)


def pxtheta_fisher(state: TwoPhotonState, angles, amplitude, integration_time=1.0):
    """Poisson Fisher information of a single-polarizer sweep in (amplitude, p, x, theta).

    Always singular: the curve depends on (p, x, theta) only through (a, b).
    """
    p, x, th = state.p, state.x, state.theta
    d = _design(np.asarray(angles, dtype=float)) * np.asarray(integration_time, dtype=float)[..., None]
    a, b = state.a, state.b
    shape = d @ np.array([(1 + a) / 2, (1 - a) / 2, b])
    dshape_da = d @ np.array([0.5, -0.5, 0.0])
    dshape_db = d[:, 2]
    r = math.sqrt(x * (1 - x))
    da = np.array([2 * x - 1, 2 * p, 0.0])
    db = np.array([2 * r * math.cos(th),
                   (p * (1 - 2 * x) / r * math.cos(th)) if r > 0 else 0.0,
                   -2 * p * r * math.sin(th)])
    jac = np.column_stack([
        shape,
        amplitude * (dshape_da * da[0] + dshape_db * db[0]),
        amplitude * (dshape_da * da[1] + dshape_db * db[1]),
        amplitude * (dshape_da * da[2] + dshape_db * db[2]),
    ])
    mu = amplitude * shape
    return jac.T @ (jac / mu[:, None])


@dataclass
class TwoPolarizerResult:
    fidelity: float
    fidelity_stderr: float
    visibilities: dict
    visibility_stderr: dict
    unphysical: bool

    def to_dict(self):
        return dataclasses.asdict(self)


def fit_sinusoid(rec: MeasurementRecord, *, window=DEFAULT_WINDOW, subtract_accidentals=True):
    """Fit c0 + c1 cos(2g) + c2 sin(2g) (counts per second) to a swept-analyzer record."""
    g = np.radians(rec.angles)
    if np.unique(np.round(np.mod(rec.angles, 180.0), 9)).size < 3:
        raise DegenerateInputError("need at least three distinct analyzer settings")
    x = np.column_stack([np.ones_like(g), np.cos(2 * g), np.sin(2 * g)]) * rec.integration_time[:, None]
    y = rec.coincidences.copy()
    if subtract_accidentals and rec.has_singles:
        y = y - rec.accidentals(window)
    var = np.maximum(rec.coincidences, 1.0)
    coef, cov, _ = _wls(x, y[None, :], var[None, :])
    return coef[0], cov[0]


def signed_visibility(coef, cov, basis):
    """Visibility of a fitted sinusoid, signed by the Phi- correlation convention."""
    _, fixed, sign = TWO_POLARIZER_SETTINGS[basis]
    c0, c1, c2 = coef
    r = math.hypot(c1, c2)
    mag = r / c0
    co = c0 + c1 * math.cos(math.radians(2 * fixed)) + c2 * math.sin(math.radians(2 * fixed))
    orth = 2 * c0 - co
    s = sign * (1 if co >= orth else -1)
    grad = np.array([-mag / c0, c1 / (c0 * r), c2 / (c0 * r)]) if r > 0 else np.array([0.0, 0, 0])
    return s * mag, math.sqrt(max(float(grad @ cov @ grad), 0.0))


def fidelity_from_two_polarizer(records: Mapping[str, MeasurementRecord], *,
                                window=DEFAULT_WINDOW, subtract_accidentals=True):
    """Fidelity to Phi- from three two-analyzer sweeps (keys ``HV``, ``DA``, ``LR``).

    Each record sweeps the idler analyzer while the signal analyzer is fixed at
    H (``HV``), D (``DA``) or L (``LR``); see ``TWO_POLARIZER_SETTINGS``.
    """
    missing = set(TWO_POLARIZER_SETTINGS) - set(records)
    if missing:
        raise ValueError(f"missing basis records: {sorted(missing)}")
    vis, err = {}, {}
    for basis in TWO_POLARIZER_SETTINGS:
        coef, cov = fit_sinusoid(records[basis], window=window,
                                 subtract_accidentals=subtract_accidentals)
        vis[basis], err[basis] = signed_visibility(coef, cov, basis)
    unphysical = any(abs(v) > 1.0 for v in vis.values())
    clipped = {k: min(max(v, -1.0), 1.0) for k, v in vis.items()}
    fid = fidelity_from_visibilities(clipped["HV"], clipped["DA"], clipped["LR"])
    stderr = math.sqrt(sum(e * e for e in err.values())) / (8 * fid) if fid > 0 else float("nan")
    return TwoPolarizerResult(fid, stderr, vis, err, unphysical)


# --- file formats -----------------------------------------------------------

def write_measurement(rec: MeasurementRecord, path, provenance: Mapping | None = None):
    """Comma-separated sweep file; provenance goes into leading '#' lines."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        for key, value in (provenance or {}).items():
            fh.write(f"# {key}: {value}\n")
        writer = csv.writer(fh)
        header = ["angle_deg", "coincidences"]
        if rec.has_singles:
            header += ["singles1", "singles2"]
        header.append("integration_s")
        writer.writerow(header)
        for i in range(len(rec)):
            row = [repr(float(rec.angles[i])), int(round(rec.coincidences[i]))]
            if rec.has_singles:
                row += [int(round(rec.singles_1[i])), int(round(rec.singles_2[i]))]
            row.append(repr(float(rec.integration_time[i])))
            writer.writerow(row)


def read_measurement(path) -> MeasurementRecord:
    path = Path(path)
    with path.open(newline="") as fh:
        lines = [ln for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    reader = csv.DictReader(lines)
    fields = [f.strip() for f in (reader.fieldnames or [])]
    required = {"angle_deg", "coincidences", "integration_s"}
    if not required <= set(fields):
        raise ValueError(f"{path}: header must name {sorted(required)}, got {fields}")
    rows = [{k.strip(): v for k, v in row.items()} for row in reader]
    col = lambda name: np.array([float(r[name]) for r in rows])  # noqa: E731
    singles = ("singles1" in fields) and ("singles2" in fields)
    return MeasurementRecord(
        angles=col("angle_deg"),
        coincidences=col("coincidences"),
        integration_time=col("integration_s"),
        singles_1=col("singles1") if singles else None,
        singles_2=col("singles2") if singles else None,
    )


def write_fit_result(result: FitResult, path, provenance: Mapping | None = None):
    out = {"result": result.to_dict(), "provenance": dict(provenance or {})}
    Path(path).write_text(json.dumps(out, indent=2, sort_keys=True) + "\n")
