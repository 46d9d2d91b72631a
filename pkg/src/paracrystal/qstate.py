"""Two-photon polarization states and the measurements made on them.

States of the form

    rho = p |psi><psi| + (1 - p)/2 (|HH><HH| + |VV><VV|),
    |psi> = sqrt(x) |HH> + exp(i theta) sqrt(1 - x) |VV>,

are stored by their parameters and expanded to 4x4 matrices in the
(HH, HV, VH, VV) basis on demand. The ideal target |Phi-> = (|HH> - |VV>)/sqrt(2)
is p = 1, x = 1/2, theta = pi.

Polarizer angles are in degrees: 0 = H, 45 = D, 90 = V, -45 = A. Circular
analyzer settings use |e(g)> = (|H> + exp(2ig)|V>)/sqrt(2), so g = 45 is
L = (H + iV)/sqrt(2) and g = -45 is R.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import MatrixDomainError

BASES = ("linear", "circular")
_HH, _VV = 0, 3
EIG_ZERO = 1e-13
PSD_TOL = 1e-10


def _reduce_phase(theta):
    t = math.remainder(float(theta), 2 * math.pi)
    return math.pi if t <= -math.pi else t


@dataclass(frozen=True)
class TwoPhotonState:
    p: float
    x: float
    theta: float = math.pi

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"purity p must lie in [0, 1], got {self.p}")
        if not 0.0 <= self.x <= 1.0:
            raise ValueError(f"balance x must lie in [0, 1], got {self.x}")
        if not math.isfinite(self.theta):
            raise ValueError(f"phase theta must be finite, got {self.theta}")
        object.__setattr__(self, "theta", _reduce_phase(self.theta))

    @property
    def a(self):
        """H/V imbalance p(2x - 1) seen by a single polarizer."""
        return self.p * (2 * self.x - 1)

    @property
    def b(self):
        """Coherence term 2 p sqrt(x(1-x)) cos(theta)."""
        return 2 * self.p * math.sqrt(self.x * (1 - self.x)) * math.cos(self.theta)


PHI_MINUS = TwoPhotonState(1.0, 0.5, math.pi)
PHI_PLUS = TwoPhotonState(1.0, 0.5, 0.0)


def ket(state: TwoPhotonState) -> np.ndarray:
    v = np.zeros(4, dtype=complex)
    v[_HH] = math.sqrt(state.x)
    v[_VV] = np.exp(1j * state.theta) * math.sqrt(1 - state.x)
    return v


def to_density_matrix(state: TwoPhotonState) -> np.ndarray:
    psi = ket(state)
    rho = state.p * np.outer(psi, psi.conj())
    rho[_HH, _HH] += (1 - state.p) / 2
    rho[_VV, _VV] += (1 - state.p) / 2
    return rho


def check_density_matrix(rho, tol=PSD_TOL):
    """Raise MatrixDomainError unless ``rho`` is a valid 4x4 density matrix."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise MatrixDomainError(f"expected a 4x4 matrix, got shape {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-12:
        raise MatrixDomainError("matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > 1e-12:
        raise MatrixDomainError(f"trace is {np.trace(rho).real}, not 1")
    if np.linalg.eigvalsh(rho).min() < -tol:
        raise MatrixDomainError("matrix is not positive semidefinite")
    return rho


def _psd_sqrt(rho):
    w, v = np.linalg.eigh(rho)
    if w.min() < -PSD_TOL:
        raise MatrixDomainError(f"negative eigenvalue {w.min():.3g} in density matrix")
    w = np.where(w < EIG_ZERO, 0.0, w)
    return (v * np.sqrt(w)) @ v.conj().T


def fidelity_trace(rho, sigma):
    """Uhlmann fidelity Tr sqrt(sqrt(rho) sigma sqrt(rho)).

    Evaluated as the trace norm of sqrt(rho) sqrt(sigma), which avoids square
    roots of round-off eigenvalues when either state is pure.
    """
    rho = check_density_matrix(rho)
    sigma = check_density_matrix(sigma)
    sv = np.linalg.svd(_psd_sqrt(rho) @ _psd_sqrt(sigma), compute_uv=False)
    return float(min(np.sum(sv), 1.0))


def fidelity_to_phi_minus(state: TwoPhotonState) -> float:
    """Closed form sqrt(1/2 - p sqrt(x(1-x)) cos(theta)) = sqrt((1 - b)/2)."""
    return math.sqrt(max(0.0, (1.0 - state.b) / 2.0))


def _analyzer(angle_deg, basis):
    a = np.radians(np.asarray(angle_deg, dtype=float))
    if basis == "linear":
        return np.stack([np.cos(a), np.sin(a)], axis=-1).astype(complex)
    if basis == "circular":
        h = np.full(a.shape, 1 / math.sqrt(2), dtype=complex)
        return np.stack([h, np.exp(2j * a) / math.sqrt(2)], axis=-1)
    raise ValueError(f"basis must be one of {BASES}")


def single_polarizer_rate(state: TwoPhotonState, alpha):
    """Probability that both photons pass one polarizer set at ``alpha`` degrees.

    p |sqrt(x) cos^2 a + e^{i theta} sqrt(1-x) sin^2 a|^2 + (1-p)/2 (cos^4 a + sin^4 a)
    """
    a = np.radians(np.asarray(alpha, dtype=float))
    c2, s2 = np.cos(a) ** 2, np.sin(a) ** 2
    amp = math.sqrt(state.x) * c2 + np.exp(1j * state.theta) * math.sqrt(1 - state.x) * s2
    out = state.p * np.abs(amp) ** 2 + (1 - state.p) / 2 * (c2 * c2 + s2 * s2)
    return float(out) if out.ndim == 0 else out


def single_photon_transmission(state: TwoPhotonState, alpha):
    """Probability that one photon of the pair passes a polarizer at ``alpha``."""
    a = np.radians(np.asarray(alpha, dtype=float))
    out = (1 + state.a) / 2 * np.cos(a) ** 2 + (1 - state.a) / 2 * np.sin(a) ** 2
    return float(out) if out.ndim == 0 else out


def projector_rate(rho, beta, gamma, basis="linear"):
    """<e_beta e_gamma| rho |e_beta e_gamma> for an arbitrary 4x4 density matrix."""
    e1 = _analyzer(beta, basis)
    e2 = _analyzer(gamma, basis)
    e1, e2 = np.broadcast_arrays(e1, e2)
    vec = np.einsum("...i,...j->...ij", e1, e2).reshape(e1.shape[:-1] + (4,))
    out = np.einsum("...i,ij,...j->...", vec.conj(), np.asarray(rho), vec).real
    return float(out) if out.ndim == 0 else out


def two_polarizer_rate(state: TwoPhotonState, beta, gamma, basis="linear"):
    """Coincidence probability with separate analyzers on signal (beta) and idler (gamma)."""
    return projector_rate(to_density_matrix(state), beta, gamma, basis)


def visibility(curve_max, curve_min):
    if curve_max == 0 and curve_min == 0:
        raise ZeroDivisionError("visibility undefined for an all-zero curve")
    if curve_min < 0 or curve_max < curve_min:
        raise ValueError("need max >= min >= 0")
    return (curve_max - curve_min) / (curve_max + curve_min)


def fidelity_from_visibilities(v_hv, v_da, v_lr):
    """sqrt((1 + V_HV + V_DA + V_LR) / 4).

    Visibilities are signed by the correlation |Phi-> shows in each basis:
    co-polarized in H/V and L/R, anti-polarized in D/A.
    """
    for v in (v_hv, v_da, v_lr):
        if not -1.0 <= v <= 1.0:
            raise ValueError(f"visibility {v} outside [-1, 1]")
    arg = 0.25 * (1.0 + v_hv + v_da + v_lr)
    if arg < 0:
        raise ValueError("visibilities give a negative fidelity squared")
    return math.sqrt(arg)
