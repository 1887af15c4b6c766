"""Filter-cavity spectrum.

A weakly coupled, low-loss auxiliary mode b is added to the moment equations.
Its steady photon number as a function of its frequency traces the laser
line. The augmented state appends <b^dag b>, <b^dag a>, <sigma_xg b>,
<sigma_Pg b>, <sigma_Sg b> to the 25 laser scalars.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import OptimizeWarning, curve_fit

from .model import STATE_SIZE, PhysicalParams, rhs
from .steady import System, jacobian, newton, find_steady

log = logging.getLogger(__name__)

FILTER_SIZE = 9
AUG_SIZE = STATE_SIZE + FILTER_SIZE


class SpectrumError(RuntimeError):
    pass


class MultiPeakError(SpectrumError):
    def __init__(self, maxima):
        self.maxima = list(maxima)
        super().__init__(f"spectrum has {len(self.maxima)} local maxima: {self.maxima}")


@dataclass(frozen=True)
class FilterConfig:
    zeta: float
    kappa_f: float
    omega_b_grid: tuple = ()

    def validate(self, params: PhysicalParams) -> None:
        if not (self.zeta > 0 and self.kappa_f > 0):
            raise ValueError("zeta and kappa_f must be positive")
        if self.zeta > self.kappa_f / 10 * (1 + 1e-12):
            raise ValueError("filter coupling must satisfy zeta <= kappa_f / 10")
        if self.kappa_f > params.kappa / 100 * (1 + 1e-12):
            raise ValueError("filter loss must satisfy kappa_f <= kappa / 100")


def filtered_rhs(y: np.ndarray, p: PhysicalParams, zeta: float, kappa_f: float,
                 delta_b: float) -> np.ndarray:
    """Augmented equations; ``delta_b`` is the filter frequency offset from omega_0."""
    out = np.empty(np.shape(y))
    out[:STATE_SIZE] = rhs(y[:STATE_SIZE], p)
    if np.ndim(y) == 1:
        y = y.tolist()

    n = y[0]
    cx = y[1] + 1j * y[2]
    cp = y[3] + 1j * y[4]
    cs = y[5] + 1j * y[6]
    pxx, ppp, pss = y[16], y[17], y[18]
    qxp = y[19] + 1j * y[20]
    qxs = y[21] + 1j * y[22]
    inv = 2 * pxx + ppp + pss - 1.0

    k = STATE_SIZE
    nb = y[k]
    X = y[k + 1] + 1j * y[k + 2]  # <b^dag a>
    bx = y[k + 3] + 1j * y[k + 4]
    bp = y[k + 5] + 1j * y[k + 6]
    bs = y[k + 7] + 1j * y[k + 8]

    N, oc, oa, ob = p.n_atoms, p.omega_c_rabi, p.omega_alpha, p.omega_beta
    ih = 0.5j

    # back-action of the filter on the laser correlators
    out[0] += -2.0 * zeta * X.imag
    d = -1j * zeta * bx
    out[1] += d.real
    out[2] += d.imag
    d = -1j * zeta * bp
    out[3] += d.real
    out[4] += d.imag
    d = -1j * zeta * bs
    out[5] += d.real
    out[6] += d.imag

    dnb = -kappa_f * nb + 2.0 * zeta * X.imag
    dX = ((1j * (delta_b - p.delta_c) - 0.5 * (p.kappa + kappa_f)) * X
          + 1j * zeta * (n - nb) - 1j * N * oc / 2 * bx.conjugate())
    dbx = (-(1j * delta_b + 0.5 * (p.gamma0 + p.eta + kappa_f)) * bx + ih * oa * bs
           - 1j * zeta * cx - ih * oc * inv * X.conjugate())
    dbp = ((1j * (p.delta_two_photon - delta_b) - 0.5 * (p.eta + kappa_f)) * bp
           + ih * ob * bs - 1j * zeta * cp - ih * oc * X.conjugate() * qxp.conjugate())
    dbs = ((1j * (p.delta_alpha - delta_b) - 0.5 * (p.big_gamma + kappa_f)) * bs
           + ih * oa * bx + ih * ob * bp - 1j * zeta * cs
           - ih * oc * X.conjugate() * qxs.conjugate())
    out[k] = dnb
    out[k + 1], out[k + 2] = dX.real, dX.imag
    out[k + 3], out[k + 4] = dbx.real, dbx.imag
    out[k + 5], out[k + 6] = dbp.real, dbp.imag
    out[k + 7], out[k + 8] = dbs.real, dbs.imag
    return out


def _filter_system(params, zeta, kappa_f, delta_b) -> System:
    return System(AUG_SIZE, lambda y: filtered_rhs(y, params, zeta, kappa_f, delta_b),
                  params.kappa, lambda y: y)


def extend_and_solve(params: PhysicalParams, filt: FilterConfig, omega_b: float,
                     steady=None, tol: float = 1e-9) -> float:
    """Steady <b^dag b> with the filter tuned to offset ``omega_b`` (rad/s)."""
    filt.validate(params)
    if steady is None:
        steady = find_steady(params)
    if not steady.converged:
        raise SpectrumError("laser steady state not converged")
    return _solve_filtered(params, filt.zeta, filt.kappa_f, omega_b, steady.vector, tol)[0]


def _solve_filtered(params, zeta, kappa_f, omega_b, base, tol):
    sys = _filter_system(params, zeta, kappa_f, omega_b)
    y0 = np.concatenate([base, np.zeros(FILTER_SIZE)])
    # the filter block is affine in the filter variables for a fixed laser state
    J = jacobian(sys.f, y0)[STATE_SIZE:, STATE_SIZE:]
    f0 = sys.f(y0)[STATE_SIZE:]
    y0[STATE_SIZE:] = np.linalg.solve(J, -f0)
    y, ok = newton(sys, y0, tol)
    if not ok:
        raise SpectrumError(f"filter-augmented system did not converge at offset {omega_b}")
    nb = y[STATE_SIZE]
    if nb < -1e-12:
        raise SpectrumError(f"negative filter photon number {nb} at offset {omega_b}")
    return max(nb, 0.0), y


@dataclass(frozen=True)
class SpectrumResult:
    points: list
    peak_omega: float
    fwhm: float
    fit_quality: float
    peak_height: float = math.nan
    kappa_f: float = math.nan
    zeta: float = math.nan


def _lorentz(x, a, x0, w):
    return a / (1.0 + ((x - x0) / (0.5 * w)) ** 2)


def local_maxima(x: np.ndarray, y: np.ndarray, rel: float = 0.1) -> list:
    top = y.max()
    out = []
    for i in range(len(y)):
        left = y[i - 1] if i > 0 else -np.inf
        right = y[i + 1] if i < len(y) - 1 else -np.inf
        if y[i] > left and y[i] >= right and y[i] >= rel * top:
            out.append(float(x[i]))
    return out


def fit_lorentzian(x: np.ndarray, y: np.ndarray, level: float = 0.1):
    """Least-squares Lorentzian over the points above ``level`` times the maximum.

    Returns (peak position, FWHM, height, normalised residual).
    """
    i = int(np.argmax(y))
    mask = y >= level * y[i]
    xs, ys = x[mask], y[mask]
    half = ys >= 0.5 * y[i]
    w0 = max(xs[half].max() - xs[half].min(), np.min(np.diff(x)))
    scale = w0
    with warnings.catch_warnings():
        # exact Lorentzians leave a singular covariance; only popt is used
        warnings.simplefilter("ignore", OptimizeWarning)
        popt, _ = curve_fit(_lorentz, (xs - x[i]) / scale, ys / y[i], p0=(1.0, 0.0, 1.0),
                            maxfev=20000)
    a, x0, w = popt
    model = _lorentz((xs - x[i]) / scale, a, x0, w)
    quality = float(np.linalg.norm(model - ys / y[i]) / np.linalg.norm(ys / y[i]))
    return x[i] + x0 * scale, abs(w) * scale, a * y[i], quality


def scan_spectrum(params: PhysicalParams, filt: Optional[FilterConfig] = None,
                  steady=None, estimate: Optional[float] = None,
                  center: float = 0.0, pass1_points: int = 61,
                  pass2_points: int = 81) -> SpectrumResult:
    """Two-pass filter scan.

    Pass 1 spans +-10 linewidth estimates around ``center`` (the analytic
    formula by default) with kappa_f = estimate/50 and zeta = kappa_f/10;
    pass 2 samples +-3 FWHM around the pass-1 peak. An explicit ``filt``
    fixes zeta, kappa_f and, if given, the pass-1 grid.
    """
    from .regression import linewidth_analytic, linewidth_regression

    if steady is None:
        steady = find_steady(params)
    if not steady.converged:
        raise SpectrumError("laser steady state not converged")
    if estimate is None:
        try:
            estimate = linewidth_analytic(params, steady)
        except ZeroDivisionError:
            estimate = linewidth_regression(params, steady).linewidth
    if filt is None:
        kf = estimate / 50.0
        filt = FilterConfig(zeta=kf / 10.0, kappa_f=kf)
    filt.validate(params)
    zeta, kf = filt.zeta, filt.kappa_f

    if filt.omega_b_grid:
        grid1 = np.asarray(filt.omega_b_grid, dtype=float)
    else:
        grid1 = center + np.linspace(-10 * estimate, 10 * estimate, pass1_points)
    if len(grid1) < 5:
        raise ValueError("need at least 5 grid points")
    base = steady.vector
    y1 = np.array([_solve_filtered(params, zeta, kf, w, base, 1e-9)[0] for w in grid1])
    peaks = local_maxima(grid1, y1)
    if len(peaks) != 1:
        raise MultiPeakError(peaks)
    i = int(np.argmax(y1))
    if i == 0 or i == len(grid1) - 1:
        raise SpectrumError("spectral peak at the edge of the scan grid")
    x0, w1, _, _ = fit_lorentzian(grid1, y1)

    grid2 = x0 + np.linspace(-3 * w1, 3 * w1, pass2_points)
    y2 = np.array([_solve_filtered(params, zeta, kf, w, base, 1e-9)[0] for w in grid2])
    peaks = local_maxima(grid2, y2)
    if len(peaks) != 1:
        raise MultiPeakError(peaks)
    x0, fwhm, height, quality = fit_lorentzian(grid2, y2)
    pts = sorted(zip(np.concatenate([grid1, grid2]).tolist(),
                     np.concatenate([y1, y2]).tolist()))
    return SpectrumResult(pts, float(x0), float(fwhm), quality, float(height), kf, zeta)
