"""Physical outputs: power, pulling coefficients, dark/bright coherence, TLM curves."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from scipy.constants import c as SPEED_OF_LIGHT, hbar

from .model import TWO_PI, PhysicalParams, dark_bright_transform

PULLING_CHANNELS = ("cavity", "one_photon", "two_photon")


class UndefinedMeasureError(ValueError):
    """The coherence measure has no excited-manifold population to normalise by."""


class PullingError(RuntimeError):
    pass


def power_watts(steady, params) -> float:
    """Output power kappa * hbar * omega_c * <a^dag a>_s in watts."""
    if not getattr(steady, "converged", True):
        raise ValueError("power requested for an unconverged steady state")
    n = steady.state.n_photon if hasattr(steady, "state") else steady.n_photon
    omega_c = 2.0 * math.pi * SPEED_OF_LIGHT / params.lasing_wavelength
    return hbar * omega_c * params.kappa * n


def detuned(params: PhysicalParams, which: str, h: float) -> PhysicalParams:
    """Shift one detuning channel by ``h`` (rad/s).

    cavity moves delta_c; one_photon moves delta_alpha + delta_beta with the
    two-photon detuning fixed; two_photon moves delta_alpha - delta_beta with
    the one-photon detuning fixed.
    """
    if which == "cavity":
        return params.with_(delta_c=params.delta_c + h)
    if which == "one_photon":
        return params.with_(delta_alpha=params.delta_alpha + h / 2,
                            delta_beta=params.delta_beta + h / 2)
    if which == "two_photon":
        return params.with_(delta_alpha=params.delta_alpha + h / 2,
                            delta_beta=params.delta_beta - h / 2)
    raise ValueError(f"unknown detuning channel {which!r}; expected one of {PULLING_CHANNELS}")


def lasing_offset(params: PhysicalParams, steady=None) -> float:
    """Lasing frequency offset delta* = Im lambda_min (rad/s)."""
    from .regression import linewidth_regression
    from .steady import find_steady

    ss = find_steady(params, steady)
    if not ss.converged:
        raise PullingError("steady state did not converge at the perturbed detuning")
    return linewidth_regression(params, ss).lasing_offset


@dataclass(frozen=True)
class PullingEstimate:
    """One channel: |d delta*/d delta_i| and the data behind it."""

    which: str
    value: float
    step_used: float
    richardson_error: float
    one_sided: tuple  # (delta*(+h)/h, -delta*(-h)/h)
    flagged: bool = False


@dataclass(frozen=True)
class PullingReport:
    c_p_cavity: float
    c_p_one_photon: float
    c_p_two_photon: float
    step_used: float
    richardson_error: float
    estimates: tuple = ()


def _central(params, which, h, ref):
    up = lasing_offset(detuned(params, which, h), ref)
    dn = lasing_offset(detuned(params, which, -h), ref)
    return (up - dn) / (2 * h), (up / h, -dn / h)


def pulling_coefficient(which: str, params: PhysicalParams, step: float = TWO_PI * 10.0,
                        steady=None, rel_tol: float = 0.05) -> PullingEstimate:
    """c_p = |d delta*/d delta_i| at the given operating point.

    Central differences at ``h`` and ``h/2`` give a Richardson error estimate.
    If it exceeds ``rel_tol`` of the value (and the value is not in the
    small-coefficient regime < 1e-3) the step is cut to ``h/4`` once more;
    a persisting failure sets ``flagged``.
    """
    from .steady import find_steady

    if which not in PULLING_CHANNELS:
        raise ValueError(f"unknown detuning channel {which!r}")
    if not step > 0:
        raise ValueError("step must be positive")
    ref = steady if steady is not None else find_steady(params)
    if not ref.converged:
        raise PullingError("reference steady state did not converge")
    h = step
    for attempt in range(2):
        d1, sides = _central(params, which, h, ref)
        d2, sides2 = _central(params, which, h / 2, ref)
        # second-order scheme: error of the refined value ~ (d2 - d1) / 3
        value = abs(d2 + (d2 - d1) / 3.0)
        err = abs(d2 - d1) / 3.0
        if err <= rel_tol * value or value < 1e-3:
            return PullingEstimate(which, value, h, err, sides2)
        h /= 4.0
    return PullingEstimate(which, value, h * 4.0, err, sides2, flagged=True)


def pulling_report(params: PhysicalParams, step: float = TWO_PI * 10.0,
                   steady=None) -> PullingReport:
    from .steady import find_steady

    ref = steady if steady is not None else find_steady(params)
    est = tuple(pulling_coefficient(w, params, step, ref) for w in PULLING_CHANNELS)
    return PullingReport(est[0].value, est[1].value, est[2].value,
                         max(e.step_used for e in est),
                         max(e.richardson_error for e in est), est)


def coherence_cbd(steady, params: PhysicalParams) -> float:
    """C_BD = |<sigma_BD>| / (<sigma_DD> + <sigma_BB>)."""
    if not getattr(steady, "converged", True):
        raise ValueError("coherence requested for an unconverged steady state")
    state = steady.state if hasattr(steady, "state") else steady
    db = dark_bright_transform(state, params)
    if db.pop_dark + db.pop_bright < 1e-15:
        raise UndefinedMeasureError("no population in the dark/bright manifold")
    return db.c_bd


@dataclass(frozen=True)
class TlmRow:
    eta: float
    n_photon_s: float
    power_w: float
    linewidth: Optional[float]
    converged: bool


def tlm_simulate(tlm, eta_grid: Sequence[float], continuation: bool = True,
                 n_lasing: float = 0.0) -> list:
    """Steady state, power and regression linewidth of a three-level model
    along a pump grid (ascending, continuation from below).

    Linewidths are reported where the photon number exceeds ``n_lasing``.
    """
    from .regression import linewidth_regression
    from .steady import sweep_eta

    rows = []
    for r in sweep_eta(tlm, eta_grid, "up", continuation):
        lw = None
        if r.converged and r.n_photon_s > n_lasing:
            lw = linewidth_regression(tlm.with_(eta=r.eta), r.steady).linewidth
        rows.append(TlmRow(r.eta, r.n_photon_s, r.power_w, lw, r.converged))
    return rows
