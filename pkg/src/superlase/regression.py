"""Laser linewidth from the quantum regression theorem.

The two-time vector A(t) = [<a^dag(t)a>, <sigma_xg(t)a>, <sigma_Pg(t)a>,
<sigma_Sg(t)a>] obeys dA/dt = B A. Its spectrum is a sum of Lorentzians, one
per eigenvalue of B; the laser line is the eigenvalue with vanishing imaginary
part and the smallest decay rate at resonance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from .model import MeanFieldState, PhysicalParams
from .tlm import TlmParams, TlmState, tlm_regression_matrix


class RegressionError(RuntimeError):
    pass


class TrackingError(RegressionError):
    pass


class SingularFormulaError(ZeroDivisionError):
    pass


def _steady_state_of(steady):
    if hasattr(steady, "converged"):
        if not steady.converged:
            raise RegressionError("regression requires a converged steady state")
        return steady.state
    return steady


def build_B(params: PhysicalParams, steady) -> np.ndarray:
    """Regression generator for the four-level model (order a^dag, x, P, S)."""
    s = _steady_state_of(steady)
    if isinstance(params, TlmParams):
        return tlm_regression_matrix(params, s)
    N, oc = params.n_atoms, params.omega_c_rabi
    oa, ob = params.omega_alpha, params.omega_beta
    B = -0.5 * np.array([
        [-2j * params.delta_c + params.kappa, -1j * N * oc, 0.0, 0.0],
        [1j * oc * s.inversion, params.gamma0 + params.eta, 0.0, -1j * oa],
        [1j * oc * s.c_xp.conjugate(), 0.0,
         -2j * params.delta_two_photon + params.eta, -1j * ob],
        [1j * oc * s.c_xs.conjugate(), -1j * oa, -1j * ob,
         -2j * params.delta_alpha + params.big_gamma],
    ], dtype=complex)
    if not np.all(np.isfinite(B)):
        raise RegressionError("regression matrix has non-finite entries")
    return B


def initial_vector(steady) -> np.ndarray:
    """A(0) from steady values: photon number and the <sigma_mu,g a> correlators."""
    s = _steady_state_of(steady)
    if isinstance(s, TlmState):
        return np.array([s.n_photon, s.c_eg_a, s.c_sg_a], dtype=complex)
    return np.array([s.n_photon, s.c_xg_a, s.c_pg_a, s.c_sg_a], dtype=complex)


@dataclass(frozen=True)
class EigenSystem:
    lambdas: np.ndarray
    right_vecs: np.ndarray  # columns |i>
    left_vecs: np.ndarray  # rows <~i|, biorthonormal to the columns
    weights: Optional[np.ndarray] = None
    degenerate: bool = False

    def reconstruct(self) -> np.ndarray:
        return (self.right_vecs * self.lambdas) @ self.left_vecs

    def with_weights(self, a0: np.ndarray) -> "EigenSystem":
        w = self.right_vecs[0, :] * (self.left_vecs @ a0)
        return EigenSystem(self.lambdas, self.right_vecs, self.left_vecs, w, self.degenerate)


def eig_lr(M: np.ndarray, degeneracy_tol: float = 1e-8) -> EigenSystem:
    """Left/right eigenvectors with <~i|j> = delta_ij, sorted by ascending |Re lambda|."""
    M = np.asarray(M, dtype=complex)
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    w, vl, vr = scipy.linalg.eig(M, left=True, right=True)
    order = np.lexsort((w.imag, np.abs(w.real)))
    w, vl, vr = w[order], vl[:, order], vr[:, order]
    vr = vr / np.linalg.norm(vr, axis=0)
    left = vl.conj().T
    # for simple eigenvalues the cross overlaps vanish; normalise the diagonal,
    # then clean residual cross terms with an explicit inverse
    d = np.einsum("ij,ji->i", left, vr)
    left = left / d[:, None]
    scale = max(np.max(np.abs(w)), np.finfo(float).tiny)
    gaps = np.abs(w[:, None] - w[None, :])
    np.fill_diagonal(gaps, np.inf)
    degenerate = bool(np.min(gaps) < degeneracy_tol * scale) if len(w) > 1 else False
    if not degenerate:
        left = np.linalg.solve(vr, np.eye(len(w)))
    return EigenSystem(w, vr, left, None, degenerate)


@dataclass(frozen=True)
class RegressionResult:
    lambda_min: complex
    linewidth: float
    lasing_offset: float
    analytic_linewidth: Optional[float]
    eigen: EigenSystem
    index: int


def _select_resonant(w: np.ndarray) -> int:
    scale = np.max(np.abs(w))
    im = np.abs(w.imag)
    cand = np.flatnonzero(im <= im.min() + 1e-9 * scale)
    return int(cand[np.argmin(np.abs(w.real[cand]))])


def _detuned(params) -> bool:
    if isinstance(params, TlmParams):
        return params.delta_c != 0.0
    return any(getattr(params, k) != 0.0 for k in ("delta_c", "delta_alpha", "delta_beta"))


def _zero_detuning(params):
    if isinstance(params, TlmParams):
        return params.with_(delta_c=0.0)
    return params.with_(delta_c=0.0, delta_alpha=0.0, delta_beta=0.0)


def _scaled_detuning(params, s: float):
    if isinstance(params, TlmParams):
        return params.with_(delta_c=s * params.delta_c)
    return params.with_(delta_c=s * params.delta_c, delta_alpha=s * params.delta_alpha,
                        delta_beta=s * params.delta_beta)


def _overlap(u: np.ndarray, v: np.ndarray) -> float:
    return float(abs(np.vdot(u, v)) / (np.linalg.norm(u) * np.linalg.norm(v)))


def linewidth_regression(params, steady, homotopy_steps: int = 4,
                         min_overlap: float = 0.7) -> RegressionResult:
    """Linewidth 2|Re lambda_min| and lasing offset Im lambda_min.

    At resonance lambda_min is the eigenvalue with the smallest |Im| (ties
    broken by smallest |Re|). Off resonance it is followed from the resonant
    one along a straight detuning path, matching right eigenvectors by
    overlap at each step.
    """
    from .steady import find_steady

    if not _detuned(params):
        es = eig_lr(build_B(params, steady)).with_weights(initial_vector(steady))
        k = _select_resonant(es.lambdas)
    else:
        ref = find_steady(_zero_detuning(params), steady)
        if not ref.converged:
            raise RegressionError("zero-detuning reference steady state did not converge")
        es0 = eig_lr(build_B(_zero_detuning(params), ref))
        k = _select_resonant(es0.lambdas)
        vec = es0.right_vecs[:, k]
        prev = ref
        for j in range(1, homotopy_steps + 1):
            s = j / homotopy_steps
            if j == homotopy_steps:
                cur, p_s = steady, params
            else:
                p_s = _scaled_detuning(params, s)
                cur = find_steady(p_s, prev)
                if not cur.converged:
                    raise RegressionError(f"homotopy step {j} did not converge")
            es = eig_lr(build_B(p_s, cur))
            ov = [_overlap(vec, es.right_vecs[:, i]) for i in range(len(es.lambdas))]
            k = int(np.argmax(ov))
            if ov[k] < min_overlap:
                raise TrackingError(
                    f"eigenvector overlap {ov[k]:.3f} < {min_overlap} at homotopy step {j}; "
                    "use more homotopy steps")
            vec = es.right_vecs[:, k]
            prev = cur
        es = es.with_weights(initial_vector(steady))
    lam = complex(es.lambdas[k])
    analytic = None
    if isinstance(params, PhysicalParams) and not _detuned(params):
        try:
            analytic = linewidth_analytic(params, steady)
        except SingularFormulaError:
            analytic = None
    return RegressionResult(lam, 2.0 * abs(lam.real), lam.imag, analytic, es, k)


def linewidth_analytic(params: PhysicalParams, steady) -> float:
    """Closed-form first-order approximation of the linewidth at resonance."""
    s = _steady_state_of(steady)
    N, oc, kap = params.n_atoms, params.omega_c_rabi, params.kappa
    oa, ob, eta, g0 = params.omega_alpha, params.omega_beta, params.eta, params.gamma0
    G, F = params.big_gamma, params.big_f
    if F == 0.0:
        raise SingularFormulaError("F vanishes")
    inv = s.inversion
    im_sx = s.c_xs.conjugate().imag  # Im <sigma_Sx>
    re_px = s.c_xp.real  # Re <sigma_Px>
    ncf = N * oc * oc / F
    num = kap + ncf * (eta * oa * im_sx + oa * ob * re_px - (eta * G + ob * ob) * inv)
    den = (1.0 + kap / F * (eta * G + (g0 + eta) * (G + eta) + oa * oa + ob * ob)
           + ncf * (oa * im_sx - (G + eta) * inv))
    if abs(den) < 1e-12:
        raise SingularFormulaError("denominator of the linewidth formula vanishes")
    return abs(num / den)


def lorentzian_spectrum(eigs: EigenSystem, grid: Sequence[float]) -> np.ndarray:
    """S(w) = 2 Re sum_i w_i / (i w - lambda_i) on offsets ``grid`` (rad/s)."""
    if eigs.weights is None:
        raise ValueError("eigen system carries no weights; call with_weights(A0) first")
    if np.any(eigs.lambdas.real > 0):
        raise RegressionError("regression matrix has a growing mode; steady state inconsistent")
    om = np.asarray(grid, dtype=float)
    terms = eigs.weights[None, :] / (1j * om[:, None] - eigs.lambdas[None, :])
    return 2.0 * terms.sum(axis=1).real


def resolvent_spectrum(B: np.ndarray, a0: np.ndarray, grid: Sequence[float]) -> np.ndarray:
    """S(w) = 2 Re [(i w - B)^-1 A(0)]_0, valid without an eigenbasis."""
    eye = np.eye(B.shape[0])
    out = np.empty(len(grid))
    for j, om in enumerate(grid):
        out[j] = 2.0 * np.linalg.solve(1j * om * eye - B, a0)[0].real
    return out


def spectrum(params, steady, grid: Sequence[float]) -> np.ndarray:
    """Regression spectrum; falls back to the resolvent for near-degenerate B."""
    B = build_B(params, steady)
    es = eig_lr(B)
    a0 = initial_vector(steady)
    if es.degenerate:
        return resolvent_spectrum(B, a0, grid)
    return lorentzian_spectrum(es.with_weights(a0), grid)
