"""Reduced three-level lasing model (g, lasing level e, pumped level S).

Used to compare the four-level system against its dark-state or
bright-state projection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .model import SR88_WAVELENGTH


@dataclass(frozen=True)
class TlmParams:
    n_atoms: float
    kappa: float
    eta: float
    decay_se: float
    decay_eg: float
    cavity_coupling: float
    coherent_coupling: float = 0.0
    delta_c: float = 0.0
    lasing_wavelength: float = SR88_WAVELENGTH

    def __post_init__(self):
        for name in ("kappa", "eta", "decay_se", "decay_eg"):
            v = getattr(self, name)
            if not v >= 0 or not math.isfinite(v):
                raise ValueError(f"{name} must be a finite rate >= 0, got {v}")
        if self.n_atoms < 1:
            raise ValueError("n_atoms must be >= 1")

    def with_(self, **kw) -> "TlmParams":
        return replace(self, **kw)

    @property
    def big_gamma(self) -> float:
        return self.decay_se + self.eta


TLM_LAYOUT = (
    ("n_photon", 0, False),
    ("c_eg_a", 1, True),
    ("c_sg_a", 3, True),
    ("s_ee", 5, False),
    ("s_es", 6, True),
    ("s_ss", 8, False),
    ("p_ee", 9, False),
    ("p_ss", 10, False),
    ("c_es", 11, True),
)
TLM_SIZE = 13


@dataclass(frozen=True)
class TlmState:
    n_photon: float = 0.0
    c_eg_a: complex = 0j
    c_sg_a: complex = 0j
    s_ee: float = 0.0
    s_es: complex = 0j
    s_ss: float = 0.0
    p_ee: float = 0.0
    p_ss: float = 0.0
    c_es: complex = 0j

    @property
    def p_gg(self) -> float:
        return 1.0 - self.p_ee - self.p_ss

    @property
    def inversion(self) -> float:
        return self.p_ee - self.p_gg

    def to_vector(self) -> np.ndarray:
        y = np.empty(TLM_SIZE)
        for name, i, cplx in TLM_LAYOUT:
            v = getattr(self, name)
            if cplx:
                y[i], y[i + 1] = v.real, v.imag
            else:
                y[i] = v
        return y

    @classmethod
    def from_vector(cls, y) -> "TlmState":
        y = np.asarray(y, dtype=float)
        if y.shape != (TLM_SIZE,):
            raise ValueError(f"expected a vector of length {TLM_SIZE}")
        return cls(**{name: complex(y[i], y[i + 1]) if c else float(y[i])
                      for name, i, c in TLM_LAYOUT})

    def check_physical(self, tol: float = 1e-6) -> None:
        for name, v in (("p_ee", self.p_ee), ("p_ss", self.p_ss), ("p_gg", self.p_gg)):
            if not -tol <= v <= 1 + tol:
                raise ValueError(f"{name}={v} outside [0, 1]")
        if self.n_photon < -tol:
            raise ValueError(f"n_photon={self.n_photon} is negative")


def tlm_rhs(y: np.ndarray, t: TlmParams) -> np.ndarray:
    """Cumulant equations of the three-level model; ``y`` is (13,) or (13, k)."""
    if np.ndim(y) == 1:
        y = y.tolist()
    N, kap, eta = t.n_atoms, t.kappa, t.eta
    gse, geg = t.decay_se, t.decay_eg
    g, om, dc = t.cavity_coupling, t.coherent_coupling, t.delta_c
    G = t.big_gamma
    ih = 0.5j

    n = y[0]
    ce = y[1] + 1j * y[2]
    cs = y[3] + 1j * y[4]
    see = y[5]
    ses = y[6] + 1j * y[7]
    sss = y[8]
    pee, pss = y[9], y[10]
    qes = y[11] + 1j * y[12]
    inv = pee - (1.0 - pee - pss)
    pgg = 1.0 - pee - pss

    dn = -kap * n - N * g * ce.imag
    dce = (-(1j * dc + 0.5 * (geg + eta + kap)) * ce + ih * om * cs
           - ih * g * (pee + n * inv + (N - 1) * see))
    dcs = ((-1j * dc - 0.5 * (G + kap)) * cs + ih * om * ce
           - ih * g * ((n + 1) * qes.conjugate() + (N - 1) * ses.conjugate()))
    dsee = -(geg + eta) * see + 2 * (ih * om * ses.conjugate()).real - g * ce.imag * inv
    dses = (-0.5 * (geg + G + eta) * ses + ih * om * (sss - see)
            - ih * g * cs.conjugate() * inv + ih * g * qes * ce)
    dsss = -G * sss + 2 * (ih * om * ses + ih * g * cs * qes).real
    dpee = -geg * pee + gse * pss + 2 * (-ih * om * qes + ih * g * ce.conjugate()).real
    dpss = -gse * pss + eta * pgg + 2 * (ih * om * qes).real
    dqes = -0.5 * (geg + gse) * qes + ih * om * (pss - pee) + ih * g * cs.conjugate()

    out = np.empty((TLM_SIZE,) + np.shape(dn))
    out[0] = dn
    out[1], out[2] = dce.real, dce.imag
    out[3], out[4] = dcs.real, dcs.imag
    out[5] = dsee
    out[6], out[7] = dses.real, dses.imag
    out[8] = dsss
    out[9], out[10] = dpee, dpss
    out[11], out[12] = dqes.real, dqes.imag
    return out


def tlm_regression_matrix(t: TlmParams, s: TlmState) -> np.ndarray:
    """3x3 regression generator for [a^dag(t)a(0), sigma_eg(t)a(0), sigma_Sg(t)a(0)]."""
    g, om, N = t.cavity_coupling, t.coherent_coupling, t.n_atoms
    return -0.5 * np.array([
        [-2j * t.delta_c + t.kappa, -1j * N * g, 0.0],
        [1j * g * s.inversion, t.decay_eg + t.eta, -1j * om],
        [1j * g * s.c_es.conjugate(), -1j * om, t.big_gamma],
    ], dtype=complex)
