"""Four-level Raman-assisted laser: parameters, cumulant state and equations of motion.

Levels are g (1S0), x (3P1, lasing), S (3S1, pumped) and P (3P0, long lived).
All frequencies are angular (rad/s) with hbar = 1. The second-order cumulant
state keeps only the phase-invariant correlators; anything that carries a net
excitation number (such as <a> or <sigma_xg>) vanishes identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

import numpy as np

TWO_PI = 2.0 * math.pi

#: Default lasing wavelength, 88Sr 1S0-3P1 intercombination line.
SR88_WAVELENGTH = 689.449e-9


class BasisError(ValueError):
    """Raised when the dark/bright basis is undefined (zero Raman strength)."""


@dataclass(frozen=True)
class PhysicalParams:
    """Physical parameters, angular frequencies in rad/s.

    Use :meth:`from_hz` to build from linear frequencies.
    """

    n_atoms: float = 1e5
    kappa: float = TWO_PI * 150e3
    gamma0: float = TWO_PI * 7.5e3
    gamma_x: float = TWO_PI * 2.6e6
    gamma_p: float = TWO_PI * 1.8e6
    eta: float = 0.0
    omega_c_rabi: float = TWO_PI * 20e3
    omega_alpha: float = 0.0
    omega_beta: float = 0.0
    delta_c: float = 0.0
    delta_alpha: float = 0.0
    delta_beta: float = 0.0
    lasing_wavelength: float = SR88_WAVELENGTH

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not math.isfinite(v):
                raise ValueError(f"{f.name} must be finite, got {v!r}")
        if self.n_atoms < 1:
            raise ValueError(f"n_atoms must be >= 1, got {self.n_atoms}")
        for name in ("kappa", "gamma0", "gamma_x", "gamma_p", "eta"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.lasing_wavelength <= 0:
            raise ValueError("lasing_wavelength must be > 0")

    @classmethod
    def from_hz(cls, **kw) -> "PhysicalParams":
        """Build from linear frequencies in Hz (every field except n_atoms and
        lasing_wavelength is multiplied by 2*pi)."""
        out = {}
        for k, v in kw.items():
            out[k] = v if k in ("n_atoms", "lasing_wavelength") else TWO_PI * v
        return cls(**out)

    @classmethod
    def raman(cls, strength: float, ratio: float, **kw) -> "PhysicalParams":
        """Parameters with Raman strength sqrt(Oa^2 + Ob^2) and ratio Oa/Ob (rad/s)."""
        ob = strength / math.sqrt(1.0 + ratio * ratio)
        return cls(omega_alpha=ratio * ob, omega_beta=ob, **kw)

    def with_(self, **kw) -> "PhysicalParams":
        return replace(self, **kw)

    @property
    def raman_strength(self) -> float:
        return math.hypot(self.omega_alpha, self.omega_beta)

    @property
    def big_gamma(self) -> float:
        """Total decoherence rate of the S-g coherence, gamma_x + gamma_P + eta."""
        return self.gamma_x + self.gamma_p + self.eta

    @property
    def big_f(self) -> float:
        oa2, ob2 = self.omega_alpha**2, self.omega_beta**2
        g0e = self.gamma0 + self.eta
        return self.eta * oa2 + g0e * (self.eta * self.big_gamma + ob2)

    @property
    def delta_two_photon(self) -> float:
        """Energy of |P> in the rotating frame, delta_alpha - delta_beta."""
        return self.delta_alpha - self.delta_beta

    @property
    def delta_one_photon(self) -> float:
        return self.delta_alpha + self.delta_beta


# Real-vector layout. Complex correlators occupy (re, im) pairs.
REAL_FIELDS = ("n_photon", "s_xx", "s_pp", "s_ss", "p_xx", "p_pp", "p_ss")
COMPLEX_FIELDS = ("c_xg_a", "c_pg_a", "c_sg_a", "s_xp", "s_xs", "s_ps", "c_xp", "c_xs", "c_ps")
LAYOUT = (
    ("n_photon", 0, False),
    ("c_xg_a", 1, True),
    ("c_pg_a", 3, True),
    ("c_sg_a", 5, True),
    ("s_xx", 7, False),
    ("s_xp", 8, True),
    ("s_xs", 10, True),
    ("s_pp", 12, False),
    ("s_ps", 13, True),
    ("s_ss", 15, False),
    ("p_xx", 16, False),
    ("p_pp", 17, False),
    ("p_ss", 18, False),
    ("c_xp", 19, True),
    ("c_xs", 21, True),
    ("c_ps", 23, True),
)
STATE_SIZE = 25


@dataclass(frozen=True)
class MeanFieldState:
    """Second-order cumulant state of the symmetric ensemble.

    ``c_*_a`` are <sigma_mu,g a>, ``s_*`` are two-atom <sigma_mu,g sigma_g,nu>,
    ``p_*`` populations and ``c_xp, c_xs, c_ps`` the single-atom coherences
    <sigma_xP>, <sigma_xS>, <sigma_PS>. <sigma_gg> is implied by closure.
    """

    n_photon: float = 0.0
    c_xg_a: complex = 0j
    c_pg_a: complex = 0j
    c_sg_a: complex = 0j
    s_xx: float = 0.0
    s_xp: complex = 0j
    s_xs: complex = 0j
    s_pp: float = 0.0
    s_ps: complex = 0j
    s_ss: float = 0.0
    p_xx: float = 0.0
    p_pp: float = 0.0
    p_ss: float = 0.0
    c_xp: complex = 0j
    c_xs: complex = 0j
    c_ps: complex = 0j

    @property
    def p_gg(self) -> float:
        return 1.0 - self.p_xx - self.p_pp - self.p_ss

    @property
    def inversion(self) -> float:
        """<sigma_xx - sigma_gg>."""
        return self.p_xx - self.p_gg

    def to_vector(self) -> np.ndarray:
        return pack(self)

    @classmethod
    def from_vector(cls, y) -> "MeanFieldState":
        return unpack(y)

    def check_physical(self, tol: float = 1e-6) -> None:
        """Raise ValueError if populations leave [0, 1] by more than ``tol``."""
        for name in ("p_xx", "p_pp", "p_ss"):
            v = getattr(self, name)
            if not -tol <= v <= 1 + tol:
                raise ValueError(f"{name}={v} outside [0, 1]")
        if not -tol <= self.p_gg <= 1 + tol:
            raise ValueError(f"p_gg={self.p_gg} outside [0, 1]")
        if self.n_photon < -tol:
            raise ValueError(f"n_photon={self.n_photon} is negative")


def pack(state: MeanFieldState) -> np.ndarray:
    y = np.empty(STATE_SIZE)
    for name, i, cplx in LAYOUT:
        v = getattr(state, name)
        if cplx:
            y[i], y[i + 1] = v.real, v.imag
        else:
            y[i] = v
    return y


def unpack(y) -> MeanFieldState:
    y = np.asarray(y, dtype=float)
    if y.shape != (STATE_SIZE,):
        raise ValueError(f"expected a vector of length {STATE_SIZE}, got shape {y.shape}")
    kw = {}
    for name, i, cplx in LAYOUT:
        kw[name] = complex(y[i], y[i + 1]) if cplx else float(y[i])
    return MeanFieldState(**kw)


def ground_state() -> MeanFieldState:
    """All atoms in |g>, cavity in vacuum."""
    return MeanFieldState()


def rhs(y: np.ndarray, p: PhysicalParams) -> np.ndarray:
    """Time derivative of the packed state.

    ``y`` has shape (25,) or (25, k); columns are independent states.
    """
    if np.ndim(y) == 1:
        # python scalars are several times faster than 0-d numpy arithmetic
        y = y.tolist()
    N = p.n_atoms
    kap, g0, gx, gp, eta = p.kappa, p.gamma0, p.gamma_x, p.gamma_p, p.eta
    oc, oa, ob = p.omega_c_rabi, p.omega_alpha, p.omega_beta
    dc, da = p.delta_c, p.delta_alpha
    dp = p.delta_two_photon
    G = p.big_gamma
    ih = 0.5j

    n = y[0]
    cx = y[1] + 1j * y[2]
    cp = y[3] + 1j * y[4]
    cs = y[5] + 1j * y[6]
    sxx = y[7]
    sxp = y[8] + 1j * y[9]
    sxs = y[10] + 1j * y[11]
    spp = y[12]
    sps = y[13] + 1j * y[14]
    sss = y[15]
    pxx, ppp, pss = y[16], y[17], y[18]
    qxp = y[19] + 1j * y[20]
    qxs = y[21] + 1j * y[22]
    qps = y[23] + 1j * y[24]
    pgg = 1.0 - pxx - ppp - pss
    inv = pxx - pgg

    dn = -kap * n - N * oc * cx.imag
    dcx = (-(1j * dc + 0.5 * (g0 + eta + kap)) * cx + ih * oa * cs
           - ih * oc * (pxx + n * inv + (N - 1) * sxx))
    dcp = ((1j * (dp - dc) - 0.5 * (eta + kap)) * cp + ih * ob * cs
           - ih * oc * ((n + 1) * qxp.conjugate() + (N - 1) * sxp.conjugate()))
    dcs = ((1j * (da - dc) - 0.5 * (G + kap)) * cs + ih * oa * cx + ih * ob * cp
           - ih * oc * ((n + 1) * qxs.conjugate() + (N - 1) * sxs.conjugate()))
    dsxx = (-(g0 + eta) * sxx + 2 * (ih * oa * sxs.conjugate()).real
            - oc * cx.imag * inv)
    dsxp = ((-1j * dp - 0.5 * (g0 + 2 * eta)) * sxp + ih * oa * sps.conjugate()
            - ih * ob * sxs + ih * oc * (cx * qxp - cp.conjugate() * inv))
    dsxs = ((-1j * da - 0.5 * (g0 + G + eta)) * sxs + ih * oa * (sss - sxx)
            - ih * ob * sxp - ih * oc * cs.conjugate() * inv + ih * oc * qxs * cx)
    dspp = -eta * spp + 2 * (ih * oc * cp * qxp - ih * ob * sps).real
    dsps = ((1j * (dp - da) - 0.5 * (G + eta)) * sps - ih * oa * sxp.conjugate()
            + ih * ob * (sss - spp)
            + ih * oc * (cp * qxs - qxp.conjugate() * cs.conjugate()))
    dsss = -G * sss + 2 * (ih * oa * sxs + ih * ob * sps + ih * oc * cs * qxs).real
    dpxx = -g0 * pxx + gx * pss + 2 * (-ih * oa * qxs + ih * oc * cx.conjugate()).real
    dppp = gp * pss - 2 * (ih * ob * qps).real
    dpss = -(gx + gp) * pss + eta * pgg + 2 * (ih * oa * qxs + ih * ob * qps).real
    dqxp = ((-1j * dp - 0.5 * g0) * qxp + ih * oa * qps.conjugate() - ih * ob * qxs
            + ih * oc * cp.conjugate())
    dqxs = ((-1j * da - 0.5 * (g0 + gx + gp)) * qxs + ih * oa * (pss - pxx)
            - ih * ob * qxp + ih * oc * cs.conjugate())
    dqps = ((1j * (dp - da) - 0.5 * (gx + gp)) * qps - ih * oa * qxp.conjugate()
            + ih * ob * (pss - ppp))

    out = np.empty((STATE_SIZE,) + np.shape(dn))
    out[0] = dn
    out[1], out[2] = dcx.real, dcx.imag
    out[3], out[4] = dcp.real, dcp.imag
    out[5], out[6] = dcs.real, dcs.imag
    out[7] = dsxx
    out[8], out[9] = dsxp.real, dsxp.imag
    out[10], out[11] = dsxs.real, dsxs.imag
    out[12] = dspp
    out[13], out[14] = dsps.real, dsps.imag
    out[15] = dsss
    out[16], out[17], out[18] = dpxx, dppp, dpss
    out[19], out[20] = dqxp.real, dqxp.imag
    out[21], out[22] = dqxs.real, dqxs.imag
    out[23], out[24] = dqps.real, dqps.imag
    return out


def derivative(state: MeanFieldState, params: PhysicalParams) -> MeanFieldState:
    """d/dt of every stored correlator, returned in the same container."""
    for name, _, _ in LAYOUT:
        v = getattr(state, name)
        if not (math.isfinite(v.real) and math.isfinite(v.imag)):
            raise ValueError(f"state field {name} is not finite: {v!r}")
    return unpack(rhs(pack(state), params))


@dataclass(frozen=True)
class DarkBrightObservables:
    pop_dark: float
    pop_bright: float
    coh_bd: complex
    c_bd: float


def dark_bright_transform(state: MeanFieldState, params: PhysicalParams) -> DarkBrightObservables:
    """Rotate the {x, P} block into the dark/bright basis.

    |D> = (Ob|x> - Oa|P>)/O and |B> = (Oa|x> + Ob|P>)/O with O the Raman strength.
    """
    oa, ob = params.omega_alpha, params.omega_beta
    o2 = oa * oa + ob * ob
    if o2 == 0.0:
        raise BasisError("dark/bright basis undefined for zero Raman strength")
    pxx, ppp, cxp = state.p_xx, state.p_pp, state.c_xp
    cross = oa * ob * 2.0 * cxp.real
    dd = (ob * ob * pxx - cross + oa * oa * ppp) / o2
    bb = (oa * oa * pxx + cross + ob * ob * ppp) / o2
    bd = (oa * ob * (pxx - ppp) - oa * oa * cxp + ob * ob * cxp.conjugate()) / o2
    total = dd + bb
    c_bd = abs(bd) / total if total > 0 else math.inf
    return DarkBrightObservables(dd, bb, complex(bd), c_bd)


def tlm_reduce(params: PhysicalParams, variant: str = "dark"):
    """Project the four-level model onto a three-level model (g, D or B, S)."""
    from .tlm import TlmParams

    oa, ob = params.omega_alpha, params.omega_beta
    o2 = oa * oa + ob * ob
    if o2 == 0.0:
        raise BasisError("three-level reduction undefined for zero Raman strength")
    o = math.sqrt(o2)
    gx, gp, g0 = params.gamma_x, params.gamma_p, params.gamma0
    if variant == "dark":
        decay_se = (oa * oa * gp + ob * ob * gx) / o2
        decay_eg = ob * ob * g0 / o2
        coupling = ob * params.omega_c_rabi / o
        coherent = 0.0
    elif variant == "bright":
        decay_se = (ob * ob * gp + oa * oa * gx) / o2
        decay_eg = oa * oa * g0 / o2
        coupling = oa * params.omega_c_rabi / o
        coherent = o
    else:
        raise ValueError(f"variant must be 'dark' or 'bright', got {variant!r}")
    return TlmParams(
        n_atoms=params.n_atoms,
        kappa=params.kappa,
        eta=params.eta,
        decay_se=decay_se,
        decay_eg=decay_eg,
        cavity_coupling=coupling,
        coherent_coupling=coherent,
        delta_c=params.delta_c,
        lasing_wavelength=params.lasing_wavelength,
    )
