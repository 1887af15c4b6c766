"""Steady states: stiff time marching, Newton polishing and pump sweeps."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import singledispatch
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .model import STATE_SIZE, MeanFieldState, PhysicalParams, rhs, unpack
from .tlm import TLM_SIZE, TlmParams, TlmState, tlm_rhs

log = logging.getLogger(__name__)

TOL_SS = 1e-9
RTOL = 1e-10
ATOL = 1e-14
N_THRESHOLD = 10.0
_METHOD = "Radau"


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class System:
    """A closed set of real-valued moment equations."""

    size: int
    f: Callable[[np.ndarray], np.ndarray]
    kappa: float
    to_state: Callable[[np.ndarray], object]
    # indices of populations used for the closure-bound check
    populations: tuple = ()


@singledispatch
def as_system(params) -> System:
    raise TypeError(f"no moment system for {type(params).__name__}")


@as_system.register
def _(params: PhysicalParams) -> System:
    return System(STATE_SIZE, lambda y: rhs(y, params), params.kappa, unpack, (16, 17, 18))


@as_system.register
def _(params: TlmParams) -> System:
    return System(TLM_SIZE, lambda y: tlm_rhs(y, params), params.kappa,
                  TlmState.from_vector, (9, 10))


def jacobian(f: Callable, y: np.ndarray) -> np.ndarray:
    """Central-difference Jacobian.

    The moment equations are at most quadratic, so central differences carry
    no truncation error and only roundoff limits the step.
    """
    n = y.size
    h = 1e-3 * np.maximum(np.abs(y), 1.0)
    cols = np.empty((n, 2 * n))
    cols[:] = y[:, None]
    idx = np.arange(n)
    cols[idx, idx] += h
    cols[idx, n + idx] -= h
    fy = f(cols)
    return (fy[:, :n] - fy[:, n:]) / (2.0 * h)


def weights(y: np.ndarray) -> np.ndarray:
    return 1.0 / np.maximum(np.abs(y), 1.0)


def residual_norm(sys: System, y: np.ndarray) -> float:
    """Weighted 2-norm of the time derivative, in 1/s."""
    return float(np.linalg.norm(sys.f(y) * weights(y)))


def is_stable(sys: System, y: np.ndarray, margin: float = 1e-9) -> bool:
    ev = np.linalg.eigvals(jacobian(sys.f, y))
    return bool(ev.real.max() < margin * sys.kappa)


def newton(sys: System, y0: np.ndarray, tol: float = TOL_SS, max_iter: int = 40):
    """Damped Newton on f(y) = 0. Returns (y, converged)."""
    y = y0.copy()
    scale = sys.kappa
    r = residual_norm(sys, y) / scale
    for _ in range(max_iter):
        if r < tol * 1e-3:
            return y, True
        J = jacobian(sys.f, y)
        try:
            dy = np.linalg.solve(J, -sys.f(y))
        except np.linalg.LinAlgError:
            return y, False
        if not np.all(np.isfinite(dy)):
            return y, False
        lam = 1.0
        while lam > 1e-4:
            y_new = y + lam * dy
            r_new = residual_norm(sys, y_new) / scale
            if r_new < r or r_new < tol * 1e-3:
                break
            lam *= 0.5
        else:
            return y, r < tol
        step = np.max(np.abs(lam * dy) * weights(y))
        y, r = y_new, r_new
        if step < 1e-14:
            break
    return y, r < tol


@dataclass(frozen=True)
class SteadyState:
    state: object
    residual_norm: float
    elapsed_model_time: float
    method: str
    converged: bool
    vector: np.ndarray = field(repr=False, compare=False)
    #: linear stability of the returned point (None when not assessed)
    stable: Optional[bool] = None
    #: physical but linearly unstable fixed point the march circles around
    fixed_point: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    @property
    def n_photon(self) -> float:
        return self.state.n_photon


def _physical(sys: System, y: np.ndarray, tol: float = 1e-6) -> bool:
    if y[0] < -tol:
        return False
    pops = y[list(sys.populations)]
    return bool(np.all(pops >= -tol) and np.all(pops <= 1 + tol) and pops.sum() <= 1 + tol)


def _as_vector(init, size: int) -> np.ndarray:
    if init is None:
        return np.zeros(size)
    if isinstance(init, SteadyState):
        return init.vector.copy()
    if hasattr(init, "to_vector"):
        return init.to_vector()
    y = np.asarray(init, dtype=float).copy()
    if y.shape != (size,):
        raise ValueError(f"initial state must have {size} entries")
    return y


def find_steady(params, init=None, tol_ss: float = TOL_SS, *, rtol: float = RTOL,
                atol: float = ATOL, t_max: Optional[float] = None,
                use_newton: bool = True) -> SteadyState:
    """March the moment equations to a steady state.

    Integration proceeds in geometrically growing chunks with an implicit
    (Radau) integrator. After each chunk a Newton polish is attempted; it is
    accepted only if it lands on a physical, linearly stable fixed point close
    to the marched state. The result is flagged unconverged if the weighted
    residual times 1/kappa never drops below ``tol_ss`` before ``t_max``.

    If Newton keeps returning the same physical but linearly unstable fixed
    point while the march fails to approach it (self-oscillation), the march
    stops early: the result is unconverged and carries that point in
    ``fixed_point``.
    """
    sys = as_system(params)
    if not sys.kappa > 0:
        raise ValueError("steady states need a lossy cavity (kappa > 0)")
    y = _as_vector(init, sys.size)
    if not np.all(np.isfinite(y)):
        raise ValueError("initial state is not finite")
    if not _physical(sys, y):
        raise ValueError("initial state violates population bounds")
    slowest = _slowest_rate(params)
    if t_max is None:
        t_max = 400.0 / slowest
    t = 0.0
    r = residual_norm(sys, y) / sys.kappa
    if r < tol_ss:
        return SteadyState(sys.to_state(y), r * sys.kappa, 0.0, "march", True, y)

    def jac(_t, yy):
        return jacobian(sys.f, yy)

    def fun(_t, yy):
        return sys.f(yy)

    chunk = 2.0 / sys.kappa
    unstable_fp, dists = None, []
    while t < t_max:
        if use_newton:
            yn, ok = newton(sys, y, tol_ss)
            if ok and _physical(sys, yn):
                if is_stable(sys, yn):
                    if np.max(np.abs(yn - y) * weights(y)) < 0.05:
                        rn = residual_norm(sys, yn) / sys.kappa
                        return SteadyState(sys.to_state(yn), rn * sys.kappa, t,
                                           "march+newton", True, yn, stable=True)
                    unstable_fp, dists = None, []
                else:
                    same = (unstable_fp is not None
                            and np.max(np.abs(yn - unstable_fp) * weights(yn)) < 1e-6)
                    if not same:
                        dists = []
                    unstable_fp = yn
                    dists.append(float(np.max(np.abs(y - yn) * weights(yn))))
                    if _self_oscillating(dists, t * sys.kappa):
                        log.info("march self-oscillates around an unstable fixed point")
                        r = residual_norm(sys, y) / sys.kappa
                        return SteadyState(sys.to_state(y), r * sys.kappa, t, "march", False,
                                           y, stable=False, fixed_point=yn)
        sol = solve_ivp(fun, (0.0, chunk), y, method=_METHOD, jac=jac, rtol=rtol,
                        atol=atol)
        if not sol.success:
            log.warning("integrator failed: %s", sol.message)
            break
        y = sol.y[:, -1]
        t += chunk
        r = residual_norm(sys, y) / sys.kappa
        if r < tol_ss:
            return SteadyState(sys.to_state(y), r * sys.kappa, t, "march", True, y)
        chunk *= 2.0
    r = residual_norm(sys, y) / sys.kappa
    return SteadyState(sys.to_state(y), r * sys.kappa, t, "march", r < tol_ss, y,
                       fixed_point=unstable_fp)


def _self_oscillating(dists: list, kappa_t: float, repeats: int = 4,
                      min_kappa_t: float = 1000.0) -> bool:
    """The march keeps circling one unstable fixed point: Newton has returned
    the same point ``repeats`` times, the march has run for ``min_kappa_t``
    cavity lifetimes, and the distance to the point is not steadily growing
    (which would mean the march is escaping to another attractor)."""
    if len(dists) < repeats or kappa_t < min_kappa_t:
        return False
    tail = dists[-repeats:]
    return not all(b > a for a, b in zip(tail, tail[1:]))


def branch_step(params, init, tol_ss: float = TOL_SS) -> SteadyState:
    """Fixed point on the branch through ``init`` regardless of its stability.

    Newton from ``init``; if that fails, march and fall back on the unstable
    fixed point the march circles around. ``stable`` reports linear stability.
    """
    sys = as_system(params)
    if init is not None:
        y0 = _as_vector(init, sys.size)
        yn, ok = newton(sys, y0, tol_ss)
        if ok and _physical(sys, yn):
            rn = residual_norm(sys, yn)
            return SteadyState(sys.to_state(yn), rn, 0.0, "newton", True, yn,
                               stable=is_stable(sys, yn))
    ss = find_steady(params, init, tol_ss)
    if ss.converged:
        return ss
    if ss.fixed_point is not None:
        y = ss.fixed_point
        return SteadyState(sys.to_state(y), residual_norm(sys, y), ss.elapsed_model_time,
                           "march+newton", True, y, stable=False)
    return ss


def _slowest_rate(params) -> float:
    if isinstance(params, PhysicalParams):
        rates = [params.gamma0, params.eta, params.kappa]
    else:
        rates = [params.decay_eg, params.eta, params.kappa]
    pos = [r for r in rates if r > 0]
    return min(pos) if pos else params.kappa


@dataclass(frozen=True)
class SweepRow:
    eta: float
    n_photon_s: float
    power_w: float
    converged: bool
    direction: str
    steady: SteadyState = field(repr=False, compare=False)
    linewidth: Optional[float] = None
    c_bd: Optional[float] = None


def sweep_eta(params, eta_grid: Sequence[float], direction: str = "up",
              continuation: bool = True, tol_ss: float = TOL_SS,
              mode: str = "march") -> list:
    """Steady states along a pump grid.

    ``eta_grid`` must be ascending; ``direction='down'`` traverses it from the
    top. With continuation each point starts from the previous converged state,
    the first from the ground-state vacuum. Rows are returned in traversal order.

    ``mode='branch'`` follows the fixed-point branch by Newton continuation
    (see :func:`branch_step`) and keeps linearly unstable points, flagged via
    ``steady.stable``; ``mode='march'`` reports only dynamically reached states.
    """
    from .observables import power_watts

    grid = np.asarray(eta_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("eta_grid must be a nonempty 1-D sequence")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("eta_grid must be strictly ascending")
    if direction not in ("up", "down"):
        raise ValueError("direction must be 'up' or 'down'")
    if mode not in ("march", "branch"):
        raise ValueError("mode must be 'march' or 'branch'")
    order = grid if direction == "up" else grid[::-1]
    rows = []
    prev = None
    for eta in order:
        p = params.with_(eta=float(eta))
        init = prev if continuation else None
        ss = branch_step(p, init, tol_ss) if mode == "branch" else find_steady(p, init, tol_ss)
        if ss.converged:
            prev = ss
        power = power_watts(ss, p) if ss.converged else math.nan
        rows.append(SweepRow(float(eta), ss.n_photon, power, ss.converged, direction, ss))
    return rows


def _n_at(params, eta, init, tol_ss):
    return find_steady(params.with_(eta=eta), init, tol_ss)


def threshold(params, eta_grid: Sequence[float], n_thr: float = N_THRESHOLD,
              rows: Optional[list] = None, rel_width: float = 1e-3,
              tol_ss: float = TOL_SS) -> list:
    """Pump values where the steady photon number crosses ``n_thr``.

    Crossings are bracketed on the (up-sweep) grid and refined by bisection in
    log(eta) until the bracket is narrower than ``rel_width`` relative.
    Unconverged rows never form a bracket.
    """
    if rows is None:
        rows = sweep_eta(params, eta_grid, "up", tol_ss=tol_ss)
    out = []
    for a, b in zip(rows[:-1], rows[1:]):
        if not (a.converged and b.converged):
            continue
        below_a, below_b = a.n_photon_s < n_thr, b.n_photon_s < n_thr
        if below_a == below_b:
            continue
        lo, hi = a.eta, b.eta
        init_lo = a.steady
        while (hi - lo) > rel_width * lo:
            mid = math.sqrt(lo * hi) if lo > 0 else 0.5 * (lo + hi)
            ss = _n_at(params, mid, init_lo, tol_ss)
            if not ss.converged:
                break
            if (ss.n_photon < n_thr) == below_a:
                lo, init_lo = mid, ss
            else:
                hi = mid
        out.append(math.sqrt(lo * hi) if lo > 0 else 0.5 * (lo + hi))
    return out


def hysteresis_intervals(up: list, down: list, factor: float = 10.0) -> list:
    """Pump intervals where up and down branches differ by more than ``factor``
    in photon number. Returns a list of (eta_lo, eta_hi)."""
    d = {r.eta: r for r in down}
    flags = []
    for r in up:
        o = d.get(r.eta)
        if o is None or not (r.converged and o.converged):
            flags.append((r.eta, False))
            continue
        a, b = max(r.n_photon_s, 1e-30), max(o.n_photon_s, 1e-30)
        flags.append((r.eta, max(a / b, b / a) > factor))
    out = []
    start = None
    last = None
    for eta, f in flags:
        if f and start is None:
            start = eta
        if not f and start is not None:
            out.append((start, last))
            start = None
        last = eta
    if start is not None:
        out.append((start, last))
    return out
