import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from cumulant_oracle import FourLevelOracle
from superlase.model import (LAYOUT, STATE_SIZE, TWO_PI, BasisError, MeanFieldState,
                             PhysicalParams, dark_bright_transform, derivative, ground_state,
                             pack, rhs, tlm_reduce, unpack)


def random_params(rng):
    return PhysicalParams(
        n_atoms=float(rng.integers(2, 50)), kappa=rng.uniform(0.5, 2), gamma0=rng.uniform(0, 1),
        gamma_x=rng.uniform(0, 2), gamma_p=rng.uniform(0, 2), eta=rng.uniform(0, 1),
        omega_c_rabi=rng.uniform(0, 2), omega_alpha=rng.uniform(-2, 2),
        omega_beta=rng.uniform(-2, 2), delta_c=rng.uniform(-1, 1),
        delta_alpha=rng.uniform(-1, 1), delta_beta=rng.uniform(-1, 1))


def random_state(rng):
    pops = rng.dirichlet(np.ones(4))
    y = rng.normal(scale=0.3, size=STATE_SIZE)
    y[0] = rng.uniform(0, 5)
    y[16], y[17], y[18] = pops[1:]
    return unpack(y)


class TestParams:
    def test_from_hz_scales_rates_not_atoms(self):
        p = PhysicalParams.from_hz(kappa=150e3, n_atoms=10)
        assert p.kappa == pytest.approx(TWO_PI * 150e3)
        assert p.n_atoms == 10

    def test_raman_strength_and_ratio(self):
        p = PhysicalParams.raman(5.0, 2.0)
        assert p.raman_strength == pytest.approx(5.0)
        assert p.omega_alpha / p.omega_beta == pytest.approx(2.0)

    def test_derived_rates(self):
        p = PhysicalParams(gamma_x=1.0, gamma_p=2.0, eta=0.5, gamma0=0.1, omega_alpha=3.0,
                           omega_beta=4.0)
        assert p.big_gamma == 3.5
        assert p.big_f == pytest.approx(0.5 * 9 + 0.6 * (0.5 * 3.5 + 16))

    @pytest.mark.parametrize("field,value", [("kappa", -1.0), ("n_atoms", 0.5),
                                             ("eta", math.nan), ("lasing_wavelength", 0.0)])
    def test_invalid(self, field, value):
        with pytest.raises(ValueError):
            PhysicalParams(**{field: value})


class TestState:
    def test_pack_roundtrip(self):
        rng = np.random.default_rng(0)
        s = random_state(rng)
        assert unpack(pack(s)) == s
        assert STATE_SIZE == 25

    def test_closure(self):
        s = MeanFieldState(p_xx=0.2, p_pp=0.3, p_ss=0.1)
        assert s.p_gg == pytest.approx(0.4)
        assert s.inversion == pytest.approx(-0.2)

    def test_check_physical(self):
        MeanFieldState(p_xx=1.0).check_physical()
        with pytest.raises(ValueError):
            MeanFieldState(p_xx=0.7, p_pp=0.5).check_physical()

    def test_unpack_rejects_bad_shape(self):
        with pytest.raises(ValueError):
            unpack(np.zeros(26))

    def test_derivative_rejects_non_finite(self):
        with pytest.raises(ValueError, match="s_xp"):
            derivative(MeanFieldState(s_xp=complex(math.inf, 0)), PhysicalParams())


@pytest.mark.property
class TestEquations:
    def test_ground_vacuum_is_fixed_point(self):
        p = PhysicalParams.raman(TWO_PI * 3e6, 3.0, eta=0.0, delta_c=1.0, delta_alpha=2.0)
        assert np.all(rhs(pack(ground_state()), p) == 0.0)

    def test_pure_decay(self):
        a, b = 3.0, 5.0
        p = PhysicalParams(gamma_x=a, gamma_p=b, omega_c_rabi=0.0)
        d = derivative(MeanFieldState(p_ss=1.0), p)
        assert d.p_xx == pytest.approx(a)
        assert d.p_pp == pytest.approx(b)
        assert d.p_ss == pytest.approx(-(a + b))
        assert d.n_photon == 0 and d.c_xg_a == 0 and d.c_sg_a == 0

    def test_matches_symbolic_oracle(self):
        rng = np.random.default_rng(7)
        worst = 0.0
        for _ in range(1000):
            p = random_params(rng)
            s = random_state(rng)
            got = derivative(s, p)
            ref = FourLevelOracle(p).derivative(s)
            for name, _, _ in LAYOUT:
                a, b = getattr(got, name), ref[name]
                worst = max(worst, abs(a - b) / max(1.0, abs(b)))
        assert worst < 1e-12

    def test_vectorised_columns(self):
        rng = np.random.default_rng(3)
        p = random_params(rng)
        Y = rng.normal(size=(STATE_SIZE, 6))
        out = rhs(Y, p)
        for k in range(6):
            np.testing.assert_allclose(out[:, k], rhs(Y[:, k], p), rtol=1e-14, atol=1e-14)

    def test_realness_preserved(self):
        """Shadow integration with every field complex: the real-typed fields
        must stay real. The oracle evaluates the equations without assuming
        realness, so imaginary parts would grow if a term were mis-signed."""
        rng = np.random.default_rng(11)
        p = random_params(rng)
        oracle = FourLevelOracle(p)
        s0 = random_state(rng)
        names = [n for n, _, _ in LAYOUT]

        def f(_t, z):
            st = MeanFieldState(**dict(zip(names, z)))
            d = oracle.derivative(st)
            return np.array([d[n] for n in names], dtype=complex)

        z0 = np.array([getattr(s0, n) for n in names], dtype=complex)
        sol = solve_ivp(f, (0, 2.0), z0, rtol=1e-10, atol=1e-12)
        zt = sol.y[:, -1]
        for n, v in zip(names, zt):
            if n in ("n_photon", "s_xx", "s_pp", "s_ss", "p_xx", "p_pp", "p_ss"):
                assert abs(v.imag) <= 1e-10 * max(abs(v), 1.0), n

    def test_trap_state_rate_limit(self):
        """Without couplings the pump feeds S, which empties into x and P; x
        decays to g and P is dark, so every atom ends up in P."""
        from superlase.steady import find_steady

        p = PhysicalParams(eta=2.0, gamma0=1.0, gamma_x=3.0, gamma_p=1.5, kappa=5.0,
                           omega_c_rabi=0.0)
        gx, gp, g0, eta = p.gamma_x, p.gamma_p, p.gamma0, p.eta
        y0 = pack(ground_state())
        t_end = 3.0
        sol = solve_ivp(lambda t, y: rhs(y, p), (0, t_end), y0, method="Radau",
                        rtol=1e-10, atol=1e-13, dense_output=True)
        # linear rate equations for (g, x, S, P)
        M = np.array([[-eta, g0, 0, 0], [0, -g0, gx, 0], [eta, 0, -gx - gp, 0],
                      [0, 0, gp, 0]])
        w, V = np.linalg.eig(M)
        for t in (0.3, 1.0, t_end):
            pops = (V @ np.diag(np.exp(w * t)) @ np.linalg.solve(V, [1, 0, 0, 0])).real
            y = sol.sol(t)
            np.testing.assert_allclose([y[16], y[18], y[17]], pops[[1, 2, 3]], atol=1e-8)
        ss = find_steady(p)
        assert ss.state.p_pp == pytest.approx(1.0, abs=1e-6)


class TestDarkBright:
    @staticmethod
    def conjugated(state, oa, ob):
        """Brute force: rotate the 2x2 {x, P} density block."""
        rho = np.array([[state.p_xx, np.conj(state.c_xp)], [state.c_xp, state.p_pp]])
        o = math.hypot(oa, ob)
        D = np.array([ob, -oa]) / o
        B = np.array([oa, ob]) / o
        return (D @ rho @ D).real, (B @ rho @ B).real, D @ rho @ B

    def test_bare_limit(self):
        s = MeanFieldState(p_xx=0.2, p_pp=0.1, c_xp=0.05 + 0.02j)
        db = dark_bright_transform(s, PhysicalParams(omega_alpha=0.0, omega_beta=1.0))
        assert db.pop_dark == pytest.approx(0.2)
        assert db.pop_bright == pytest.approx(0.1)
        assert db.coh_bd == pytest.approx(np.conj(0.05 + 0.02j))

    def test_equal_rabi_example(self):
        s = MeanFieldState(p_xx=0.3, p_pp=0.3, c_xp=0.1)
        db = dark_bright_transform(s, PhysicalParams(omega_alpha=2.0, omega_beta=2.0))
        assert db.pop_dark == pytest.approx(0.2)
        assert db.pop_bright == pytest.approx(0.4)
        assert abs(db.coh_bd) < 1e-15

    def test_generic_against_conjugation(self):
        s = MeanFieldState(p_xx=0.2, p_pp=0.1, c_xp=0.05 + 0.02j)
        p = PhysicalParams.raman(1.0, math.sqrt(10))
        db = dark_bright_transform(s, p)
        dd, bb, bd = self.conjugated(s, p.omega_alpha, p.omega_beta)
        assert abs(db.pop_dark - dd) < 1e-14
        assert abs(db.pop_bright - bb) < 1e-14
        assert abs(db.coh_bd - bd) < 1e-14

    def test_trace_and_cbd_formula(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            s = MeanFieldState(p_xx=rng.uniform(0, .5), p_pp=rng.uniform(0, .5),
                               c_xp=complex(*rng.normal(scale=0.1, size=2)))
            p = PhysicalParams(omega_alpha=rng.normal(), omega_beta=rng.normal())
            db = dark_bright_transform(s, p)
            assert db.pop_dark + db.pop_bright == pytest.approx(s.p_xx + s.p_pp, abs=1e-12)
            assert db.c_bd == pytest.approx(abs(db.coh_bd) / (s.p_xx + s.p_pp))

    def test_cbd_with_equal_rabi_and_no_coherence(self):
        # sigma_BD = (p_xx - p_pp)/2 when the two Rabi frequencies are equal
        s = MeanFieldState(p_xx=0.25, p_pp=0.05)
        db = dark_bright_transform(s, PhysicalParams(omega_alpha=1.0, omega_beta=1.0))
        assert db.c_bd == pytest.approx(abs(0.25 - 0.05) / (2 * 0.3))

    def test_zero_strength_rejected(self):
        with pytest.raises(BasisError):
            dark_bright_transform(MeanFieldState(), PhysicalParams())


class TestTlmReduce:
    def test_dark_example(self):
        p = PhysicalParams.raman(TWO_PI * 1e6, math.sqrt(10))
        t = tlm_reduce(p, "dark")
        assert t.decay_se == pytest.approx(TWO_PI * 1.8727272727e6, rel=1e-9)
        assert t.decay_eg == pytest.approx(p.gamma0 / 11)
        assert t.cavity_coupling == pytest.approx(p.omega_c_rabi / math.sqrt(11))
        assert t.coherent_coupling == 0.0

    def test_dark_collapses_to_x(self):
        p = PhysicalParams(omega_alpha=0.0, omega_beta=3.0)
        t = tlm_reduce(p, "dark")
        assert (t.decay_se, t.decay_eg, t.cavity_coupling) == pytest.approx(
            (p.gamma_x, p.gamma0, p.omega_c_rabi))

    def test_bright_collapses_to_x(self):
        p = PhysicalParams(omega_alpha=3.0, omega_beta=0.0)
        t = tlm_reduce(p, "bright")
        assert (t.decay_se, t.decay_eg, t.cavity_coupling, t.coherent_coupling) == \
            pytest.approx((p.gamma_x, p.gamma0, p.omega_c_rabi, 3.0))

    def test_errors(self):
        with pytest.raises(BasisError):
            tlm_reduce(PhysicalParams(), "dark")
        with pytest.raises(ValueError):
            tlm_reduce(PhysicalParams(omega_beta=1.0), "grey")
