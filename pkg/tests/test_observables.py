import math

import numpy as np
import pytest

from superlase.model import TWO_PI, MeanFieldState, PhysicalParams, tlm_reduce
from superlase.observables import (PullingError, UndefinedMeasureError, coherence_cbd,
                                   detuned, lasing_offset, power_watts, pulling_coefficient,
                                   pulling_report, tlm_simulate)
from superlase.steady import SteadyState, find_steady


def fake_steady(n):
    return SteadyState(MeanFieldState(n_photon=n), 0.0, 0.0, "march", True, None)


@pytest.fixture(scope="module")
def pulling_point():
    return PhysicalParams.raman(TWO_PI * math.sqrt(10) * 1e6, 10.0, eta=TWO_PI * 5e3)


@pytest.fixture(scope="module")
def pulling_steady(pulling_point):
    return find_steady(pulling_point)


class TestPower:
    p = PhysicalParams()

    def test_zero_photons(self):
        assert power_watts(fake_steady(0.0), self.p) == 0.0

    @pytest.mark.parametrize("n,watts", [(1e3, 2.7e-10), (10.0, 2.7e-12)])
    def test_scale(self, n, watts):
        assert power_watts(fake_steady(n), self.p) == pytest.approx(watts, rel=0.02)

    def test_linear(self):
        a = power_watts(fake_steady(3.0), self.p)
        assert power_watts(fake_steady(6.0), self.p) == 2 * a

    def test_unconverged_rejected(self):
        s = SteadyState(MeanFieldState(n_photon=1.0), 1.0, 0.0, "march", False, None)
        with pytest.raises(ValueError):
            power_watts(s, self.p)


class TestDetuningChannels:
    p = PhysicalParams(delta_alpha=0.1, delta_beta=0.2)

    def test_one_photon_keeps_two_photon(self):
        q = detuned(self.p, "one_photon", 1.0)
        assert q.delta_one_photon - self.p.delta_one_photon == pytest.approx(1.0)
        assert q.delta_two_photon == pytest.approx(self.p.delta_two_photon)

    def test_two_photon_keeps_one_photon(self):
        q = detuned(self.p, "two_photon", 1.0)
        assert q.delta_two_photon - self.p.delta_two_photon == pytest.approx(1.0)
        assert q.delta_one_photon == pytest.approx(self.p.delta_one_photon)

    def test_unknown_channel(self):
        with pytest.raises(ValueError):
            detuned(self.p, "three_photon", 1.0)


class TestPulling:
    def test_resonant_offset_is_zero(self, pulling_point, pulling_steady):
        assert abs(lasing_offset(pulling_point, pulling_steady)) < TWO_PI * 1e-6

    def test_two_photon_one_sided_estimates_agree(self, pulling_point, pulling_steady):
        h = TWO_PI * 10.0
        plus = lasing_offset(detuned(pulling_point, "two_photon", h), pulling_steady) / h
        minus = -lasing_offset(detuned(pulling_point, "two_photon", -h), pulling_steady) / h
        assert abs(plus) == pytest.approx(abs(minus), rel=0.01)

    def test_report(self, pulling_point, pulling_steady):
        rep = pulling_report(pulling_point, steady=pulling_steady)
        assert rep.c_p_two_photon == pytest.approx(1.0, abs=0.05)
        assert rep.c_p_one_photon <= 1e-3
        assert 1e-3 < rep.c_p_cavity < 1e-1
        for e in rep.estimates:
            assert e.richardson_error < 0.05 * e.value or e.value < 1e-3

    def test_unconverged_perturbed_point(self, pulling_point, pulling_steady, monkeypatch):
        import superlase.steady as steady

        def never(params, init=None, *a, **kw):
            return SteadyState(pulling_steady.state, 1.0, 0.0, "march", False,
                               pulling_steady.vector)

        monkeypatch.setattr(steady, "find_steady", never)
        with pytest.raises(PullingError):
            pulling_coefficient("cavity", pulling_point, steady=pulling_steady)


class TestCoherence:
    def test_baseline_order(self, baseline, baseline_steady):
        assert 1e-2 < coherence_cbd(baseline_steady, baseline) < 1.0

    def test_undefined_without_excited_population(self):
        with pytest.raises(UndefinedMeasureError):
            coherence_cbd(fake_steady(0.0), PhysicalParams.raman(1.0, 1.0))


class TestTlmSimulate:
    def test_rows(self):
        p = PhysicalParams.raman(TWO_PI * math.sqrt(10) * 1e6, math.sqrt(10))
        grid = TWO_PI * np.array([1e5, 1e6, 1e7])
        rows = tlm_simulate(tlm_reduce(p.with_(eta=grid[0]), "dark"), grid, n_lasing=10.0)
        assert [r.eta for r in rows] == list(grid)
        assert all(r.converged for r in rows)
        lasing = [r for r in rows if r.n_photon_s > 10]
        assert lasing and all(r.linewidth > 0 for r in lasing)
        assert all(r.linewidth is None for r in rows if r.n_photon_s <= 10)
