import numpy as np
import pytest

from superlase.model import STATE_SIZE, TWO_PI, PhysicalParams
from superlase.regression import linewidth_regression
from superlase.spectrum import (AUG_SIZE, FilterConfig, MultiPeakError, SpectrumError,
                                extend_and_solve, filtered_rhs, fit_lorentzian, local_maxima,
                                scan_spectrum)
from superlase.steady import find_steady


@pytest.fixture(scope="module")
def scan(baseline, baseline_steady):
    return scan_spectrum(baseline, steady=baseline_steady)


@pytest.fixture(scope="module")
def regression_width(baseline, baseline_steady):
    return linewidth_regression(baseline, baseline_steady).linewidth


def explicit(scan, factor):
    kf = scan.kappa_f
    grid = tuple(np.linspace(-4, 4, 41) * scan.fwhm)
    return FilterConfig(zeta=scan.zeta * factor, kappa_f=kf, omega_b_grid=grid)


class TestFilterEquations:
    def test_laser_block_unchanged_without_filter_coupling(self, baseline, baseline_steady):
        y = np.concatenate([baseline_steady.vector, np.zeros(AUG_SIZE - STATE_SIZE)])
        out = filtered_rhs(y, baseline, 0.0, 1.0, 0.3)
        assert np.max(np.abs(out[:STATE_SIZE])) / baseline.kappa < 1e-9
        np.testing.assert_array_equal(out[STATE_SIZE:], 0.0)

    def test_no_coupling_no_filter_photons(self):
        p = PhysicalParams.raman(TWO_PI * 1e6, 3.0, eta=TWO_PI * 3e3, omega_c_rabi=0.0)
        ss = find_steady(p)
        filt = FilterConfig(zeta=1.0, kappa_f=10.0)
        for w in (-100.0, 0.0, 50.0):
            assert extend_and_solve(p, filt, w, ss) == 0.0


class TestScan:
    def test_single_peak_at_resonance(self, scan):
        assert abs(scan.peak_omega) <= 1e-3 * scan.fwhm
        assert all(n >= 0 for _, n in scan.points)

    def test_lorentzian_shape(self, scan):
        assert scan.fit_quality < 1e-2

    def test_matches_regression(self, scan, regression_width):
        assert scan.fwhm == pytest.approx(regression_width, rel=0.1)

    def test_default_filter_policy(self, scan, baseline, baseline_steady):
        from superlase.regression import linewidth_analytic

        est = linewidth_analytic(baseline, baseline_steady)
        assert scan.kappa_f == pytest.approx(est / 50)
        assert scan.zeta == pytest.approx(scan.kappa_f / 10)


@pytest.mark.property
class TestWeakCoupling:
    def test_halving_zeta(self, baseline, baseline_steady, scan):
        a = scan_spectrum(baseline, explicit(scan, 1.0), baseline_steady)
        b = scan_spectrum(baseline, explicit(scan, 0.5), baseline_steady)
        assert b.peak_height / a.peak_height == pytest.approx(0.25, rel=0.01)
        assert b.fwhm == pytest.approx(a.fwhm, rel=0.01)

    def test_doubling_zeta(self, baseline, baseline_steady, scan):
        # doubling from zeta = kappa_f/20 keeps within the validated coupling bound
        a = scan_spectrum(baseline, explicit(scan, 0.5), baseline_steady)
        b = scan_spectrum(baseline, explicit(scan, 1.0), baseline_steady)
        assert b.fwhm == pytest.approx(a.fwhm, rel=0.01)
        assert abs(b.peak_omega - a.peak_omega) <= 0.01 * a.fwhm


class TestValidation:
    @pytest.mark.parametrize("zeta,kf", [(0.0, 1.0), (1.0, 5.0), (1.0, 1e6)])
    def test_bad_filter(self, baseline, zeta, kf):
        with pytest.raises(ValueError):
            FilterConfig(zeta, kf).validate(baseline)

    def test_unconverged_laser(self, baseline, baseline_steady):
        from superlase.steady import SteadyState

        bad = SteadyState(baseline_steady.state, 1.0, 0.0, "march", False,
                          baseline_steady.vector)
        with pytest.raises(SpectrumError):
            scan_spectrum(baseline, steady=bad)


class TestPeakTools:
    def test_multiple_maxima_reported(self):
        x = np.linspace(-10, 10, 201)
        y = 1 / (1 + (x - 4) ** 2) + 1 / (1 + (x + 4) ** 2)
        peaks = local_maxima(x, y)
        assert peaks == pytest.approx([-4.0, 4.0], abs=0.15)
        err = MultiPeakError(peaks)
        assert err.maxima == peaks

    def test_fit_recovers_lorentzian(self):
        x = np.linspace(-5, 5, 81)
        y = 3.0 / (1 + ((x - 0.2) / 0.75) ** 2)
        x0, w, h, q = fit_lorentzian(x, y)
        assert (x0, w, h) == pytest.approx((0.2, 1.5, 3.0), rel=1e-8)
        assert q < 1e-10
