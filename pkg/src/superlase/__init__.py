"""Second-order mean-field simulator of a Raman-assisted four-level superradiant laser."""

from .model import (TWO_PI, BasisError, DarkBrightObservables, MeanFieldState, PhysicalParams,
                    dark_bright_transform, derivative, rhs, tlm_reduce)
from .observables import (PullingReport, coherence_cbd, power_watts, pulling_coefficient,
                          pulling_report, tlm_simulate)
from .regression import (EigenSystem, RegressionResult, build_B, eig_lr, linewidth_analytic,
                         linewidth_regression, lorentzian_spectrum)
from .spectrum import FilterConfig, SpectrumResult, extend_and_solve, scan_spectrum
from .steady import SteadyState, SweepRow, find_steady, hysteresis_intervals, sweep_eta, threshold
from .tlm import TlmParams, TlmState

__version__ = "0.1.0"
