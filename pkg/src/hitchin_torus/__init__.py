"""Numerical laboratory for the coupled harmonic-metric system on a flat
torus: solver, induced conformal metrics, pointwise inequality and curvature
verification, marked length spectra and degeneration ray studies."""

__version__ = "0.1.0"

from .fields import GridSpec, ComplexField, laplacian, integrate, sample_fourier
from .higgs import HiggsData, QuarticDifferential, quartic, gauge_act, hitchin_fiber_rep
from .solver import SolverOptions, SolutionPair, SolverError, residual, solve, continuation_solve
from .metrics import ConformalMetric, MetricKind, metric_h, metric_g, metric_flat, fiber_metrics, area
from .verification import diagnostics, curvature, bochner_identities, check_u, check_domination, run_all_checks
from .geodesics import HomotopyClass, SpectrumTable, geodesic_length, flat_length_closed_form, spectrum
from .degeneration import RaySpec, run_ray, gauge_ray_consistency, area_ratio_trend
