"""Ray studies t -> scaled data: continuation, screening and ratio trends."""

import json
import math

import numpy as np
import pytest

from hitchin_torus.fields import GridSpec, constant_field, sample_fourier
from hitchin_torus.geodesics import GeodesicOptions, HomotopyClass
from hitchin_torus.higgs import HiggsData
from hitchin_torus.degeneration import (
    DEFAULT_T_VALUES,
    RaySpec,
    _warm_shift,
    area_ratio_trend,
    gauge_ray_consistency,
    run_ray,
    scaled_data,
    screen_classes,
)
from hitchin_torus.metrics import metric_h
from hitchin_torus.solver import SolverOptions, solve

FAST_GEO = GeodesicOptions(points=128)
SMALL_CLASSES = [HomotopyClass(1, 0), HomotopyClass(0, 1)]


def _base(n=32, amp=0.45):
    grid = GridSpec(n)
    mu = constant_field(1.0, grid)
    nu = sample_fourier([((0, 0), 1.0), ((1, 0), amp / 2), ((-1, 0), amp / 2)], grid)
    return HiggsData(mu, nu, grid)


def test_default_t_values_geometric():
    assert DEFAULT_T_VALUES == tuple(float(2**k) for k in range(9))


def test_ray_spec_validation():
    with pytest.raises(ValueError):
        RaySpec(base=_base(), t_values=(1.0, 0.5))
    with pytest.raises(ValueError):
        RaySpec(base=_base(), scale_factor="q")


def test_scaled_data_variants_share_quartic():
    base = _base()
    from hitchin_torus.higgs import quartic

    q_ref = quartic(scaled_data(base, 9.0, "nu")).q.values
    for which in ("mu", "both"):
        q = quartic(scaled_data(base, 9.0, which)).q.values
        assert np.allclose(q, q_ref, rtol=1e-12)


def test_warm_shift_exact_for_constant_data():
    grid = GridSpec(32)
    base = HiggsData(constant_field(2.0, grid), constant_field(3.0, grid), grid)
    for which in ("nu", "mu", "both"):
        sol = solve(scaled_data(base, 1.0, which))
        d1, d2 = _warm_shift(16.0, which)
        warm = SolverOptions(warm_start=(sol.psi1 + d1, sol.psi2 + d2))
        moved = solve(scaled_data(base, 16.0, which), warm)
        assert moved.newton_steps == 0  # the shifted seed is already a solution


def test_screen_classes_no_zeros_keeps_everything():
    spec = RaySpec(base=_base(), classes=list(SMALL_CLASSES), geodesic=FAST_GEO)
    kept, dropped = screen_classes(spec)
    assert kept == SMALL_CLASSES and dropped == []


def _point_zero_base(n=32):
    grid = GridSpec(n)
    mu = constant_field(1.0, grid)
    # zeros exactly where cos(2 pi x) = cos(2 pi y) = 0: four isolated points
    nu = sample_fourier(
        [((1, 0), 0.5), ((-1, 0), 0.5), ((0, 1), 0.5j), ((0, -1), 0.5j)], grid
    )
    return HiggsData(mu, nu, grid)


def test_screen_classes_drops_paths_through_cone_points():
    # cone points are cheap, so every flat minimizer here runs through one
    # and the whole class list is screened away at the default radius
    classes = [HomotopyClass(1, 0), HomotopyClass(0, 1), HomotopyClass(1, 1)]
    spec = RaySpec(base=_point_zero_base(), classes=classes, geodesic=FAST_GEO)
    kept, dropped = screen_classes(spec)
    assert kept == []
    assert sorted((c.p, c.q_w) for c in dropped) == sorted(
        (c.p, c.q_w) for c in classes
    )
    with pytest.raises(ValueError, match="screened out"):
        run_ray(spec)


def test_screen_radius_knob():
    # radius zero disables the exclusion entirely
    classes = [HomotopyClass(1, 0)]
    spec = RaySpec(base=_point_zero_base(), classes=classes, geodesic=FAST_GEO,
                   exclusion_radius_factor=0.0)
    kept, dropped = screen_classes(spec)
    assert kept == classes and dropped == []


@pytest.fixture(scope="module")
def small_ray_report():
    spec = RaySpec(
        base=_base(),
        t_values=(1.0, 4.0, 16.0),
        classes=list(SMALL_CLASSES),
        geodesic=FAST_GEO,
    )
    return run_ray(spec)


def test_run_ray_bookkeeping(small_ray_report):
    rep = small_ray_report
    assert rep.complete
    assert rep.t_values == [1.0, 4.0, 16.0]
    assert len(rep.checks_passed) == 3
    assert len(rep.newton_steps) == 3
    assert set(rep.r_h[0]) == {(1, 0), (0, 1)}
    # flat spectra follow the exact quarter-power law
    assert rep.flat_scaling_dev < 1e-9
    for k, t in enumerate(rep.t_values):
        for key in rep.spectra_flat[k]:
            assert rep.spectra_flat[k][key] == pytest.approx(
                t**0.25 * rep.spectra_flat[0][key]
            )


def test_run_ray_ratios_decrease(small_ray_report):
    rep = small_ray_report
    assert rep.monotone_r_h(wiggle=0.01)
    assert rep.a_ratio[0] > rep.a_ratio[-1] >= 1.0
    # r_g tracks 8 r_h at the constant-data level of accuracy
    for row_h, row_g in zip(rep.r_h, rep.r_g):
        for key in row_h:
            assert row_g[key] / row_h[key] == pytest.approx(8.0, rel=0.15)


def test_report_serializes(small_ray_report):
    payload = small_ray_report.to_dict()
    text = json.dumps(payload)
    assert "r_h" in payload and "1,0" in payload["r_h"][0]
    assert isinstance(text, str)


def test_area_ratio_trend(small_ray_report):
    trend = area_ratio_trend(small_ray_report, wiggle=0.01, final_tol=0.5)
    assert trend.lower_ok and trend.monotone_ok and trend.final_ok
    assert trend.passed
    assert trend.upper_reported == max(small_ray_report.a_ratio)


def test_gauge_ray_consistency():
    spec = RaySpec(base=_base(), t_values=(1.0, 4.0), geodesic=FAST_GEO)
    rep = gauge_ray_consistency(spec)
    assert rep.passed
    assert all(d <= 10 * spec.solver.tolerance for d in rep.sup_h_diff)
