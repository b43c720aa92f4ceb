"""Acceptance gate: one numbered test group per criterion.

Criteria 3, 4 (sign of max K), 6 (the h <= h~ spectrum rows) and 7 (final
ratio targets) encode maximum-principle consequences whose proofs require
log |mu| and log |nu| to be subharmonic away from zeros.  Periodic
non-constant fields on the torus cannot satisfy that (their log-moduli
have mean-zero Laplacian), and the corresponding assertions fail by
O(data amplitude), not by discretization.  They are asserted as stated
anyway: a red row here documents a property of the model domain, not a
solver defect.  The linearized response of log u to a log |nu| mode with
Laplacian eigenvalue -L is 2L/(4+L) times the mode, which is nonzero for
every non-constant perturbation; see notes in the repository root README.
"""

import json
import math
import time

import numpy as np
import pytest

from conftest import CORPUS_NAMES, corpus_dataset
from hitchin_torus.cli import main
from hitchin_torus.fields import GridSpec, constant_field, sample_fourier
from hitchin_torus.geodesics import (
    DEFAULT_CLASSES,
    GeodesicOptions,
    HomotopyClass,
    flat_length_closed_form,
    geodesic_length,
    spectrum,
)
from hitchin_torus.higgs import HiggsData, gauge_act, hitchin_fiber_rep, quartic
from hitchin_torus.metrics import (
    MetricKind,
    metric_flat,
    metric_h,
)
from hitchin_torus.degeneration import RaySpec, area_ratio_trend, run_ray
from hitchin_torus.solver import SolverOptions, constant_solution, solve
from hitchin_torus.verification import bochner_identities, curvature, run_all_checks

NONCONSTANT = tuple(n for n in CORPUS_NAMES if n != "constant")

PAIR_NAMES = [
    ("u", "1"),
    ("flat", "h"),
    ("h", "h_tilde"),
    ("32*h_tilde", "g_tilde"),
    ("g_tilde", "64*h_tilde"),
    ("g", "g_tilde"),
    ("32*flat*(e^{-2u1~}+1)", "g"),
    ("0", "f1+f2"),
    ("f1+f2", "2"),
]


# --- criterion 1: solver exactness -------------------------------------------


@pytest.mark.parametrize("m,n", [(1.0, 1.0), (1.0, math.e**4), (2.0, 3.0)])
def test_criterion_1_constant_exactness(m, n, grid128):
    data = HiggsData(constant_field(m, grid128), constant_field(n, grid128), grid128)
    t0 = time.perf_counter()
    sol = solve(data, SolverOptions(tolerance=1e-9))
    elapsed = time.perf_counter() - t0
    c1, c2 = constant_solution(m, n)
    assert sol.residual_norm <= 1e-9
    assert np.abs(sol.psi1 - c1).max() <= 1e-8
    assert np.abs(sol.psi2 - c2).max() <= 1e-8
    assert elapsed < 5.0


# --- criterion 2: gauge invariance --------------------------------------------


@pytest.mark.parametrize("lam", [2.0, 1j, 1e3 * np.exp(1j * np.pi / 7)])
@pytest.mark.parametrize("name", ["nowhere_zero", "nu_zeros"])
def test_criterion_2_gauge_invariance(lam, name, solutions128, solver_opts):
    sol, _ = solutions128[name]
    shift = math.log(abs(lam))
    warm = SolverOptions(tolerance=solver_opts.tolerance,
                         warm_start=(sol.psi1 - shift, sol.psi2 - shift))
    sol_g = solve(gauge_act(sol.data, lam), warm)
    assert np.abs(metric_h(sol_g).factor - metric_h(sol).factor).max() <= 1e-7
    assert np.abs(sol_g.psi1 - (sol.psi1 - shift)).max() <= 1e-7
    assert np.abs(sol_g.psi2 - (sol.psi2 - shift)).max() <= 1e-7


# --- criterion 3: pointwise inequality suite ----------------------------------


@pytest.fixture(scope="module")
def reports128(solutions128, eps128, solver_opts):
    out = {}
    for name, (sol, fiber) in solutions128.items():
        out[name] = run_all_checks(sol, solver_opts, eps=eps128, fiber_sol=fiber,
                                   with_bochner=False)
    return out


@pytest.mark.parametrize("pair", PAIR_NAMES, ids=lambda p: f"{p[0]}<={p[1]}")
@pytest.mark.parametrize("name", CORPUS_NAMES)
def test_criterion_3_pointwise_inequalities(name, pair, reports128):
    check = {c.pair: c for c in reports128[name].checks}[pair]
    assert check.violation_count == 0, (
        f"{pair[0]} <= {pair[1]} violated on {name}: worst margin "
        f"{check.min_margin:.3e} at {check.worst_point}"
    )


# --- criterion 4: curvature ----------------------------------------------------


def test_criterion_4_fd_convergence(solutions128, solver_opts):
    err128 = curvature(solutions128["nowhere_zero"][0]).agreement_norm
    sol256 = solve(corpus_dataset("nowhere_zero", GridSpec(256)), solver_opts)
    err256 = curvature(sol256).agreement_norm
    assert err128 / err256 >= 3.5


def test_criterion_4_constant_curvature_vanishes(solutions128, eps128):
    rep = curvature(solutions128["constant"][0])
    assert np.abs(rep.k_formula).max() <= eps128.value


@pytest.mark.parametrize("name", NONCONSTANT)
def test_criterion_4_negative_curvature(name, solutions128):
    rep = curvature(solutions128[name][0])
    assert rep.max_k < 0.0, f"max K = {rep.max_k:.3e} on {name}"


# --- criterion 5: the log-Laplacian identity constants -------------------------


def test_criterion_5_bochner_constants(solver_opts):
    sol = solve(corpus_dataset("nowhere_zero", GridSpec(256)), solver_opts)
    rep = bochner_identities(sol)
    assert abs(rep.c1_measured - (-4.0)) <= 0.05
    assert abs(rep.c2_measured - (-4.0)) <= 0.05
    # measured against both reference values; the conflict must be flagged
    assert rep.c2_printed == -2.0 and rep.c2_derived == -4.0
    assert rep.discrepancy_flag
    assert abs(rep.c2_measured - rep.c2_printed) > 1.0


# --- criterion 6: geodesics -----------------------------------------------------


@pytest.mark.parametrize("q_value", [1.0, 6.0, 2.0 + 1.0j])
def test_criterion_6_flat_closed_form(q_value):
    grid = GridSpec(64)
    data = HiggsData(constant_field(1.0, grid), constant_field(q_value, grid), grid)
    flat = metric_flat(quartic(data))
    for c in DEFAULT_CLASSES:
        got = geodesic_length(flat, c, GeodesicOptions(points=256))
        assert abs(got / flat_length_closed_form(q_value, c) - 1.0) < 5e-3


def test_criterion_6_homogeneity(solutions128):
    h = metric_h(solutions128["nowhere_zero"][0])
    opts = GeodesicOptions(points=256)
    for t in (3.0, 100.0):
        for c in (HomotopyClass(1, 0), HomotopyClass(1, 1)):
            l0 = geodesic_length(h, c, opts)
            lt = geodesic_length(h.scaled(t), c, opts)
            assert abs(lt - math.sqrt(t) * l0) <= 1e-8 * lt


@pytest.fixture(scope="module")
def spectra128(solutions128):
    opts = GeodesicOptions(points=256)
    out = {}
    for name, (sol, fiber) in solutions128.items():
        flat = metric_flat(quartic(sol.data))
        h = metric_h(sol)
        h_t = metric_h(fiber)
        h_t.kind = MetricKind.HITCHIN_FIBER_H_TILDE
        out[name] = {
            "flat": spectrum(flat, DEFAULT_CLASSES, opts).lengths(),
            "h": spectrum(h, DEFAULT_CLASSES, opts).lengths(),
            "h_tilde": spectrum(h_t, DEFAULT_CLASSES, opts).lengths(),
        }
    return out


@pytest.mark.parametrize("low,high", [("flat", "h"), ("h", "h_tilde")])
@pytest.mark.parametrize("name", CORPUS_NAMES)
def test_criterion_6_spectrum_domination(name, low, high, spectra128):
    table = spectra128[name]
    for key in table[low]:
        a, b = table[low][key], table[high][key]
        assert a <= b * (1.0 + 1e-6), (
            f"{low} spectrum exceeds {high} on {name} class {key}: {a} > {b}"
        )


# --- criterion 7: degeneration ray study ----------------------------------------


@pytest.fixture(scope="module")
def acceptance_ray(grid128, solver_opts):
    mu = constant_field(1.0, grid128)
    nu = sample_fourier([((0, 0), 1.0), ((1, 0), 0.45), ((-1, 0), 0.45)], grid128)
    spec = RaySpec(base=HiggsData(mu, nu, grid128), solver=solver_opts)
    return spec, run_ray(spec)


def test_criterion_7_ray_completes_in_budget(acceptance_ray):
    _, rep = acceptance_ray
    assert rep.complete
    assert rep.runtime_seconds <= 600.0


def test_criterion_7_flat_scaling_exact(acceptance_ray):
    _, rep = acceptance_ray
    assert rep.flat_scaling_dev <= 1e-9


def test_criterion_7_r_h_monotone(acceptance_ray):
    _, rep = acceptance_ray
    assert rep.monotone_r_h(wiggle=0.01)


def test_criterion_7_final_r_h(acceptance_ray):
    _, rep = acceptance_ray
    worst = max(rep.r_h[-1].values())
    assert worst <= 1.05, f"max r_h(t=256) = {worst:.4f}"


def test_criterion_7_final_r_g(acceptance_ray):
    _, rep = acceptance_ray
    lo, hi = min(rep.r_g[-1].values()) / 8, max(rep.r_g[-1].values()) / 8
    assert 0.95 <= lo and hi <= 1.05, f"r_g(t=256)/8 in [{lo:.4f}, {hi:.4f}]"


def test_criterion_7_area_trend(acceptance_ray):
    spec, rep = acceptance_ray
    trend = area_ratio_trend(rep, spec.wiggle, final_tol=0.05)
    assert trend.lower_ok and trend.monotone_ok
    assert trend.upper_reported <= 1.5
    assert trend.final_ok, f"a(256) = {rep.a_ratio[-1]:.4f}"


def test_criterion_7_per_step_checks(acceptance_ray):
    _, rep = acceptance_ray
    assert all(rep.checks_passed), (
        f"inequality suite failed at t = "
        f"{[t for t, ok in zip(rep.t_values, rep.checks_passed) if not ok]}"
    )


# --- criterion 8: reproducibility ----------------------------------------------


def test_criterion_8_reproducibility(tmp_path):
    cfg = tmp_path / "cfg.toml"
    cfg.write_text(
        "[grid]\nn = 64\n"
        "[data]\nmu = [[0, 0, 1.0]]\n"
        "nu = [[0, 0, 1.0], [1, 0, 0.45], [-1, 0, 0.45]]\n"
        "[geodesic]\npoints = 256\n"
        "[classes]\nlist = [[1, 0], [0, 1]]\n"
    )
    payloads, binaries, spectra = [], [], []
    for run in ("a", "b"):
        out = tmp_path / run
        assert main(["solve", "--config", str(cfg), "--out", str(out)]) == 0
        main(["check", "--sol", str(out / "solution.htsol"),
              "--config", str(cfg), "--out", str(out)])
        main(["spectrum", "--sol", str(out / "solution.htsol"), "--metric", "h",
              "--config", str(cfg), "--out", str(out)])
        binaries.append((out / "solution.htsol").read_bytes())
        payload = json.loads((out / "check_report.json").read_text())
        payload.pop("elapsed_seconds")
        payloads.append(payload)
        spectra.append((out / "spectrum_h.csv").read_text())
    assert binaries[0] == binaries[1]
    assert payloads[0] == payloads[1]
    assert spectra[0] == spectra[1]
