"""Ray studies along t -> (mu0, t * nu0): warm-started continuation in t,
full inequality checks at every step, and the renormalized length-spectrum
and area ratios whose limits (ratio -> 1 for h against the flat metric,
-> 8 for g, area ratio -> 1) are the desk-scale degeneration surrogates.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .fields import ComplexField
from .geodesics import (
    DEFAULT_CLASSES,
    GeodesicOptions,
    HomotopyClass,
    SpectrumTable,
    geodesic_length,
    spectrum,
)
from .higgs import HiggsData, quartic
from .metrics import area, metric_flat, metric_g, metric_h
from .solver import SolutionPair, SolverOptions, solve
from .verification import EpsDisc, calibrate_eps_disc, run_all_checks

DEFAULT_T_VALUES = tuple(float(2**k) for k in range(9))      # 1 .. 256


@dataclass
class RaySpec:
    base: HiggsData
    t_values: tuple[float, ...] = DEFAULT_T_VALUES
    classes: list[HomotopyClass] = field(default_factory=lambda: list(DEFAULT_CLASSES))
    solver: SolverOptions = field(default_factory=SolverOptions)
    geodesic: GeodesicOptions = field(default_factory=GeodesicOptions)
    scale_factor: str = "nu"           # which factor carries t: nu, mu or both
    wiggle: float = 0.01               # tolerated non-monotonicity in r_h
    final_ratio_tol: float = 0.05      # |r_h - 1| and |r_g/8 - 1| at t_max
    exclusion_radius_factor: float = 3.0   # times 1/N, around zeros of q

    def __post_init__(self):
        ts = self.t_values
        if any(t <= 0 for t in ts) or any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("t_values must be strictly increasing and positive")
        if self.scale_factor not in ("nu", "mu", "both"):
            raise ValueError(f"unknown scale_factor {self.scale_factor!r}")


def scaled_data(base: HiggsData, t: float, scale_factor: str = "nu") -> HiggsData:
    """Data at ray parameter t; all three knobs are gauge-equivalent
    (lambda = t^{-1/2} maps the symmetric scaling onto the nu scaling),
    which gauge_ray_consistency cross-checks."""
    mu, nu = base.mu, base.nu
    if scale_factor == "nu":
        nu = ComplexField(t * nu.values, base.grid, max_mode=nu.max_mode)
    elif scale_factor == "mu":
        mu = ComplexField(t * mu.values, base.grid, max_mode=mu.max_mode)
    else:
        s = math.sqrt(t)
        mu = ComplexField(s * mu.values, base.grid, max_mode=mu.max_mode)
        nu = ComplexField(s * nu.values, base.grid, max_mode=nu.max_mode)
    return HiggsData(mu, nu, base.grid)


def _warm_shift(r: float, scale_factor: str) -> tuple[float, float]:
    """Constant-data increment of (psi1, psi2) when t grows by factor r."""
    lr = math.log(r)
    if scale_factor == "nu":
        return 0.75 * lr, 0.25 * lr
    if scale_factor == "mu":
        return -0.25 * lr, -0.75 * lr
    return 0.25 * lr, -0.25 * lr


@dataclass
class RayStudyReport:
    t_values: list[float]
    classes: list[tuple[int, int]]
    screened_out: list[tuple[int, int]]
    areas_h: list[float]
    areas_g: list[float]
    areas_flat: list[float]
    spectra_h: list[dict]
    spectra_g: list[dict]
    spectra_flat: list[dict]
    r_h: list[dict]                    # per t: {(p,q): l_h / l_flat}
    r_g: list[dict]
    a_ratio: list[float]               # area(h_t) / ||q_t||
    checks_passed: list[bool]
    eps: EpsDisc
    flat_scaling_dev: float            # direct t_max flat spectrum vs t^{1/4} law
    newton_steps: list[int]
    runtime_seconds: float = 0.0
    failure_index: int | None = None

    @property
    def complete(self) -> bool:
        return self.failure_index is None

    def monotone_r_h(self, wiggle: float = 0.01) -> bool:
        for key in self.r_h[0]:
            seq = [row[key] for row in self.r_h]
            if any(b > a * (1.0 + wiggle) for a, b in zip(seq, seq[1:])):
                return False
        return True

    def to_dict(self) -> dict:
        def keyed(rows):
            return [{f"{p},{q}": v for (p, q), v in row.items()} for row in rows]

        return {
            "t_values": self.t_values,
            "classes": [list(c) for c in self.classes],
            "screened_out": [list(c) for c in self.screened_out],
            "areas": {"h": self.areas_h, "g": self.areas_g, "flat": self.areas_flat},
            "spectra": {
                "h": keyed(self.spectra_h),
                "g": keyed(self.spectra_g),
                "flat": keyed(self.spectra_flat),
            },
            "r_h": keyed(self.r_h),
            "r_g": keyed(self.r_g),
            "a_ratio": self.a_ratio,
            "checks_passed": self.checks_passed,
            "eps": {"n": self.eps.n, "c": self.eps.c, "value": self.eps.value},
            "flat_scaling_dev": self.flat_scaling_dev,
            "newton_steps": self.newton_steps,
            "runtime_seconds": self.runtime_seconds,
            "failure_index": self.failure_index,
        }


def screen_classes(
    spec: RaySpec,
) -> tuple[list[HomotopyClass], list[HomotopyClass]]:
    """Drop classes whose flat geodesic representative passes within
    3/N of a zero of q (convergence is only uniform away from zeros)."""
    n = spec.base.grid.n
    q = quartic(spec.base)
    qa = np.abs(q.q.values)
    zeros = np.argwhere(qa <= 1e-9 * qa.max())
    if zeros.size == 0:
        return list(spec.classes), []
    zpts = zeros / n
    radius = spec.exclusion_radius_factor / n
    flat = metric_flat(q)
    kept, dropped = [], []
    for c in spec.classes:
        res = geodesic_length(flat, c, spec.geodesic, return_result=True)
        pts = np.mod(res.path, 1.0)
        d = pts[:, None, :] - zpts[None, :, :]
        d -= np.round(d)                       # periodic displacement
        dist = np.sqrt((d**2).sum(axis=2)).min()
        (kept if dist >= radius else dropped).append(c)
    return kept, dropped


def run_ray(spec: RaySpec, eps: EpsDisc | None = None) -> RayStudyReport:
    """Full ray study.  Each t must pass the asserted inequality suite; a
    solver failure truncates the report at the failing index."""
    start = time.perf_counter()
    n = spec.base.grid.n
    if eps is None:
        eps = calibrate_eps_disc(n, spec.solver)
    classes, dropped = screen_classes(spec)
    if not classes:
        raise ValueError("all classes screened out by the zero-exclusion rule")

    q1 = quartic(spec.base)
    flat1 = metric_flat(q1)
    flat_base = spectrum(flat1, classes, spec.geodesic)
    flat_base_lengths = flat_base.lengths()
    area_flat1 = area(flat1)

    report = RayStudyReport(
        t_values=[], classes=[(c.p, c.q_w) for c in classes],
        screened_out=[(c.p, c.q_w) for c in dropped],
        areas_h=[], areas_g=[], areas_flat=[],
        spectra_h=[], spectra_g=[], spectra_flat=[],
        r_h=[], r_g=[], a_ratio=[], checks_passed=[], eps=eps,
        flat_scaling_dev=0.0, newton_steps=[],
    )

    from dataclasses import replace
    from .solver import SolverError

    sol = fiber_sol = None
    for k, t in enumerate(spec.t_values):
        data_t = scaled_data(spec.base, t, spec.scale_factor)
        q_t = quartic(data_t)
        opts = spec.solver
        fopts = spec.solver
        if sol is not None:
            r = t / spec.t_values[k - 1]
            d1, d2 = _warm_shift(r, spec.scale_factor)
            opts = replace(spec.solver, warm_start=(sol.psi1 + d1, sol.psi2 + d2))
            f1, f2 = _warm_shift(r, "nu")
            fopts = replace(
                spec.solver, warm_start=(fiber_sol.psi1 + f1, fiber_sol.psi2 + f2)
            )
        try:
            sol = solve(data_t, opts)
            from .higgs import hitchin_fiber_rep

            fiber_sol = solve(hitchin_fiber_rep(q_t), fopts)
        except SolverError:
            report.failure_index = k
            break

        checks = run_all_checks(sol, spec.solver, eps=eps, fiber_sol=fiber_sol,
                                with_bochner=False)
        report.checks_passed.append(checks.passed)
        h_t = metric_h(sol)
        g_t = metric_g(sol)
        flat_t = metric_flat(q_t)

        report.t_values.append(float(t))
        report.newton_steps.append(sol.newton_steps + fiber_sol.newton_steps)
        report.areas_h.append(area(h_t))
        report.areas_g.append(area(g_t))
        report.areas_flat.append(area(flat_t))

        sp_h = spectrum(h_t, classes, spec.geodesic).lengths()
        sp_g = spectrum(g_t, classes, spec.geodesic).lengths()
        sp_flat = {key: t**0.25 * v for key, v in flat_base_lengths.items()}
        report.spectra_h.append(sp_h)
        report.spectra_g.append(sp_g)
        report.spectra_flat.append(sp_flat)
        report.r_h.append({key: sp_h[key] / sp_flat[key] for key in sp_flat})
        report.r_g.append({key: sp_g[key] / sp_flat[key] for key in sp_flat})
        report.a_ratio.append(area(h_t) / area(flat_t))

    # spot-check the quarter-power flat scaling law by direct computation
    if report.t_values:
        t_last = report.t_values[-1]
        q_last = quartic(scaled_data(spec.base, t_last, spec.scale_factor))
        direct = spectrum(metric_flat(q_last), classes, spec.geodesic).lengths()
        report.flat_scaling_dev = max(
            abs(direct[key] / (t_last**0.25 * flat_base_lengths[key]) - 1.0)
            for key in direct
        )
    report.runtime_seconds = time.perf_counter() - start
    return report


@dataclass
class GaugeRayReport:
    t_values: list[float]
    sup_h_diff: list[float]
    tolerance: float

    @property
    def passed(self) -> bool:
        return all(d <= self.tolerance for d in self.sup_h_diff)

    def to_dict(self) -> dict:
        return {
            "t_values": self.t_values,
            "sup_h_diff": self.sup_h_diff,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def gauge_ray_consistency(spec: RaySpec) -> GaugeRayReport:
    """(mu0, t nu0) and (sqrt(t) mu0, sqrt(t) nu0) lie in one C*-orbit, so
    their h metrics must agree to 10x solver tolerance at every t."""
    diffs = []
    for t in spec.t_values:
        sol_a = solve(scaled_data(spec.base, t, "nu"), spec.solver)
        sol_b = solve(scaled_data(spec.base, t, "both"), spec.solver)
        h_a = metric_h(sol_a).factor
        h_b = metric_h(sol_b).factor
        diffs.append(float(np.abs(h_a - h_b).max()))
    return GaugeRayReport(
        t_values=[float(t) for t in spec.t_values],
        sup_h_diff=diffs,
        tolerance=10.0 * spec.solver.tolerance,
    )


@dataclass
class AreaTrendReport:
    t_values: list[float]
    a_ratio: list[float]
    lower_ok: bool                 # a(t) >= 1 - eps for every t
    upper_reported: float          # max a(t), measured against 1.5 (reported)
    monotone_ok: bool              # nonincreasing within the wiggle
    final_ok: bool                 # a(t_max) <= 1 + final tolerance

    @property
    def passed(self) -> bool:
        return self.lower_ok and self.monotone_ok and self.final_ok

    def to_dict(self) -> dict:
        return {
            "t_values": self.t_values,
            "a_ratio": self.a_ratio,
            "lower_ok": self.lower_ok,
            "upper_reported": self.upper_reported,
            "monotone_ok": self.monotone_ok,
            "final_ok": self.final_ok,
            "passed": self.passed,
        }


def area_ratio_trend(
    report: RayStudyReport,
    wiggle: float = 0.01,
    final_tol: float = 0.05,
) -> AreaTrendReport:
    a = report.a_ratio
    e = report.eps.value
    return AreaTrendReport(
        t_values=report.t_values,
        a_ratio=a,
        lower_ok=all(v >= 1.0 - e for v in a),
        upper_reported=max(a),
        monotone_ok=all(b <= x * (1.0 + wiggle) for x, b in zip(a, a[1:])),
        final_ok=a[-1] <= 1.0 + final_tol,
    )
