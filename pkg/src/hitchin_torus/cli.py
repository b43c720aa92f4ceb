"""Command line surface: solve / check / spectrum / ray / gauge-test / report.

Exit status: 0 on success, 1 on runtime failure or any asserted-check
violation, 2 on bad flags (argparse).  All machine-readable outputs carry
the materialized config echo, package version and timing; numeric values
are emitted in full double precision, human digests round to 6 significant
digits.
"""

from __future__ import annotations

import argparse
import cmath
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, ExperimentConfig, load_config
from .degeneration import (
    RaySpec,
    area_ratio_trend,
    gauge_ray_consistency,
    run_ray,
)
from .geodesics import save_spectrum, spectrum
from .higgs import gauge_act, quartic
from .metrics import fiber_metrics, metric_flat, metric_g, metric_h
from .solver import SolverError, solve
from .storage import load_solution, save_solution
from .verification import calibrate_eps_disc, run_all_checks


def render_heatmap(field: np.ndarray, path) -> None:
    """Binary PGM (P5, 8-bit), rows along the first array axis, min-max
    normalized; the raw scale goes into a sidecar text file."""
    field = np.asarray(field, dtype=float)
    if not np.all(np.isfinite(field)):
        raise ValueError("heatmap field has non-finite entries")
    lo, hi = float(field.min()), float(field.max())
    span = hi - lo if hi > lo else 1.0
    img = np.round(255.0 * (field - lo) / span).astype(np.uint8)
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode())
        fh.write(img.tobytes())
    with open(str(path) + ".txt", "w") as fh:
        fh.write(f"min {lo!r}\nmax {hi!r}\nshape {h} {w}\n")


def _write_json(payload: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _meta(cfg: ExperimentConfig | None, t0: float) -> dict:
    meta = {"version": __version__, "elapsed_seconds": time.perf_counter() - t0}
    if cfg is not None:
        meta["config"] = cfg.echo()
    return meta


def _cmd_solve(args) -> int:
    t0 = time.perf_counter()
    cfg = load_config(args.config)
    out = Path(args.out or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    sol = solve(cfg.data, cfg.solver)
    save_solution(sol, out / "solution.htsol")
    summary = {
        "residual_sup_norm": sol.residual_norm,
        "newton_steps": sol.newton_steps,
        "psi1_mean": float(np.mean(sol.psi1)),
        "psi2_mean": float(np.mean(sol.psi2)),
        **_meta(cfg, t0),
    }
    _write_json(summary, out / "solve_summary.json")
    print(f"solved: residual {sol.residual_norm:.6g} in {sol.newton_steps} steps"
          f" -> {out / 'solution.htsol'}")
    return 0


def _cmd_check(args) -> int:
    t0 = time.perf_counter()
    cfg = load_config(args.config) if args.config else None
    sol = load_solution(args.sol)
    opts = cfg.solver if cfg else None
    report = run_all_checks(sol, opts)
    out = Path(args.out or (cfg.output_dir if cfg else "."))
    out.mkdir(parents=True, exist_ok=True)
    payload = {**report.to_dict(), **_meta(cfg, t0)}
    _write_json(payload, out / "check_report.json")
    if args.heatmaps or (cfg and cfg.heatmaps):
        from .verification import diagnostics

        diag = diagnostics(sol)
        render_heatmap(diag.f1 + diag.f2, out / "f1_plus_f2.pgm")
        render_heatmap(metric_h(sol).factor, out / "metric_h.pgm")
    status = "PASS" if report.passed else "FAIL"
    print(f"checks: {status} (eps={report.eps.value:.6g}, "
          f"max_K={report.curvature.max_k:.6g}) -> {out / 'check_report.json'}")
    return 0 if report.passed else 1


def _metric_by_name(name: str, sol, opts):
    q = quartic(sol.data)
    if name == "h":
        return metric_h(sol)
    if name == "g":
        return metric_g(sol)
    if name == "flat":
        return metric_flat(q)
    if name in ("h_tilde", "g_tilde"):
        h_t, g_t = fiber_metrics(q, opts)
        return h_t if name == "h_tilde" else g_t
    raise ValueError(f"unknown metric {name!r}")


def _cmd_spectrum(args) -> int:
    t0 = time.perf_counter()
    cfg = load_config(args.config) if args.config else None
    sol = load_solution(args.sol)
    metric = _metric_by_name(args.metric, sol, cfg.solver if cfg else None)
    classes = cfg.classes if cfg else None
    geo = cfg.geodesic if cfg else None
    table = spectrum(metric, classes, geo)
    out = Path(args.out or (cfg.output_dir if cfg else "."))
    out.mkdir(parents=True, exist_ok=True)
    dest = out / f"spectrum_{args.metric}.csv"
    save_spectrum(table, dest)
    _write_json({"metric": args.metric,
                 "entries": [[c.p, c.q_w, l] for c, l, _ in table.entries],
                 **_meta(cfg, t0)}, out / f"spectrum_{args.metric}.json")
    print(f"spectrum of {args.metric}: {len(table.entries)} classes -> {dest}")
    return 0


def _cmd_ray(args) -> int:
    t0 = time.perf_counter()
    cfg = load_config(args.config)
    out = Path(args.out or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    spec = RaySpec(
        base=cfg.data,
        t_values=cfg.ray.t_values,
        classes=cfg.classes,
        solver=cfg.solver,
        geodesic=cfg.geodesic,
        scale_factor=cfg.ray.scale_factor,
        wiggle=cfg.ray.wiggle,
        final_ratio_tol=cfg.ray.final_ratio_tol,
        exclusion_radius_factor=cfg.ray.exclusion_radius_factor,
    )
    report = run_ray(spec)
    trend = area_ratio_trend(report, spec.wiggle, spec.final_ratio_tol)
    payload = {
        **report.to_dict(),
        "area_trend": trend.to_dict(),
        "r_h_monotone": report.monotone_r_h(spec.wiggle),
        **_meta(cfg, t0),
    }
    _write_json(payload, out / "ray_report.json")
    for k, t in enumerate(report.t_values):
        with open(out / f"ray_spectra_t{k}.csv", "w") as fh:
            fh.write("p,q_w,l_flat,l_h,l_g,r_h,r_g\n")
            for key in report.spectra_flat[k]:
                p, q_w = key
                fh.write(
                    f"{p},{q_w},{report.spectra_flat[k][key]!r},"
                    f"{report.spectra_h[k][key]!r},{report.spectra_g[k][key]!r},"
                    f"{report.r_h[k][key]!r},{report.r_g[k][key]!r}\n"
                )
    ok = report.complete and all(report.checks_passed) and trend.passed
    final_r_h = max(report.r_h[-1].values()) if report.r_h else float("nan")
    print(f"ray study: {'PASS' if ok else 'FAIL'} "
          f"(final max r_h={final_r_h:.6g}, a={report.a_ratio[-1]:.6g}, "
          f"{report.runtime_seconds:.1f}s) -> {out / 'ray_report.json'}")
    return 0 if ok else 1


def _cmd_gauge_test(args) -> int:
    t0 = time.perf_counter()
    cfg = load_config(args.config)
    lam = complex(args.lam)
    sol = solve(cfg.data, cfg.solver)
    sol_g = solve(gauge_act(cfg.data, lam), cfg.solver)
    shift = cmath.log(lam).real
    h_diff = float(np.abs(metric_h(sol).factor - metric_h(sol_g).factor).max())
    psi1_dev = float(np.abs(sol_g.psi1 - (sol.psi1 - shift)).max())
    psi2_dev = float(np.abs(sol_g.psi2 - (sol.psi2 - shift)).max())
    tol = 10.0 * cfg.solver.tolerance
    passed = h_diff <= tol and psi1_dev <= tol and psi2_dev <= tol
    out = Path(args.out or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(
        {
            "lambda": [lam.real, lam.imag],
            "expected_psi_shift": -shift,
            "sup_h_diff": h_diff,
            "sup_psi1_dev": psi1_dev,
            "sup_psi2_dev": psi2_dev,
            "tolerance": tol,
            "passed": passed,
            **_meta(cfg, t0),
        },
        out / "gauge_report.json",
    )
    print(f"gauge test lambda={lam}: {'PASS' if passed else 'FAIL'} "
          f"(sup h diff {h_diff:.6g})")
    return 0 if passed else 1


def _sig6(x):
    if isinstance(x, float):
        return float(f"{x:.6g}")
    if isinstance(x, list):
        return [_sig6(v) for v in x]
    if isinstance(x, dict):
        return {k: _sig6(v) for k, v in x.items()}
    return x


def _cmd_report(args) -> int:
    out = Path(args.dir)
    found = False
    for name in ("solve_summary.json", "check_report.json", "ray_report.json",
                 "gauge_report.json"):
        path = out / name
        if not path.exists():
            continue
        found = True
        with open(path) as fh:
            payload = json.load(fh)
        payload.pop("config", None)
        print(f"== {name} ==")
        print(json.dumps(_sig6(payload), indent=2, sort_keys=True))
    if not found:
        print(f"no reports found in {out}", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hitchin-torus",
        description="Solve the coupled harmonic-metric system on the torus, "
        "verify the metric inequalities and run degeneration ray studies.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve the system for a config")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("check", help="run the inequality and curvature checks")
    p.add_argument("--sol", required=True)
    p.add_argument("--config")
    p.add_argument("--out")
    p.add_argument("--heatmaps", action="store_true")
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("spectrum", help="marked length spectrum of a metric")
    p.add_argument("--sol", required=True)
    p.add_argument("--metric", default="h",
                   choices=["h", "g", "flat", "h_tilde", "g_tilde"])
    p.add_argument("--config")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_spectrum)

    p = sub.add_parser("ray", help="ray study along t -> scaled data")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_ray)

    p = sub.add_parser("gauge-test", help="C* equivariance check for one lambda")
    p.add_argument("--config", required=True)
    p.add_argument("--lam", required=True, help="complex number, e.g. '2' or '1j'")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_gauge_test)

    p = sub.add_parser("report", help="human-readable digest of prior outputs")
    p.add_argument("--dir", required=True)
    p.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, SolverError, ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
