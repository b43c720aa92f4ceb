#!/usr/bin/env python3
"""Run a degeneration ray study from a config and print the ratio tables.

Usage:  python3 scripts/run_ray_study.py configs/ray.toml

Prints, per t: Newton steps, the spectral ratios r_h = l_h / l_flat and
r_g / 8, the area ratio a(t), and whether the pointwise check suite passed.
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from hitchin_torus.config import load_config
from hitchin_torus.degeneration import RaySpec, area_ratio_trend, run_ray


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("config")
    args = ap.parse_args()

    cfg = load_config(args.config)
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
    rep = run_ray(spec)

    keys = sorted(rep.r_h[0])
    head = "  ".join(f"r_h{k}" for k in keys) + "   " + \
           "  ".join(f"r_g{k}/8" for k in keys)
    print(f"{'t':>8}  steps  {head}  {'a(t)':>8}  checks")
    for i, t in enumerate(rep.t_values):
        rh = "  ".join(f"{rep.r_h[i][k]:7.4f}" for k in keys)
        rg = "  ".join(f"{rep.r_g[i][k] / 8:9.4f}" for k in keys)
        print(f"{t:8.1f}  {rep.newton_steps[i]:5d}  {rh}   {rg}  "
              f"{rep.a_ratio[i]:8.4f}  {'ok' if rep.checks_passed[i] else 'FAIL'}")

    trend = area_ratio_trend(rep, spec.wiggle, final_tol=spec.final_ratio_tol)
    print(f"\nflat-spectrum t^(1/4) deviation: {rep.flat_scaling_dev:.3e}")
    print(f"r_h monotone (wiggle {spec.wiggle}): {rep.monotone_r_h(spec.wiggle)}")
    print(f"area trend: lower_ok={trend.lower_ok} monotone_ok={trend.monotone_ok} "
          f"final_ok={trend.final_ok} (a_final = {rep.a_ratio[-1]:.4f})")
    print(f"runtime: {rep.runtime_seconds:.1f}s")
    return 0 if rep.complete else 1


if __name__ == "__main__":
    sys.exit(main())
