#!/usr/bin/env python3
"""Solve one configuration and print the full verification digest.

Usage:  python3 scripts/run_checks.py configs/wavy.toml [--bochner]

Equivalent to `hitchin-torus solve` + `hitchin-torus check`, but prints a
compact margin table to stdout instead of writing JSON.
"""

import argparse
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from hitchin_torus.config import load_config
from hitchin_torus.metrics import fiber_solution
from hitchin_torus.higgs import quartic
from hitchin_torus.solver import solve
from hitchin_torus.verification import run_all_checks


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("config")
    ap.add_argument("--bochner", action="store_true",
                    help="also fit the log-Laplacian identity constants")
    args = ap.parse_args()

    cfg = load_config(args.config)
    t0 = time.perf_counter()
    sol = solve(cfg.data, cfg.solver)
    fiber = fiber_solution(quartic(cfg.data), cfg.solver)
    rep = run_all_checks(sol, cfg.solver, fiber_sol=fiber,
                         with_bochner=args.bochner)
    elapsed = time.perf_counter() - t0

    print(f"n = {cfg.grid.n}   newton steps = {sol.newton_steps}   "
          f"residual = {sol.residual_norm:.3e}   ({elapsed:.1f}s)")
    print(f"eps_disc = {rep.eps.value:.3e}\n")
    print(f"{'inequality':<34} {'min margin':>12} {'violations':>11}")
    for c in rep.checks:
        tag = "ok " if c.passed else "VIOLATED"
        print(f"{c.pair[0] + ' <= ' + c.pair[1]:<34} {c.min_margin:>12.4e}"
              f" {c.violation_count:>11d}  {tag}")
    cv = rep.curvature
    print(f"\nmax K = {cv.max_k:.4e}   |K_formula - K_fd| = "
          f"{cv.agreement_norm:.3e}")
    print("areas: " + "  ".join(f"{k}={v:.6f}" for k, v in rep.areas.items()))
    if rep.bochner is not None:
        b = rep.bochner
        print(f"log-Laplacian constants: c1 = {b.c1_measured:.6f}, "
              f"c2 = {b.c2_measured:.6f} (references {b.c2_printed} printed / "
              f"{b.c2_derived} derived; flagged = {b.discrepancy_flag})")
    print(f"\noverall: {'PASS' if rep.passed else 'FAIL'}")
    return 0 if rep.passed else 1


if __name__ == "__main__":
    sys.exit(main())
