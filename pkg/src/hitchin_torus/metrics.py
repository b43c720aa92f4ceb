"""Conformal metrics built from solutions of the coupled system and from the
quartic differential, plus areas.

All metrics are stored as the positive factor lambda in lambda |dz|^2:

    h        = e^{psi1 - psi2}
    g        = 16 (|nu|^2 e^{-2 psi1} + 2 e^{psi1 - psi2} + |mu|^2 e^{2 psi2})
    flat     = |q|^{1/2}        (zero exactly at zeros of q, no regularization)
    h_tilde  = h of the fiber representative (1, q)
    g_tilde  = g of the fiber representative (1, q)
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .fields import integrate
from .higgs import ZERO_THRESHOLD, QuarticDifferential, hitchin_fiber_rep
from .solver import SolutionPair, SolverOptions, solve


class MetricKind(enum.Enum):
    MAXIMAL_SURFACE_H = "h"
    HITCHIN_FIBER_H_TILDE = "h_tilde"
    MINIMAL_SURFACE_G = "g"
    MINIMAL_SURFACE_FIBER_G_TILDE = "g_tilde"
    FLAT_Q = "flat"
    CUSTOM = "custom"


@dataclass
class ConformalMetric:
    factor: np.ndarray
    kind: MetricKind
    provenance: object = None

    def __post_init__(self):
        self.factor = np.asarray(self.factor, dtype=float)
        if not np.all(np.isfinite(self.factor)):
            raise ValueError("metric factor has non-finite entries")
        if self.factor.min() < 0:
            raise ValueError("metric factor must be nonnegative")

    def scaled(self, t: float) -> "ConformalMetric":
        return ConformalMetric(t * self.factor, MetricKind.CUSTOM, self.provenance)


def metric_h(sol: SolutionPair) -> ConformalMetric:
    return ConformalMetric(np.exp(sol.psi1 - sol.psi2), MetricKind.MAXIMAL_SURFACE_H, sol)


def metric_g(sol: SolutionPair) -> ConformalMetric:
    data = sol.data
    factor = 16.0 * (
        data.nu.abs2 * np.exp(-2.0 * sol.psi1)
        + 2.0 * np.exp(sol.psi1 - sol.psi2)
        + data.mu.abs2 * np.exp(2.0 * sol.psi2)
    )
    return ConformalMetric(factor, MetricKind.MINIMAL_SURFACE_G, sol)


def metric_flat(q: QuarticDifferential) -> ConformalMetric:
    qa = np.abs(q.q.values)
    if qa.max() <= ZERO_THRESHOLD:
        raise ValueError("q is (numerically) identically zero")
    return ConformalMetric(np.sqrt(qa), MetricKind.FLAT_Q, q)


def fiber_metrics(
    q: QuarticDifferential, opts: SolverOptions | None = None
) -> tuple[ConformalMetric, ConformalMetric]:
    """Solve the system with fiber data (1, q) and build (h_tilde, g_tilde)."""
    sol = fiber_solution(q, opts)
    h_t = metric_h(sol)
    g_t = metric_g(sol)
    h_t.kind = MetricKind.HITCHIN_FIBER_H_TILDE
    g_t.kind = MetricKind.MINIMAL_SURFACE_FIBER_G_TILDE
    return h_t, g_t


def fiber_solution(q: QuarticDifferential, opts: SolverOptions | None = None) -> SolutionPair:
    return solve(hitchin_fiber_rep(q), opts)


def area(m: ConformalMetric) -> float:
    """Total area of the torus under the metric; for the flat metric this is
    the norm ||q|| of the quartic differential."""
    return integrate(m.factor)
