"""Damped Newton-Krylov solver for the coupled elliptic system

    lap psi1 = e^{psi1 - psi2} - |nu|^2 e^{-2 psi1}
    lap psi2 = |mu|^2 e^{2 psi2} - e^{psi1 - psi2}

on the unit torus.  The linearized steps are solved by preconditioned
conjugate gradients; the preconditioner inverts (-lap + c) spectrally with
c the mean of the Jacobian diagonal, which keeps iteration counts
resolution-independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from .fields import GridSpec, laplacian, laplacian_multiplier
from .higgs import HiggsData

DAMPING_FLOOR = 2.0**-20


class SolverError(RuntimeError):
    """Newton iteration failed; carries the last iterate and residual norm."""

    def __init__(self, message, residual_norm, psi1, psi2, steps):
        super().__init__(message)
        self.residual_norm = residual_norm
        self.psi1 = psi1
        self.psi2 = psi2
        self.steps = steps


@dataclass
class SolverOptions:
    tolerance: float = 1e-9
    max_newton_steps: int = 50
    laplacian_method: str = "spectral"
    max_cg_iter: int = 2000
    warm_start: "SolutionPair | tuple[np.ndarray, np.ndarray] | None" = None

    def __post_init__(self):
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")


@dataclass
class SolutionPair:
    psi1: np.ndarray
    psi2: np.ndarray
    data: HiggsData
    residual_norm: float
    tolerance: float
    newton_steps: int = 0

    @property
    def grid(self) -> GridSpec:
        return self.data.grid


def constant_solution(m: float, n: float) -> tuple[float, float]:
    """Closed-form constant solution for constant |mu| = m, |nu| = n.

    Zeroing both equations with lap = 0 gives the linear system
    3 psi1 - psi2 = 2 ln n, psi1 - 3 psi2 = 2 ln m.
    """
    if m <= 0 or n <= 0:
        raise ValueError("constant moduli must be positive")
    ln_m, ln_n = math.log(m), math.log(n)
    return (3.0 * ln_n - ln_m) / 4.0, (ln_n - 3.0 * ln_m) / 4.0


def residual(
    data: HiggsData,
    psi1: np.ndarray,
    psi2: np.ndarray,
    method: str = "spectral",
) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise defect of the two equations (zero at a solution)."""
    e12 = np.exp(psi1 - psi2)
    r1 = laplacian(psi1, method) - e12 + data.nu.abs2 * np.exp(-2.0 * psi1)
    r2 = laplacian(psi2, method) - data.mu.abs2 * np.exp(2.0 * psi2) + e12
    return r1, r2


def _sup(r1, r2):
    return max(float(np.abs(r1).max()), float(np.abs(r2).max()))


def _newton_step(data, psi1, psi2, r1, r2, method, max_cg_iter, cg_rtol):
    """Solve the linearized system J d = -R by preconditioned CG on -J."""
    n = data.grid.n
    a = np.exp(psi1 - psi2)
    b = data.nu.abs2 * np.exp(-2.0 * psi1)
    c = data.mu.abs2 * np.exp(2.0 * psi2)
    d11 = a + 2.0 * b
    d22 = a + 2.0 * c
    mult = laplacian_multiplier(data.grid)
    shift = float(np.mean(d11) + np.mean(d22)) / 2.0
    inv_symbol = 1.0 / (shift - mult)

    def matvec(v):
        v1 = v[: n * n].reshape(n, n)
        v2 = v[n * n :].reshape(n, n)
        w1 = -laplacian(v1, method) + d11 * v1 - a * v2
        w2 = -laplacian(v2, method) + d22 * v2 - a * v1
        return np.concatenate([w1.ravel(), w2.ravel()])

    def precond(v):
        v1 = v[: n * n].reshape(n, n)
        v2 = v[n * n :].reshape(n, n)
        w1 = np.fft.ifft2(inv_symbol * np.fft.fft2(v1)).real
        w2 = np.fft.ifft2(inv_symbol * np.fft.fft2(v2)).real
        return np.concatenate([w1.ravel(), w2.ravel()])

    op = LinearOperator((2 * n * n, 2 * n * n), matvec=matvec)
    prec = LinearOperator((2 * n * n, 2 * n * n), matvec=precond)
    rhs = np.concatenate([r1.ravel(), r2.ravel()])
    sol, info = cg(op, rhs, M=prec, rtol=cg_rtol, atol=0.0, maxiter=max_cg_iter)
    if info != 0:
        raise SolverError(
            f"inner CG failed to converge (info={info})",
            _sup(r1, r2), psi1, psi2, 0,
        )
    return sol[: n * n].reshape(n, n), sol[n * n :].reshape(n, n)


def solve(data: HiggsData, opts: SolverOptions | None = None) -> SolutionPair:
    """Solve the system to sup-norm residual <= opts.tolerance.

    Initialization uses the closed-form constant solution built from the
    mean values of |mu|^2 and |nu|^2 (exact for constant data), unless a
    warm start is supplied.  Damping halves the Newton step until the
    residual sup-norm decreases; falling below the floor 2^-20 is declared
    divergence.
    """
    opts = opts or SolverOptions()
    n = data.grid.n
    if opts.warm_start is not None:
        ws = opts.warm_start
        if isinstance(ws, SolutionPair):
            psi1, psi2 = ws.psi1.copy(), ws.psi2.copy()
        else:
            psi1, psi2 = np.array(ws[0], dtype=float), np.array(ws[1], dtype=float)
        if psi1.shape != (n, n):
            raise ValueError("warm start resolution does not match grid")
    else:
        m_bar = math.sqrt(float(np.mean(data.mu.abs2)))
        n_bar = math.sqrt(float(np.mean(data.nu.abs2)))
        c1, c2 = constant_solution(m_bar, n_bar)
        psi1 = np.full((n, n), c1)
        psi2 = np.full((n, n), c2)

    method = opts.laplacian_method
    r1, r2 = residual(data, psi1, psi2, method)
    rnorm = _sup(r1, r2)
    for step in range(1, opts.max_newton_steps + 1):
        if rnorm <= opts.tolerance:
            return SolutionPair(psi1, psi2, data, rnorm, opts.tolerance, step - 1)
        cg_rtol = max(1e-12, min(1e-2, 0.1 * rnorm))
        try:
            d1, d2 = _newton_step(data, psi1, psi2, r1, r2, method,
                                  opts.max_cg_iter, cg_rtol)
        except SolverError as err:
            err.steps = step
            raise
        s = 1.0
        while True:
            t1, t2 = psi1 + s * d1, psi2 + s * d2
            n1, n2 = residual(data, t1, t2, method)
            new_norm = _sup(n1, n2)
            if new_norm < rnorm:
                break
            s *= 0.5
            if s < DAMPING_FLOOR:
                raise SolverError(
                    "line search stalled below damping floor",
                    rnorm, psi1, psi2, step,
                )
        psi1, psi2, r1, r2, rnorm = t1, t2, n1, n2, new_norm
    if rnorm <= opts.tolerance:
        return SolutionPair(psi1, psi2, data, rnorm, opts.tolerance,
                            opts.max_newton_steps)
    raise SolverError(
        f"no convergence after {opts.max_newton_steps} Newton steps "
        f"(residual {rnorm:.3e})",
        rnorm, psi1, psi2, opts.max_newton_steps,
    )


def continuation_solve(
    datas: list[HiggsData],
    opts: SolverOptions | None = None,
    shifts: list[tuple[float, float]] | None = None,
) -> list[SolutionPair]:
    """Solve a path of problems, warm-starting each from the previous one.

    ``shifts[k]`` is an optional constant increment (d psi1, d psi2) applied
    to the previous solution before it seeds problem k; rays scaling nu by a
    factor r use ((3/4) ln r, (1/4) ln r), which is exact for constant data.
    The first failure aborts; the exception carries the partial results.
    """
    opts = opts or SolverOptions()
    results: list[SolutionPair] = []
    prev: SolutionPair | None = None
    for k, data in enumerate(datas):
        if prev is None:
            step_opts = opts
        else:
            psi1, psi2 = prev.psi1, prev.psi2
            if shifts is not None:
                psi1 = psi1 + shifts[k][0]
                psi2 = psi2 + shifts[k][1]
            step_opts = replace(opts, warm_start=(psi1, psi2))
        try:
            prev = solve(data, step_opts)
        except SolverError as err:
            err.partial_results = results
            err.failure_index = k
            raise
        results.append(prev)
    return results
