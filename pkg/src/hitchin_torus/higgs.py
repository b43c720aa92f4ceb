"""Higgs-bundle style data on the torus: the parameter pair (mu, nu), the
induced quartic differential q = mu * nu, the C* rescaling action and the
Hitchin-fiber representative (1, q)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import BandLimitError, ComplexField, GridSpec, constant_field

#: fields with max modulus below this are treated as identically zero
ZERO_THRESHOLD = 1e-12


@dataclass
class HiggsData:
    """Pair (mu, nu) of band-limited periodic complex fields.

    Both factors must be nontrivial: on the periodic domain, integrating the
    coupled equations forces the integral of |nu|^2 e^{-2 psi1} (and of
    |mu|^2 e^{2 psi2}) to be positive, so mu == 0 or nu == 0 admits no
    solution.
    """

    mu: ComplexField
    nu: ComplexField
    grid: GridSpec

    def __post_init__(self):
        if self.mu.grid.n != self.grid.n or self.nu.grid.n != self.grid.n:
            raise ValueError("mu, nu and grid resolutions disagree")
        if self.mu.max_abs() <= ZERO_THRESHOLD:
            raise ValueError("mu is (numerically) identically zero; unsolvable on the torus")
        if self.nu.max_abs() <= ZERO_THRESHOLD:
            raise ValueError("nu is (numerically) identically zero; unsolvable on the torus")


@dataclass
class QuarticDifferential:
    """Pointwise product q = mu * nu."""

    q: ComplexField

    @property
    def grid(self) -> GridSpec:
        return self.q.grid


def quartic(data: HiggsData) -> QuarticDifferential:
    """q = mu * nu; rejects products that would alias past the band limit."""
    kmu, knu = data.mu.max_mode, data.nu.max_mode
    if kmu is not None and knu is not None:
        kq = kmu + knu
        if kq >= data.grid.band_limit:
            n_min = 2 * kq + 2
            raise BandLimitError(
                f"product band {kq} exceeds limit {data.grid.band_limit - 1} "
                f"at n={data.grid.n}; need n >= {n_min}"
            )
        max_mode = kq
    else:
        max_mode = None
    return QuarticDifferential(
        ComplexField(data.mu.values * data.nu.values, data.grid, max_mode=max_mode)
    )


def gauge_act(data: HiggsData, lam: complex) -> HiggsData:
    """C* action (mu, nu) -> (lam * mu, lam^-1 * nu); preserves q = mu*nu."""
    lam = complex(lam)
    if lam == 0:
        raise ValueError("gauge parameter must be nonzero")
    mu = ComplexField(lam * data.mu.values, data.grid, max_mode=data.mu.max_mode)
    nu = ComplexField(data.nu.values / lam, data.grid, max_mode=data.nu.max_mode)
    return HiggsData(mu, nu, data.grid)


def hitchin_fiber_rep(q: QuarticDifferential) -> HiggsData:
    """The representative (1, q) of the Hitchin fiber through q."""
    if np.abs(q.q.values).max() <= ZERO_THRESHOLD:
        raise ValueError("q is (numerically) identically zero")
    one = constant_field(1.0, q.grid)
    nu = ComplexField(q.q.values.copy(), q.grid, max_mode=q.q.max_mode)
    return HiggsData(one, nu, q.grid)
