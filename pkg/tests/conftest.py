"""Shared fixtures: the four-dataset check corpus and cached solutions.

The corpus spans the qualitative regimes of the data space: constant
moduli (the exact equality case), smooth nowhere-zero data, a vanishing
locus in one factor, and disjoint vanishing loci in both factors.
Expensive N=128 solves are session-scoped so the acceptance tests share
them.
"""

import numpy as np
import pytest

from hitchin_torus.fields import GridSpec, constant_field, sample_fourier
from hitchin_torus.higgs import HiggsData, hitchin_fiber_rep, quartic
from hitchin_torus.solver import SolverOptions, solve
from hitchin_torus.verification import calibrate_eps_disc

CORPUS_NAMES = ("constant", "nowhere_zero", "nu_zeros", "disjoint_zeros")

# conjugate-pair coefficient lists for the real trigonometric data
_COS_X = [((1, 0), 0.5), ((-1, 0), 0.5)]          # cos(2 pi x)
_SIN_X = [((1, 0), -0.5j), ((-1, 0), 0.5j)]       # sin(2 pi x)
_COS_Y = [((0, 1), 0.5), ((0, -1), 0.5)]          # cos(2 pi y)


def _scaled(coeffs, a, offset=0.0):
    out = [((0, 0), complex(offset))] if offset else []
    return out + [(k, a * c) for k, c in coeffs]


def corpus_dataset(name: str, grid: GridSpec) -> HiggsData:
    if name == "constant":
        return HiggsData(constant_field(2.0, grid), constant_field(3.0, grid), grid)
    if name == "nowhere_zero":
        mu = sample_fourier(_scaled(_COS_Y, 0.3, offset=1.0), grid)
        nu = sample_fourier(_scaled(_COS_X, 0.45, offset=1.0), grid)
        return HiggsData(mu, nu, grid)
    if name == "nu_zeros":
        mu = constant_field(1.0, grid)
        nu = sample_fourier(_scaled(_COS_X, 2.0), grid)
        return HiggsData(mu, nu, grid)
    if name == "disjoint_zeros":
        # mu vanishes on x in {1/4, 3/4}, nu on x in {0, 1/2}
        mu = sample_fourier(_scaled(_COS_X, 2.0), grid)
        nu = sample_fourier(_scaled(_SIN_X, 2.0), grid)
        return HiggsData(mu, nu, grid)
    raise KeyError(name)


def corpus(grid: GridSpec) -> dict:
    return {name: corpus_dataset(name, grid) for name in CORPUS_NAMES}


@pytest.fixture(scope="session")
def grid32():
    return GridSpec(32)


@pytest.fixture(scope="session")
def grid128():
    return GridSpec(128)


@pytest.fixture(scope="session")
def solver_opts():
    return SolverOptions(tolerance=1e-9)


@pytest.fixture(scope="session")
def corpus128(grid128):
    return corpus(grid128)


@pytest.fixture(scope="session")
def solutions128(corpus128, solver_opts):
    """name -> (solution, fiber solution) at N=128."""
    out = {}
    for name, data in corpus128.items():
        sol = solve(data, solver_opts)
        fiber = solve(hitchin_fiber_rep(quartic(data)), solver_opts)
        out[name] = (sol, fiber)
    return out


@pytest.fixture(scope="session")
def eps128(solver_opts):
    return calibrate_eps_disc(128, solver_opts)


@pytest.fixture(scope="session")
def eps32(solver_opts):
    return calibrate_eps_disc(32, solver_opts)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
