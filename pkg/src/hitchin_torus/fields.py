"""Periodic scalar and complex fields on a uniform N x N grid over the unit
square torus, with spectral / finite-difference Laplacians and quadrature.

Conventions: arrays are indexed ``[i, j]`` with ``x = i/N`` and ``y = j/N``;
periodicity is wrap-around in both indices.  Fourier transforms use the
orthonormal-in-mean convention: the coefficient of mode (0, 0) equals the
field mean.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi


class BandLimitError(ValueError):
    """A Fourier mode violates the grid's band limit |k| < N/2."""


@dataclass(frozen=True)
class GridSpec:
    """Uniform N x N grid on the unit square torus, z = x + iy."""

    n: int

    def __post_init__(self):
        if self.n < 16 or self.n % 2 != 0:
            raise ValueError(f"grid resolution must be even and >= 16, got {self.n}")

    @property
    def band_limit(self) -> int:
        return self.n // 2

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        """Meshgrid (X, Y) with X[i, j] = i/N, Y[i, j] = j/N."""
        t = np.arange(self.n) / self.n
        return np.meshgrid(t, t, indexing="ij")

    def wavenumbers(self) -> tuple[np.ndarray, np.ndarray]:
        """Integer frequencies along each axis (fftfreq order)."""
        k = np.fft.fftfreq(self.n, d=1.0 / self.n)
        return k, k


@dataclass
class ComplexField:
    """Complex samples of a doubly periodic function.

    ``max_mode`` records the largest |k| (per component) present when the
    field was built from Fourier coefficients; it is used to detect aliasing
    in pointwise products.  ``None`` means unknown (treated as full band).
    """

    values: np.ndarray
    grid: GridSpec
    max_mode: int | None = field(default=None)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.grid.n, self.grid.n):
            raise ValueError(
                f"field shape {self.values.shape} does not match grid n={self.grid.n}"
            )
        if not np.all(np.isfinite(self.values.view(float))):
            raise ValueError("field contains non-finite entries")

    @property
    def abs2(self) -> np.ndarray:
        return (self.values * self.values.conj()).real

    def max_abs(self) -> float:
        return float(np.abs(self.values).max())


def laplacian_multiplier(grid: GridSpec) -> np.ndarray:
    kx, ky = grid.wavenumbers()
    return -4.0 * np.pi**2 * (kx[:, None] ** 2 + ky[None, :] ** 2)


def laplacian(f: np.ndarray, method: str = "spectral") -> np.ndarray:
    """Flat Laplacian d^2/dx^2 + d^2/dy^2 = 4 d_z d_zbar of a periodic field.

    ``spectral`` is exact on band-limited fields; ``fd5`` is the 5-point
    stencil with wrap-around, truncation error O(N^-2).
    """
    f = np.asarray(f, dtype=float)
    n = f.shape[0]
    if method == "spectral":
        mult = laplacian_multiplier(GridSpec(n))
        return np.fft.ifft2(mult * np.fft.fft2(f)).real
    if method == "fd5":
        return (
            np.roll(f, 1, axis=0)
            + np.roll(f, -1, axis=0)
            + np.roll(f, 1, axis=1)
            + np.roll(f, -1, axis=1)
            - 4.0 * f
        ) * n**2
    raise ValueError(f"unknown laplacian method {method!r}")


def integrate(f: np.ndarray) -> float:
    """Quadrature over the unit torus: (1/N^2) sum f.

    Trapezoid equals midpoint on the periodic grid and is spectrally
    accurate for smooth integrands.
    """
    return float(np.mean(f))


def sample_fourier(
    coeffs: list[tuple[tuple[int, int], complex]], grid: GridSpec
) -> ComplexField:
    """Field with values sum_k c_k exp(2 pi i (k1 x + k2 y)), exact at grid points."""
    values = np.zeros((grid.n, grid.n), dtype=complex)
    x, y = grid.coords()
    max_mode = 0
    for (k1, k2), c in coeffs:
        if max(abs(k1), abs(k2)) >= grid.band_limit:
            raise BandLimitError(
                f"mode ({k1}, {k2}) violates band limit |k| < {grid.band_limit} at n={grid.n}"
            )
        values += complex(c) * np.exp(TWO_PI * 1j * (k1 * x + k2 * y))
        max_mode = max(max_mode, abs(k1), abs(k2))
    return ComplexField(values, grid, max_mode=max_mode)


def constant_field(c: complex, grid: GridSpec) -> ComplexField:
    return ComplexField(np.full((grid.n, grid.n), complex(c)), grid, max_mode=0)
