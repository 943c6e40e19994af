"""Periodic one-dimensional grids with spectral calculus.

All pairings carry the spacing ``h`` so that a continuum-normalized function
has unit norm independently of the resolution.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

KINETIC_CHOICES = ("spectral", "lattice")


class GridMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid ``x_i = i*h`` on ``[0, L)``.

    ``kinetic`` selects the symbol used for ``-Delta`` by the propagators:
    ``"spectral"`` is the exact Fourier multiplier ``k**2``; ``"lattice"`` is
    the second-difference stencil ``(4/h**2) sin(k h / 2)**2``, which is the
    one-body operator of the many-body lattice model.
    """

    M: int
    L: float
    kinetic: str = "spectral"

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 4:
            raise ValueError(f"grid needs M >= 4 points, got {self.M}")
        if not self.L > 0:
            raise ValueError(f"grid length must be positive, got {self.L}")
        if self.kinetic not in KINETIC_CHOICES:
            raise ValueError(f"unknown kinetic symbol {self.kinetic!r}")

    @property
    def h(self) -> float:
        return self.L / self.M

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.M) * self.h

    @property
    def k(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.M, d=self.h)

    @property
    def displacement(self) -> np.ndarray:
        """Signed periodic displacement represented by each index."""
        i = np.arange(self.M)
        return np.where(i <= self.M // 2, i, i - self.M) * self.h

    def kinetic_symbol(self) -> np.ndarray:
        k = self.k
        if self.kinetic == "spectral":
            return k**2
        return (4.0 / self.h**2) * np.sin(0.5 * k * self.h) ** 2

    # array-level kernels, shared by the mean-field and lattice code paths

    def laplacian(self, values: np.ndarray) -> np.ndarray:
        return np.fft.ifft(-(self.k**2) * np.fft.fft(values))

    def kinetic_apply(self, values: np.ndarray) -> np.ndarray:
        """Apply ``-Delta`` with this grid's kinetic symbol."""
        return np.fft.ifft(self.kinetic_symbol() * np.fft.fft(values))

    def gradient(self, values: np.ndarray) -> np.ndarray:
        k = self.k.copy()
        if self.M % 2 == 0:
            k[self.M // 2] = 0.0  # odd derivative: drop the unpaired Nyquist mode
        return np.fft.ifft(1j * k * np.fft.fft(values))

    def convolve(self, f: np.ndarray, g: np.ndarray) -> np.ndarray:
        out = self.h * np.fft.ifft(np.fft.fft(f) * np.fft.fft(g))
        if np.isrealobj(f) and np.isrealobj(g):
            return out.real
        return out

    def inner(self, f: np.ndarray, g: np.ndarray) -> complex:
        return complex(self.h * np.vdot(f, g))

    def l2(self, values: np.ndarray) -> float:
        return float(np.sqrt(self.h * np.sum(np.abs(values) ** 2)))

    def sample(self, func) -> "GridFunction":
        return GridFunction(np.asarray(func(self.x), dtype=complex), self)


@dataclass(frozen=True)
class GridFunction:
    values: np.ndarray
    grid: Grid = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values)
        if vals.shape != (self.grid.M,):
            raise ValueError(f"expected {self.grid.M} samples, got shape {vals.shape}")
        object.__setattr__(self, "values", vals)

    def with_values(self, values: np.ndarray) -> "GridFunction":
        return GridFunction(values, self.grid)


def _same_grid(f: GridFunction, g: GridFunction) -> Grid:
    if f.grid.M != g.grid.M or not np.isclose(f.grid.L, g.grid.L, rtol=0, atol=1e-14):
        raise GridMismatchError(
            f"grid mismatch: (M={f.grid.M}, L={f.grid.L}) vs (M={g.grid.M}, L={g.grid.L})"
        )
    return f.grid


def spectral_laplacian(f: GridFunction) -> GridFunction:
    return f.with_values(f.grid.laplacian(f.values))


def periodic_convolution(f: GridFunction, g: GridFunction) -> GridFunction:
    """``(f*g)(x_i) = h sum_j f(x_j) g(x_i - x_j)`` with periodic wrap."""
    grid = _same_grid(f, g)
    return GridFunction(grid.convolve(f.values, g.values), grid)


def direct_convolution(f: GridFunction, g: GridFunction) -> GridFunction:
    """O(M^2) reference sum for :func:`periodic_convolution`."""
    grid = _same_grid(f, g)
    M = grid.M
    idx = (np.arange(M)[:, None] - np.arange(M)[None, :]) % M
    return GridFunction(grid.h * (g.values[idx] * f.values[None, :]).sum(axis=1), grid)


def inner_product(f: GridFunction, g: GridFunction) -> complex:
    """Discrete L2 pairing, conjugate-linear in ``f``."""
    return _same_grid(f, g).inner(f.values, g.values)


def norms(f: GridFunction) -> dict:
    grid = f.grid
    a = np.abs(f.values)
    return {
        "l1": float(grid.h * a.sum()),
        "l2": grid.l2(f.values),
        "linf": float(a.max()),
        "h1_seminorm": grid.l2(grid.gradient(f.values)),
    }


def unitary_dft(values: np.ndarray) -> np.ndarray:
    return np.fft.fft(values, norm="ortho")
