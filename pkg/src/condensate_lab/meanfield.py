"""Effective one-body dynamics: free, Hartree and Gross-Pitaevskii kinds.

Convention: ``i d/dt phi = (-Delta + A_t) phi + V[phi] phi`` for every kind,
with ``V = 0``, ``v * |phi|^2`` or ``g_c |phi|^2``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from .grid import Grid, GridFunction


class BlowUpError(FloatingPointError):
    """Raised when the propagated orbital stops being finite."""


@dataclass(frozen=True)
class Orbital:
    psi: GridFunction
    time: float = 0.0

    @property
    def grid(self) -> Grid:
        return self.psi.grid

    @property
    def values(self) -> np.ndarray:
        return self.psi.values

    def norm(self) -> float:
        return self.grid.l2(self.values)

    @classmethod
    def from_values(cls, grid: Grid, values, time: float = 0.0, normalize: bool = True):
        vals = np.asarray(values, dtype=complex)
        if normalize:
            vals = vals / grid.l2(vals)
        return cls(GridFunction(vals, grid), time)


def gaussian_orbital(grid: Grid, width: float, center: float | None = None,
                     momentum: float = 0.0) -> Orbital:
    """Normalized periodic-grid Gaussian ``exp(-(x-c)^2/(4 width^2) + i p x)``."""
    c = grid.L / 2 if center is None else center
    d = (grid.x - c + grid.L / 2) % grid.L - grid.L / 2
    vals = np.exp(-(d**2) / (4 * width**2) + 1j * momentum * grid.x)
    return Orbital.from_values(grid, vals)


def plane_wave_orbital(grid: Grid, mode: int = 0) -> Orbital:
    k = 2 * np.pi * mode / grid.L
    return Orbital.from_values(grid, np.exp(1j * k * grid.x))


@dataclass(frozen=True)
class ExternalPotential:
    """Trap presets ``A_t(x)``.

    ``static_harmonic``: ``omega^2 (x - center)^2`` with the periodic
    minimum-image distance. ``ramped_harmonic``: the same trap multiplied by a
    ramp that is 1 up to ``t_on``, falls linearly and vanishes after
    ``t_off``.
    """

    preset: str = "none"
    omega: float = 0.0
    t_on: float = 0.0
    t_off: float = 0.0
    center: float | None = None

    def __post_init__(self):
        if self.preset not in ("none", "static_harmonic", "ramped_harmonic"):
            raise ValueError(f"unknown trap preset {self.preset!r}")
        if self.preset == "ramped_harmonic" and not self.t_off > self.t_on:
            raise ValueError("ramped trap needs t_off > t_on")

    @classmethod
    def none(cls):
        return cls("none")

    @classmethod
    def static_harmonic(cls, omega: float, center: float | None = None):
        return cls("static_harmonic", omega=omega, center=center)

    @classmethod
    def ramped_harmonic(cls, omega: float, t_on: float, t_off: float, center: float | None = None):
        return cls("ramped_harmonic", omega=omega, t_on=t_on, t_off=t_off, center=center)

    @property
    def is_static(self) -> bool:
        return self.preset != "ramped_harmonic"

    def _shape(self, x: np.ndarray, L: float) -> np.ndarray:
        c = L / 2 if self.center is None else self.center
        d = (x - c + L / 2) % L - L / 2
        return self.omega**2 * d**2

    def ramp(self, t: float) -> float:
        if self.preset == "none":
            return 0.0
        if self.preset == "static_harmonic" or t <= self.t_on:
            return 1.0
        if t >= self.t_off:
            return 0.0
        return (self.t_off - t) / (self.t_off - self.t_on)

    def ramp_rate(self, t: float) -> float:
        if self.preset == "ramped_harmonic" and self.t_on < t < self.t_off:
            return -1.0 / (self.t_off - self.t_on)
        return 0.0

    def at(self, x: np.ndarray, L: float, t: float) -> np.ndarray:
        """Evaluate on arbitrary periodic positions ``x`` in ``[0, L)``."""
        x = np.asarray(x, dtype=float)
        if self.preset == "none":
            return np.zeros_like(x)
        return self.ramp(t) * self._shape(x, L)

    def values(self, grid: Grid, t: float) -> np.ndarray:
        return self.at(grid.x, grid.L, t)

    def time_derivative(self, grid: Grid, t: float) -> np.ndarray:
        if self.preset == "none":
            return np.zeros(grid.M)
        return self.ramp_rate(t) * self._shape(grid.x, grid.L)


@dataclass(frozen=True)
class MeanFieldKind:
    variant: str
    v: np.ndarray | None = field(default=None, repr=False)
    g_c: float = 0.0

    def __post_init__(self):
        if self.variant not in ("free", "hartree", "gp"):
            raise ValueError(f"unknown mean-field kind {self.variant!r}")
        if self.variant == "hartree":
            v = np.asarray(self.v)
            if np.iscomplexobj(v):
                if np.abs(v.imag).max() > 0:
                    raise ValueError("Hartree kernel must be real")
                v = v.real
            if (v < 0).any():
                raise ValueError("Hartree kernel must be nonnegative")
            object.__setattr__(self, "v", v.astype(float))
        if self.variant == "gp" and not (np.isfinite(self.g_c) and self.g_c >= 0):
            raise ValueError(f"GP coupling must be finite and >= 0, got {self.g_c}")

    @classmethod
    def free(cls):
        return cls("free")

    @classmethod
    def hartree(cls, v):
        """``v`` is sampled on grid displacements (index i <-> i*h mod L)."""
        if isinstance(v, GridFunction):
            v = v.values
        return cls("hartree", v=np.asarray(v))

    @classmethod
    def gp(cls, g_c: float):
        return cls("gp", g_c=float(g_c))


def _potential_values(kind: MeanFieldKind, grid: Grid, psi: np.ndarray) -> np.ndarray:
    rho = np.abs(psi) ** 2
    if kind.variant == "free":
        return np.zeros(grid.M)
    if kind.variant == "hartree":
        return grid.convolve(kind.v, rho)
    return kind.g_c * rho


def mean_field_potential(kind: MeanFieldKind, phi: Orbital) -> GridFunction:
    return GridFunction(_potential_values(kind, phi.grid, phi.values), phi.grid)


def mean_field_rhs(psi: np.ndarray, t: float, grid: Grid, kind: MeanFieldKind,
                   A: ExternalPotential) -> np.ndarray:
    """``d/dt phi`` for the method-of-lines system (reference integrators)."""
    pot = A.values(grid, t) + _potential_values(kind, grid, psi)
    return -1j * (grid.kinetic_apply(psi) + pot * psi)


def strang_step(phi: Orbital, dt: float, kind: MeanFieldKind, A: ExternalPotential) -> Orbital:
    """Half kick, exact kinetic flow in Fourier space, half kick.

    The trap is frozen at the step midpoint. The kicks are exact solutions of
    the local-density ODE because they leave ``|phi|`` unchanged, so the map
    is symmetric: a step with ``-dt`` undoes a step with ``dt``.
    """
    grid = phi.grid
    a_mid = A.values(grid, phi.time + 0.5 * dt)
    psi = phi.values
    psi = np.exp(-0.5j * dt * (a_mid + _potential_values(kind, grid, psi))) * psi
    psi = np.fft.ifft(np.exp(-1j * dt * grid.kinetic_symbol()) * np.fft.fft(psi))
    psi = np.exp(-0.5j * dt * (a_mid + _potential_values(kind, grid, psi))) * psi
    if not np.all(np.isfinite(psi)):
        raise BlowUpError(f"non-finite orbital at t={phi.time + dt:.6g}")
    return Orbital(GridFunction(psi, grid), phi.time + dt)


@dataclass(frozen=True)
class EnergyBreakdown:
    e_kin: float
    e_pot: float

    @property
    def e_total(self) -> float:
        return self.e_kin + self.e_pot


def gp_energy(phi: Orbital, A: ExternalPotential, t: float, kind: MeanFieldKind) -> EnergyBreakdown:
    """Energy functional; the interaction enters with weight 1/2."""
    grid = phi.grid
    psi = phi.values
    psi_hat = np.fft.fft(psi)
    # <phi, -Delta phi> in the grid's kinetic symbol (Parseval, h-weighted)
    e_kin = grid.h * float(np.sum(grid.kinetic_symbol() * np.abs(psi_hat) ** 2)) / grid.M
    rho = np.abs(psi) ** 2
    e_pot = grid.h * float(np.sum(A.values(grid, t) * rho))
    if kind.variant != "free":
        e_pot += 0.5 * grid.h * float(np.sum(_potential_values(kind, grid, psi) * rho))
    return EnergyBreakdown(e_kin, e_pot)


def trap_power(phi: Orbital, A: ExternalPotential, t: float) -> float:
    """``<phi, (d/dt A_t) phi>``, the exact rate of change of the energy."""
    grid = phi.grid
    return grid.h * float(np.sum(A.time_derivative(grid, t) * np.abs(phi.values) ** 2))


@dataclass(frozen=True)
class RegularityReport:
    sup_linf: float
    sup_grad_linf: float
    sup_lap_linf: float
    decay_integral: float


@dataclass
class Trajectory:
    orbitals: list
    report: RegularityReport

    @property
    def times(self) -> np.ndarray:
        return np.array([o.time for o in self.orbitals])


def _sup_norms(phi: Orbital) -> tuple[float, float, float]:
    grid = phi.grid
    psi = phi.values
    return (
        float(np.abs(psi).max()),
        float(np.abs(grid.gradient(psi)).max()),
        float(np.abs(grid.laplacian(psi)).max()),
    )


def regularity_report(orbitals) -> RegularityReport:
    norms = np.array([_sup_norms(o) for o in orbitals])
    times = np.array([o.time for o in orbitals])
    integrand = norms[:, 0] + norms[:, 1]
    decay = float(trapezoid(integrand, times)) if len(times) > 1 else 0.0
    return RegularityReport(*(float(v) for v in norms.max(axis=0)), decay)


def evolve(phi0: Orbital, T: float, dt: float, kind: MeanFieldKind, A: ExternalPotential,
           stride: int = 1) -> Trajectory:
    if T < 0 or dt <= 0:
        raise ValueError("evolve needs T >= 0 and dt > 0")
    if T == 0:
        return Trajectory([phi0], regularity_report([phi0]))
    if dt > T:
        raise ValueError(f"dt={dt} exceeds T={T}")
    n_steps = int(round(T / dt))
    if not np.isclose(n_steps * dt, T, rtol=1e-9, atol=0):
        raise ValueError(f"T={T} is not a multiple of dt={dt}")
    samples = [phi0]
    phi = phi0
    for n in range(1, n_steps + 1):
        phi = strang_step(phi, dt, kind, A)
        if n % stride == 0 or n == n_steps:
            samples.append(phi)
    return Trajectory(samples, regularity_report(samples))


TRAJECTORY_COLUMNS = ("t", "norm", "e_kin", "e_pot", "e_total", "linf", "grad_linf")


def trajectory_rows(traj: Trajectory, kind: MeanFieldKind, A: ExternalPotential) -> list[dict]:
    rows = []
    for phi in traj.orbitals:
        e = gp_energy(phi, A, phi.time, kind)
        linf, grad_linf, _ = _sup_norms(phi)
        rows.append({
            "t": phi.time, "norm": phi.norm(), "e_kin": e.e_kin, "e_pot": e.e_pot,
            "e_total": e.e_total, "linf": linf, "grad_linf": grad_linf,
        })
    return rows


def write_trajectory_csv(path, traj: Trajectory, kind: MeanFieldKind, A: ExternalPotential) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRAJECTORY_COLUMNS)
        for row in trajectory_rows(traj, kind, A):
            writer.writerow([repr(float(row[c])) for c in TRAJECTORY_COLUMNS])
