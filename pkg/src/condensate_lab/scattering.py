"""Zero-energy radial scattering in three dimensions.

Convention: the scattering length of ``v`` is read off the zero-energy
solution of ``-u'' + v u = 0``, ``u(0) = 0``, whose exterior form is
``u = c (r - a)``; this is the operator ``-Delta + v`` acting on ``u(r)/r``.
In this convention the first Born value is ``int_0^inf v(r) r^2 dr``.

Potentials are piecewise smooth. Integration runs segment by segment with a
fixed-step classical Runge-Kutta scheme; every discontinuity is a segment
boundary and the potential is evaluated with one-sided limits there, so the
scheme keeps its fourth order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg
from scipy.integrate import simpson

_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)


class ResonanceError(ArithmeticError):
    pass


class BracketError(RuntimeError):
    pass


@dataclass(frozen=True)
class RadialPotential:
    """Spherically symmetric potential ``v(r)``, zero for ``r > support``."""

    func: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    support: float
    breakpoints: tuple = ()
    nonnegative: bool = True
    label: str = ""

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return np.where(r <= self.support, self.func(r), 0.0)

    def samples(self, dr: float):
        """Values on ``r_i = i*dr``, ``i = 1..P`` covering the support."""
        P = max(1, math.ceil(self.support / dr))
        r = dr * np.arange(1, P + 1)
        return r, self(r)

    def scale(self, s: float) -> "RadialPotential":
        f = self.func
        return RadialPotential(lambda r: s * f(r), self.support, self.breakpoints,
                               self.nonnegative and s >= 0, f"{s:g}*{self.label}")

    def __sub__(self, other: "RadialPotential") -> "RadialPotential":
        f, g = self.func, other.func
        sa, sb = self.support, other.support
        return RadialPotential(
            lambda r: np.where(r <= sa, f(r), 0.0) - np.where(r <= sb, g(r), 0.0),
            max(sa, sb), tuple(sorted({*self.breakpoints, *other.breakpoints, sa, sb})),
            False, f"{self.label}-{other.label}")

    def is_zero(self) -> bool:
        if self.support <= 0:
            return True
        r = np.linspace(0, self.support, 2049)[1:]
        return bool(np.all(self(r) == 0))


def zero_potential() -> RadialPotential:
    return RadialPotential(lambda r: np.zeros_like(np.asarray(r, dtype=float)), 0.0, label="0")


def square_barrier(height: float, R: float) -> RadialPotential:
    return RadialPotential(lambda r: np.where(np.asarray(r) < R, height, 0.0), R, (R,),
                           height >= 0, f"barrier({height:g},{R:g})")


def square_well(depth: float, R: float) -> RadialPotential:
    """``-depth`` on ``r < R``; not sign-definite."""
    return RadialPotential(lambda r: np.where(np.asarray(r) < R, -depth, 0.0), R, (R,),
                           False, f"well({depth:g},{R:g})")


def smooth_bump(height: float, R: float) -> RadialPotential:
    """``height (1 - (r/R)^2)^2`` on ``r < R``."""
    def f(r):
        r = np.asarray(r, dtype=float)
        return np.where(r < R, height * (1 - (r / R) ** 2) ** 2, 0.0)
    return RadialPotential(f, R, (R,), height >= 0, f"bump({height:g},{R:g})")


def shelf(amplitude: float, r_in: float, r_out: float) -> RadialPotential:
    """``amplitude`` on ``r_in < r < r_out``."""
    def f(r):
        r = np.asarray(r, dtype=float)
        return np.where((r > r_in) & (r < r_out), amplitude, 0.0)
    return RadialPotential(f, r_out, (r_in, r_out), amplitude >= 0, f"shelf({amplitude:g})")


def scaled(v: RadialPotential, N: float, beta: float) -> RadialPotential:
    """``N^(-1+3 beta) v(N^beta r)``; support shrinks to ``support * N^-beta``."""
    s = N**beta
    pref = N ** (-1.0 + 3.0 * beta)
    f = v.func
    return RadialPotential(lambda r: pref * f(s * np.asarray(r, dtype=float)), v.support / s,
                           tuple(b / s for b in v.breakpoints), v.nonnegative,
                           f"scaled({v.label},N={N:g},beta={beta:g})")


# --- integration ------------------------------------------------------------------


def _segment_points(v: RadialPotential, lo: float, hi: float, resolution: float) -> int:
    probe = np.linspace(lo, hi, 257)[1:-1]
    kappa = math.sqrt(float(np.max(np.abs(v.func(probe))))) if len(probe) else 0.0
    return max(int(math.ceil(64 * resolution)),
               int(math.ceil(40 * resolution * kappa * (hi - lo))))


def segments(v: RadialPotential, r_end: float, resolution: float = 1.0, extra=()) -> list:
    """Node arrays for each smooth piece of ``v`` on ``[0, r_end]``."""
    breaks = {0.0, r_end, *extra}
    breaks.update(b for b in (*v.breakpoints, v.support) if 0 < b < r_end)
    breaks = sorted(breaks)
    out = []
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        if hi <= lo:
            continue
        if lo >= v.support:
            n = max(1, int(math.ceil(8 * resolution)))  # v = 0: the scheme is exact
        else:
            n = _segment_points(v, lo, hi, resolution)
        out.append(np.linspace(lo, hi, n + 1))
    return out


def _step_matrices(v: RadialPotential, r: np.ndarray) -> np.ndarray:
    """RK4 transfer matrices for ``y' = [[0, 1], [v, 0]] y`` on one segment."""
    lo, hi = r[0], r[-1]
    h = np.diff(r)
    inside = (lo + 0.0, hi)
    a = np.clip(r[:-1], np.nextafter(inside[0], hi), np.nextafter(hi, lo))
    b = np.clip(r[1:], np.nextafter(inside[0], hi), np.nextafter(hi, lo))
    v0 = v.func(a)
    v1 = v.func(0.5 * (r[:-1] + r[1:]))
    v2 = v.func(b)
    n = len(h)
    I = np.broadcast_to(np.eye(2), (n, 2, 2))

    def A(vals):
        out = np.zeros((n, 2, 2))
        out[:, 0, 1] = 1.0
        out[:, 1, 0] = vals
        return out

    A0, A1, A2 = A(v0), A(v1), A(v2)
    hh = h[:, None, None]
    K1 = A0
    K2 = A1 @ (I + 0.5 * hh * K1)
    K3 = A1 @ (I + 0.5 * hh * K2)
    K4 = A2 @ (I + hh * K3)
    return I + hh / 6.0 * (K1 + 2 * K2 + 2 * K3 + K4)


@dataclass
class RadialSolution:
    r: np.ndarray
    u: np.ndarray
    du: np.ndarray


def integrate(v: RadialPotential, segs: list, y0=(0.0, 1.0), keep_profile: bool = True):
    """Propagate ``(u, u')`` through ``segs``.

    Values are rescaled to stay finite; the returned profile is normalized
    consistently with the final state (early values may underflow to zero
    when the solution grows by many orders of magnitude).
    """
    u, du = float(y0[0]), float(y0[1])
    logs = 0.0
    rs, us, dus, ls = [], [], [], []
    for r in segs:
        mats = _step_matrices(v, r).tolist()
        if keep_profile:
            rs.append(r[:-1])
        for m in mats:
            if keep_profile:
                us.append(u)
                dus.append(du)
                ls.append(logs)
            u, du = m[0][0] * u + m[0][1] * du, m[1][0] * u + m[1][1] * du
            big = max(abs(u), abs(du))
            if big > 1e100:
                u /= big
                du /= big
                logs += math.log(big)
    if not keep_profile:
        return u, du
    rs.append(np.array([segs[-1][-1]]))
    us.append(u)
    dus.append(du)
    ls.append(logs)
    scale = np.exp(np.array(ls) - logs)
    return RadialSolution(np.concatenate(rs), np.array(us) * scale, np.array(dus) * scale)


@dataclass
class ScatteringSolution:
    a: float
    c: float
    r: np.ndarray
    u: np.ndarray
    f: np.ndarray
    match_radius: float


RESONANCE_RATIO = 1e-6


def _length_from_state(R: float, u: float, du: float) -> float:
    # |a| beyond 1e6 support radii is a zero-energy resonance at integration accuracy
    if abs(du) * max(R, 1e-300) <= RESONANCE_RATIO * abs(u):
        raise ResonanceError(f"zero-energy resonance: exterior slope {du:.3e} vanishes at R={R:.6g}")
    return R - u / du


def scattering_length(v: RadialPotential, resolution: float = 1.0, r_max: float | None = None,
                      slope: float = 1.0) -> ScatteringSolution:
    """Shoot from ``u(0)=0, u'(0)=slope`` and match ``u = c (r - a)`` at the support edge."""
    R = v.support
    if R <= 0 or v.is_zero():
        r = np.linspace(0, r_max or 1.0, 65)
        return ScatteringSolution(0.0, slope, r, slope * r, np.ones_like(r), 0.0)
    segs = segments(v, R, resolution)
    if v.nonnegative:
        for s in segs:
            if np.any(v.func(0.5 * (s[:-1] + s[1:])) < 0):
                raise ValueError(f"potential {v.label} flagged nonnegative has negative values")
    sol = integrate(v, segs, (0.0, slope))
    u_R, du_R = sol.u[-1], sol.du[-1]
    a = _length_from_state(R, u_R, du_R)
    r, u = sol.r, sol.u
    if r_max is not None and r_max > R:
        tail = np.linspace(R, r_max, 129)[1:]
        r = np.concatenate([r, tail])
        u = np.concatenate([u, u_R + du_R * (tail - R)])
    with np.errstate(divide="ignore", invalid="ignore"):
        f = np.where(r > 0, u / (du_R * r), 0.0)
    if r[0] == 0:
        f[0] = sol.du[0] / du_R  # u/r -> u'(0)
    return ScatteringSolution(float(a), float(du_R), r, u, f, R)


def born_approximation(v: RadialPotential) -> float:
    """First Born value ``(1/4 pi) int v d^3x = int v(r) r^2 dr``."""
    return radial_moment(v, 2)


def radial_moment(v: RadialPotential, power: int = 2, pieces: int = 8) -> float:
    if v.support <= 0:
        return 0.0
    breaks = sorted({0.0, v.support, *(b for b in v.breakpoints if 0 < b < v.support)})
    total = 0.0
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        edges = np.linspace(lo, hi, pieces + 1)
        for a, b in zip(edges[:-1], edges[1:]):
            x = 0.5 * (b - a) * _GL_X + 0.5 * (a + b)
            total += 0.5 * (b - a) * float(np.sum(_GL_W * v.func(x) * x**power))
    return total


def l1_norm(v: RadialPotential) -> float:
    """3-D ``L^1`` norm ``4 pi int |v| r^2 dr`` (for sign-definite ``v``)."""
    return 4 * np.pi * abs(radial_moment(v, 2))


# --- microstructure ---------------------------------------------------------------


@dataclass
class MicroStructure:
    beta1: float
    beta2: float
    N: float
    a: float
    amplitude: float
    inner_radius: float
    outer_radius: float
    K: float
    K_spread: float
    r: np.ndarray = field(repr=False)
    f: np.ndarray = field(repr=False)
    j: np.ndarray = field(repr=False)
    pair_potential: RadialPotential = field(repr=False)
    compensated: RadialPotential = field(repr=False)
    scat_value: float = 0.0

    @property
    def g(self) -> np.ndarray:
        return 1.0 - self.f

    def W(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return np.where((r > self.inner_radius) & (r < self.outer_radius), self.amplitude, 0.0)


def _normalized_profile(sol: RadialSolution, R_end: float) -> np.ndarray:
    """``u / (c r)`` with ``c`` the exterior slope at ``R_end``."""
    c = sol.du[-1]
    r = sol.r
    with np.errstate(divide="ignore", invalid="ignore"):
        f = np.where(r > 0, sol.u / (c * r), sol.du / c)
    return f


def build_micro(v_base: RadialPotential, beta1: float, beta2: float, N: float,
                R: float | None = None, pair_factor: float = 0.5, resolution: float = 1.0,
                scan_points: int = 16, cap_factor: float = 4.0,
                max_doublings: int = 8) -> MicroStructure:
    """Shelf ``W = a N^(-1+3 beta1)`` on ``(R N^-beta2, R_out)`` cancelling the scattering length.

    The pair problem uses ``pair_factor * v^N_beta2`` (relative coordinates);
    ``a`` is ``N`` times its scattering length. ``R_out`` is the smallest
    radius with zero scattering length of the compensated potential, found by
    a guarded scan followed by bisection.
    """
    if not 0 < beta1 < beta2 <= 1:
        raise ValueError(f"need 0 < beta1 < beta2 <= 1, got {beta1}, {beta2}")
    R = v_base.support if R is None else R
    if v_base.support > R * (1 + 1e-12):
        raise ValueError(f"support {v_base.support} exceeds the declared radius {R}")
    r_in = R * N ** (-beta2)
    vN = scaled(v_base, N, beta2)
    pair = vN.scale(pair_factor)
    if v_base.is_zero():
        r = np.linspace(0, 2 * max(r_in, N ** (-beta1)), 257)
        one = np.ones_like(r)
        return MicroStructure(beta1, beta2, N, 0.0, 0.0, r_in, r_in, 1.0, 0.0, r, one, one,
                              pair, pair, 0.0)
    a = N * scattering_length(pair, resolution).a
    amp = a * N ** (-1.0 + 3.0 * beta1)

    def compensated(R_out):
        return pair - shelf(amp, r_in, R_out)

    # everything inside r_in is shared by all trial radii
    probe = compensated(2 * r_in)
    prefix = [s for s in segments(probe, r_in, resolution)]
    y_in = integrate(probe, prefix, keep_profile=False)

    def scat(R_out):
        pot = compensated(R_out)
        segs = segments(pot, R_out, resolution)
        tail = [s for s in segs if s[0] >= r_in]
        u, du = integrate(pot, tail, y_in, keep_profile=False)
        return R_out - u / du if du != 0 else -np.inf

    cap = cap_factor * N ** (-beta1) + r_in
    lo = hi = None
    for _ in range(max_doublings + 1):
        grid = np.linspace(r_in, cap, scan_points + 1)[1:]
        vals = [scat(x) for x in grid]
        neg = [i for i, s in enumerate(vals) if s <= 0]
        if neg:
            i = neg[0]
            if i > 0 and np.any(np.diff(vals[: i + 1]) > 0):
                raise BracketError("scattering length not decreasing in the shelf radius before the root")
            lo = grid[i - 1] if i > 0 else r_in
            hi = grid[i]
            break
        cap = r_in + 2 * (cap - r_in)
    if hi is None:
        raise BracketError(f"no sign change of the scattering length up to radius {cap:.4g}")
    s_lo, s_hi = scat(lo) if lo > r_in else a / N, scat(hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        s_mid = scat(mid)
        if s_mid > 0:
            lo, s_lo = mid, s_mid
        else:
            hi, s_hi = mid, s_mid
    R_out = lo if abs(s_lo) < abs(s_hi) else hi

    pot = compensated(R_out)
    r_end = 2.0 * R_out
    segs = segments(pot, r_end, resolution)
    sol = integrate(pot, segs)
    scat_value = _length_from_state(R_out, *_state_at(sol, R_out))
    f = _normalized_profile(sol, r_end)
    jsol = integrate(pair, segs)
    j = _normalized_profile(jsol, r_end)
    inner = (sol.r > 0) & (sol.r <= r_in)
    ratio = j[inner] / f[inner]
    K = float(np.median(ratio))
    spread = float(np.max(np.abs(ratio - K)) / K)
    return MicroStructure(beta1, beta2, N, a, amp, r_in, R_out, K, spread, sol.r, f, j, pair, pot,
                          float(scat_value))


def _state_at(sol: RadialSolution, R: float):
    i = int(np.argmin(np.abs(sol.r - R)))
    return sol.u[i], sol.du[i]


@dataclass
class MicroNorms:
    l2_g: float
    l1_g: float
    bound_l2: float
    bound_l1: float
    pointwise_ok: bool
    pointwise_margin: float
    charge: float
    charge_gap_scaled: float
    f_monotone: bool
    f_le_one: bool
    f_ge_j: bool

    @property
    def l2_ok(self) -> bool:
        return self.l2_g <= self.bound_l2

    @property
    def l1_ok(self) -> bool:
        return self.l1_g <= self.bound_l1

    @property
    def passed(self) -> bool:
        return self.l2_ok and self.l1_ok and self.pointwise_ok


def _piecewise_integral(r: np.ndarray, y: np.ndarray, breaks) -> float:
    total = 0.0
    edges = sorted({r[0], r[-1], *(b for b in breaks if r[0] < b < r[-1])})
    for lo, hi in zip(edges[:-1], edges[1:]):
        m = (r >= lo) & (r <= hi)
        if m.sum() >= 2:
            total += simpson(y[m], x=r[m])
    return total


def micro_norms(ms: MicroStructure, tol: float = 1e-10) -> MicroNorms:
    r, f, g = ms.r, ms.f, ms.g
    a, N, b1 = ms.a, ms.N, ms.beta1
    breaks = (ms.inner_radius, ms.outer_radius, ms.pair_potential.support)
    l2 = math.sqrt(max(0.0, 4 * np.pi * _piecewise_integral(r, g**2 * r**2, breaks)))
    l1 = 4 * np.pi * _piecewise_integral(r, np.abs(g) * r**2, breaks)
    pos = r > 0
    if a > 0:
        margin = float(np.min(a / (N * r[pos]) - np.abs(g[pos])))
    else:
        margin = float(np.min(-np.abs(g[pos])))
    pointwise_ok = margin >= -1e-12
    charge = _piecewise_integral(r, ms.W(r) * f * r**2, breaks)
    return MicroNorms(
        l2_g=l2, l1_g=l1,
        bound_l2=math.sqrt(8 * np.pi) * a * N ** (-1 - b1 / 2),
        bound_l1=16 * np.pi * a * N ** (-1 - 2 * b1),
        pointwise_ok=bool(pointwise_ok), pointwise_margin=margin,
        charge=charge, charge_gap_scaled=N ** (1 - b1) * (charge - a / N),
        f_monotone=bool(np.all(np.diff(f) >= -tol)),
        f_le_one=bool(np.all(f <= 1 + tol)),
        f_ge_j=bool(np.all(f >= ms.j - tol)),
    )


# --- positivity ---------------------------------------------------------------------


@dataclass
class PositivityResult:
    lowest: float
    threshold: float

    @property
    def passed(self) -> bool:
        return self.lowest >= self.threshold


def positivity_check(v_eff: RadialPotential, r_box: float | None = None, resolution: float = 4.0,
                     threshold: float = -1e-8) -> PositivityResult:
    """Lowest Dirichlet eigenvalue of ``-d^2/dr^2 + v_eff`` on ``(0, r_box)``.

    Linear finite elements with a lumped mass matrix on the segment nodes.
    """
    if r_box is None:
        r_box = 4 * v_eff.support if v_eff.support > 0 else 1.0
    segs = segments(v_eff, r_box, resolution)
    min_pts = int(math.ceil(256 * resolution))
    segs = [s if len(s) > min_pts else np.linspace(s[0], s[-1], min_pts + 1) for s in segs]
    r = np.unique(np.concatenate(segs))
    h = np.diff(r)
    mass = 0.5 * (h[:-1] + h[1:])
    # potential averaged over each node's dual cell, respecting jumps
    left = v_eff.func(np.maximum(r[1:-1] - 0.25 * h[:-1], 0))
    right = v_eff.func(r[1:-1] + 0.25 * h[1:])
    vnode = (h[:-1] * left + h[1:] * right) / (h[:-1] + h[1:])
    diag = (1 / h[:-1] + 1 / h[1:]) / mass + vnode
    off = -(1 / h[1:-1]) / np.sqrt(mass[:-1] * mass[1:])
    try:
        w = scipy.linalg.eigh_tridiagonal(diag, off, eigvals_only=True, select="i",
                                          select_range=(0, 0))
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise RuntimeError(f"eigensolver failed: {exc}") from exc
    return PositivityResult(float(w[0]), threshold)


# --- class diagnostics --------------------------------------------------------------


@dataclass
class ClassReport:
    beta: float
    delta: float
    a: float
    rows: list
    slopes: dict


def _loglog_slope(N, y) -> float:
    N, y = np.asarray(N, float), np.abs(np.asarray(y, float))
    ok = y > 0
    if ok.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(N[ok]), np.log(y[ok]), 1)[0])


def class_check(v_base: RadialPotential, beta: float, N_list, delta: float = 0.1,
                a: float | None = None, resolution: float = 1.0) -> ClassReport:
    """Tabulate the scaled family ``v^N_beta`` against the ``W_beta``/``V_beta`` conditions.

    ``a`` defaults to the Born value of ``v_base`` for ``beta < 1`` and to its
    scattering length for ``beta == 1``.
    """
    N_list = list(N_list)
    if sorted(N_list) != N_list:
        raise ValueError("N_list must be ascending")
    if a is None:
        a = scattering_length(v_base, resolution).a if beta >= 1 else born_approximation(v_base)
    rows = []
    for N in N_list:
        vN = scaled(v_base, N, beta)
        r, vals = vN.samples(vN.support / 4096)
        born = born_approximation(vN)
        scat = scattering_length(vN, resolution).a
        row = {
            "N": N, "support": vN.support, "l1": l1_norm(vN), "born": born,
            "linf": float(np.max(np.abs(vals))), "scat": scat,
            "sup_scaled": N ** (1 - 3 * beta) * float(np.max(np.abs(vals))),
            "rel_gap": (scat - a / N) / (a / N),
        }
        gap = (born - a / N) if beta < 1 else (scat - a / N)
        row["trend"] = N ** (1 + delta) * gap
        rows.append(row)
    slopes = {key: _loglog_slope(N_list, [row[key] for row in rows])
              for key in ("support", "sup_scaled", "trend", "scat")}
    return ClassReport(beta, delta, a, rows, slopes)
