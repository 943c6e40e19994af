"""Convergence sweeps: co-evolve lattice many-body and mean-field dynamics.

A sweep runs, for each particle number N, the exact lattice dynamics from a
product state and the mean-field orbital with the matching coupling, and
records the counting functional along the way. Output files are
deterministic; timing goes to the log only.
"""
from __future__ import annotations

import csv
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
from scipy.integrate import solve_ivp

from . import __version__
from .counting import alpha_derivative_terms, apply_hat, HatWeights, pk_weights
from .manybody import (FIRST_QUANTIZED_MAX_M, FIRST_QUANTIZED_MAX_N, LatticeConfig, PairInteraction,
                       basis_dimension, MAX_BASIS_DIM, build_hamiltonian, fock_basis, krylov_expm,
                       product_state, profile_from_function)
from .meanfield import (ExternalPotential, MeanFieldKind, Orbital, gaussian_orbital, gp_energy,
                        mean_field_rhs, regularity_report, strang_step, _potential_values)

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger(__name__)

REGIMES = ("hartree", "gp_proxy")
SUMMARY_COLUMNS = ("N", "alpha_T", "envelope_T", "cond1", "cond2")
RECORD_COLUMNS = ("t", "alpha", "alpha2", "condensate_overlap", "energy_per_particle", "e_gp",
                  "envelope")
MAX_FITTED_C = 50.0
# tracked counting functional: <n^2> (= <k>/N) or <n>
FUNCTIONALS = {"n2": "alpha2", "n": "alpha"}


class ConfigError(ValueError):
    pass


@dataclass
class SweepConfig:
    """Everything a sweep needs. TOML tables mirror the nested dicts."""

    regime: str = "hartree"
    N_list: tuple = (2, 4, 6, 8)
    M: int = 8
    L: float = 8.0
    interaction: dict = field(default_factory=lambda: {"preset": "gaussian", "strength": 4.0,
                                                       "range": 1.0})
    trap: dict = field(default_factory=lambda: {"preset": "none"})
    phi0: dict = field(default_factory=lambda: {"preset": "gaussian", "width": 1.0,
                                                "momentum": 0.0})
    T: float = 1.0
    dt: float = 0.01
    stride: int = 10
    beta: float = 0.0
    lam: float | None = None
    gamma: float = 0.1
    delta: float = 0.1
    krylov_dim: int = 20
    tol: float = 1e-12
    functional: str = "n2"
    meanfield: dict = field(default_factory=dict)
    scatter: dict = field(default_factory=dict)
    report: dict = field(default_factory=dict)
    out: str = "runs/sweep"
    seed: int = 0

    def __post_init__(self):
        self.N_list = tuple(int(n) for n in self.N_list)
        if self.regime not in REGIMES:
            raise ConfigError(f"regime must be one of {REGIMES}, got {self.regime!r}")
        if not self.N_list or list(self.N_list) != sorted(set(self.N_list)):
            raise ConfigError(f"N_list must be strictly ascending, got {self.N_list}")
        if self.N_list[0] < 1:
            raise ConfigError("particle numbers must be positive")
        for N in self.N_list:
            dim = basis_dimension(N, self.M)
            if dim > MAX_BASIS_DIM:
                raise ConfigError(f"N={N}, M={self.M} gives basis dimension {dim} > {MAX_BASIS_DIM}")
        if not (self.T >= 0 and self.dt > 0 and self.stride >= 1):
            raise ConfigError("need T >= 0, dt > 0, stride >= 1")
        n = round(self.T / self.dt)
        if self.T > 0 and not math.isclose(n * self.dt, self.T, rel_tol=1e-9):
            raise ConfigError(f"T={self.T} is not a multiple of dt={self.dt}")
        if self.functional not in FUNCTIONALS:
            raise ConfigError(f"functional must be one of {tuple(FUNCTIONALS)}")
        if self.regime == "hartree" and self.beta != 0:
            raise ConfigError("hartree regime has beta = 0")

    @classmethod
    def from_dict(cls, data: dict) -> "SweepConfig":
        flat = {}
        for key, val in data.items():
            if key in ("lattice", "run") and isinstance(val, dict):
                flat.update(val)
            else:
                flat[key] = val
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(flat) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**flat)

    @classmethod
    def from_toml(cls, path) -> "SweepConfig":
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["N_list"] = list(self.N_list)
        return d

    # builders

    def lattice(self) -> LatticeConfig:
        return LatticeConfig(self.M, self.L / self.M)

    def profile(self, lat: LatticeConfig) -> np.ndarray:
        opts = dict(self.interaction)
        preset = opts.pop("preset", "none")
        if preset == "none":
            return np.zeros(lat.M)
        strength = float(opts.get("strength", 1.0))
        if preset == "gaussian":
            s = float(opts.get("range", 1.0))
            return profile_from_function(lat, lambda r: strength * np.exp(-r**2 / (2 * s**2)),
                                         opts.get("cutoff"))
        if preset == "onsite":
            v = np.zeros(lat.M)
            v[0] = strength / lat.h
            return v
        raise ConfigError(f"unknown interaction preset {preset!r}")

    def pair(self, N: int, lat: LatticeConfig) -> PairInteraction:
        profile = self.profile(lat)
        if self.regime == "hartree":
            return PairInteraction.hartree(profile, N)
        lam = self.lam if self.lam is not None else lat.h * profile.sum()
        return PairInteraction.gp_proxy(lam, self.beta, N, lat.M)

    def kind(self, N: int, lat: LatticeConfig) -> MeanFieldKind:
        return matched_kind(self.pair(N, lat), lat)

    def external(self) -> ExternalPotential:
        opts = dict(self.trap)
        try:
            return ExternalPotential(**opts)
        except TypeError as exc:
            raise ConfigError(f"bad trap table: {exc}") from exc

    def initial_orbital(self, lat: LatticeConfig) -> Orbital:
        grid = lat.grid()
        opts = dict(self.phi0)
        preset = opts.pop("preset", "gaussian")
        if preset == "gaussian":
            return gaussian_orbital(grid, float(opts.get("width", 1.0)), opts.get("center"),
                                    float(opts.get("momentum", 0.0)))
        if preset == "random":
            # smooth random orbital from the lowest Fourier modes
            rng = np.random.default_rng(self.seed)
            modes = int(opts.get("modes", 2))
            c = np.zeros(grid.M, dtype=complex)
            idx = np.r_[0:modes + 1, grid.M - modes:grid.M]
            c[idx] = rng.normal(size=len(idx)) + 1j * rng.normal(size=len(idx))
            return Orbital.from_values(grid, np.fft.ifft(c))
        raise ConfigError(f"unknown phi0 preset {preset!r}")


def matched_kind(pair: PairInteraction, lat: LatticeConfig) -> MeanFieldKind:
    """Mean-field coupling that reproduces the lattice pair term.

    The pair term sums over ordered pairs, so each particle feels
    ``2 (N-1) v_eff * rho``; the kernel is ``2 * profile`` (Hartree) and
    ``2 N g_N`` (on-site proxy), dropping the ``(N-1)/N`` factor.
    """
    if pair.beta == 0.0:
        if not np.any(pair.profile):
            return MeanFieldKind.free()
        return MeanFieldKind.hartree(2.0 * pair.profile)
    g = pair.proxy_coupling(lat.h)
    return MeanFieldKind.gp(2.0 * pair.N * g) if g else MeanFieldKind.free()


# --- envelopes and conditions ---------------------------------------------------------


def gronwall_envelope(alpha0: float, C: float, N: float, t: float, mode: str = "hartree",
                      phi_norm_integral: float | None = None, gamma: float = 0.1) -> float:
    """Upper curve from ``|alpha'| <= C (alpha + small)``.

    hartree: ``(alpha0 + N^-1/2) e^(C t) - N^-1/2``.
    gp: ``zeta = N^-gamma + (ln N)^(1/3) alpha`` grows like
    ``exp(C (ln N)^(1/3) I_t)``; ``I_t`` defaults to ``t``.
    """
    if N < 2:
        raise ValueError(f"envelope needs N >= 2, got {N}")
    if not C > 0:
        raise ValueError(f"envelope needs C > 0, got {C}")
    if t == 0:
        return float(alpha0)
    if mode == "hartree":
        s = N**-0.5
        return (alpha0 + s) * math.exp(C * t) - s
    if mode == "gp":
        I = t if phi_norm_integral is None else phi_norm_integral
        Lg = math.log(N) ** (1.0 / 3.0)
        small = N**-gamma
        zeta = (small + Lg * alpha0) * math.exp(C * Lg * I)
        return (zeta - small) / Lg
    raise ValueError(f"unknown envelope mode {mode!r}")


def fit_envelope_constant(times, alphas, N: float) -> float:
    """Smallest ``C`` whose hartree envelope dominates every sample."""
    s = N**-0.5
    a0 = alphas[0]
    C = 1e-12
    for t, a in zip(times[1:], alphas[1:]):
        if t > 0:
            C = max(C, math.log((a + s) / (a0 + s)) / t)
    return C * (1 + 1e-9) + 1e-12


def condition_report(cfg: SweepConfig, N: int) -> dict:
    """Initial-data quantities: ``<n^2>`` and the energy mismatch per particle."""
    lat = cfg.lattice()
    pair = cfg.pair(N, lat)
    kind = matched_kind(pair, lat)
    A = cfg.external()
    phi0 = cfg.initial_orbital(lat)
    psi0 = product_state(phi0.values, N, lat.h)
    cond1 = pk_weights(psi0, phi0.values).moment(2.0)
    H = build_hamiltonian(lat, pair, A, 0.0)
    e_many = float(np.vdot(psi0.coeffs, H.matvec(psi0.coeffs)).real) / N
    cond2 = e_many - gp_energy(phi0, A, 0.0, kind).e_total
    pref = N**cfg.delta
    return {"N": N, "cond1": cond1, "cond2": cond2, "cond1_scaled": pref * cond1,
            "cond2_scaled": pref * cond2}


# --- single run ---------------------------------------------------------------------------


@dataclass
class RunRecord:
    N: int
    rows: list
    tracked: str = "alpha2"
    C_fit: float = float("nan")
    conditions: dict = field(default_factory=dict)
    regularity: dict = field(default_factory=dict)
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None

    @property
    def alpha_T(self) -> float:
        return self.rows[-1][self.tracked] if self.rows else float("nan")

    @property
    def dominated(self) -> bool:
        """Fitted constant within range and envelope above every sample."""
        return (self.ok and self.C_fit <= MAX_FITTED_C
                and all(r[self.tracked] <= r["envelope"] for r in self.rows))

    @property
    def envelope_T(self) -> float:
        return self.rows[-1]["envelope"] if self.rows else float("nan")


def run_single(cfg: SweepConfig, N: int) -> RunRecord:
    lat = cfg.lattice()
    pair = cfg.pair(N, lat)
    kind = matched_kind(pair, lat)
    A = cfg.external()
    phi = cfg.initial_orbital(lat)
    state = product_state(phi.values, N, lat.h)
    H = build_hamiltonian(lat, pair, A, 0.0)
    basis = H.basis
    c = state.coeffs
    n_steps = int(round(cfg.T / cfg.dt))

    def sample(t, phi, c):
        st = state.with_coeffs(c)
        w = pk_weights(st, phi.values)
        Ht = H if A.is_static else H.with_trap(basis.states @ A.at(lat.x, lat.L, t))
        return {
            "t": t, "alpha": w.moment(1.0), "alpha2": w.moment(2.0),
            "condensate_overlap": 1.0 - w.moment(2.0),
            "energy_per_particle": float(np.vdot(c, Ht.matvec(c)).real) / N,
            "e_gp": gp_energy(phi, A, t, kind).e_total,
        }

    rows = [sample(0.0, phi, c)]
    orbitals = [phi]
    for n in range(1, n_steps + 1):
        t_mid = (n - 0.5) * cfg.dt
        Hn = H if A.is_static else H.with_trap(basis.states @ A.at(lat.x, lat.L, t_mid))
        c = krylov_expm(Hn.matvec, c, cfg.dt, cfg.krylov_dim, cfg.tol)
        phi = strang_step(phi, cfg.dt, kind, A)
        if n % cfg.stride == 0 or n == n_steps:
            t = n * cfg.dt
            phi = Orbital(phi.psi, t)  # pin the clock against rounding drift
            rows.append(sample(t, phi, c))
            orbitals.append(phi)
    key = FUNCTIONALS[cfg.functional]
    times = [r["t"] for r in rows]
    C = fit_envelope_constant(times, [r[key] for r in rows], N) if N >= 2 else float("nan")
    for r in rows:
        r["envelope"] = gronwall_envelope(rows[0][key], C, N, r["t"]) if N >= 2 else float("nan")
    reg = regularity_report(orbitals)
    return RunRecord(N, rows, key, C, condition_report(cfg, N), asdict(reg))


def _run_guarded(args):
    cfg, N = args
    try:
        return run_single(cfg, N)
    except (ArithmeticError, RuntimeError, ValueError) as exc:
        return RunRecord(N, [], FUNCTIONALS[cfg.functional], error=f"{type(exc).__name__}: {exc}")


def worker_count(n_tasks: int) -> int:
    cap = os.environ.get("CONDENSATE_LAB_THREADS")
    limit = int(cap) if cap else (os.cpu_count() or 1)
    return max(1, min(n_tasks, limit))


def run_convergence(cfg: SweepConfig, out: str | Path | None = None) -> list:
    """Sweep ``cfg.N_list``; writes ``N<n>.csv``, ``summary.csv`` and ``meta.json``."""
    tasks = [(cfg, N) for N in cfg.N_list]
    workers = worker_count(len(tasks))
    if workers == 1:
        records = [_run_guarded(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_guarded, tasks))
    records.sort(key=lambda r: r.N)
    out = Path(out if out is not None else cfg.out)
    write_outputs(cfg, records, out)
    return records


def _fmt(x) -> str:
    return repr(float(x))


def write_outputs(cfg: SweepConfig, records: list, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    for rec in records:
        with open(out / f"N{rec.N}.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(RECORD_COLUMNS)
            for row in rec.rows:
                w.writerow([_fmt(row[c]) for c in RECORD_COLUMNS])
    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for rec in records:
            cond = rec.conditions or {"cond1": float("nan"), "cond2": float("nan")}
            w.writerow([rec.N, _fmt(rec.alpha_T), _fmt(rec.envelope_T), _fmt(cond["cond1"]),
                        _fmt(cond["cond2"])])
    meta = {
        "code_version": __version__,
        "config": cfg.to_dict(),
        "qualitative": cfg.regime == "gp_proxy",
        "tracked": FUNCTIONALS[cfg.functional],
        "runs": {str(rec.N): {"C_fit": rec.C_fit, "dominated": rec.dominated, "conditions": rec.conditions,
                              "regularity": rec.regularity, "error": rec.error}
                 for rec in records},
    }
    (out / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


# --- derivative identity ------------------------------------------------------------------


def _reference_solution(cfg: SweepConfig, N: int, t_eval, rtol=1e-12, atol=1e-14):
    """Joint high-accuracy integration of the many-body state and the orbital."""
    lat = cfg.lattice()
    pair = cfg.pair(N, lat)
    kind = matched_kind(pair, lat)
    A = cfg.external()
    grid = lat.grid()
    phi0 = cfg.initial_orbital(lat)
    state = product_state(phi0.values, N, lat.h)
    H = build_hamiltonian(lat, pair, A, 0.0)
    states = H.basis.states
    dim = H.basis.dim

    def rhs(t, y):
        Ht = H if A.is_static else H.with_trap(states @ A.at(lat.x, lat.L, t))
        return np.concatenate([-1j * Ht.matvec(y[:dim]), mean_field_rhs(y[dim:], t, grid, kind, A)])

    y0 = np.concatenate([state.coeffs, phi0.values])
    t_eval = np.asarray(t_eval, dtype=float)
    sol = solve_ivp(rhs, (0.0, float(t_eval.max())), y0, method="DOP853", t_eval=t_eval,
                    rtol=rtol, atol=atol)
    if not sol.success:
        raise RuntimeError(f"reference integration failed: {sol.message}")
    out = {}
    for k, t in enumerate(sol.t):
        c = sol.y[:dim, k]
        out[float(t)] = (state.with_coeffs(c / np.linalg.norm(c)), sol.y[dim:, k])
    return out, lat, pair, kind


def derivative_identity_report(cfg: SweepConfig, N: int, dt_list, sample_times=None) -> dict:
    """Centered difference of ``<n>`` against the two-term derivative formula."""
    if N > FIRST_QUANTIZED_MAX_N or cfg.M > FIRST_QUANTIZED_MAX_M:
        raise ValueError(f"N={N}, M={cfg.M} exceeds the tensor budget "
                         f"({FIRST_QUANTIZED_MAX_N}, {FIRST_QUANTIZED_MAX_M})")
    dt_list = sorted(float(d) for d in dt_list)[::-1]
    if sample_times is None:
        sample_times = np.linspace(0, cfg.T, 5)[1:]
    pts = {round(float(t), 14) for t in sample_times}
    for t in sample_times:
        for d in dt_list:
            pts.update((round(t - d, 14), round(t + d, 14)))
    if min(pts) < 0:
        raise ValueError("sample times must exceed the largest dt")
    ref, lat, pair, kind = _reference_solution(cfg, N, sorted(pts))

    def at(t):
        return ref[round(float(t), 14)]

    def alpha(t):
        st, phi = at(t)
        return pk_weights(st, phi).moment(1.0)

    rates = {}
    for t in sample_times:
        st, phi = at(t)
        rates[t] = alpha_derivative_terms(st, phi, lat, pair, kind).rate
    errors = []
    for d in dt_list:
        errors.append(max(abs((alpha(t + d) - alpha(t - d)) / (2 * d) - rates[t])
                          for t in sample_times))
    orders = [math.log2(e2 / e1) if e1 > 0 and e2 > 0 else float("nan")
              for e2, e1 in zip(errors[:-1], errors[1:])]
    return {"N": N, "dt": dt_list, "errors": errors, "orders": orders,
            "rates": [rates[t] for t in sample_times], "times": [float(t) for t in sample_times]}


def commutator_rate(state, phi, lat: LatticeConfig, pair: PairInteraction,
                    kind: MeanFieldKind) -> float:
    """``i <[H - H_mf, n] >`` from dense matrices; the one-body parts cancel."""
    basis = fock_basis(state.N, state.M)
    dim = basis.dim
    D = build_hamiltonian(lat, pair, ExternalPotential.none()).interaction.copy()
    if kind.variant != "free":
        V = _potential_values(kind, lat.grid(), np.asarray(phi, dtype=complex)).real
        D = D - basis.states @ V
    nhat = np.column_stack([apply_hat(state, phi, HatWeights.n(state.N), e)
                            for e in np.eye(dim)])
    comm = np.diag(D) @ nhat - nhat @ np.diag(D)
    c = state.coeffs
    return float((1j * np.vdot(c, comm @ c)).real)


# --- invariant checks -----------------------------------------------------------------

CHECK_SHAPES = tuple((N, M) for N in (2, 3, 4) for M in (3, 4, 5))
CHECK_TOL = 1e-10


def manybody_invariants(seed: int) -> dict:
    """Residuals of structural facts of the lattice model (all should vanish)."""
    from scipy.sparse.linalg import expm_multiply

    from .counting import pk_weights_first_quantized, reduced_density
    from .manybody import random_state, to_first_quantized, translation_operator

    rng = np.random.default_rng([seed, 7919])
    out = {}
    lat = LatticeConfig(5, 1.0)
    profile = profile_from_function(lat, lambda r: np.exp(-r**2))
    pair = PairInteraction.hartree(profile, 3)
    H = build_hamiltonian(lat, pair, ExternalPotential.none())
    Hd = H.toarray()
    out["hermiticity"] = float(np.abs(Hd - Hd.conj().T).max())
    Tm = translation_operator(H.basis).toarray()
    out["translation_commutator"] = float(np.abs(Hd @ Tm - Tm @ Hd).max())

    state = random_state(3, 5, rng, lat.h)
    c = state.coeffs
    for _ in range(10):
        c = krylov_expm(H.matvec, c, 0.05)
    out["krylov_norm_drift"] = abs(float(np.linalg.norm(c)) - 1.0)
    ref = expm_multiply(-0.5j * H.matrix(), state.coeffs)
    out["krylov_vs_expm"] = float(np.linalg.norm(c - ref))

    psi = rng.normal(size=5) + 1j * rng.normal(size=5)
    phi = psi / np.linalg.norm(psi)
    worst = 0.0
    for N in (2, 3, 4):
        st = random_state(N, 5, rng)
        a = pk_weights(st, phi).w
        b = pk_weights_first_quantized(to_first_quantized(st), phi).w
        worst = max(worst, float(np.abs(a - b).max()))
    out["backend_equivalence"] = worst

    st = random_state(4, 5, rng)
    rho = reduced_density(st, phi)
    out["density_identity"] = abs(1 - rho.condensate_overlap - pk_weights(st, phi).moment(2.0))
    prod = product_state(phi, 4)
    out["product_density"] = float(np.abs(reduced_density(prod).mu - np.outer(phi, phi.conj())).max())

    # two bosons, two sites, no hopping, on-site U: spectrum {0, 2U, 2U}
    U = 3.0
    lat2 = LatticeConfig(2, 1.0, hopping=0.0)
    H2 = build_hamiltonian(lat2, PairInteraction.hartree([2 * U, 0.0], 2), ExternalPotential.none())
    ev = np.sort(np.linalg.eigvalsh(H2.toarray()))
    out["onsite_pair_spectrum"] = float(np.abs(ev - [0.0, 2 * U, 2 * U]).max())
    return out


def run_checks(seed: int, trials: int = 20) -> dict:
    from .counting import identity_suite

    suites = [identity_suite(seed, N, M, trials) for N, M in CHECK_SHAPES]
    invariants = manybody_invariants(seed)
    worst = max(max(s["max_residual"].values()) for s in suites)
    violations = sum(sum(s["violations"].values()) for s in suites)
    passed = (worst <= CHECK_TOL and violations == 0
              and max(invariants.values()) <= CHECK_TOL)
    return {"seed": seed, "trials": trials, "identity_suites": suites,
            "manybody": invariants, "max_identity_residual": worst,
            "inequality_violations": violations, "passed": bool(passed)}


# --- scattering sweep, single mean-field run, reports ---------------------------------

SCATTER_COLUMNS = ("beta1", "beta2", "N", "a", "R_out", "l2_g", "l1_g", "bound_l2", "bound_l1",
                   "pointwise_ok", "lowest_eig")


@dataclass
class ScatterConfig:
    potential: dict = field(default_factory=lambda: {"preset": "barrier", "height": 1.0,
                                                     "radius": 1.0})
    N_list: tuple = (100, 1000, 10000)
    beta1_list: tuple = (0.25, 2 / 7)
    beta2_list: tuple = (0.5, 1.0)
    resolution: float = 1.0

    @classmethod
    def from_dict(cls, data: dict) -> "ScatterConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown [scatter] keys: {', '.join(unknown)}")
        return cls(**data)

    def base_potential(self):
        from .scattering import smooth_bump, square_barrier

        opts = dict(self.potential)
        preset = opts.get("preset", "barrier")
        height, radius = float(opts.get("height", 1.0)), float(opts.get("radius", 1.0))
        if preset == "barrier":
            return square_barrier(height, radius)
        if preset == "bump":
            return smooth_bump(height, radius)
        raise ConfigError(f"unknown scattering potential preset {preset!r}")


def scatter_sweep(cfg: ScatterConfig) -> list:
    from .scattering import build_micro, micro_norms, positivity_check

    v = cfg.base_potential()
    rows = []
    for b1 in cfg.beta1_list:
        for b2 in cfg.beta2_list:
            for N in cfg.N_list:
                ms = build_micro(v, b1, b2, N, resolution=cfg.resolution)
                mn = micro_norms(ms)
                eig = positivity_check(ms.compensated).lowest
                rows.append({"beta1": b1, "beta2": b2, "N": N, "a": ms.a, "R_out": ms.outer_radius,
                             "l2_g": mn.l2_g, "l1_g": mn.l1_g, "bound_l2": mn.bound_l2,
                             "bound_l1": mn.bound_l1, "pointwise_ok": mn.pointwise_ok,
                             "lowest_eig": eig})
    return rows


def _cell(x):
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_csv(path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(row[c]) for c in columns])


def run_meanfield(cfg: SweepConfig, out: Path):
    """Single mean-field trajectory with the coupling of ``N = max(N_list)``."""
    from .grid import Grid
    from .meanfield import evolve, write_trajectory_csv

    opts = dict(cfg.meanfield)
    N = int(opts.get("N", cfg.N_list[-1]))
    lat = cfg.lattice()
    kind = matched_kind(cfg.pair(N, lat), lat)
    grid = Grid(cfg.M, cfg.L, kinetic=opts.get("kinetic", "lattice"))
    phi0 = cfg.initial_orbital(lat)
    phi0 = Orbital.from_values(grid, phi0.values)
    A = cfg.external()
    traj = evolve(phi0, cfg.T, cfg.dt, kind, A, stride=cfg.stride)
    out.mkdir(parents=True, exist_ok=True)
    write_trajectory_csv(out / "trajectory.csv", traj, kind, A)
    return traj


ENVELOPE_COLUMNS = ("mode", "N", "t", "value")
CONDITION_COLUMNS = ("N", "cond1", "cond2", "cond1_scaled", "cond2_scaled")


def envelope_table(cfg: SweepConfig) -> list:
    opts = dict(cfg.report)
    C = float(opts.get("C", 1.0))
    times = [float(t) for t in opts.get("times", (0.0, 0.5, 1.0))]
    gp_N = [float(n) for n in opts.get("gp_N", (1e3, 1e4, 1e5, 1e6))]
    rows = []
    for N in cfg.N_list:
        if N >= 2:
            rows += [{"mode": "hartree", "N": N, "t": t,
                      "value": gronwall_envelope(0.0, C, N, t)} for t in times]
    for N in gp_N:
        rows += [{"mode": "gp", "N": N, "t": t,
                  "value": gronwall_envelope(0.0, C, N, t, "gp", gamma=cfg.gamma)} for t in times]
    return rows


def write_report(cfg: SweepConfig, out: Path) -> tuple:
    out.mkdir(parents=True, exist_ok=True)
    env = envelope_table(cfg)
    with open(out / "envelope.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ENVELOPE_COLUMNS)
        for r in env:
            w.writerow([r["mode"], _cell(r["N"]), _cell(r["t"]), _cell(r["value"])])
    cond = [condition_report(cfg, N) for N in cfg.N_list]
    write_csv(out / "conditions.csv", CONDITION_COLUMNS, cond)
    return env, cond
