"""Counting functionals built on the projectors ``p_j``, ``q_j``, ``P_k``.

Second-quantized path: ``P_k`` is the spectral projector of the mode number
operator ``N_phi = a^dag(phi) a(phi)`` onto eigenvalue ``N - k``, obtained by
Lagrange interpolation over the integer spectrum ``{0..N}``.

First-quantized path: the same objects are built literally from products of
``p_j`` and ``q_j`` acting on tensor axes; it serves as the oracle and as the
home of the two-particle functionals that single out particles 1 and 2.

Hat weights use the shift convention ``f_d = sum_k f(k - d) P_k``.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np

from .manybody import (
    FIRST_QUANTIZED_MAX_M,
    FIRST_QUANTIZED_MAX_N,
    FirstQuantizedState,
    LatticeConfig,
    PairInteraction,
    SymmetricState,
    _check_budget,
    fock_basis,
    one_body_operator,
    random_state,
    to_first_quantized,
)
from .meanfield import MeanFieldKind, _potential_values


@dataclass(frozen=True)
class HatWeights:
    f: np.ndarray
    d: int = 0

    def __post_init__(self):
        f = np.asarray(self.f, dtype=float)
        if not np.all(np.isfinite(f)):
            raise ValueError("hat weights must be finite")
        object.__setattr__(self, "f", f)

    @property
    def N(self) -> int:
        return len(self.f) - 1

    @classmethod
    def n(cls, N: int, d: int = 0) -> "HatWeights":
        """``n(k) = sqrt(k/N)``."""
        return cls(np.sqrt(np.arange(N + 1) / N), d)

    @classmethod
    def power(cls, N: int, gamma: float) -> "HatWeights":
        return cls((np.arange(N + 1) / N) ** (gamma / 2))

    def shifted(self, d: int) -> "HatWeights":
        return HatWeights(self.f, self.d + d)

    def on_range(self) -> np.ndarray:
        """Coefficient multiplying ``P_k`` for ``k = 0..N``; zero where ``k - d`` leaves ``{0..N}``."""
        N = self.N
        k = np.arange(N + 1) - self.d
        ok = (k >= 0) & (k <= N)
        out = np.zeros(N + 1)
        out[ok] = self.f[k[ok]]
        return out


@dataclass(frozen=True)
class SpectralWeights:
    w: np.ndarray

    @property
    def N(self) -> int:
        return len(self.w) - 1

    def moment(self, gamma: float) -> float:
        k = np.arange(self.N + 1)
        return float(np.sum((k / self.N) ** (gamma / 2) * self.w))


# --- second-quantized spectral construction -----------------------------------------


def _unit_orbital(state: SymmetricState, phi) -> np.ndarray:
    psi = np.sqrt(state.h) * np.asarray(phi, dtype=complex)
    if psi.shape != (state.M,):
        raise ValueError(f"orbital has {psi.shape} entries, lattice has {state.M} sites")
    if abs(np.linalg.norm(psi) - 1) > 1e-9:
        raise ValueError(f"orbital not normalized (lattice norm {np.linalg.norm(psi)!r})")
    return psi


def mode_number_operator(N: int, M: int, psi: np.ndarray):
    """``a^dag(psi) a(psi)`` for a unit site vector ``psi``."""
    return one_body_operator(fock_basis(N, M), np.outer(psi, psi.conj()))


def projector_components(state: SymmetricState, phi, vector: np.ndarray | None = None) -> np.ndarray:
    """Rows ``P_k v`` for ``k = 0..N`` (``v`` defaults to the state's coefficients)."""
    N = state.N
    psi = _unit_orbital(state, phi)
    Nphi = mode_number_operator(N, state.M, psi)
    v = state.coeffs if vector is None else np.asarray(vector, dtype=complex)
    out = np.empty((N + 1, len(v)), dtype=complex)
    for k in range(N + 1):
        target = N - k
        u = v
        for m in range(N + 1):
            if m != target:
                u = (Nphi @ u - m * u) / (target - m)
        out[k] = u
    return out


def pk_weights(state: SymmetricState, phi) -> SpectralWeights:
    comps = projector_components(state, phi)
    return SpectralWeights(np.sum(np.abs(comps) ** 2, axis=1))


def apply_hat(state: SymmetricState, phi, f: HatWeights, vector=None) -> np.ndarray:
    if f.N != state.N:
        raise ValueError(f"hat weights defined on {{0..{f.N}}}, state has N={state.N}")
    comps = projector_components(state, phi, vector)
    return f.on_range() @ comps


def alpha_moment(state: SymmetricState, phi, gamma: float = 1.0) -> float:
    """``sum_k (k/N)^(gamma/2) ||P_k Psi||^2``; ``gamma=1`` is ``<n>``, ``gamma=2`` is ``<n^2>``."""
    if not gamma > 0:
        raise ValueError(f"moment exponent must be positive, got {gamma}")
    return pk_weights(state, phi).moment(gamma)


@dataclass(frozen=True)
class OneParticleDensity:
    mu: np.ndarray
    condensate_overlap: float | None = None


def reduced_density(state: SymmetricState, phi=None) -> OneParticleDensity:
    """``mu[x, y] = <a_y^dag a_x> / N`` in the site basis (trace one)."""
    basis = state.basis
    c = state.coeffs
    M, N = state.M, state.N
    tgt, src, amp, i, j = basis.hops()
    # <c, a_i^dag a_j c> grouped by (i, j)
    vals = np.conj(c[tgt]) * amp * c[src]
    pair = i * M + j
    G = (np.bincount(pair, weights=vals.real, minlength=M * M)
         + 1j * np.bincount(pair, weights=vals.imag, minlength=M * M)).reshape(M, M)
    G[np.diag_indices(M)] = basis.states.T @ np.abs(c) ** 2
    mu = G.T / N
    overlap = None
    if phi is not None:
        psi = _unit_orbital(state, phi)
        overlap = float(np.vdot(psi, mu @ psi).real)
    return OneParticleDensity(mu, overlap)


# --- first-quantized oracle -----------------------------------------------------------


def apply_p(T: np.ndarray, psi: np.ndarray, axis: int) -> np.ndarray:
    """``p_j`` on tensor axis ``axis``: ``psi (x) <psi, .>_axis``."""
    amp = np.tensordot(psi.conj(), T, axes=([0], [axis]))
    return np.moveaxis(np.multiply.outer(psi, amp), 0, axis)


def apply_q(T, psi, axis):
    return T - apply_p(T, psi, axis)


def apply_P_jk(T: np.ndarray, psi: np.ndarray, j: int, k: int) -> np.ndarray:
    """``P_{j,k}``: exactly ``k`` of the last ``j`` particles outside ``psi``.

    Literal sum over ``a`` in ``A_k^j`` of products of ``p``/``q``.
    """
    N = T.ndim
    if k < 0 or k > j:
        return np.zeros_like(T)
    axes = list(range(N - j, N))
    out = np.zeros_like(T)
    for excited in itertools.combinations(axes, k):
        u = T
        for ax in axes:
            u = apply_q(u, psi, ax) if ax in excited else apply_p(u, psi, ax)
        out = out + u
    return out


def tensor_components(T: np.ndarray, psi: np.ndarray) -> list:
    N = T.ndim
    return [apply_P_jk(T, psi, N, k) for k in range(N + 1)]


def tensor_hat(T: np.ndarray, psi: np.ndarray, f: HatWeights, comps=None) -> np.ndarray:
    comps = tensor_components(T, psi) if comps is None else comps
    coef = f.on_range()
    out = np.zeros_like(T)
    for k, c in enumerate(comps):
        if coef[k] != 0:
            out = out + coef[k] * c
    return out


def pk_weights_first_quantized(fq: FirstQuantizedState, phi, h: float = 1.0) -> SpectralWeights:
    psi = np.sqrt(h) * np.asarray(phi, dtype=complex)
    comps = tensor_components(fq.tensor, psi)
    return SpectralWeights(np.array([np.vdot(c, c).real for c in comps]))


def mult12(T: np.ndarray, v12: np.ndarray) -> np.ndarray:
    """Multiply by ``v(x_1, x_2)`` given as an ``M x M`` array."""
    return T * v12.reshape(v12.shape + (1,) * (T.ndim - 2))


def mult1(T: np.ndarray, w: np.ndarray) -> np.ndarray:
    return T * w.reshape(w.shape + (1,) * (T.ndim - 1))


@dataclass(frozen=True)
class DerivativeTerms:
    a1: float
    a2: float

    @property
    def rate(self) -> float:
        """``2 a1 + 4 a2``, the predicted ``d/dt <n>``."""
        return 2 * self.a1 + 4 * self.a2


def pair_operator(lat: LatticeConfig, pair: PairInteraction, kind: MeanFieldKind, phi) -> np.ndarray:
    """``h_12 = (N-1) v_eff(x1-x2) - V(x1)/2 - V(x2)/2`` on the lattice, as an M x M array."""
    M = lat.M
    v_eff = pair.effective(lat.h)
    V12 = v_eff[(np.arange(M)[:, None] - np.arange(M)[None, :]) % M]
    if kind.variant == "free":
        V = np.zeros(M)
    else:
        V = _potential_values(kind, lat.grid(), np.asarray(phi, dtype=complex))
    return (pair.N - 1) * V12 - 0.5 * V[:, None] - 0.5 * V[None, :]


def alpha_derivative_terms(state: SymmetricState, phi, lat: LatticeConfig, pair: PairInteraction,
                           kind: MeanFieldKind, max_N: int = FIRST_QUANTIZED_MAX_N,
                           max_M: int = FIRST_QUANTIZED_MAX_M) -> DerivativeTerms:
    """Two-particle pieces of ``d/dt <Psi, n Psi>``.

    ``a1 = -N Im <Psi, h12 (n - n_{-2}) p1 p2 Psi>`` and
    ``a2 = -N Im <Psi, h12 (n - n_{-1}) p1 q2 Psi>`` with the pairing
    conjugate-linear in the first slot; then ``d/dt <n> = 2 a1 + 4 a2`` when
    ``phi`` follows the mean-field equation of ``kind``.
    """
    _check_budget(state.N, state.M, max_N, max_M)
    N = state.N
    T = to_first_quantized(state, max_N, max_M).tensor
    psi = np.sqrt(state.h) * np.asarray(phi, dtype=complex)
    h12 = pair_operator(lat, pair, kind, phi)
    n = HatWeights.n(N)

    pp = apply_p(apply_p(T, psi, 0), psi, 1)
    pq = apply_p(apply_q(T, psi, 1), psi, 0)
    comps_pp = tensor_components(pp, psi)
    comps_pq = tensor_components(pq, psi)
    x1 = tensor_hat(pp, psi, n, comps_pp) - tensor_hat(pp, psi, n.shifted(-2), comps_pp)
    x2 = tensor_hat(pq, psi, n, comps_pq) - tensor_hat(pq, psi, n.shifted(-1), comps_pq)
    a1 = -N * np.vdot(T, mult12(x1, h12)).imag
    a2 = -N * np.vdot(T, mult12(x2, h12)).imag
    return DerivativeTerms(float(a1), float(a2))


# --- identity suite -------------------------------------------------------------------


def _near_condensate(N, M, rng, psi):
    """Product state plus a random admixture of random size."""
    from .manybody import product_state

    base = product_state(psi, N).coeffs
    eps = 10 ** rng.uniform(-3, 0.5)
    c = base + eps * (rng.normal(size=base.shape) + 1j * rng.normal(size=base.shape))
    return SymmetricState(N, M, c / np.linalg.norm(c))


def _random_unit(M, rng):
    z = rng.normal(size=M) + 1j * rng.normal(size=M)
    return z / np.linalg.norm(z)


def identity_trial(rng: np.random.Generator, N: int, M: int) -> dict:
    """Residuals of the projector identities for one random configuration.

    Exact identities report ``||lhs - rhs||``; inequalities report
    ``lhs - rhs`` (nonpositive when they hold).
    """
    psi = _random_unit(M, rng)
    if rng.random() < 0.5:
        state = random_state(N, M, rng)
    else:
        state = _near_condensate(N, M, rng, psi)
    T = to_first_quantized(state).tensor
    f = HatWeights(rng.uniform(0, 2, N + 1))
    g = HatWeights(rng.uniform(0, 2, N + 1))
    n = HatWeights.n(N)
    v12 = rng.normal(size=(M, M))
    w = rng.normal(size=M) + 1j * rng.normal(size=M)
    comps = tensor_components(T, psi)

    def hat(x, weights):
        return tensor_hat(x, psi, weights)

    def err(a, b):
        return float(np.linalg.norm((a - b).ravel()))

    out = {}
    fg = HatWeights(f.f * g.f)
    out["hat_product"] = max(err(hat(hat(T, g), f), tensor_hat(T, psi, fg, comps)),
                           err(hat(hat(T, f), g), tensor_hat(T, psi, fg, comps)))
    out["hat_commutes_p"] = max(err(hat(apply_p(T, psi, j), f), apply_p(hat(T, f), psi, j)) for j in range(N))
    out["hat_commutes_Pjk"] = max(
        err(hat(apply_P_jk(T, psi, j, k), f), apply_P_jk(hat(T, f), psi, j, k))
        for j in range(N + 1) for k in range(j + 1))
    n2 = HatWeights(n.f**2)
    qsum = sum(apply_q(T, psi, j) for j in range(N)) / N
    out["number_square"] = err(tensor_hat(T, psi, n2, comps), qsum)

    fq1 = hat(apply_q(T, psi, 0), f)
    fn = tensor_hat(T, psi, HatWeights(f.f * n.f), comps)
    out["one_excited_norm"] = abs(np.vdot(fq1, fq1).real - np.vdot(fn, fn).real)
    fqq = hat(apply_q(apply_q(T, psi, 0), psi, 1), f)
    fn2 = tensor_hat(T, psi, HatWeights(f.f * n.f**2), comps)
    out["two_excited_bound"] = np.vdot(fqq, fqq).real - N / (N - 1) * np.vdot(fn2, fn2).real

    def Q(x, j):
        if j == 0:
            return apply_p(apply_p(x, psi, 0), psi, 1)
        if j == 1:
            return apply_p(apply_q(x, psi, 1), psi, 0)
        return apply_q(apply_q(x, psi, 0), psi, 1)

    res_d = 0.0
    for j in range(3):
        for k in range(3):
            lhs = hat(Q(mult12(Q(T, k), v12), j), f)
            rhs = Q(mult12(hat(Q(T, k), f.shifted(k - j)), v12), j)
            res_d = max(res_d, err(lhs, rhs))
    out["shift_rule"] = res_d

    exp_w = np.vdot(T, mult1(T, w))
    lhs_e = abs(exp_w - np.vdot(psi, w * psi))
    mean_n = float(sum(n.f[k] * np.vdot(c, c).real for k, c in enumerate(comps)))
    out["one_body_bound"] = lhs_e - 4 * np.abs(w).max() * (N ** -0.25 + mean_n)

    m = HatWeights(rng.uniform(0, 2, N + 1))
    pp, pq, qp = Q(T, 0), Q(T, 1), apply_q(apply_p(T, psi, 1), psi, 0)
    rest = sum(m.f[k] * apply_P_jk(T, psi, N - 2, k - 2) for k in range(N + 1))
    rhs = (hat(pp, m) - hat(pp, m.shifted(-2)) + hat(pq, m) - hat(pq, m.shifted(-1))
           + hat(qp, m) - hat(qp, m.shifted(-1)) + rest)
    out["pair_split"] = err(tensor_hat(T, psi, m, comps), rhs)

    # projector algebra of the literal construction
    out["P_completeness"] = err(sum(comps), T)
    out["P_idempotent"] = max(err(apply_P_jk(c, psi, N, k), c) for k, c in enumerate(comps))
    out["P_orthogonal"] = max(abs(np.vdot(comps[a], comps[b]))
                              for a in range(N + 1) for b in range(a + 1, N + 1)) if N > 0 else 0.0
    return {k: float(v) for k, v in out.items()}


EXACT_IDENTITIES = ("hat_product", "hat_commutes_p", "hat_commutes_Pjk", "number_square", "one_excited_norm",
                    "shift_rule", "pair_split", "P_completeness", "P_idempotent", "P_orthogonal")
INEQUALITIES = ("two_excited_bound", "one_body_bound")


def identity_suite(seed: int, N: int, M: int, trials: int) -> dict:
    """Max residual per identity over ``trials`` seeded random configurations."""
    if N < 2:
        raise ValueError("the two-particle identities need N >= 2")
    _check_budget(N, M, FIRST_QUANTIZED_MAX_N, FIRST_QUANTIZED_MAX_M)
    rng = np.random.default_rng([seed, N, M])
    worst: dict[str, float] = {}
    violations = {name: 0 for name in INEQUALITIES}
    for _ in range(trials):
        res = identity_trial(rng, N, M)
        for name, val in res.items():
            worst[name] = max(worst.get(name, -np.inf), val)
        for name in INEQUALITIES:
            if res[name] > 1e-12:
                violations[name] += 1
    return {
        "seed": seed, "N": N, "M": M, "trials": trials,
        "max_residual": {k: worst[k] for k in EXACT_IDENTITIES},
        "max_slack": {k: worst[k] for k in INEQUALITIES},
        "violations": violations,
    }


def report_json(report) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"
