"""N bosons on an M-site periodic lattice.

Second-quantized states live in the occupation-number basis ordered
reverse-lexicographically, so ``(N, 0, ..., 0)`` has rank 0 and
``(0, ..., 0, N)`` has the last rank. A first-quantized tensor backend of
shape ``(M,)*N`` serves as an oracle for small systems.

Lattice orbitals ``phi`` are normalized with the spacing weight,
``h * sum |phi_i|^2 = 1``; the matching unit vector in site space is
``sqrt(h) * phi``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator
from scipy.special import gammaln

from .grid import Grid
from .meanfield import ExternalPotential

MAX_BASIS_DIM = 200_000
FIRST_QUANTIZED_MAX_N = 5
FIRST_QUANTIZED_MAX_M = 8


class BasisTooLargeError(ValueError):
    pass


class KrylovError(RuntimeError):
    def __init__(self, residual: float, tol: float):
        super().__init__(f"Krylov step residual {residual:.3e} above tolerance {tol:.1e}")
        self.residual = residual


def basis_dimension(N: int, M: int) -> int:
    return math.comb(N + M - 1, N)


def _enumerate_states(N: int, M: int) -> np.ndarray:
    if M == 1:
        return np.array([[N]], dtype=np.int64)
    blocks = []
    for n0 in range(N, -1, -1):
        rest = _enumerate_states(N - n0, M - 1)
        blocks.append(np.column_stack([np.full(len(rest), n0, dtype=np.int64), rest]))
    return np.vstack(blocks)


class FockBasis:
    """Occupation basis of N bosons on M sites with O(1) combinatorial ranking."""

    def __init__(self, N: int, M: int, max_dim: int = MAX_BASIS_DIM):
        if N < 0 or M < 1:
            raise ValueError(f"invalid (N, M) = ({N}, {M})")
        dim = basis_dimension(N, M)
        if dim > max_dim:
            raise BasisTooLargeError(f"basis dimension {dim} for N={N}, M={M} exceeds {max_dim}")
        self.N, self.M, self.dim = N, M, dim
        self.states = _enumerate_states(N, M)
        # count[r, m]: number of ways to put r bosons on m sites
        count = np.zeros((N + 1, M + 1), dtype=np.int64)
        count[0, 0] = 1
        for r in range(N + 1):
            for m in range(1, M + 1):
                count[r, m] = math.comb(r + m - 1, m - 1)
        # table[i, R, n]: states sharing the prefix before site i that rank ahead
        # of occupation n at site i when R bosons remain
        table = np.zeros((M, N + 1, N + 1), dtype=np.int64)
        for i in range(M - 1):
            for R in range(N + 1):
                for n in range(R + 1):
                    table[i, R, n] = sum(count[R - x, M - i - 1] for x in range(n + 1, R + 1))
        self._table = table
        self._hops = None

    def index(self, states: np.ndarray) -> np.ndarray:
        states = np.atleast_2d(np.asarray(states, dtype=np.int64))
        remaining = self.N - np.concatenate(
            [np.zeros((len(states), 1), dtype=np.int64), np.cumsum(states, axis=1)[:, :-1]], axis=1
        )
        sites = np.arange(self.M)
        return self._table[sites[None, :], remaining, states].sum(axis=1)

    def hops(self):
        """All ``a_i^dag a_j`` matrix elements, ``i != j``, as flat arrays.

        Returns ``(target, source, amplitude, i, j)``.
        """
        if self._hops is None:
            parts = []
            S = self.states
            for i in range(self.M):
                for j in range(self.M):
                    if i == j:
                        continue
                    src = np.nonzero(S[:, j] > 0)[0]
                    new = S[src].copy()
                    amp = np.sqrt(new[:, j] * (new[:, i] + 1.0))
                    new[:, j] -= 1
                    new[:, i] += 1
                    tgt = self.index(new)
                    parts.append((tgt, src, amp, np.full(len(src), i), np.full(len(src), j)))
            self._hops = tuple(np.concatenate(p) for p in zip(*parts)) if parts else (
                np.zeros(0, int), np.zeros(0, int), np.zeros(0), np.zeros(0, int), np.zeros(0, int))
        return self._hops


@lru_cache(maxsize=32)
def fock_basis(N: int, M: int) -> FockBasis:
    return FockBasis(N, M)


def one_body_operator(basis: FockBasis, B: np.ndarray) -> sp.csr_matrix:
    """Second quantization ``sum_ij B_ij a_i^dag a_j`` of an M x M matrix."""
    B = np.asarray(B)
    tgt, src, amp, i, j = basis.hops()
    off = sp.coo_matrix((amp * B[i, j], (tgt, src)), shape=(basis.dim, basis.dim))
    diag = sp.diags(basis.states @ np.diag(B))
    return (off + diag).tocsr()


def translation_operator(basis: FockBasis) -> sp.csr_matrix:
    """Shift every particle by one site (periodic)."""
    shifted = np.roll(basis.states, 1, axis=1)
    rows = basis.index(shifted)
    cols = np.arange(basis.dim)
    return sp.coo_matrix((np.ones(basis.dim), (rows, cols)), shape=(basis.dim, basis.dim)).tocsr()


@dataclass(frozen=True)
class LatticeConfig:
    """Periodic lattice; the kinetic term is ``hopping * (2 - shift - shift^T)``.

    ``hopping`` defaults to ``1/h**2`` (second-difference Laplacian).
    """

    M: int
    h: float = 1.0
    hopping: float | None = None

    def __post_init__(self):
        if self.M < 2 or not self.h > 0:
            raise ValueError(f"lattice needs M >= 2 and h > 0, got M={self.M}, h={self.h}")
        if self.hopping is None:
            object.__setattr__(self, "hopping", 1.0 / self.h**2)

    @property
    def L(self) -> float:
        return self.M * self.h

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.M) * self.h

    def grid(self) -> Grid:
        """Matching mean-field grid with the lattice dispersion."""
        return Grid(self.M, self.L, kinetic="lattice")

    def kinetic_matrix(self) -> np.ndarray:
        S = np.roll(np.eye(self.M), 1, axis=1)
        return self.hopping * (2 * np.eye(self.M) - S - S.T)

    def unit_vector(self, phi) -> np.ndarray:
        return np.sqrt(self.h) * np.asarray(phi, dtype=complex)


@dataclass(frozen=True)
class PairInteraction:
    """Pair potential on lattice displacements.

    ``profile[d]`` is ``v`` at displacement ``d*h`` (index taken mod M). The
    effective strength depends on ``beta``: for ``beta == 0`` it is
    ``profile / N``; otherwise the continuum scaling is replaced by an on-site
    proxy ``g_N / h`` at ``d = 0`` with ``g_N = lam * N**(beta - 1)``.
    """

    profile: np.ndarray = field(repr=False)
    N: int
    beta: float = 0.0
    lam: float | None = None

    def __post_init__(self):
        v = np.asarray(self.profile, dtype=float)
        M = len(v)
        if (v < 0).any():
            raise ValueError("pair profile must be nonnegative")
        if not np.allclose(v, v[(-np.arange(M)) % M], atol=1e-14):
            raise ValueError("pair profile must be even, v(d) = v(-d)")
        object.__setattr__(self, "profile", v)

    @classmethod
    def zero(cls, M: int, N: int):
        return cls(np.zeros(M), N)

    @classmethod
    def hartree(cls, profile, N: int):
        return cls(np.asarray(profile, dtype=float), N, beta=0.0)

    @classmethod
    def gp_proxy(cls, lam: float, beta: float, N: int, M: int):
        return cls(np.zeros(M), N, beta=beta, lam=lam)

    @property
    def M(self) -> int:
        return len(self.profile)

    def support_radius(self) -> int:
        """Largest ``|d|`` (in sites) with a nonzero effective value."""
        v = self.effective(1.0)
        d = np.arange(self.M)
        signed = np.minimum(d, self.M - d)
        nz = signed[v != 0]
        return int(nz.max()) if len(nz) else 0

    def effective(self, h: float) -> np.ndarray:
        if self.beta == 0.0:
            return self.profile / self.N
        lam = self.lam if self.lam is not None else h * self.profile.sum()
        out = np.zeros(self.M)
        out[0] = lam * self.N ** (self.beta - 1.0) / h
        return out

    def proxy_coupling(self, h: float) -> float:
        """``g_N`` of the on-site proxy."""
        lam = self.lam if self.lam is not None else h * self.profile.sum()
        return lam * self.N ** (self.beta - 1.0)


def profile_from_function(lat: LatticeConfig, func, cutoff: float | None = None) -> np.ndarray:
    """Sample an even function on signed lattice displacements."""
    d = np.arange(lat.M)
    signed = np.where(d <= lat.M // 2, d, d - lat.M) * lat.h
    v = np.asarray(func(np.abs(signed)), dtype=float)
    if cutoff is not None:
        v = np.where(np.abs(signed) < cutoff, v, 0.0)
    if lat.M % 2 == 0:
        v[lat.M // 2] = 0.0
    return v


@dataclass
class SymmetricState:
    N: int
    M: int
    coeffs: np.ndarray
    h: float = 1.0

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        dim = basis_dimension(self.N, self.M)
        if self.coeffs.shape != (dim,):
            raise ValueError(f"expected {dim} coefficients for N={self.N}, M={self.M}")
        nrm = np.linalg.norm(self.coeffs)
        if abs(nrm - 1) > 1e-9:
            raise ValueError(f"state not normalized (norm={nrm!r})")

    @property
    def basis(self) -> FockBasis:
        return fock_basis(self.N, self.M)

    def with_coeffs(self, coeffs) -> "SymmetricState":
        return SymmetricState(self.N, self.M, coeffs, self.h)


def random_state(N: int, M: int, rng: np.random.Generator, h: float = 1.0) -> SymmetricState:
    dim = basis_dimension(N, M)
    c = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return SymmetricState(N, M, c / np.linalg.norm(c), h)


def basis_state(N: int, M: int, occupation, h: float = 1.0) -> SymmetricState:
    basis = fock_basis(N, M)
    c = np.zeros(basis.dim, dtype=complex)
    c[basis.index(np.asarray(occupation))[0]] = 1.0
    return SymmetricState(N, M, c, h)


def _log_multinomial(states: np.ndarray) -> np.ndarray:
    N = states.sum(axis=1)
    return gammaln(N + 1.0) - gammaln(states + 1.0).sum(axis=1)


def product_state(phi, N: int, h: float = 1.0) -> SymmetricState:
    """Coefficients of ``phi^{(x)N}``: ``sqrt(N!/prod n_i!) prod psi_i^n_i``."""
    psi = np.sqrt(h) * np.asarray(phi, dtype=complex)
    if abs(np.linalg.norm(psi) - 1) > 1e-9:
        raise ValueError("orbital is not normalized on the lattice")
    basis = fock_basis(N, len(psi))
    S = basis.states
    amp = np.prod(psi[None, :] ** S, axis=1)
    c = np.exp(0.5 * _log_multinomial(S)) * amp
    c /= np.linalg.norm(c)  # removes rounding only
    return SymmetricState(N, len(psi), c, h)


class LatticeHamiltonian:
    """``H = T + sum_{j != k} v_eff(x_j - x_k) + sum_j A(x_j)``.

    The ordered double sum equals ``2 * sum_{j<k}``; in the occupation basis
    the pair term is diagonal, ``sum_{x != y} v(x-y) n_x n_y + v(0) sum_x
    n_x (n_x - 1)``.
    """

    def __init__(self, basis: FockBasis, kinetic: sp.csr_matrix, interaction: np.ndarray,
                 trap: np.ndarray):
        self.basis = basis
        self.kinetic = kinetic
        self.interaction = interaction
        self.trap = trap
        self.diagonal = interaction + trap

    @property
    def shape(self):
        return (self.basis.dim, self.basis.dim)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        return self.kinetic @ v + self.diagonal * v

    __matmul__ = matvec

    def matrix(self) -> sp.csr_matrix:
        return (self.kinetic + sp.diags(self.diagonal)).tocsr()

    def toarray(self) -> np.ndarray:
        return self.matrix().toarray()

    def as_linear_operator(self) -> LinearOperator:
        return LinearOperator(self.shape, matvec=self.matvec, rmatvec=self.matvec, dtype=complex)

    def with_trap(self, trap: np.ndarray) -> "LatticeHamiltonian":
        return LatticeHamiltonian(self.basis, self.kinetic, self.interaction, trap)


def interaction_diagonal(basis: FockBasis, v_eff: np.ndarray) -> np.ndarray:
    M = basis.M
    V = v_eff[(np.arange(M)[:, None] - np.arange(M)[None, :]) % M]
    n = basis.states.astype(float)
    return np.einsum("ax,xy,ay->a", n, V, n) - v_eff[0] * n.sum(axis=1)


def build_hamiltonian(lat: LatticeConfig, pair: PairInteraction, A: ExternalPotential,
                      t: float = 0.0) -> LatticeHamiltonian:
    if pair.M != lat.M:
        raise ValueError(f"pair profile has {pair.M} sites, lattice has {lat.M}")
    if 2 * pair.support_radius() >= lat.M:
        raise ValueError(
            f"pair support radius {pair.support_radius()} sites exceeds half the ring ({lat.M} sites)")
    basis = fock_basis(pair.N, lat.M)
    kinetic = one_body_operator(basis, lat.kinetic_matrix())
    inter = interaction_diagonal(basis, pair.effective(lat.h))
    trap = basis.states @ A.at(lat.x, lat.L, t)
    return LatticeHamiltonian(basis, kinetic, inter, trap)


def energy_per_particle(state: SymmetricState, lat: LatticeConfig, pair: PairInteraction,
                        A: ExternalPotential, t: float = 0.0) -> float:
    H = build_hamiltonian(lat, pair, A, t)
    c = state.coeffs
    return float(np.vdot(c, H.matvec(c)).real) / state.N


def krylov_expm(matvec, v: np.ndarray, dt: float, m: int = 20, tol: float = 1e-12,
                _depth: int = 0) -> np.ndarray:
    """``exp(-i dt H) v`` for Hermitian ``H`` via Lanczos.

    Uses full reorthogonalization and the standard a-posteriori error
    estimate; steps whose estimate exceeds ``tol`` are halved (at most 12
    times) before a :class:`KrylovError` is raised.
    """
    beta0 = np.linalg.norm(v)
    if beta0 == 0:
        return v.copy()
    n = len(v)
    m = min(m, n)
    V = np.zeros((m + 1, n), dtype=complex)
    alpha = np.zeros(m)
    beta = np.zeros(m)
    V[0] = v / beta0
    k = m
    for j in range(m):
        w = matvec(V[j])
        alpha[j] = np.vdot(V[j], w).real
        w = w - alpha[j] * V[j] - (beta[j - 1] * V[j - 1] if j > 0 else 0)
        w -= V[: j + 1].T @ (V[: j + 1].conj() @ w)
        beta[j] = np.linalg.norm(w)
        if beta[j] < 1e-13 * max(1.0, abs(alpha[j])):
            k = j + 1  # invariant subspace: the projection is exact
            break
        V[j + 1] = w / beta[j]
    T = np.diag(alpha[:k]) + np.diag(beta[: k - 1], 1) + np.diag(beta[: k - 1], -1)
    evals, evecs = scipy.linalg.eigh(T)
    y = evecs @ (np.exp(-1j * dt * evals) * evecs[0].conj())
    err = beta0 * beta[k - 1] * abs(y[k - 1]) if k == m else 0.0
    if err > tol:
        if _depth >= 12:
            raise KrylovError(err, tol)
        half = krylov_expm(matvec, v, dt / 2, m, tol / 2, _depth + 1)
        return krylov_expm(matvec, half, dt / 2, m, tol / 2, _depth + 1)
    return beta0 * (V[:k].T @ y)


@dataclass
class ManyBodyTrajectory:
    times: list
    states: list


def evolve_krylov(state: SymmetricState, lat: LatticeConfig, pair: PairInteraction,
                  A: ExternalPotential, T: float, dt: float, krylov_dim: int = 20,
                  tol: float = 1e-12, stride: int = 1, t0: float = 0.0) -> ManyBodyTrajectory:
    """Propagate with ``exp(-i dt H(t + dt/2))`` per step."""
    if dt <= 0 or T < 0:
        raise ValueError("evolve_krylov needs dt > 0 and T >= 0")
    n_steps = int(round(T / dt))
    if T > 0 and not np.isclose(n_steps * dt, T, rtol=1e-9, atol=0):
        raise ValueError(f"T={T} is not a multiple of dt={dt}")
    H = build_hamiltonian(lat, pair, A, t0)
    basis = H.basis
    times, states = [t0], [state]
    c = state.coeffs
    t = t0
    for n in range(1, n_steps + 1):
        if not A.is_static:
            H = H.with_trap(basis.states @ A.at(lat.x, lat.L, t + 0.5 * dt))
        c = krylov_expm(H.matvec, c, dt, krylov_dim, tol)
        t = t0 + n * dt
        if n % stride == 0 or n == n_steps:
            times.append(t)
            states.append(state.with_coeffs(c))
    return ManyBodyTrajectory(times, states)


# --- first-quantized oracle backend -------------------------------------------------


@dataclass
class FirstQuantizedState:
    N: int
    M: int
    tensor: np.ndarray

    def symmetry_residual(self) -> float:
        T = self.tensor
        res = 0.0
        for a in range(self.N - 1):
            res = max(res, float(np.abs(T - np.swapaxes(T, a, a + 1)).max()))
        return res


def _check_budget(N: int, M: int, max_N: int, max_M: int) -> None:
    if N > max_N or M > max_M:
        raise BasisTooLargeError(
            f"first-quantized tensor for N={N}, M={M} exceeds budget N<={max_N}, M<={max_M}")


@lru_cache(maxsize=32)
def _tensor_map(N: int, M: int):
    idx = np.array(list(itertools.product(range(M), repeat=N)), dtype=np.int64).reshape(-1, N)
    occ = np.zeros((len(idx), M), dtype=np.int64)
    for a in range(N):
        occ[np.arange(len(idx)), idx[:, a]] += 1
    ranks = fock_basis(N, M).index(occ)
    weights = np.exp(-0.5 * _log_multinomial(occ))
    return ranks, weights


def to_first_quantized(state: SymmetricState, max_N: int = FIRST_QUANTIZED_MAX_N,
                       max_M: int = FIRST_QUANTIZED_MAX_M) -> FirstQuantizedState:
    N, M = state.N, state.M
    _check_budget(N, M, max_N, max_M)
    ranks, weights = _tensor_map(N, M)
    tensor = (state.coeffs[ranks] * weights).reshape((M,) * N)
    return FirstQuantizedState(N, M, tensor)


def coeffs_from_tensor(tensor: np.ndarray, N: int, M: int) -> np.ndarray:
    """Project a tensor onto the occupation basis (exact for symmetric input)."""
    ranks, weights = _tensor_map(N, M)
    flat = tensor.reshape(-1) * weights
    dim = basis_dimension(N, M)
    return (np.bincount(ranks, weights=flat.real, minlength=dim)
            + 1j * np.bincount(ranks, weights=flat.imag, minlength=dim))


def from_first_quantized(fq: FirstQuantizedState, h: float = 1.0,
                         max_N: int = FIRST_QUANTIZED_MAX_N,
                         max_M: int = FIRST_QUANTIZED_MAX_M) -> SymmetricState:
    _check_budget(fq.N, fq.M, max_N, max_M)
    return SymmetricState(fq.N, fq.M, coeffs_from_tensor(fq.tensor, fq.N, fq.M), h)
