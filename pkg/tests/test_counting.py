import numpy as np
import pytest
from hypothesis import given, strategies as st

from condensate_lab.counting import (EXACT_IDENTITIES, HatWeights, alpha_derivative_terms,
                                     alpha_moment, apply_P_jk, apply_hat, apply_p, apply_q,
                                     identity_suite, pk_weights, pk_weights_first_quantized,
                                     reduced_density, report_json, tensor_components, tensor_hat)
from condensate_lab.experiments import SweepConfig, commutator_rate, matched_kind
from condensate_lab.manybody import (product_state, random_state, to_first_quantized)

seeds = st.integers(0, 2**32 - 1)


def unit(M, rng):
    z = rng.normal(size=M) + 1j * rng.normal(size=M)
    return z / np.linalg.norm(z)


def test_hat_shift_convention():
    f = HatWeights(np.array([1.0, 2.0, 3.0, 4.0]))
    # f_d = sum_k f(k - d) P_k, zero where k - d leaves {0..N}
    assert np.array_equal(f.shifted(1).on_range(), [0, 1, 2, 3])
    assert np.array_equal(f.shifted(-2).on_range(), [3, 4, 0, 0])
    assert np.allclose(HatWeights.n(4).on_range() ** 2, np.arange(5) / 4)


@given(st.integers(2, 4), st.integers(2, 5), seeds)
def test_projector_weights_are_a_distribution(N, M, seed):
    rng = np.random.default_rng(seed)
    s = random_state(N, M, rng)
    w = pk_weights(s, unit(M, rng)).w
    assert np.all(w > -1e-14) and abs(w.sum() - 1) < 1e-12


@given(st.integers(2, 4), st.integers(2, 5), seeds)
def test_second_and_first_quantized_weights_agree(N, M, seed):
    rng = np.random.default_rng(seed)
    s = random_state(N, M, rng)
    phi = unit(M, rng)
    a = pk_weights(s, phi).w
    b = pk_weights_first_quantized(to_first_quantized(s), phi).w
    assert np.abs(a - b).max() < 1e-12


@given(st.integers(1, 5), st.integers(2, 5), seeds)
def test_product_state_has_no_excitations(N, M, seed):
    phi = unit(M, np.random.default_rng(seed))
    w = pk_weights(product_state(phi, N), phi).w
    assert abs(w[0] - 1) < 1e-12 and np.abs(w[1:]).max() < 1e-12


@given(st.integers(2, 5), st.integers(2, 5), seeds)
def test_moments_are_ordered(N, M, seed):
    rng = np.random.default_rng(seed)
    s = random_state(N, M, rng)
    phi = unit(M, rng)
    a1, a2 = alpha_moment(s, phi, 1.0), alpha_moment(s, phi, 2.0)
    assert 0 <= a2 <= a1 + 1e-12 <= 1 + 1e-9


def test_moment_exponent_must_be_positive():
    s = random_state(2, 3, np.random.default_rng(0))
    with pytest.raises(ValueError):
        alpha_moment(s, unit(3, np.random.default_rng(1)), 0.0)


def test_orbital_must_be_normalized_and_sized():
    s = random_state(2, 3, np.random.default_rng(0))
    with pytest.raises(ValueError):
        pk_weights(s, np.ones(3))
    with pytest.raises(ValueError):
        pk_weights(s, np.ones(4) / 2)
    with pytest.raises(ValueError):
        apply_hat(s, unit(3, np.random.default_rng(0)), HatWeights.n(3))


@given(st.integers(1, 5), st.integers(2, 5), seeds)
def test_density_matrix_identity(N, M, seed):
    rng = np.random.default_rng(seed)
    s = random_state(N, M, rng)
    phi = unit(M, rng)
    rho = reduced_density(s, phi)
    assert abs(np.trace(rho.mu) - 1) < 1e-12
    assert np.abs(rho.mu - rho.mu.conj().T).max() < 1e-13
    assert np.linalg.eigvalsh(rho.mu).min() > -1e-13
    assert abs(1 - rho.condensate_overlap - pk_weights(s, phi).moment(2.0)) < 1e-12


@given(st.integers(1, 5), st.integers(2, 5), seeds)
def test_product_density_is_rank_one(N, M, seed):
    phi = unit(M, np.random.default_rng(seed))
    mu = reduced_density(product_state(phi, N)).mu
    assert np.abs(mu - np.outer(phi, phi.conj())).max() < 1e-12


def test_identity_suite_small():
    rep = identity_suite(3, 3, 4, trials=5)
    assert set(rep["max_residual"]) == set(EXACT_IDENTITIES)
    assert max(rep["max_residual"].values()) < 1e-12
    assert sum(rep["violations"].values()) == 0
    assert report_json(rep) == report_json(identity_suite(3, 3, 4, trials=5))


def test_identity_suite_needs_two_particles():
    with pytest.raises(ValueError):
        identity_suite(0, 1, 3, 1)


def _split_residual(T, psi, m, s2, s1):
    """Residual of m = [m - m_{s2}] p1p2 + [m - m_{s1}](p1q2 + q1p2) + sum_k m(k) P^(N-2)_{k-2}."""
    N = T.ndim
    pp = apply_p(apply_p(T, psi, 0), psi, 1)
    pq = apply_p(apply_q(T, psi, 1), psi, 0)
    qp = apply_q(apply_p(T, psi, 1), psi, 0)
    rest = sum(m.f[k] * apply_P_jk(T, psi, N - 2, k - 2) for k in range(N + 1))
    rhs = (tensor_hat(pp, psi, m) - tensor_hat(pp, psi, m.shifted(s2))
           + tensor_hat(pq, psi, m) - tensor_hat(pq, psi, m.shifted(s1))
           + tensor_hat(qp, psi, m) - tensor_hat(qp, psi, m.shifted(s1)) + rest)
    return np.linalg.norm((tensor_hat(T, psi, m) - rhs).ravel())


def test_pair_split_needs_negative_shifts():
    rng = np.random.default_rng(11)
    s = random_state(4, 3, rng)
    T = to_first_quantized(s).tensor
    psi = unit(3, rng)
    m = HatWeights(rng.uniform(0, 2, 5))
    assert _split_residual(T, psi, m, -2, -1) < 1e-13
    # with the shift convention f_d(k) = f(k - d), positive shifts do not give an identity
    assert _split_residual(T, psi, m, +2, +1) > 1e-3


def test_tensor_components_are_orthogonal_projections():
    rng = np.random.default_rng(2)
    T = to_first_quantized(random_state(3, 4, rng)).tensor
    psi = unit(4, rng)
    comps = tensor_components(T, psi)
    assert np.linalg.norm((sum(comps) - T).ravel()) < 1e-13
    for a in range(4):
        for b in range(a + 1, 4):
            assert abs(np.vdot(comps[a], comps[b])) < 1e-13


@pytest.mark.parametrize("N,M", [(2, 4), (3, 5), (4, 4)])
def test_derivative_terms_match_commutator(N, M):
    cfg = SweepConfig(N_list=(N,), M=M, L=float(M))
    lat = cfg.lattice()
    pair = cfg.pair(N, lat)
    kind = matched_kind(pair, lat)
    rng = np.random.default_rng(N * 10 + M)
    s = random_state(N, M, rng, lat.h)
    phi = cfg.initial_orbital(lat).values
    rate = alpha_derivative_terms(s, phi, lat, pair, kind).rate
    assert abs(rate - commutator_rate(s, phi, lat, pair, kind)) < 1e-12


def test_derivative_terms_vanish_for_products():
    cfg = SweepConfig(N_list=(3,), M=5, L=5.0)
    lat = cfg.lattice()
    pair = cfg.pair(3, lat)
    phi = cfg.initial_orbital(lat).values
    t = alpha_derivative_terms(product_state(phi, 3, lat.h), phi, lat, pair, matched_kind(pair, lat))
    assert abs(t.a1) < 1e-14 and abs(t.a2) < 1e-14
