import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from condensate_lab.grid import (Grid, GridFunction, GridMismatchError, direct_convolution,
                                 inner_product, norms, periodic_convolution, spectral_laplacian,
                                 unitary_dft)
from condensate_lab.manybody import LatticeConfig

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def test_grid_rejects_tiny():
    with pytest.raises(ValueError):
        Grid(3, 1.0)
    with pytest.raises(ValueError):
        Grid(8, 0.0)
    with pytest.raises(ValueError):
        Grid(8, 1.0, kinetic="wavelet")


def test_laplacian_of_sine_is_exact():
    g = Grid(32, 2 * np.pi)
    f = GridFunction(np.sin(3 * g.x), g)
    assert np.abs(spectral_laplacian(f).values + 9 * np.sin(3 * g.x)).max() < 1e-12


def test_gradient_drops_nyquist():
    g = Grid(8, 8.0)
    nyq = np.cos(np.pi * np.arange(8))  # highest mode
    assert np.abs(g.gradient(nyq)).max() < 1e-14
    d = g.gradient(np.sin(2 * np.pi * g.x / g.L))
    assert np.allclose(d, 2 * np.pi / g.L * np.cos(2 * np.pi * g.x / g.L), atol=1e-12)


@given(arrays(float, 12, elements=finite), arrays(float, 12, elements=finite))
def test_fft_convolution_matches_direct_sum(a, b):
    g = Grid(12, 3.0)
    f, h = GridFunction(a, g), GridFunction(b, g)
    fast = periodic_convolution(f, h).values
    slow = direct_convolution(f, h).values
    assert np.allclose(fast, slow, atol=1e-9 * (1 + np.abs(slow).max()))


def test_convolution_with_delta_is_identity():
    g = Grid(16, 4.0)
    delta = np.zeros(16)
    delta[0] = 1 / g.h
    f = np.random.default_rng(0).normal(size=16)
    assert np.allclose(g.convolve(delta, f), f, atol=1e-13)


def test_grid_mismatch():
    a = GridFunction(np.ones(8), Grid(8, 1.0))
    b = GridFunction(np.ones(8), Grid(8, 2.0))
    with pytest.raises(GridMismatchError):
        inner_product(a, b)


@given(arrays(complex, 10, elements=st.complex_numbers(max_magnitude=5, allow_nan=False)))
def test_inner_product_is_conjugate_linear_in_first_slot(z):
    g = Grid(10, 2.0)
    f = GridFunction(z, g)
    one = GridFunction(np.ones(10, dtype=complex), g)
    lhs = inner_product(GridFunction(2j * z, g), one)
    assert np.isclose(lhs, -2j * inner_product(f, one), atol=1e-10)
    assert np.isclose(inner_product(f, f).real, norms(f)["l2"] ** 2, rtol=1e-12, atol=1e-12)


@given(arrays(complex, 16, elements=st.complex_numbers(max_magnitude=5, allow_nan=False)))
def test_unitary_dft_preserves_norm(z):
    assert np.isclose(np.linalg.norm(unitary_dft(z)), np.linalg.norm(z), rtol=1e-12, atol=1e-12)


def test_norms_of_constant():
    g = Grid(8, 4.0)
    n = norms(GridFunction(np.full(8, 0.5), g))
    assert np.isclose(n["l1"], 2.0) and np.isclose(n["l2"], 1.0) and n["linf"] == 0.5
    assert n["h1_seminorm"] < 1e-14


@pytest.mark.parametrize("M,h", [(4, 1.0), (7, 0.5), (10, 0.3)])
def test_lattice_symbol_is_the_hopping_matrix(M, h):
    lat = LatticeConfig(M, h)
    v = np.random.default_rng(M).normal(size=M) + 0j
    assert np.allclose(lat.grid().kinetic_apply(v), lat.kinetic_matrix() @ v, atol=1e-10)


def test_lattice_symbol_approaches_spectral_at_low_k():
    g = Grid(256, 2 * np.pi, kinetic="lattice")
    k = g.k
    low = np.abs(k) < 4
    assert np.allclose(g.kinetic_symbol()[low], k[low] ** 2, rtol=1e-3)
