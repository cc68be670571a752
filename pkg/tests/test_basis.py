import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.polynomial import Polynomial

from cdfdr.basis import (LegendreBasis, bb_kernel, gauss_legendre, legendre_eval,
                         legendre_matrix, legendre_vector, rkhs_reproduce_check)
from cdfdr.specfun import DomainError

# explicit shifted Legendre polynomials sqrt(2j+1) P_j(2u - 1), coefficients in u
EXPLICIT = {
    1: math.sqrt(3) * Polynomial([-1, 2]),
    2: math.sqrt(5) * Polynomial([1, -6, 6]),
    3: math.sqrt(7) * Polynomial([-1, 12, -30, 20]),
    4: 3.0 * Polynomial([1, -20, 90, -140, 70]),
    5: math.sqrt(11) * Polynomial([-1, 30, -210, 560, -630, 252]),
    6: math.sqrt(13) * Polynomial([1, -42, 420, -1680, 3150, -2772, 924]),
}


def test_degree_one_vanishes_at_half():
    assert legendre_eval(1, 0.5) == 0.0


def test_degree_two_at_zero():
    assert legendre_eval(2, 0.0) == pytest.approx(math.sqrt(5), abs=1e-14)


def test_degree_three_quarter():
    # sqrt(7) * 0.4375 from the explicit polynomial
    assert legendre_eval(3, 0.25) == pytest.approx(1.1575161985907584, abs=1e-13)


def test_recurrence_matches_explicit():
    u = np.linspace(0, 1, 100)
    mat = legendre_matrix(u, 6)
    for j, poly in EXPLICIT.items():
        np.testing.assert_allclose(mat[:, j - 1], poly(u), atol=1e-11)


def test_vector_examples():
    np.testing.assert_allclose(legendre_vector(2, 0.5), [0.0, -math.sqrt(5) / 2], atol=1e-14)
    np.testing.assert_allclose(legendre_vector(1, 1.0), [math.sqrt(3)], atol=1e-14)


def test_vector_consistent_with_eval():
    vec = legendre_vector(3, 0.25)
    assert list(vec) == [legendre_eval(j, 0.25) for j in (1, 2, 3)]


def test_matrix_shape_and_constant():
    u = np.linspace(0, 1, 7).reshape(7, 1)
    assert legendre_matrix(u, 4).shape == (7, 1, 4)
    full = legendre_matrix(np.array([0.3]), 3, include_constant=True)
    assert full.shape == (1, 4) and full[0, 0] == 1.0


@pytest.mark.parametrize("u", [-0.01, 1.01, np.nan])
def test_domain(u):
    with pytest.raises(DomainError):
        legendre_eval(2, u)


def test_orthonormality():
    gram = LegendreBasis(max_degree=10, quadrature_points=128).gram()
    np.testing.assert_allclose(gram, np.eye(11), atol=1e-10)


def test_gauss_legendre_interval():
    nodes, weights = gauss_legendre(20, 2.0, 5.0)
    assert weights.sum() == pytest.approx(3.0, abs=1e-13)
    assert np.dot(weights, nodes**3) == pytest.approx((5**4 - 2**4) / 4, rel=1e-13)


@given(st.lists(st.floats(-1, 1), min_size=1, max_size=10))
def test_parseval(coefs):
    basis = LegendreBasis()
    c = np.array(coefs)

    def sq(u):
        return legendre_matrix(u, c.size) @ c

    assert basis.integrate(lambda u: sq(u) ** 2) == pytest.approx(float(c @ c), abs=1e-12)


class TestKernel:
    def test_examples(self):
        assert bb_kernel(0.3, 0.7) == pytest.approx(0.09, abs=1e-15)
        assert bb_kernel(0.0, 0.4) == 0.0
        assert bb_kernel(0.5, 0.5) == 0.25

    @given(st.floats(0, 1), st.floats(0, 1))
    def test_symmetric(self, u, v):
        assert bb_kernel(u, v) == bb_kernel(v, u)


TEST_FUNCTIONS = {
    "sin_pi": (lambda t: np.sin(np.pi * t), lambda t: np.pi * np.cos(np.pi * t)),
    "quadratic": (lambda t: t * (1 - t), lambda t: 1 - 2 * t),
    "cubic": (lambda t: t**2 * (1 - t), lambda t: 2 * t - 3 * t**2),
}


@pytest.mark.parametrize("name", sorted(TEST_FUNCTIONS))
@pytest.mark.parametrize("u", [0.1, 0.3, 0.5, 0.7, 0.9])
def test_reproducing_property(name, u):
    phi, dphi = TEST_FUNCTIONS[name]
    assert rkhs_reproduce_check(u, (phi, dphi)) == pytest.approx(phi(u), abs=1e-6)


def test_reproducing_examples():
    sin2 = (lambda t: np.sin(2 * np.pi * t), lambda t: 2 * np.pi * np.cos(2 * np.pi * t))
    assert rkhs_reproduce_check(0.5, TEST_FUNCTIONS["sin_pi"]) == pytest.approx(1.0, abs=1e-6)
    assert rkhs_reproduce_check(0.25, TEST_FUNCTIONS["quadratic"]) == pytest.approx(0.1875, abs=1e-9)
    assert rkhs_reproduce_check(0.9, sin2) == pytest.approx(math.sin(1.8 * math.pi), abs=1e-6)


def test_reproducing_needs_bridge_function():
    with pytest.raises(ValueError):
        rkhs_reproduce_check(0.5, (lambda t: t, lambda t: np.ones_like(t)))


def test_gauss_legendre_against_high_precision():
    import mpmath as mp
    mp.mp.dps = 30
    n = 128
    nodes, weights = gauss_legendre(n, -1.0, 1.0)
    for x, w in list(zip(nodes, weights))[::9]:
        t = mp.mpf(float(x))
        for _ in range(3):
            p, q = mp.legendre(n, t), mp.legendre(n - 1, t)
            t -= p / (n * (t * p - q) / (t * t - 1))
        dp = n * (t * mp.legendre(n, t) - mp.legendre(n - 1, t)) / (t * t - 1)
        assert x == pytest.approx(float(t), abs=2e-16)
        assert w == pytest.approx(float(2 / ((1 - t * t) * dp * dp)), rel=1e-12)
