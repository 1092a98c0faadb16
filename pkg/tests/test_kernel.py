import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from revprimes import kernel as K
from revprimes.digits import torus_norm
from revprimes.numerics import integrate
from oracles import kernel_mp, kernel_sum

bases = st.integers(2, 20)


def test_kernel_examples():
    assert K.dirichlet_kernel(2, 0) == 1
    assert K.dirichlet_kernel(2, 1) == -1  # [PAPER]
    assert K.dirichlet_kernel(2, 0.25) == pytest.approx(1 / math.sqrt(2), abs=1e-15)


@given(bases, st.integers(-1000, 1000))
def test_integer_values(b, n):
    assert K.dirichlet_kernel(b, n) == (-1) ** (n * (b - 1))


@given(bases, st.floats(-50, 50, allow_nan=False))
def test_kernel_against_high_precision(b, x):
    assert abs(K.dirichlet_kernel(b, x) - kernel_mp(b, x)) < 1e-13


@given(bases, st.floats(-5, 5, allow_nan=False))
def test_kernel_modulus_is_geometric_sum(b, x):
    v = K.dirichlet_kernel(b, x)
    assert abs(v) <= 1
    assert abs(abs(v) - kernel_sum(b, x)) < 1e-12


@given(bases, st.floats(-3, 3, allow_nan=False))
def test_fejer_square(b, x):
    assert abs(K.dirichlet_kernel(b, x) ** 2 - K.fejer(b, x)) < 1e-12


@given(st.integers(2, 12), st.floats(-3, 3, allow_nan=False))
def test_chebyshev_form(b, x):
    c = np.cos(np.pi * np.array([x]))
    assert abs(K.kernel_from_cos(b, c)[0] - K.dirichlet_kernel(b, x)) < 1e-12


def test_vectorised_shape():
    x = np.linspace(-2, 2, 11).reshape(11, 1)
    assert K.dirichlet_kernel(5, x).shape == (11, 1)


@pytest.mark.parametrize("b", range(2, 17))
def test_gaussian_domination(b):
    t = np.linspace(0, 1 / b, 20001)
    assert np.all(np.abs(K.dirichlet_kernel(b, t)) <= np.exp(-(math.pi**2 / 6) * (b * b - 1) * t * t) + 1e-15)


@pytest.mark.parametrize("b", range(2, 17))
def test_monotone_concave_near_zero(b):
    x = np.linspace(0, 1 / (2 * b - 2), 4001)
    k = K.dirichlet_kernel(b, x)
    assert np.all(np.diff(k) <= 1e-15)
    assert np.all(k[1:-1] >= (k[:-2] + k[2:]) / 2 - 1e-15)


@pytest.mark.parametrize("b", range(2, 17))
def test_second_derivative_bound(b):
    h = 1e-4
    x = np.linspace(-0.5, 0.5, 20001)
    d2 = (K.dirichlet_kernel(b, x + h) - 2 * K.dirichlet_kernel(b, x) + K.dirichlet_kernel(b, x - h)) / h**2
    assert np.max(np.abs(d2)) <= K.second_derivative_bound(b) * (1 + 1e-5)


def test_psi_examples():  # [PAPER]
    assert K.psi(2, 0.25) == pytest.approx(math.sqrt(2), abs=1e-14)
    assert K.psi(3, 1 / 6) == pytest.approx(5 / 3, abs=1e-14)
    assert K.psi(4, 1 / 8) == pytest.approx(math.sqrt(2 + math.sqrt(2)), abs=1e-14)


@pytest.mark.parametrize("b", range(2, 17))
def test_psi_maximum(b):
    x = np.linspace(0, 1, 4001)
    top = K.psi(b, 1 / (2 * b))
    assert np.all(K.psi(b, x) <= top + 1e-13)
    assert top <= (2 / math.pi) * math.log(4.87 * b)


def test_eta_examples():
    assert K.eta(2) == pytest.approx(math.log(2 + math.sqrt(2)) / (4 * math.log(2)), abs=1e-15)
    assert K.eta(2) == pytest.approx(0.4428883258, abs=1e-10)  # [DERIVED] closed form
    assert K.eta(3) == pytest.approx(math.log(5) / math.log(3) - 1, abs=1e-14)  # [PAPER]
    assert K.eta(4) == pytest.approx(K.eta(2), abs=1e-14)  # [PAPER]


@pytest.mark.parametrize("b", range(2, 31))
def test_eta_range(b):
    assert 0 < K.eta(b) < 0.465


def test_T_examples():
    assert K.T(2, 1, 0.5) == pytest.approx(math.cos(math.pi / 12), abs=1e-15)  # [PAPER]
    assert K.T(2, 1, 0.0) == pytest.approx(0.5 * (1 + math.cos(math.pi / 6)), abs=1e-15)
    with pytest.raises(ValueError):
        K.T(2, 0, 0.1)


@given(st.integers(2, 12), st.floats(0.1, 50), st.floats(-10, 10))
def test_T_range_periodic_even(b, kappa, a):
    v = K.T(b, kappa, a)
    assert 0 < v <= 1
    assert K.T(b, kappa, 0.0) >= 1 / b
    assert abs(v - K.T(b, kappa, a + 1)) < 1e-12
    assert abs(v - K.T(b, kappa, -a)) < 1e-12


def test_max_T_examples():
    m = K.max_T(2, 1)
    assert m.value == pytest.approx(math.cos(math.pi / 12), abs=1e-15)
    assert m.argmax == 0.5
    m3 = K.max_T(3, 1)
    assert m3.argmax == 0.0 and m3.value == K.T(3, 1, 0.0)
    big = K.max_T(2, 1e6, tol=1e-9)
    assert abs(big.value - 0.5) <= 2 * math.sqrt(18 / (math.pi * 1e6))


@pytest.mark.parametrize("b", [2, 3, 5, 7])
@pytest.mark.parametrize("kappa", [0.5, 1.0])
def test_small_kappa_maximiser_on_grid(b, kappa):
    a = np.linspace(0, 1, 20001)
    assert np.max(K.T(b, kappa, a)) <= K.max_T(b, kappa).value + 1e-15


@pytest.mark.parametrize("b,kappa", [(2, 3.0), (3, 10.0), (5, 25.0), (10, 211.0)])
def test_max_T_certified_against_dense_grid(b, kappa):
    cm = K.max_T(b, kappa)
    a = np.linspace(0, 0.5, 200001)
    g = np.max(K.T(b, kappa, a))
    assert g <= cm.upper + 1e-15
    assert cm.margin <= 1e-10 * (1 + 1e-9)
    lo = 1 / b
    hi = min(1, 1 / b + math.sqrt(6 * (b + 1) / (math.pi * (b - 1) * kappa)))
    assert lo <= cm.value <= hi
    assert hi == pytest.approx(K.max_T_simple_bound(b, kappa)) or hi == 1


def test_zeta_examples():
    assert K.zeta_bk(2, 1) == pytest.approx(-math.log(math.cos(math.pi / 12)) / math.log(2), abs=1e-14)
    assert K.zeta_bk(2, 1) == pytest.approx(0.050018, abs=5e-6)  # printed value rounds loosely
    assert K.zeta_bk(3, 1) > 0


def test_upsilon_examples():
    assert K.upsilon(2) == pytest.approx(-math.log(math.cos(math.pi / 9)) / 4, abs=1e-15)
    assert K.upsilon(2) == pytest.approx(0.015549, abs=5e-6)  # printed value rounds loosely


@pytest.mark.parametrize("b", range(2, 21))
def test_upsilon_properties(b):
    p = K.kernel_profile(b)
    assert p.upsilon > 0
    assert p.upsilon_prime > 1
    assert 1 / p.k_at_inv_sq <= math.pi / 2


@given(st.integers(2, 12), st.floats(0, 1), st.floats(0, 1))
def test_cross_norm_bound(b, a, t):
    lhs = max(torus_norm(a * b - t), torus_norm(a - t * b))
    rhs = max(torus_norm(a * (b * b - 1)), torus_norm(t * (b * b - 1))) / (b + 1)
    assert lhs >= rhs - 1e-12


@given(st.integers(2, 12), st.floats(0, 1))
def test_product_domination(b, x):
    t = np.linspace(0, 1, 2001)
    lhs = np.abs(K.dirichlet_kernel(b, x - t) * K.dirichlet_kernel(b, x - b * t))
    assert np.all(lhs <= K.dirichlet_kernel(b, torus_norm((b - 1) * x) / (b + 1)) + 1e-12)


@given(st.integers(2, 16), st.floats(-100, 100).filter(lambda a: torus_norm(a) > 1e-9))
def test_j0_lower_bound(b, a):
    j0 = math.floor(math.log(b / ((b + 1) * torus_norm(a))) / math.log(b))
    assert j0 >= 0
    assert torus_norm(torus_norm(a) * b**j0) >= 1 / (b + 1) - 1e-12


@pytest.mark.parametrize("b", [2, 3, 5, 10])
@pytest.mark.parametrize("kappa", [0.5, 1.0, 4.0])
def test_T_approximation(b, kappa):
    I = integrate(lambda t: K.dirichlet_kernel(b, t / (b + 1)) ** kappa, -0.5, 0.5).value
    a = np.linspace(0, 1, 513)
    err = np.abs(K.T(b, kappa, a) - I)
    assert np.all(err <= (1 / b) * (1 - (2 / math.pi) ** kappa) + 1e-12)
