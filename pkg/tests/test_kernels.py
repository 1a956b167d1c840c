import math
import warnings
from decimal import Decimal, getcontext
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from urnmeasure.distributions import PowerLawPmf, karlin_rouault_values
from urnmeasure.intervals import IntervalSet
from urnmeasure.kernels import (
    CLOSED_FORM,
    INCLUSION_EXCLUSION,
    QUADRATURE,
    QuadratureError,
    cross_kernel,
    forward_kernel,
    k_exact,
    kstar,
    kstar_closed,
    kstar_quadrature,
    pi_matrix,
    pi_value,
    q_limit_cov,
    u_field_kernel,
)
from urnmeasure.quadrature import integrate

getcontext().prec = 50
SQRT2 = Decimal(2).sqrt()
HALF = Fraction(1, 2)


def iv(lo, hi):
    return IntervalSet([(lo, hi)])


def exact_pi_half(i, j):
    """``pi_ij`` at theta = 1/2 from the Gamma-function integrals, in exact arithmetic.

    With ``c = theta / Gamma(1 - theta)`` the diagonal integral is
    ``c Gamma(i - theta) / i!`` and the product term is
    ``c Gamma(i + j - theta) 2^(theta - i - j) / (i! j!)``.  Both Gamma ratios are
    rational products, and ``2^theta`` contributes a factor ``sqrt 2``.
    """
    def gamma_ratio(m):
        # Gamma(m - theta) / Gamma(1 - theta)
        out = Fraction(1)
        for r in range(1, m):
            out *= r - HALF
        return out

    diag = HALF * gamma_ratio(i) / math.factorial(i) if i == j else Fraction(0)
    cross = HALF * gamma_ratio(i + j) / (math.factorial(i) * math.factorial(j) * 2 ** (i + j))
    value = Decimal(diag.numerator) / Decimal(diag.denominator) \
        - SQRT2 * Decimal(cross.numerator) / Decimal(cross.denominator)
    return float(value)


@pytest.mark.parametrize("a1,a2,expected", [
    (iv(0, 1), iv(0, 1), 0.4142136),
    (iv(0, 0.5), iv(0.5, 1), 0.0),
    (iv(0, 0.5), iv(0.25, 0.75), 0.1339746),
])
def test_closed_form_examples(a1, a2, expected):
    res = kstar_closed(a1, a2, 0.5)
    assert res.value == pytest.approx(expected, abs=1e-7)
    assert res.method == CLOSED_FORM
    assert kstar(a1, 1, a2, 1, 0.5).method == CLOSED_FORM


@pytest.mark.parametrize("theta", [0.2, 0.5, 0.8])
@pytest.mark.parametrize("a1,a2", [
    (iv(0, 1), iv(0, 1)), (iv(0, 0.6), iv(0.4, 1)), (iv(0, 0.3), iv(0.7, 1)),
    (IntervalSet([(0, 0.2), (0.5, 0.9)]), iv(0.1, 0.6)), (iv(0.2, 0.25), iv(0, 1)),
])
def test_quadrature_reproduces_closed_form(theta, a1, a2):
    quad = kstar_quadrature(a1, 1, a2, 1, theta, tol=1e-10)
    assert quad.method == QUADRATURE
    assert quad.value == pytest.approx(kstar_closed(a1, a2, theta).value, abs=1e-8)
    assert quad.est_abs_error <= 1e-10


@pytest.mark.parametrize("i,j", [(1, 1), (1, 2), (2, 2), (1, 3), (3, 3), (2, 5), (30, 30), (30, 31)])
def test_pi_matches_exact_gamma_integrals(i, j):
    assert pi_value(i, j, 0.5) == pytest.approx(exact_pi_half(i, j), rel=1e-10, abs=1e-300)


def test_pi_frozen_values():
    assert pi_value(1, 1, 0.5) == pytest.approx(0.41161165235, abs=1e-10)
    assert pi_value(1, 2, 0.5) == pytest.approx(-0.03314563037, abs=1e-10)
    assert pi_value(2, 2, 0.5) == pytest.approx(0.10428398102, abs=1e-10)
    total = pi_value(1, 1, 0.5) + 2 * pi_value(1, 2, 0.5) + pi_value(2, 2, 0.5)
    assert total == pytest.approx(0.44960437, abs=1e-8)
    m = pi_matrix(4, 0.5)
    np.testing.assert_array_equal(m, m.T)
    assert m[0, 1] == pi_value(1, 2, 0.5)


@pytest.mark.parametrize("theta", [0.3, 0.7])
def test_pi_log_space_branch_is_continuous(theta):
    # the direct formula is exact in binary for moderate sizes; compare across the switch
    for i, j in ((30, 30), (30, 31), (31, 31)):
        q = karlin_rouault_values(theta, i + j)
        direct = (q[i - 1] if i == j else 0.0) - math.comb(i + j, i) * 2.0 ** (theta - i - j) * q[-1]
        assert pi_value(i, j, theta) == pytest.approx(direct, rel=1e-10)


@pytest.mark.parametrize("i,j", [(1, 1), (1, 2), (2, 2), (2, 3), (3, 3)])
@pytest.mark.parametrize("a", [iv(0, 1), iv(0.2, 0.7)])
def test_exact_kernel_on_equal_sets_is_scaled_pi(i, j, a):
    res = k_exact(a, i, a, j, 0.5)
    assert res.method == INCLUSION_EXCLUSION
    assert res.value == pytest.approx(float(a.measure) ** 0.5 * pi_value(i, j, 0.5), abs=1e-6)


def test_level_two_kernel_against_series():
    # R*_2 = R*_1 - R_1, so K*(2,2) = K*(1,1) - 2 sum_j pi_j1 + pi_11 on A = [0,1]
    theta = 0.5
    j = np.arange(1, 3000)
    q = karlin_rouault_values(theta, 3001)
    col = -(j + 1) * 2.0 ** (theta - j - 1) * q[j]
    col[0] += q[0]
    expected = (2**theta - 1) - 2 * col.sum() + pi_value(1, 1, theta)
    got = kstar_quadrature(iv(0, 1), 2, iv(0, 1), 2, theta)
    assert got.value == pytest.approx(expected, abs=1e-8)
    assert got.value == pytest.approx(0.1187184335, abs=1e-9)


def test_mixed_levels_are_consistent():
    # Cov(R*_1(A1), R*_2(A2)) = K*(1,1) - sum_i Cov(R*_1(A1), R_i(A2)) restricted to i = 1
    a1, a2, theta = iv(0, 0.6), iv(0.3, 1), 0.5
    k12 = kstar_quadrature(a1, 1, a2, 2, theta).value
    k11 = kstar_closed(a1, a2, theta).value
    exact_1 = sum(k_exact(a1, i, a2, 1, theta).value for i in range(1, 40))
    assert k12 == pytest.approx(k11 - exact_1, abs=1e-6)


def test_kernel_is_symmetric():
    a1, a2 = iv(0, 0.6), IntervalSet([(0.1, 0.3), (0.5, 1)])
    for k1, k2 in ((1, 2), (2, 3), (3, 1)):
        x = kstar(a1, k1, a2, k2, 0.4).value
        y = kstar(a2, k2, a1, k1, 0.4).value
        assert x == pytest.approx(y, abs=1e-9)


def test_kernel_matrix_is_positive_semidefinite():
    items = [(iv(0, 1), 1), (iv(0, 0.5), 2), (iv(0.3, 0.9), 1), (iv(0.3, 0.9), 3),
             (IntervalSet([(0, 0.2), (0.6, 1)]), 2), (iv(0.7, 1), 1), (iv(0.1, 0.4), 2),
             (iv(0, 1), 4)]
    n = len(items)
    m = np.empty((n, n))
    for a in range(n):
        for b in range(a, n):
            m[a, b] = m[b, a] = kstar(items[a][0], items[a][1], items[b][0], items[b][1], 0.5).value
    assert np.linalg.eigvalsh(m).min() >= -1e-8


@pytest.mark.parametrize("theta", [0.3, 0.5, 0.7])
def test_finite_t_identity_converges_to_kernel(theta):
    model = PowerLawPmf(theta)
    a1, a2 = iv(0, 0.6), iv(0.4, 1)
    t = 1e10
    cov_t = model.mean_occupied(1.2 * t) - model.mean_occupied(t)
    assert cov_t / model.mean_occupied(t) == pytest.approx(kstar_closed(a1, a2, theta).value, rel=2e-3)


def test_forward_and_cross_kernels():
    assert forward_kernel(0.5, 0.5, 0.5) == pytest.approx(1 - math.sqrt(0.5))
    assert forward_kernel(0.2, 0.7, 0.5) == forward_kernel(0.7, 0.2, 0.5)
    assert cross_kernel(0.75, 0.75, 0.5) == pytest.approx(math.sqrt(1.5) - 1)
    assert cross_kernel(0.3, 0.5, 0.5) == 0.0
    with pytest.raises(ValueError):
        forward_kernel(1.5, 0.2, 0.5)


def test_u_field_kernel_properties():
    assert u_field_kernel(0.3, 0.0, 0.3, 0.0, 0.5) == pytest.approx(0.0, abs=1e-15)
    assert u_field_kernel(0.3, 1.0, 0.3, 1.0, 0.5) == pytest.approx(0.0, abs=1e-15)
    pts = [(s, t) for s in (0.1, 0.35, 0.6, 0.85) for t in (0.15, 0.4, 0.65, 0.9)]
    m = np.array([[u_field_kernel(*p, *q, 0.5) for q in pts] for p in pts])
    np.testing.assert_allclose(m, m.T, atol=1e-14)
    assert np.linalg.eigvalsh(m).min() >= -1e-10


def test_q_limit_equal_sets_is_pi_sum():
    res = q_limit_cov([0.0, 1.0], iv(0, 1), iv(0, 1), 0.5)
    assert res.method == CLOSED_FORM
    assert res.value == pytest.approx(0.41161165235, abs=1e-10)
    res = q_limit_cov([0.0, 1.0, 1.0], iv(0, 1), iv(0, 1), 0.5)
    assert res.value == pytest.approx(0.44960437, abs=1e-8)
    assert isinstance(res.value, float)


def test_q_limit_quadrature_matches_exact_kernels_and_closed_form():
    a = [0.0, 1.0, 1.0]
    a1, a2 = iv(0, 0.6), iv(0.3, 1)
    res = q_limit_cov(a, a1, a2, 0.5)
    assert res.method == QUADRATURE
    oracle = sum(a[i] * a[j] * k_exact(a1, i, a2, j, 0.5).value for i in (1, 2) for j in (1, 2))
    assert res.value == pytest.approx(oracle, abs=1e-6)
    assert res.value == pytest.approx(0.13590150334, abs=1e-8)
    # nearly equal sets take the quadrature path and agree with the closed form
    near = q_limit_cov([0.0, 1.0, -0.5, 0.25], iv(0, 1), iv(0, 1 - 1e-12), 0.5)
    exact = q_limit_cov([0.0, 1.0, -0.5, 0.25], iv(0, 1), iv(0, 1), 0.5)
    assert near.method == QUADRATURE
    assert near.value == pytest.approx(exact.value, abs=1e-7)


def test_q_limit_tail_warning_and_validation():
    with pytest.warns(RuntimeWarning):
        res = q_limit_cov(lambda k: np.where(k > 0, 1.0, 0.0), iv(0, 1), iv(0, 1), 0.5, k_max=50)
    assert res.warning and res.tail_estimate > 1e-3
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        quiet = q_limit_cov([0.0, 1.0], iv(0, 1), iv(0, 1), 0.5)
    assert not quiet.warning and quiet.tail_estimate == 0.0
    with pytest.raises(ValueError):
        q_limit_cov([1.0, 1.0], iv(0, 1), iv(0, 1), 0.5)
    assert q_limit_cov([0.0, 0.0], iv(0, 1), iv(0, 0.5), 0.5).value == 0.0


def test_invalid_arguments():
    with pytest.raises(ValueError):
        kstar_quadrature(iv(0, 1), 0, iv(0, 1), 1, 0.5)
    with pytest.raises(ValueError):
        kstar_quadrature(iv(0, 1), 1, iv(0, 1), 1, 0.5, tol=0)
    with pytest.raises(ValueError):
        kstar_closed(iv(0, 1), iv(0, 1), 1.2)
    with pytest.raises(ValueError):
        pi_value(0, 1, 0.5)


def test_quadrature_error_surfaces():
    with pytest.raises(QuadratureError):
        kstar_quadrature(iv(0, 1), 2, iv(0, 1), 2, 0.5, tol=1e-300)


@pytest.mark.parametrize("f,a,b,expected", [
    (lambda x: x**2, 0.0, 1.0, 1.0 / 3.0),
    (np.sin, 0.0, math.pi, 2.0),
    (lambda x: 1.0 / np.sqrt(x), 0.0, 1.0, 2.0),
    (lambda x: np.exp(-x), 0.0, 50.0, 1.0 - math.exp(-50.0)),
])
def test_integrate_known_values(f, a, b, expected):
    res = integrate(f, a, b, tol=1e-10)
    assert res.value == pytest.approx(expected, abs=1e-9)
    assert res.abs_error <= 1e-10


def test_integrate_edge_cases():
    assert integrate(np.sin, 1.0, 1.0).value == 0.0
    step = lambda x: (x > 0.3).astype(float)
    assert integrate(step, 0.0, 1.0, breakpoints=[0.3]).value == pytest.approx(0.7, abs=1e-12)
    with pytest.raises(QuadratureError):
        integrate(lambda x: 1.0 / x, 0.0, 1.0, tol=1e-10, max_evals=5000)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 0.95), st.integers(0, 20), st.integers(0, 20), st.integers(0, 20),
       st.integers(0, 20))
def test_level_one_kernel_bounds(theta, a, b, c, d):
    a1 = iv(Fraction(min(a, b), 20), Fraction(max(a, b), 20))
    a2 = iv(Fraction(min(c, d), 20), Fraction(max(c, d), 20))
    k = kstar_closed(a1, a2, theta).value
    # 0 <= K <= min(var1, var2) up to Cauchy-Schwarz
    v1 = kstar_closed(a1, a1, theta).value
    v2 = kstar_closed(a2, a2, theta).value
    assert 0.0 <= k <= math.sqrt(v1 * v2) + 1e-12


def test_disjoint_sets_give_zero():
    a1, a2 = iv(0, 0.3), iv(0.5, 0.9)
    assert kstar_quadrature(a1, 2, a2, 3, 0.5).value == pytest.approx(0.0, abs=1e-8)
    assert k_exact(a1, 1, a2, 2, 0.5).value == pytest.approx(0.0, abs=1e-8)


def test_pi_symmetry_and_hand_values():
    m = pi_matrix(20, 0.5)
    for i in range(1, 21):
        for j in range(1, 21):
            assert pi_value(i, j, 0.5) == pi_value(j, i, 0.5) == m[i - 1, j - 1]
    assert pi_value(1, 1, 0.5) == pytest.approx(0.5 - 2 * 2**-1.5 * 0.125, abs=1e-15)
    assert pi_value(1, 2, 0.5) == pytest.approx(-3 * 2**-2.5 * 0.0625, abs=1e-15)
    assert pi_value(2, 2, 0.5) == pytest.approx(0.125 - 6 * 2**-3.5 * 0.0390625, abs=1e-15)


def test_forward_kernel_corner():
    assert forward_kernel(1, 1, 0.5) == pytest.approx(2**0.5 - 1, abs=1e-15)


@pytest.mark.parametrize("s,t", [(0.5, 0.3), (0.2, 0.45), (0.9, 0.1)])
def test_u_field_variance_formula(s, t):
    from urnmeasure.intervals import circular_arcs
    fwd, bwd = circular_arcs(s, t)
    expected = 2 * ((2 * t) ** 0.5 - t**0.5) - 2 * kstar_closed(fwd, bwd, 0.5).value
    assert u_field_kernel(s, t, s, t, 0.5) == pytest.approx(expected, abs=1e-14)
    assert u_field_kernel(s, t, 0.1, 0.7, 0.5) == pytest.approx(u_field_kernel(0.1, 0.7, s, t, 0.5))
