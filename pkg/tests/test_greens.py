import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from isostring import BoundaryConditions, DiscreteString, build_kernels, epsilon_resolvent, g0
from isostring.greens import (
    BareGreen,
    iterated_diag,
    iterated_kernel_matrix,
    neumann_partial_sum,
    rational_b_fields,
    resolvent_derivative_diag,
)
from support import INF, bvp_green, random_string, tuple_sum_diag

BCS = [(1.0, 0.0), (INF, INF), (1.0, 1.0), (0.0, 2.0), (INF, 0.0), (2.5, INF), (0.0, INF)]


def one_mass():
    return DiscreteString([0.5], [1.0], BoundaryConditions(1.0, 0.0))


@pytest.mark.parametrize("h, H, x, y, expected", [
    (1.0, 0.0, 0.5, 0.5, -1.5),
    (INF, INF, 0.5, 0.5, -0.25),
    (1.0, 1.0, 0.25, 0.75, -1.25 * 1.25 / 3),
])
def test_g0_values(h, H, x, y, expected):
    assert g0(BoundaryConditions(h, H), x, y) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("h, H", BCS)
@pytest.mark.parametrize("y", [0.3, 0.61])
def test_g0_matches_finite_difference_bvp(h, H, y):
    bc = BoundaryConditions(h, H)
    x, G, ys = bvp_green(bc, y)
    exact = g0(bc, x, ys)
    assert np.max(np.abs(G - exact)) <= 1e-6 * np.max(np.abs(exact))


@pytest.mark.parametrize("h, H", BCS)
def test_g0_boundary_residuals_and_sign(h, H):
    bc = BoundaryConditions(h, H)
    green = BareGreen(bc)
    y = np.linspace(0.05, 0.95, 19)
    if not bc.h_inf:
        r = green.dx_right(0.0, y) - h * green(0.0, y)
        assert np.max(np.abs(r)) < 1e-12
    else:
        assert np.max(np.abs(green(0.0, y))) == 0
    if not bc.H_inf:
        r = green.dx_left(1.0, y) + H * green(1.0, y)
        assert np.max(np.abs(r)) < 1e-12
    X, Y = np.meshgrid(y, y)
    assert np.all(green(X, Y) < 0)
    np.testing.assert_array_equal(green(X, Y), green(Y, X))


def test_g0_domain():
    with pytest.raises(ValueError):
        g0(BoundaryConditions(1.0, 0.0), 1.2, 0.5)


def test_one_mass_kernels():
    ks = build_kernels(one_mass())
    np.testing.assert_allclose(ks.K, [[1.5]])
    np.testing.assert_allclose(ks.J, [[-1.0]])


def test_dirichlet_two_mass_kernel():
    s = DiscreteString([1 / 3, 2 / 3], [1.0, 1.0], BoundaryConditions(INF, INF))
    np.testing.assert_allclose(build_kernels(s).K, [[2 / 9, 1 / 9], [1 / 9, 2 / 9]], rtol=1e-15)


@pytest.mark.parametrize("h, H", BCS)
def test_kernel_properties(h, H):
    rng = np.random.default_rng(5)
    s = random_string(rng, 5, h, H, hi=0.95)
    ks = build_kernels(s)
    np.testing.assert_array_equal(ks.K, ks.K.T)
    assert np.all(ks.K > 0)
    green = BareGreen(s.bc)
    x = s.positions
    # J = 2 <dG0/dx>: plain derivative off the diagonal, left + right on it
    step = 1e-6
    for i in range(s.n):
        for j in range(s.n):
            fd_l = (g0(s.bc, x[i], x[j]) - g0(s.bc, x[i] - step, x[j])) / step
            fd_r = (g0(s.bc, x[i] + step, x[j]) - g0(s.bc, x[i], x[j])) / step
            assert ks.J[i, j] == pytest.approx(fd_l + fd_r, abs=1e-8)
            if i != j:
                assert ks.J[i, j] == pytest.approx(2 * green.dx_left(x[i], x[j]), rel=1e-14)


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("k", [1, 2, 3])
def test_iterated_diag_matches_tuple_sums(n, k):
    rng = np.random.default_rng(10 * n + k)
    for h, H in BCS[:4]:
        s = random_string(rng, n, h, H, hi=0.95, mass_scale=1.0)
        for x in [0.0, 0.37, *s.positions, 1.0]:
            ref = tuple_sum_diag(s, k, x)
            assert iterated_diag(s, k, x) == pytest.approx(ref, rel=1e-12, abs=1e-300)


def test_one_mass_iterated_diag():
    assert iterated_diag(one_mass(), 1, 0.5) == pytest.approx(2.25, rel=1e-15)


def test_dirichlet_left_end_vanishes():
    s = DiscreteString([0.3, 0.6], [1.0, 2.0], BoundaryConditions(INF, 0.0))
    assert iterated_diag(s, 1, 0.0) == 0.0


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(1, 6), k=st.integers(1, 4),
       bcs=st.sampled_from(BCS))
def test_iterated_kernel_sign(seed, n, k, bcs):
    s = random_string(np.random.default_rng(seed), n, *bcs, hi=0.95, min_gap=1e-3)
    vals = iterated_diag(s, k, s.positions)
    assert np.all((-1) ** (k + 1) * vals > 0)
    Gk = iterated_kernel_matrix(s, k)
    np.testing.assert_allclose(np.diag(Gk), vals, rtol=1e-12)


def test_one_mass_resolvent():
    Ge = epsilon_resolvent(one_mass(), 0.1)
    assert Ge[0, 0] == pytest.approx(-1.5 / 1.15, rel=1e-14)
    b0 = rational_b_fields(one_mass(), 1, 0.1)[0]
    assert b0(0.5) == pytest.approx((-1.5 + 1.5 / 1.15) / 0.1, rel=1e-12)
    assert b0(0.5) == pytest.approx(-1.95652, abs=1e-5)


def test_resolvent_tends_to_minus_K():
    s = random_string(np.random.default_rng(2), 4, 1.0, 1.0)
    K = build_kernels(s).K
    for eps in [1e-4, 1e-6, 1e-8]:
        assert np.max(np.abs(epsilon_resolvent(s, eps) + K)) < 10 * eps


@pytest.mark.parametrize("order", [0, 1, 2, 3])
def test_neumann_partial_sums_converge_at_the_right_order(order):
    s = random_string(np.random.default_rng(3), 4, 1.0, 0.0, mass_scale=1.0)
    errs = []
    epss = np.array([1e-1, 3e-2, 1e-2])
    for eps in epss:
        errs.append(np.max(np.abs(epsilon_resolvent(s, eps) - neumann_partial_sum(s, eps, order))))
    slope = np.polyfit(np.log(epss), np.log(errs), 1)[0]
    assert slope == pytest.approx(order + 1, abs=0.1)


def test_resolvent_third_order_richardson():
    s = random_string(np.random.default_rng(4), 3, INF, 1.0, mass_scale=1.0)
    e1 = np.max(np.abs(epsilon_resolvent(s, 1e-2) - neumann_partial_sum(s, 1e-2, 3)))
    e2 = np.max(np.abs(epsilon_resolvent(s, 1e-3) - neumann_partial_sum(s, 1e-3, 3)))
    assert e1 / e2 == pytest.approx(1e4, rel=0.05)


@pytest.mark.parametrize("r", [1, 2, 3])
def test_resolvent_derivatives_against_finite_differences(r):
    s = random_string(np.random.default_rng(7), 3, 1.0, 1.0, mass_scale=1.0)
    eps, d = 0.3, 1e-3
    x = np.array([0.1, *s.positions, 0.8])

    def diag_at(e):
        return resolvent_derivative_diag(s, e, 0)(x)

    # central stencils for the r-th derivative; returned values are divided by r!
    stencils = {1: ([-1, 1], [-0.5, 0.5]), 2: ([-1, 0, 1], [1, -2, 1]),
                3: ([-2, -1, 1, 2], [-0.5, 1, -1, 0.5])}
    offs, wts = stencils[r]
    fd = sum(w * diag_at(eps + o * d) for o, w in zip(offs, wts)) / d**r / math.factorial(r)
    exact = resolvent_derivative_diag(s, eps, r)(x)
    np.testing.assert_allclose(exact, fd, rtol=1e-4)


def test_resolvent_zeroth_derivative_is_the_resolvent_diagonal():
    s = random_string(np.random.default_rng(8), 4, 1.0, 0.0)
    vals = resolvent_derivative_diag(s, 0.2, 0)(s.positions)
    np.testing.assert_allclose(vals, np.diag(epsilon_resolvent(s, 0.2)), rtol=1e-13)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_b0_matches_its_defining_difference(k):
    s = random_string(np.random.default_rng(9), 3, 1.0, 1.0, mass_scale=1.0)
    eps = 0.2
    x = np.array([0.05, *s.positions, 0.9])
    fields = rational_b_fields(s, k, eps)
    partial = sum(resolvent_derivative_diag(s, eps, j)(x) * (-eps) ** j for j in range(k))
    naive = (g0(s.bc, x, x) - partial) / eps**k
    np.testing.assert_allclose(fields[0](x), naive, rtol=1e-8)
    for j in range(1, k + 1):
        ref = (-1) ** (k - j) * resolvent_derivative_diag(s, eps, k - j)(x)
        np.testing.assert_allclose(fields[j](x), ref, rtol=1e-14)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_b0_tends_to_signed_iterated_kernel(k):
    s = random_string(np.random.default_rng(11), 3, 1.0, 0.0)
    x = s.positions
    target = (-1) ** k * iterated_diag(s, k, x)
    errs = [np.max(np.abs(rational_b_fields(s, k, e)[0](x) - target)) for e in (1e-2, 1e-3, 1e-4)]
    slope = np.polyfit(np.log([1e-2, 1e-3, 1e-4]), np.log(errs), 1)[0]
    assert slope == pytest.approx(1.0, abs=0.05)


def test_invalid_arguments():
    s = one_mass()
    with pytest.raises(ValueError):
        iterated_diag(s, 0, 0.5)
    with pytest.raises(ValueError):
        rational_b_fields(s, 1, 0.0)
