import cmath
import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from lyaprigid.errors import PositiveCurvature
from lyaprigid.metric import (Bump, ConformalMetric, conformal_factor, curvature_bounds,
                              default_bumps, epsilon_max, gaussian_curvature, log_scale)


def sympy_center_curvature(rho, amp, eps, profile="poly"):
    """K at the centre of a bump at 0, from a symbolic radial Laplacian."""
    r = sp.symbols("r", positive=True)
    d = 2 * sp.atanh(r)
    q = d ** 2 / rho ** 2
    f = (1 - q) ** 3 if profile == "poly" else sp.exp(1 - 1 / (1 - q))
    log_lam = sp.log(2 / (1 - r ** 2)) + eps * amp * f
    # radial Laplacian g'' + g'/r; at r = 0 it equals 2 g''(0)
    lap0 = 2 * sp.diff(log_lam, r, 2).subs(r, 0)
    lam0 = sp.exp(log_lam.subs(r, 0))
    return float(sp.N(-lap0 / lam0 ** 2, 20))


def fd_factor(metric, z, h=1e-5):
    """Finite-difference gradient and Laplacian of phi."""
    phi = lambda w: conformal_factor(metric, w)[0]
    p0 = phi(z)
    px, mx = phi(z + h), phi(z - h)
    py, my = phi(z + 1j * h), phi(z - 1j * h)
    grad = complex((px - mx) / (2 * h), (py - my) / (2 * h))
    lap = (px + mx + py + my - 4 * p0) / (h * h)
    return grad, lap


def test_epsilon_zero_is_flat_factor(metric0):
    for z in (0j, 0.3 + 0.2j, -0.5j):
        assert conformal_factor(metric0, z) == (0.0, 0j, 0.0)
        assert gaussian_curvature(metric0, z) == pytest.approx(-1.0, abs=1e-12)


def test_outside_support(metric02):
    z = 0.6 * cmath.exp(0.25j * math.pi)  # in F, hyperbolic distance 1.39 from the centre
    assert metric02.group.in_domain(z)
    phi, grad, lap = conformal_factor(metric02, z)
    assert (phi, grad, lap) == (0.0, 0j, 0.0)
    assert gaussian_curvature(metric02, z) == pytest.approx(-1.0, abs=1e-12)


def test_center_value(metric02):
    phi, grad, lap = conformal_factor(metric02, 0j)
    assert phi == pytest.approx(0.5 * 0.02, abs=1e-15)
    assert grad == 0


def test_center_curvature_matches_sympy(schottky):
    m = ConformalMetric(schottky, [Bump(0j, 0.2, 0.05)], 1.0)
    ref = sympy_center_curvature(sp.Rational(1, 5), sp.Rational(1, 20), 1)
    assert ref == pytest.approx(12.6677238525, abs=1e-9)
    assert gaussian_curvature(m, 0j) == pytest.approx(ref, rel=1e-12)
    assert gaussian_curvature(m, 0j) > -1


def test_center_curvature_smooth_profile(schottky):
    m = ConformalMetric(schottky, [Bump(0j, 0.8, 0.5)], 0.02, profile="smooth")
    ref = sympy_center_curvature(sp.Rational(4, 5), sp.Rational(1, 2), sp.Rational(1, 50), "smooth")
    assert gaussian_curvature(m, 0j) == pytest.approx(ref, rel=1e-12)


def test_off_center_bump_matches_finite_differences(schottky):
    m = ConformalMetric(schottky, [Bump(0.2 + 0.1j, 0.5, 0.4)], 0.05)
    for z in (0.25 + 0.05j, 0.1 + 0.3j, 0.3 + 0.2j):
        phi, grad, lap = conformal_factor(m, z)
        g_fd, l_fd = fd_factor(m, z)
        assert abs(grad - g_fd) < 1e-8
        assert lap == pytest.approx(l_fd, abs=1e-4)


def test_log_scale_base_metric(metric0):
    z = 0.3 - 0.4j
    sigma, grad = log_scale(metric0, z)
    assert sigma == pytest.approx(math.log(2 / (1 - abs(z) ** 2)), abs=1e-15)
    assert grad == pytest.approx(2 * z / (1 - abs(z) ** 2), abs=1e-15)


def test_base_curvature_scaling(schottky):
    m = ConformalMetric(schottky, [], 0.0, base_curvature=-4.0)
    assert gaussian_curvature(m, 0.2j) == pytest.approx(-4.0, abs=1e-12)
    assert m.scale == 2.0
    b, c, ok = curvature_bounds(m)
    assert (b, c) == (2.0, 2.0)


def test_support_constraint(schottky):
    with pytest.raises(ValueError, match="support constraint"):
        ConformalMetric(schottky, [Bump(0j, 1.0, 0.5)], 0.01)


def test_center_outside_domain_rejected(schottky):
    ca, ra = schottky.discs["a"]
    with pytest.raises(ValueError, match="fundamental domain"):
        ConformalMetric(schottky, [Bump(ca, 0.1, 0.5)], 0.01)


def test_bad_profile_rejected(schottky):
    with pytest.raises(ValueError):
        ConformalMetric(schottky, default_bumps(), 0.01, profile="cubic")


# bounds ---------------------------------------------------------------------------


def test_bounds_unperturbed(metric0):
    assert curvature_bounds(metric0)[:2] == (1.0, 1.0)


@pytest.mark.parametrize("eps,ref", [(0.01, (0.94722, 1.01498)), (0.02, (0.89242, 1.02973)),
                                     (0.04, (0.77492, 1.05860))])
def test_bounds_small_epsilon(schottky, eps, ref):
    m = ConformalMetric(schottky, default_bumps(), eps)
    b, c, ok = curvature_bounds(m, 100)
    assert ok and b < 1 < c
    assert (b, c) == pytest.approx(ref, abs=1e-5)
    # O(epsilon) departure with the same constant scale
    assert 1 - b < 6 * eps and c - 1 < 2 * eps


def test_bounds_grid_convergence(metric02):
    b1, c1, _ = curvature_bounds(metric02, 100)
    b2, c2, _ = curvature_bounds(metric02, 200)
    assert abs(b1 - b2) < 1e-3 and abs(c1 - c2) < 1e-3


def test_bounds_dense_oracle(schottky):
    m = ConformalMetric(schottky, default_bumps(), 0.02)
    b, c, _ = curvature_bounds(m, 60)
    # independent radial scan around the centre at fine resolution
    d = np.linspace(0, 0.8, 20001)
    K = np.array([gaussian_curvature(m, math.tanh(x / 2)) for x in d])
    assert b == pytest.approx(math.sqrt(-K.max()), abs=1e-6)
    assert c == pytest.approx(math.sqrt(-K.min()), abs=1e-6)


def test_positive_curvature_raised(schottky):
    m = ConformalMetric(schottky, default_bumps(), 0.2)
    with pytest.raises(PositiveCurvature):
        curvature_bounds(m, 60)


def test_epsilon_max(schottky):
    m = ConformalMetric(schottky, default_bumps(), 0.0)
    em = epsilon_max(m)
    assert em == pytest.approx(0.8 ** 2 / (12 * 0.5), rel=1e-12)
    curvature_bounds(m.with_epsilon(0.95 * em), 60)
    with pytest.raises(PositiveCurvature):
        curvature_bounds(m.with_epsilon(1.05 * em), 60)


def test_negativity_below_epsilon_max(metric02):
    xs = np.linspace(-0.95, 0.95, 61)
    for x in xs:
        for y in xs:
            z = complex(x, y)
            if abs(z) < 0.98 and metric02.group.in_domain(z):
                assert gaussian_curvature(metric02, z) < 0


# invariance -------------------------------------------------------------------------


disk_points = st.tuples(st.floats(0, 0.95), st.floats(0, 2 * math.pi)).map(
    lambda p: p[0] * cmath.exp(1j * p[1]))


@settings(max_examples=60, deadline=None)
@given(z=disk_points, letter=st.sampled_from("abAB"))
def test_factor_group_invariant(metric02, z, letter):
    g = metric02.group.generators[letter]
    w = complex(g(z))
    if abs(w) > 0.999:
        return
    assert abs(conformal_factor(metric02, w)[0] - conformal_factor(metric02, z)[0]) <= 1e-10
    assert abs(gaussian_curvature(metric02, w) - gaussian_curvature(metric02, z)) <= 1e-9


@settings(max_examples=30, deadline=None)
@given(z=disk_points, letter=st.sampled_from("abAB"))
def test_log_scale_transforms_as_metric(metric02, z, letter):
    # exp(sigma(g z)) |g'(z)| = exp(sigma(z)) for an isometry g
    g = metric02.group.generators[letter]
    w = complex(g(z))
    if abs(w) > 0.999:
        return
    s_w, _ = log_scale(metric02, w)
    s_z, _ = log_scale(metric02, z)
    assert s_w + math.log(abs(g.derivative(z))) == pytest.approx(s_z, abs=1e-9)
