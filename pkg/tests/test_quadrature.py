"""Quadrature engine tests against closed-form integrals."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zetakernel.quadrature import (
    build_mesh,
    decaying_integral,
    gauss_rule,
    integrate_adaptive,
    integrate_mesh,
    lagrange_matrix,
    left_edge_rule,
    plain_rule,
)


def test_gauss_rule_polynomial_exactness():
    # order q integrates degree 2q-1 exactly
    x, w = gauss_rule(6)
    for deg in range(12):
        got = float(np.dot(w, x**deg))
        want = 0.0 if deg % 2 else 2.0 / (deg + 1)
        assert got == pytest.approx(want, abs=1e-14)


def test_plain_rule_exp():
    x, w = plain_rule(-1.5, 2.0, 16)
    assert float(np.dot(w, np.exp(x))) == pytest.approx(math.exp(2.0) - math.exp(-1.5), rel=1e-14)


def test_left_edge_rule_half_power():
    # int_0^1 sqrt(u) e^u du, compare against adaptive reference
    x, w = left_edge_rule(0.0, 1.0, 20)
    got = float(np.dot(w, np.sqrt(x) * np.exp(x)))
    ref, err = integrate_adaptive(lambda u: np.sqrt(u) * np.exp(u), 0.0, 1.0, tol_abs=1e-13)
    assert got == pytest.approx(ref, abs=1e-12)
    # and the rule beats plain Gauss of the same order on the cusp
    xp, wp = plain_rule(0.0, 1.0, 20)
    plain = float(np.dot(wp, np.sqrt(xp) * np.exp(xp)))
    assert abs(got - ref) < abs(plain - ref)


def test_left_edge_rule_shifted():
    # int_2^3 (u-2)^1.5 du = 2/5
    x, w = left_edge_rule(2.0, 3.0, 12)
    got = float(np.dot(w, (x - 2.0) ** 1.5))
    assert got == pytest.approx(0.4, rel=1e-14)


def test_mesh_breakpoints_and_weights():
    mesh = build_mesh(-1.0, 1.0, panels_per_unit=4, order=8, breakpoints=[0.3, -0.2, 5.0])
    assert np.any(np.isclose(mesh.edges, 0.3))
    assert np.any(np.isclose(mesh.edges, -0.2))
    assert not np.any(np.isclose(mesh.edges, 5.0))
    assert float(mesh.weights.sum()) == pytest.approx(2.0, abs=1e-14)
    assert integrate_mesh(np.exp, mesh) == pytest.approx(math.exp(1) - math.exp(-1), rel=1e-13)


def test_mesh_handles_kinked_integrand():
    f = lambda x: np.abs(x - 0.25)
    mesh = build_mesh(0.0, 1.0, panels_per_unit=2, order=10, breakpoints=[0.25])
    want = 0.25**2 / 2 + 0.75**2 / 2
    assert integrate_mesh(f, mesh) == pytest.approx(want, abs=1e-15)


def test_adaptive_matches_closed_form():
    val, err = integrate_adaptive(lambda x: np.sin(x) ** 2, 0.0, math.pi, tol_abs=1e-12)
    assert val == pytest.approx(math.pi / 2, abs=1e-12)
    assert err < 1e-10


def test_adaptive_endpoint_cusp():
    val, err = integrate_adaptive(lambda x: np.sqrt(np.maximum(1.0 - x, 0.0)), 0.0, 1.0)
    assert val == pytest.approx(2.0 / 3.0, abs=1e-9)


def test_decaying_integral_gaussian_tail():
    val, err, x_stop = decaying_integral(lambda x: np.exp(-x), 0.0)
    assert val == pytest.approx(1.0, rel=1e-12)
    assert x_stop < 60.0


def test_lagrange_matrix_reproduces_polynomials():
    nodes, _ = plain_rule(0.0, 1.0, 9)
    pts = np.linspace(0.0, 1.0, 17)
    L = lagrange_matrix(nodes, pts)
    for deg in range(9):
        got = L @ nodes**deg
        assert np.max(np.abs(got - pts**deg)) < 1e-11


def test_lagrange_matrix_at_nodes_is_identity():
    nodes, _ = plain_rule(-1.0, 1.0, 7)
    L = lagrange_matrix(nodes, nodes)
    assert np.max(np.abs(L - np.eye(7))) < 1e-12


@settings(max_examples=50, deadline=None)
@given(st.floats(min_value=-3.0, max_value=3.0), st.floats(min_value=0.1, max_value=4.0))
def test_plain_rule_linear_exact(a, width):
    x, w = plain_rule(a, a + width, 4)
    got = float(np.dot(w, 2.0 * x + 1.0))
    want = (a + width) ** 2 + (a + width) - a**2 - a
    assert got == pytest.approx(want, rel=1e-12, abs=1e-12)
