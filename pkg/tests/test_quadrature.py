import numpy as np
import pytest

from xvem.quadrature import edge_rule, gauss_edge, graded_edge, polygon_rule, triangle_rule

SQUARE = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float)
# mpmath reference: integral of r^(-1/2) over the unit square, r measured from the origin
R_MINUS_HALF_SQUARE = 1.2499863343292483


def monomial_integral_square(a, b):
    return 1.0 / ((a + 1) * (b + 1))


@pytest.mark.parametrize("degree", [2, 6, 10])
def test_polygon_rule_exact_for_polynomials(degree):
    rule = polygon_rule(SQUARE, degree)
    for a in range(degree + 1):
        b = degree - a
        val = rule.integrate(rule.points[:, 0] ** a * rule.points[:, 1] ** b)
        assert val == pytest.approx(monomial_integral_square(a, b), rel=1e-13)


def test_triangle_rule_area():
    pts, w = triangle_rule(np.zeros(2), np.array([2.0, 0]), np.array([0, 1.0]), 4)
    assert w.sum() == pytest.approx(1.0)
    assert w @ pts[:, 0] ** 4 == pytest.approx(2**4 * 2 / 30)


def test_graded_rule_weakly_singular():
    rule = polygon_rule(SQUARE, 6, singular_point=np.zeros(2))
    r = np.hypot(*rule.points.T)
    assert rule.integrate(r**-0.5) == pytest.approx(R_MINUS_HALF_SQUARE, rel=1e-12)
    assert np.all(rule.weights > 0)


def test_sector_rule_near_singularity():
    shifted = SQUARE + [0.1, 0.0]
    rule = polygon_rule(shifted, 6, singular_point=np.zeros(2))
    assert rule.weights.sum() == pytest.approx(1.0, rel=1e-14)
    x, y = rule.points.T
    assert rule.integrate(x**3 * y**3) == pytest.approx((1.1**4 - 0.1**4) / 4 / 4, rel=1e-12)


def test_edge_rule_graded_toward_endpoint():
    a, b = np.array([0.0, 0.0]), np.array([1.0, 0.0])
    rule = edge_rule(b, a, 4, singular_point=a)
    x = rule.points[:, 0]
    assert np.all(x > 0)  # the singular endpoint itself is never sampled
    assert rule.weights @ x**-0.5 == pytest.approx(2.0, rel=1e-12)
    assert rule.weights @ np.sqrt(x) == pytest.approx(2 / 3, rel=1e-13)


def test_gauss_edge_parameter():
    rule = gauss_edge([0, 0], [0, 2], 3)
    np.testing.assert_allclose(rule.points[:, 1], rule.t + 1)
    assert rule.weights.sum() == pytest.approx(2.0)


def test_graded_edge_parameter_orientation():
    r0 = graded_edge([0, 0], [1, 0], 8, 0)
    r1 = graded_edge([0, 0], [1, 0], 8, 1)
    np.testing.assert_allclose(r0.points[:, 0], (r0.t + 1) / 2, atol=1e-15)
    np.testing.assert_allclose(r1.points[:, 0], (r1.t + 1) / 2, atol=1e-15)
