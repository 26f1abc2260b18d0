"""Quadrature exactness on edges, faces, and elements."""

import numpy as np
import pytest

from ddrmag import mesh as msh, quadrature


def _monomial_integral_cell(e):
    # integral of x^a y^b z^c over the unit cube
    return 1.0 / ((e[0] + 1) * (e[1] + 1) * (e[2] + 1))


@pytest.mark.parametrize("degree", [0, 1, 2, 3, 5, 8])
def test_element_rule_exact_on_cube(degree):
    m = msh.generate_mesh("cartesian", 1)
    rng = np.random.default_rng(degree)
    for _ in range(5):
        e = rng.integers(0, degree + 1, size=3)
        while e.sum() > degree:
            e = rng.integers(0, degree + 1, size=3)
        val = quadrature.integrate(
            lambda p: np.prod(p ** e, axis=1), m, "element", 0, degree)
        assert abs(val - _monomial_integral_cell(e)) < 1e-13


def test_element_rule_on_tets_sums_to_volume():
    m = msh.generate_mesh("kuhn-tet", 2)
    tot = sum(quadrature.integrate(lambda p: np.ones(len(p)),
                                   m, "element", iT, 4)
              for iT in range(m.n_elements))
    assert abs(tot - 1.0) < 1e-12


def test_face_rule_exact():
    m = msh.generate_mesh("cartesian", 1)
    # face z=0 has vertices spanning [0,1]^2
    for iF in range(m.n_faces):
        if abs(m.face_centroid[iF][2]) < 1e-12:
            val = quadrature.integrate(
                lambda p: p[:, 0] ** 3 * p[:, 1], m, "face", iF, 4)
            assert abs(val - 0.125) < 1e-13
            return
    raise AssertionError("no z=0 face found")


def test_edge_rule_exact():
    m = msh.generate_mesh("cartesian", 1)
    for iE in range(m.n_edges):
        a, b = m.vertices[m.edges[iE]]
        d = b - a
        ax = int(np.argmax(np.abs(d)))
        if abs(a[ax]) < 1e-12 and np.abs(np.delete(a, ax)).max() < 1e-12:
            val = quadrature.integrate(
                lambda p: p[:, ax] ** 4, m, "edge", iE, 4)
            assert abs(val - 0.2) < 1e-14
            return
    raise AssertionError("no axis edge at origin found")


def test_weights_positive():
    m = msh.generate_mesh("kuhn-tet", 1)
    for kind, count in (("edge", m.n_edges), ("face", m.n_faces),
                        ("element", m.n_elements)):
        for i in range(count):
            rule = quadrature.quad_points(m, kind, i, 3)
            assert np.all(rule.weights > 0)


def test_rules_cached():
    m = msh.generate_mesh("cartesian", 1)
    r1 = quadrature.quad_points(m, "element", 0, 3)
    r2 = quadrature.quad_points(m, "element", 0, 3)
    assert r1 is r2
