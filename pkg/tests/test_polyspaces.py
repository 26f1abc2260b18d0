"""Orthonormal bases, dimension formulas, and vector subspace splits."""

import numpy as np
import pytest

from ddrmag import mesh as msh, quadrature
from ddrmag.polyspaces import (ScalarBasis, VectorBasis, dim_P, gram,
                               monomial_exponents, project, subspace_bases)


@pytest.fixture(scope="module")
def cube():
    return msh.generate_mesh("cartesian", 1)


def test_dim_P_values():
    assert dim_P(1, 2) == 3
    assert dim_P(2, 2) == 6
    assert dim_P(3, 2) == 10
    assert dim_P(3, -1) == 0


def test_monomial_exponent_count():
    for d in (1, 2, 3):
        for ell in range(4):
            assert len(monomial_exponents(d, ell)) == dim_P(d, ell)


@pytest.mark.parametrize("kind,index", [("element", 0), ("face", 2),
                                        ("edge", 5)])
def test_scalar_basis_orthonormal(cube, kind, index):
    sb = ScalarBasis(cube, kind, index, 3)
    rule = quadrature.quad_points(cube, kind, index, 8)
    vals = sb.eval(rule.points)
    G = (vals * rule.weights) @ vals.T
    assert np.abs(G - np.eye(sb.dim)).max() < 1e-12


def test_truncate_is_prefix(cube):
    sb = ScalarBasis(cube, "element", 0, 3)
    sub = sb.truncate(1)
    pts = np.random.default_rng(0).uniform(0, 1, size=(7, 3))
    assert np.allclose(sub.eval(pts), sb.eval(pts)[:sub.dim])


def test_gradient_matches_finite_difference(cube):
    sb = ScalarBasis(cube, "element", 0, 2)
    rng = np.random.default_rng(1)
    pts = rng.uniform(0.2, 0.8, size=(5, 3))
    g = sb.grad(pts)
    h = 1e-6
    for a in range(3):
        da = np.zeros(3)
        da[a] = h
        fd = (sb.eval(pts + da) - sb.eval(pts - da)) / (2 * h)
        assert np.abs(fd - g[:, :, a]).max() < 1e-8


def test_subspace_dims_element_l0(cube):
    sub = subspace_bases(cube, "element", 0, 0)
    assert sub["G"].dim == 3
    assert sub["Gperp"].dim == 0
    assert sub["R"].dim == 3
    assert sub["Rperp"].dim == 0


def test_subspace_dims_element_l1(cube):
    sub = subspace_bases(cube, "element", 0, 1)
    assert sub["G"].dim == 9
    assert sub["Gperp"].dim == 3
    assert sub["R"].dim == 11
    assert sub["Rperp"].dim == 1


def test_subspace_dims_face(cube):
    sub = subspace_bases(cube, "face", 0, 1)
    assert sub["G"].dim == dim_P(2, 2) - 1
    assert sub["R"].dim == dim_P(2, 2) - 1
    assert sub["Gperp"].dim == 2 * dim_P(2, 1) - sub["G"].dim
    assert sub["Rperp"].dim == 2 * dim_P(2, 1) - sub["R"].dim


def test_subspaces_orthogonal(cube):
    sub = subspace_bases(cube, "element", 0, 2)
    X = gram(sub["G"], sub["Gperp"], 6)
    assert np.abs(X).max() < 1e-12
    X = gram(sub["R"], sub["Rperp"], 6)
    assert np.abs(X).max() < 1e-12


def test_element_R_is_divergence_free(cube):
    # fields in R are curls of polynomial fields, hence divergence free
    sub = subspace_bases(cube, "element", 0, 1)
    rng = np.random.default_rng(4)
    pts = rng.uniform(0.2, 0.8, size=(6, 3))
    h = 1e-6
    div = np.zeros((sub["R"].dim, len(pts)))
    for a in range(3):
        da = np.zeros(3)
        da[a] = h
        div += (sub["R"].eval(pts + da)[:, :, a]
                - sub["R"].eval(pts - da)[:, :, a]) / (2 * h)
    assert np.abs(div).max() < 1e-8


def test_scalar_projection_reproduces_polys(cube):
    sb = ScalarBasis(cube, "element", 0, 2)
    rng = np.random.default_rng(2)
    co = rng.standard_normal(sb.dim)

    def f(p):
        return co @ sb.eval(p)
    proj = project(f, sb, 6)
    assert np.abs(proj - co).max() < 1e-12


def test_vector_projection_reproduces(cube):
    sub = subspace_bases(cube, "element", 0, 1)
    basis = sub["G"]
    rng = np.random.default_rng(3)
    co = rng.standard_normal(basis.dim)

    def f(p):
        return np.einsum("i,ipd->pd", co, basis.eval(p))
    proj = project(f, basis, 6)
    assert np.abs(proj - co).max() < 1e-11
