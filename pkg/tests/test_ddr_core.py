"""Dof spaces, local discrete operators, and the global complex."""

import numpy as np
import pytest

from ddrmag import mesh as msh
from ddrmag.ddr_core import (DDR, DofSpace, dim_G, dim_Gperp, dim_R,
                             dim_Rperp)


@pytest.fixture(scope="module")
def cube():
    return msh.generate_mesh("cartesian", 1)


@pytest.fixture(scope="module")
def kuhn():
    return msh.generate_mesh("kuhn-tet", 1)


def test_subspace_dimension_formulas():
    # 3D: G^l and R^l plus complements fill (P^l)^3
    for ell in range(-1, 4):
        total = 3 * (dim_G(3, ell) + dim_Gperp(3, ell)) // 3
        assert dim_G(3, ell) + dim_Gperp(3, ell) == total
        assert (dim_R(3, ell) + dim_Rperp(3, ell)
                == dim_G(3, ell) + dim_Gperp(3, ell))


@pytest.mark.parametrize("k,expected", [(0, (8, 12, 6)), (1, (27, 46, 24)),
                                        (2, (54, 99, 56))])
def test_dof_dims_cube(cube, k, expected):
    dims = tuple(DofSpace(cube, kind, k).dim
                 for kind in ("grad", "curl", "div"))
    assert dims == expected


@pytest.mark.parametrize("k,expected", [(0, (8, 19, 18)),
                                        (1, (51, 116, 90))])
def test_dof_dims_kuhn(kuhn, k, expected):
    dims = tuple(DofSpace(kuhn, kind, k).dim
                 for kind in ("grad", "curl", "div"))
    assert dims == expected


def test_local_to_global_covers_space(cube, kuhn):
    for m in (cube, kuhn):
        ddr = DDR(m, 1)
        for kind in ("grad", "curl", "div"):
            seen = np.concatenate([ddr.local_to_global(kind, iT)
                                   for iT in range(m.n_elements)])
            assert set(seen) == set(range(ddr.X[kind].dim))


def test_complex_property(cube, kuhn):
    # C G = 0 and D C = 0 at machine precision
    for m in (cube, kuhn):
        for k in (0, 1):
            ddr = DDR(m, k)
            G = ddr.global_operator("G")
            C = ddr.global_operator("C")
            D = ddr.global_operator("D")
            cg = (C @ G)
            dc = (D @ C)
            ref = max(abs(C).max(), 1.0) * max(abs(G).max(), 1.0)
            assert abs(cg).max() < 1e-12 * ref
            ref = max(abs(D).max(), 1.0) * max(abs(C).max(), 1.0)
            assert abs(dc).max() < 1e-12 * ref


def test_edge_gradient_linear(cube):
    # scalar q = 2x + 3y - z: edge component of G I q equals d q / d t
    ddr = DDR(cube, 0)

    def q(p):
        return 2 * p[:, 0] + 3 * p[:, 1] - p[:, 2]

    gi = ddr.global_operator("G") @ ddr.interpolate("grad", q)
    Xc = ddr.X["curl"]
    grad_q = np.array([2.0, 3.0, -1.0])
    for iE in range(cube.n_edges):
        t = cube.edge_tangent[iE]
        # degree-0 orthonormal edge basis is 1/sqrt(|E|)
        want = (grad_q @ t) * np.sqrt(cube.edge_length[iE])
        got = gi[Xc.edge_slice(iE)]
        assert abs(got[0] - want) < 1e-12


def test_face_curl_rigid_rotation(cube):
    # v = (-y, x, 0) has curl (0, 0, 2); the face curl returns the
    # constant normal component 2 n_z on each face (unit faces)
    ddr = DDR(cube, 0)

    def v(p):
        return np.column_stack([-p[:, 1], p[:, 0], np.zeros(len(p))])

    cz = ddr.global_operator("C") @ ddr.interpolate("curl", v)
    Xd = ddr.X["div"]
    for iF in range(cube.n_faces):
        want = 2.0 * cube.face_normal[iF][2]
        assert abs(cz[Xd.face_slice(iF)][0] - want) < 1e-12


def test_element_divergence_identity(cube):
    # w = (x, y, z) has div 3; on the unit cube the constant basis is 1
    ddr = DDR(cube, 0)
    dv = ddr.global_operator("D") @ ddr.interpolate("div", lambda p: p)
    assert abs(dv[0] - 3.0) < 1e-12


@pytest.mark.parametrize("k", [0, 1])
def test_divergence_commutes_with_interpolation(kuhn, k):
    # D I_div w equals the elementwise projection of div w
    from ddrmag.polyspaces import project
    ddr = DDR(kuhn, k)
    rng = np.random.default_rng(11)
    co = rng.standard_normal((3, 3))

    def w(p):
        return p @ co.T

    dv = ddr.global_operator("D") @ ddr.interpolate("div", w)
    div_w = np.trace(co)
    n3k = len(dv) // kuhn.n_elements
    for iT in range(kuhn.n_elements):
        want = project(lambda p: div_w * np.ones(len(p)),
                       ddr.elems[iT].scal.truncate(k), 2 * k + 2)
        got = dv[n3k * iT:n3k * (iT + 1)]
        assert np.abs(got - want).max() < 1e-11


def test_interpolate_reproduces_dofs(cube):
    # interpolating a field assembled from dofs of a constant gives the
    # same projections twice
    ddr = DDR(cube, 1)
    c = np.array([0.3, -1.2, 0.7])
    z1 = ddr.interpolate("curl", lambda p: np.tile(c, (len(p), 1)))
    z2 = ddr.interpolate("curl", lambda p: np.tile(c, (len(p), 1)),
                         degree=9)
    assert np.abs(z1 - z2).max() < 1e-13


def test_operator_dump_roundtrip(tmp_path, cube):
    from ddrmag.ddr_core import dump_operator
    ddr = DDR(cube, 0)
    D = ddr.global_operator("D")
    path = tmp_path / "D.txt"
    dump_operator(D, path)
    rows = [ln.split() for ln in path.read_text().splitlines()]
    M = np.zeros(D.shape)
    for r, c, v in rows:
        M[int(r), int(c)] += float(v)
    assert np.abs(M - D.toarray()).max() < 1e-15
