"""Mesh construction, derived entities, orientations, and file I/O."""

import numpy as np
import pytest

from ddrmag import mesh as msh


def test_cube_entity_counts():
    m = msh.generate_mesh("cartesian", 1)
    assert m.n_vertices == 8
    assert m.n_edges == 12
    assert m.n_faces == 6
    assert m.n_elements == 1


def test_cartesian_counts_n2():
    m = msh.generate_mesh("cartesian", 2)
    assert m.n_vertices == 27
    assert m.n_edges == 54
    assert m.n_faces == 36
    assert m.n_elements == 8


def test_kuhn_counts():
    m = msh.generate_mesh("kuhn-tet", 1)
    assert m.n_elements == 6
    assert m.n_vertices == 8
    # 6 tets sharing the main diagonal of the cube
    assert m.n_faces == 18
    assert m.n_edges == 19


def test_volumes_sum_to_domain():
    for fam in ("cartesian", "kuhn-tet"):
        m = msh.generate_mesh(fam, 2)
        assert abs(m.elem_volume.sum() - 1.0) < 1e-12
        assert np.all(m.elem_volume > 0)


def test_face_normals_unit():
    m = msh.generate_mesh("kuhn-tet", 1)
    nrm = np.linalg.norm(m.face_normal, axis=1)
    assert np.allclose(nrm, 1.0, atol=1e-13)


def test_edge_tangent_orientation():
    m = msh.generate_mesh("cartesian", 1)
    for iE, (a, b) in enumerate(m.edges):
        assert a < b
        t = (m.vertices[b] - m.vertices[a]) / m.edge_length[iE]
        assert np.allclose(t, m.edge_tangent[iE], atol=1e-13)


def test_internal_faces_opposite_orientation():
    m = msh.generate_mesh("cartesian", 2)
    for iF, elems in enumerate(m.face_elements):
        if len(elems) == 2:
            s = 0
            for iT in elems:
                pos = list(m.elements[iT]).index(iF)
                s += m.elem_omega[iT][pos]
            assert s == 0


def test_boundary_face_count():
    m = msh.generate_mesh("cartesian", 2)
    assert len(m.boundary_faces) == 24


def test_divergence_theorem_closed_elements():
    # sum of omega * |F| * n_F over each element boundary vanishes
    m = msh.generate_mesh("kuhn-tet", 2)
    for iT in range(m.n_elements):
        s = np.zeros(3)
        for pos, iF in enumerate(m.elements[iT]):
            s += m.elem_omega[iT][pos] * m.face_area[iF] * m.face_normal[iF]
        assert np.abs(s).max() < 1e-13


def test_save_load_roundtrip(tmp_path):
    m = msh.generate_mesh("kuhn-tet", 1)
    path = tmp_path / "mesh.txt"
    msh.save_mesh(m, path)
    m2 = msh.load_mesh(path)
    assert m2.n_elements == m.n_elements
    assert np.allclose(m2.vertices, m.vertices)
    assert abs(m2.elem_volume.sum() - m.elem_volume.sum()) < 1e-14


def test_nonplanar_face_rejected():
    verts = np.array([[0.0, 0, 0], [1, 0, 0], [1, 1, 0.3], [0, 1, 0],
                      [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1]])
    faces = [[0, 3, 2, 1], [4, 5, 6, 7], [0, 1, 5, 4],
             [1, 2, 6, 5], [2, 3, 7, 6], [3, 0, 4, 7]]
    with pytest.raises(msh.MeshGeometryError):
        msh.Mesh(verts, faces, [list(range(6))])


def test_mesh_stats_keys():
    stats = msh.mesh_stats(msh.generate_mesh("cartesian", 2))
    for key in ("h", "n_elements", "n_faces", "n_edges", "n_vertices"):
        assert key in stats
