"""Exact-degree quadrature on edges, polygonal faces and polyhedral elements.

Faces are fan-triangulated from their centroid and elements are split into
tetrahedra (face triangle x element centroid); simplex rules are collapsed
(Duffy) tensor Gauss-Legendre rules, so all weights are positive. The
contract is `exact_degree`, not a particular node layout.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class QuadRule:
    points: np.ndarray   # (n, 3)
    weights: np.ndarray  # (n,)
    exact_degree: int


def _gauss01(npts):
    # Gauss-Legendre on [0,1]
    x, w = np.polynomial.legendre.leggauss(npts)
    return 0.5 * (x + 1.0), 0.5 * w


def _tri_rule_ref(degree):
    # unit triangle (0,0),(1,0),(0,1) via x=u, y=v(1-u); Jacobian (1-u)
    nu = (degree + 3) // 2
    nv = (degree + 2) // 2
    u, wu = _gauss01(nu)
    v, wv = _gauss01(nv)
    U, V = np.meshgrid(u, v, indexing="ij")
    W = np.outer(wu, wv) * (1.0 - U)
    X = U
    Y = V * (1.0 - U)
    return np.column_stack([X.ravel(), Y.ravel()]), W.ravel()


def _tet_rule_ref(degree):
    # unit tet via x=u, y=v(1-u), z=w(1-u)(1-v); Jacobian (1-u)^2 (1-v)
    nu = (degree + 4) // 2
    nv = (degree + 3) // 2
    nw = (degree + 2) // 2
    u, wu = _gauss01(nu)
    v, wv = _gauss01(nv)
    w, ww = _gauss01(nw)
    U, V, W = np.meshgrid(u, v, w, indexing="ij")
    wt = (wu[:, None, None] * wv[None, :, None] * ww[None, None, :]
          * (1.0 - U) ** 2 * (1.0 - V))
    X = U
    Y = V * (1.0 - U)
    Z = W * (1.0 - U) * (1.0 - V)
    return np.column_stack([X.ravel(), Y.ravel(), Z.ravel()]), wt.ravel()


def triangle_rule(p0, p1, p2, degree):
    """Positive-weight rule on the 3D triangle (p0,p1,p2)."""
    ref, w = _tri_rule_ref(degree)
    e1, e2 = p1 - p0, p2 - p0
    area2 = np.linalg.norm(np.cross(e1, e2))
    if area2 <= 0:
        raise ValueError("degenerate triangle in decomposition")
    pts = p0 + ref[:, :1] * e1 + ref[:, 1:2] * e2
    return QuadRule(pts, w * area2, degree)


def tet_rule(p0, p1, p2, p3, degree):
    ref, w = _tet_rule_ref(degree)
    B = np.stack([p1 - p0, p2 - p0, p3 - p0])
    det = abs(np.linalg.det(B))
    if det <= 0:
        raise ValueError("degenerate tetrahedron in decomposition")
    pts = p0 + ref @ B
    return QuadRule(pts, w * det, degree)


def edge_rule(a, b, degree):
    t, w = _gauss01(degree // 2 + 1)
    pts = a + t[:, None] * (b - a)
    return QuadRule(pts, w * np.linalg.norm(b - a), degree)


def quad_points(mesh, kind, index, degree):
    """Rule exact to `degree` on mesh entity (`element`|`face`|`edge`).

    Cached on the mesh; the returned rule is shared, do not mutate.
    """
    key = (kind, index, degree)
    rule = mesh._quad_cache.get(key)
    if rule is not None:
        return rule
    if kind == "edge":
        a, b = mesh.vertices[mesh.edges[index]]
        rule = edge_rule(a, b, degree)
    elif kind == "face":
        loop = mesh.vertices[mesh.faces[index]]
        c = mesh.face_centroid[index]
        parts = [triangle_rule(c, loop[i], loop[(i + 1) % len(loop)], degree)
                 for i in range(len(loop))]
        rule = QuadRule(np.vstack([p.points for p in parts]),
                        np.concatenate([p.weights for p in parts]), degree)
    elif kind == "element":
        c = mesh.elem_centroid[index]
        parts = []
        for iF in mesh.elements[index]:
            loop = mesh.vertices[mesh.faces[iF]]
            cf = mesh.face_centroid[iF]
            for i in range(len(loop)):
                parts.append(tet_rule(
                    cf, loop[i], loop[(i + 1) % len(loop)], c, degree))
        rule = QuadRule(np.vstack([p.points for p in parts]),
                        np.concatenate([p.weights for p in parts]), degree)
    else:
        raise ValueError("unknown entity kind %r" % (kind,))
    mesh._quad_cache[key] = rule
    return rule


def integrate(f, mesh, kind, index, degree):
    """Integral of f over the entity; f maps (n,3) points to (n,) values."""
    rule = quad_points(mesh, kind, index, degree)
    return rule.weights @ np.asarray(f(rule.points))
