"""Polyhedral meshes: ingestion, generation, orientations, statistics.

A mesh is a flat polyhedral complex: vertices, straight edges, planar
polygonal faces and polyhedral elements. All orientation data (unit
tangents t_E, unit normals n_F, in-plane edge normals n_FE and the
relative signs omega_FE, omega_TF) is derived here once and frozen.
"""

import numpy as np


class MeshFormatError(ValueError):
    """Malformed `ddr-mesh v1` input."""


class MeshTopologyError(ValueError):
    """Non-manifold face use or open element boundary."""


class MeshGeometryError(ValueError):
    """Degenerate or non-planar geometry."""


PLANARITY_RTOL = 1e-10


def _polygon_geometry(pts):
    # pts: (m,3) loop vertices. Returns (unit normal, area, centroid, diameter).
    m = len(pts)
    if m < 3:
        raise MeshGeometryError("face with fewer than 3 vertices")
    # Newell's formula: robust area vector for planar polygons
    nvec = 0.5 * np.sum(np.cross(pts, np.roll(pts, -1, axis=0)), axis=0)
    area2 = np.linalg.norm(nvec)
    if area2 <= 0.0:
        raise MeshGeometryError("degenerate face (zero area)")
    normal = nvec / area2
    # fan about the vertex mean; triangle areas are all positive for
    # star-shaped polygons so the area/centroid sums are plain
    c0 = pts.mean(axis=0)
    area = 0.0
    centroid = np.zeros(3)
    for i in range(m):
        a, b = pts[i], pts[(i + 1) % m]
        tri = 0.5 * np.linalg.norm(np.cross(a - c0, b - c0))
        area += tri
        centroid += tri * (c0 + a + b) / 3.0
    centroid /= area
    diam = 0.0
    for i in range(m):
        d = np.linalg.norm(pts - pts[i], axis=1).max()
        diam = max(diam, d)
    off = np.abs((pts - centroid) @ normal).max()
    if off > PLANARITY_RTOL * diam:
        raise MeshGeometryError(
            "non-planar face: offset %.3e exceeds %.3e" % (off, PLANARITY_RTOL * diam))
    return normal, area, centroid, diam


class Mesh:
    """Immutable polyhedral mesh with derived orientation data.

    Do not mutate after construction; quadrature rules are cached on the
    instance keyed by (entity kind, index, degree).
    """

    def __init__(self, vertices, face_loops, elem_face_lists):
        self.vertices = np.asarray(vertices, dtype=float)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise MeshFormatError("vertices must be an (n,3) array")
        self.faces = [np.asarray(fl, dtype=int) for fl in face_loops]
        self.elements = [np.asarray(el, dtype=int) for el in elem_face_lists]
        self._quad_cache = {}
        self._derive()
        self._check_invariants()

    # -- construction -------------------------------------------------

    def _derive(self):
        nv = len(self.vertices)
        for loop in self.faces:
            if loop.min() < 0 or loop.max() >= nv:
                raise MeshFormatError("face vertex index out of range")
            if len(np.unique(loop)) != len(loop):
                raise MeshTopologyError("repeated vertex in face loop")
        # deduplicated edges, canonical orientation low -> high index
        edge_index = {}
        edges = []
        for loop in self.faces:
            for i in range(len(loop)):
                a, b = int(loop[i]), int(loop[(i + 1) % len(loop)])
                key = (a, b) if a < b else (b, a)
                if key not in edge_index:
                    edge_index[key] = len(edges)
                    edges.append(key)
        self.edges = np.array(edges, dtype=int).reshape(-1, 2)
        ne = len(self.edges)
        ev = self.vertices[self.edges]
        self.edge_length = np.linalg.norm(ev[:, 1] - ev[:, 0], axis=1)
        if np.any(self.edge_length <= 0):
            raise MeshGeometryError("zero-length edge")
        self.edge_tangent = (ev[:, 1] - ev[:, 0]) / self.edge_length[:, None]
        self.edge_midpoint = 0.5 * (ev[:, 0] + ev[:, 1])

        nf = len(self.faces)
        self.face_normal = np.zeros((nf, 3))
        self.face_area = np.zeros(nf)
        self.face_centroid = np.zeros((nf, 3))
        self.face_diam = np.zeros(nf)
        self.face_edges = []       # per face: array of edge indices
        self.face_edge_omega = []  # per face: omega_FE signs
        self.face_edge_normal = []  # per face: n_FE rows
        for iF, loop in enumerate(self.faces):
            pts = self.vertices[loop]
            n, a, c, d = _polygon_geometry(pts)
            self.face_normal[iF] = n
            self.face_area[iF] = a
            self.face_centroid[iF] = c
            self.face_diam[iF] = d
            eids, omegas, nfes = [], [], []
            for i in range(len(loop)):
                va, vb = int(loop[i]), int(loop[(i + 1) % len(loop)])
                key = (va, vb) if va < vb else (vb, va)
                iE = edge_index[key]
                eids.append(iE)
                # n_FE := n_F x t_E so (t_E, n_FE, n_F) is right-handed
                nfe = np.cross(n, self.edge_tangent[iE])
                nfes.append(nfe)
                s = nfe @ (self.edge_midpoint[iE] - c)
                if abs(s) < 1e-14 * self.face_diam[iF]:
                    raise MeshGeometryError("cannot orient edge in face")
                omegas.append(1.0 if s > 0 else -1.0)
            self.face_edges.append(np.array(eids, dtype=int))
            self.face_edge_omega.append(np.array(omegas))
            self.face_edge_normal.append(np.array(nfes))

        nT = len(self.elements)
        self.elem_omega = []
        self.elem_centroid = np.zeros((nT, 3))
        self.elem_diam = np.zeros(nT)
        self.elem_volume = np.zeros(nT)
        self.elem_vertices = []
        self.elem_edges = []
        face_use = [[] for _ in range(nf)]
        for iT, flist in enumerate(self.elements):
            if len(flist) and (flist.min() < 0 or flist.max() >= nf):
                raise MeshFormatError("element face index out of range")
            vids = np.unique(np.concatenate([self.faces[iF] for iF in flist]))
            self.elem_vertices.append(vids)
            self.elem_edges.append(
                np.unique(np.concatenate([self.face_edges[iF] for iF in flist])))
            pts = self.vertices[vids]
            xc = pts.mean(axis=0)
            self.elem_centroid[iT] = xc
            diam = 0.0
            for p in pts:
                diam = max(diam, np.linalg.norm(pts - p, axis=1).max())
            self.elem_diam[iT] = diam
            omegas = []
            vol = 0.0
            for iF in flist:
                s = self.face_normal[iF] @ (self.face_centroid[iF] - xc)
                if abs(s) < 1e-14 * diam:
                    raise MeshGeometryError("cannot orient face in element")
                w = 1.0 if s > 0 else -1.0
                omegas.append(w)
                face_use[iF].append(iT)
                # divergence theorem, x.n_F constant on a planar face
                vol += w * self.face_area[iF] * (
                    self.face_normal[iF] @ self.face_centroid[iF]) / 3.0
            self.elem_omega.append(np.array(omegas))
            if vol <= 0:
                raise MeshGeometryError("element with non-positive volume")
            self.elem_volume[iT] = vol
        self.face_elements = face_use
        self.boundary_faces = frozenset(
            iF for iF, use in enumerate(face_use) if len(use) == 1)
        self.h = float(self.elem_diam.max()) if nT else 0.0

    def _check_invariants(self):
        for iF, use in enumerate(self.face_elements):
            if len(use) == 0:
                raise MeshTopologyError("face %d used by no element" % iF)
            if len(use) > 2:
                raise MeshTopologyError("non-manifold face %d" % iF)
        # closed element boundaries
        for iT, flist in enumerate(self.elements):
            s = np.zeros(3)
            for iF, w in zip(flist, self.elem_omega[iT]):
                s += w * self.face_area[iF] * self.face_normal[iF]
            scale = sum(self.face_area[iF] for iF in flist)
            if np.linalg.norm(s) > 1e-10 * scale:
                raise MeshTopologyError(
                    "open boundary on element %d (defect %.3e)" % (
                        iT, np.linalg.norm(s)))
        # internal faces seen with opposite signs
        for iF, use in enumerate(self.face_elements):
            if len(use) == 2:
                sgn = []
                for iT in use:
                    pos = list(self.elements[iT]).index(iF)
                    sgn.append(self.elem_omega[iT][pos])
                if sgn[0] + sgn[1] != 0:
                    raise MeshTopologyError(
                        "face %d oriented the same way by both elements" % iF)

    # -- queries -------------------------------------------------------

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def n_faces(self):
        return len(self.faces)

    @property
    def n_elements(self):
        return len(self.elements)


def mesh_stats(mesh):
    """Size and regularity statistics (reported, never enforced)."""
    ratios_tf, ratios_fe = [], []
    faces_per_elem, edges_per_face = [], []
    for iT, flist in enumerate(mesh.elements):
        faces_per_elem.append(len(flist))
        for iF in flist:
            ratios_tf.append(mesh.elem_diam[iT] / mesh.face_diam[iF])
    for iF in range(mesh.n_faces):
        edges_per_face.append(len(mesh.face_edges[iF]))
        for iE in mesh.face_edges[iF]:
            ratios_fe.append(mesh.face_diam[iF] / mesh.edge_length[iE])
    return {
        "h": mesh.h,
        "n_vertices": mesh.n_vertices,
        "n_edges": mesh.n_edges,
        "n_faces": mesh.n_faces,
        "n_elements": mesh.n_elements,
        "ratio_hT_hF": (min(ratios_tf), max(ratios_tf)),
        "ratio_hF_hE": (min(ratios_fe), max(ratios_fe)),
        "faces_per_element": (min(faces_per_elem), max(faces_per_elem)),
        "edges_per_face": (min(edges_per_face), max(edges_per_face)),
    }


# -- generators --------------------------------------------------------

def _cartesian(n):
    def vid(i, j, k):
        return (i * (n + 1) + j) * (n + 1) + k

    verts = np.array([[i, j, k]
                      for i in range(n + 1)
                      for j in range(n + 1)
                      for k in range(n + 1)], dtype=float) / n
    faces = []
    xf, yf, zf = {}, {}, {}
    for i in range(n + 1):
        for j in range(n):
            for k in range(n):
                xf[i, j, k] = len(faces)
                faces.append([vid(i, j, k), vid(i, j + 1, k),
                              vid(i, j + 1, k + 1), vid(i, j, k + 1)])
    for j in range(n + 1):
        for i in range(n):
            for k in range(n):
                yf[i, j, k] = len(faces)
                faces.append([vid(i, j, k), vid(i + 1, j, k),
                              vid(i + 1, j, k + 1), vid(i, j, k + 1)])
    for k in range(n + 1):
        for i in range(n):
            for j in range(n):
                zf[i, j, k] = len(faces)
                faces.append([vid(i, j, k), vid(i + 1, j, k),
                              vid(i + 1, j + 1, k), vid(i, j + 1, k)])
    elems = []
    for i in range(n):
        for j in range(n):
            for k in range(n):
                elems.append([xf[i, j, k], xf[i + 1, j, k],
                              yf[i, j, k], yf[i, j + 1, k],
                              zf[i, j, k], zf[i, j, k + 1]])
    return Mesh(verts, faces, elems)


def _kuhn_tet(n):
    import itertools

    def vid(i, j, k):
        return (i * (n + 1) + j) * (n + 1) + k

    verts = np.array([[i, j, k]
                      for i in range(n + 1)
                      for j in range(n + 1)
                      for k in range(n + 1)], dtype=float) / n
    face_index = {}
    faces = []
    elems = []
    axes = np.eye(3, dtype=int)
    for i in range(n):
        for j in range(n):
            for k in range(n):
                p0 = np.array([i, j, k])
                for perm in itertools.permutations(range(3)):
                    # path p0 -> p0+e_a -> +e_b -> +e_c: Kuhn tetrahedron
                    path = [p0]
                    for ax in perm:
                        path.append(path[-1] + axes[ax])
                    tet = [vid(*p) for p in path]
                    fids = []
                    for drop in range(4):
                        tri = tuple(tet[m] for m in range(4) if m != drop)
                        key = tuple(sorted(tri))
                        if key not in face_index:
                            face_index[key] = len(faces)
                            faces.append(list(tri))
                        fids.append(face_index[key])
                    elems.append(fids)
    return Mesh(verts, faces, elems)


def generate_mesh(family, n):
    """Meshes of the unit cube: `cartesian` (n^3 hexahedra) or
    `kuhn-tet` (6 n^3 tetrahedra sharing each cell's main diagonal)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if family == "cartesian":
        return _cartesian(n)
    if family == "kuhn-tet":
        return _kuhn_tet(n)
    raise ValueError("unknown mesh family %r" % (family,))


# -- ddr-mesh v1 I/O ---------------------------------------------------

def load_mesh(path):
    """Read the `ddr-mesh v1` text format."""
    with open(path) as fh:
        lines = []
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if line:
                lines.append(line)
    if not lines or lines[0].split() != ["ddr-mesh", "1"]:
        raise MeshFormatError("missing `ddr-mesh 1` header")
    pos = 1

    def block(name, parse):
        nonlocal pos
        if pos >= len(lines):
            raise MeshFormatError("unexpected end of file, wanted %r" % name)
        head = lines[pos].split()
        if len(head) != 2 or head[0] != name:
            raise MeshFormatError("expected `%s N`, got %r" % (name, lines[pos]))
        try:
            count = int(head[1])
        except ValueError:
            raise MeshFormatError("bad count in %r" % lines[pos])
        pos += 1
        out = []
        for _ in range(count):
            if pos >= len(lines):
                raise MeshFormatError("truncated %s block" % name)
            out.append(parse(lines[pos].split()))
            pos += 1
        return out

    def parse_vertex(tok):
        if len(tok) != 3:
            raise MeshFormatError("vertex line needs 3 coordinates")
        try:
            return [float(t) for t in tok]
        except ValueError:
            raise MeshFormatError("bad float in vertex line")

    def parse_ints(tok):
        try:
            return [int(t) for t in tok]
        except ValueError:
            raise MeshFormatError("bad index")

    verts = block("vertices", parse_vertex)
    faces = block("faces", parse_ints)
    elems = block("elements", parse_ints)
    if pos != len(lines):
        raise MeshFormatError("trailing content after elements block")
    return Mesh(np.array(verts), faces, elems)


def save_mesh(mesh, path):
    with open(path, "w") as fh:
        fh.write("ddr-mesh 1\n")
        fh.write("vertices %d\n" % mesh.n_vertices)
        for v in mesh.vertices:
            fh.write("%.17g %.17g %.17g\n" % (v[0], v[1], v[2]))
        fh.write("faces %d\n" % mesh.n_faces)
        for loop in mesh.faces:
            fh.write(" ".join(str(int(i)) for i in loop) + "\n")
        fh.write("elements %d\n" % mesh.n_elements)
        for flist in mesh.elements:
            fh.write(" ".join(str(int(i)) for i in flist) + "\n")
