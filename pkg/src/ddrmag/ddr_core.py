"""Discrete de Rham spaces, interpolators, and the gradient/curl/divergence
reconstructions, realized as dense local matrices plus sparse global
operators.

Every local operator maps a local dof vector (fixed block layout, see the
*_layout helpers) to coefficients of the result over the orthonormal
hierarchical bases of polyspaces. Because target bases are orthonormal,
"test against all v in P^k" becomes "the coefficient vector equals the
right-hand side", so most operators need no mass-matrix solve.

Local dof layouts:
  grad on face F:    [r_F | per edge of F: r_E | per loop vertex: r_V]
  grad on element T: [r_T | per face: r_F | per edge (ascending): r_E
                      | per vertex (ascending): r_V]
  curl on face F:    [v_RF | v_RF_perp | per edge of F: v_E]
  curl on element T: [v_RT | v_RT_perp | per face: (v_RF, v_RF_perp)
                      | per edge (ascending): v_E]
  div on element T:  [w_GT | w_GT_perp | per face: w_F]

Global dof ordering: curl = edges, faces, elements; div = faces, elements;
grad = vertices, edges, faces, elements; ascending entity index throughout.
"""

import numpy as np
import scipy.sparse as sp

from . import quadrature
from .polyspaces import (ScalarBasis, VectorBasis, dim_P, embed_tensor,
                         project, subspace_bases)


def dim_G(d, ell):
    return dim_P(d, ell + 1) - 1 if ell >= 0 else 0


def dim_Gperp(d, ell):
    return d * dim_P(d, ell) - dim_G(d, ell)


def dim_R(d, ell):
    if ell < 0:
        return 0
    if d == 3:
        return dim_Gperp(3, ell + 1)
    return dim_P(2, ell + 1) - 1


def dim_Rperp(d, ell):
    return d * dim_P(d, ell) - dim_R(d, ell)


def _solve(A, B):
    A = np.asarray(A)
    B = np.asarray(B)
    if A.shape[0] == 0:
        return np.zeros((0, B.shape[1]) if B.ndim == 2 else (0,))
    return np.linalg.solve(A, B)


class DofSpace:
    """Block layout and global offsets of X_grad,h / X_curl,h / X_div,h."""

    def __init__(self, mesh, kind, k):
        self.mesh = mesh
        self.kind = kind
        self.k = k
        if kind == "grad":
            self.vertex_block = 1
            self.edge_block = dim_P(1, k - 1)
            self.face_block = dim_P(2, k - 1)
            self.elem_block = dim_P(3, k - 1)
            nv, ne = mesh.n_vertices, mesh.n_edges
            self.edge_offset = nv * self.vertex_block
        elif kind == "curl":
            self.vertex_block = 0
            self.edge_block = dim_P(1, k)
            self.face_block = dim_R(2, k - 1) + dim_Rperp(2, k)
            self.elem_block = dim_R(3, k - 1) + dim_Rperp(3, k)
            self.edge_offset = 0
        elif kind == "div":
            self.vertex_block = 0
            self.edge_block = 0
            self.face_block = dim_P(2, k)
            self.elem_block = dim_G(3, k - 1) + dim_Gperp(3, k)
            self.edge_offset = 0
        else:
            raise ValueError("unknown dof-space kind %r" % (kind,))
        self.face_offset = self.edge_offset + mesh.n_edges * self.edge_block
        self.elem_offset = self.face_offset + mesh.n_faces * self.face_block
        self.dim = self.elem_offset + mesh.n_elements * self.elem_block

    def vertex_index(self, iV):
        return iV  # grad only; vertices lead the ordering

    def edge_slice(self, iE):
        o = self.edge_offset + iE * self.edge_block
        return np.arange(o, o + self.edge_block)

    def face_slice(self, iF):
        o = self.face_offset + iF * self.face_block
        return np.arange(o, o + self.face_block)

    def elem_slice(self, iT):
        o = self.elem_offset + iT * self.elem_block
        return np.arange(o, o + self.elem_block)


def dof_space(mesh, kind, k):
    return DofSpace(mesh, kind, k)


class EdgeOps:
    """gamma_E^{k+1} (potential) and G_E^k (gradient) on one edge."""

    def __init__(self, mesh, iE, k):
        self.mesh = mesh
        self.index = iE
        self.k = k
        self.P = ScalarBasis(mesh, "edge", iE, k + 1, quad_degree=2 * k + 3)
        n = k + 2
        A = np.zeros((n, n))
        A[:k, :k] = np.eye(k)  # moment conditions are plain coefficients
        ends = mesh.vertices[mesh.edges[iE]]
        vals = self.P.eval(ends)
        A[k] = vals[:, 0]
        A[k + 1] = vals[:, 1]
        try:
            self.gamma = np.linalg.solve(A, np.eye(n))
        except np.linalg.LinAlgError:
            raise RuntimeError("singular edge interpolation system")
        rule = quadrature.quad_points(mesh, "edge", iE, 2 * k + 3)
        pk = self.P.truncate(k)
        tang = mesh.edge_tangent[iE]
        dv = np.einsum("ipd,d->ip", self.P.grad(rule.points), tang)
        D = (pk.eval(rule.points) * rule.weights) @ dv.T
        self.GE = D @ self.gamma

    def gamma_values(self, pts):
        # values of gamma_E for each local dof, (k+2 dofs, npts)
        return self.gamma.T @ self.P.eval(pts)


class FaceOps:
    """All face-local DDR operators: G_F, gamma_F, C_F, gamma_tF."""

    def __init__(self, mesh, iF, k, edge_ops):
        self.mesh = mesh
        self.index = iF
        self.k = k
        self.scal = ScalarBasis(mesh, "face", iF, k + 2,
                                quad_degree=2 * (k + 2) + 1)
        self.P = self.scal.truncate(k + 1)
        sub_m = subspace_bases(mesh, "face", iF, k - 1, scalar=self.scal)
        sub_k = subspace_bases(mesh, "face", iF, k, scalar=self.scal)
        self.Rkm1 = sub_m["R"]
        self.Rkperp = sub_k["Rperp"]

        N2k = dim_P(2, k)
        N2km1 = dim_P(2, k - 1)
        N2kp1 = dim_P(2, k + 1)
        self.edge_list = mesh.face_edges[iF]
        self.edge_omega = mesh.face_edge_omega[iF]
        self.edge_nFE = mesh.face_edge_normal[iF]
        loop = mesh.faces[iF]
        nE = len(self.edge_list)
        self.n_grad = N2km1 + nE * k + nE  # len(loop) == nE
        self.n_curl = self.Rkm1.dim + self.Rkperp.dim + nE * (k + 1)

        rule = quadrature.quad_points(mesh, "face", iF, 2 * k + 3)
        w = rule.weights
        sv_kp1 = self.P.eval(rule.points)
        sv_k = sv_kp1[:N2k]
        sv_km1 = sv_kp1[:N2km1]
        gf_kp1 = self.P.grad_frame(rule.points)
        gf_k = gf_kp1[:N2k]

        # ---- full face gradient G_F: (2 N2k) x n_grad -------------------
        GF = np.zeros((2 * N2k, self.n_grad))
        for c in range(2):
            GF[c * N2k:(c + 1) * N2k, :N2km1] = \
                -(gf_k[:, :, c] * w) @ sv_km1.T
        edge_cols = []
        for pos, iE in enumerate(self.edge_list):
            cols = np.zeros(k + 2, dtype=int)
            cols[:k] = N2km1 + pos * k + np.arange(k)
            vlo, vhi = mesh.edges[iE]
            lpos = {int(v): N2km1 + nE * k + i for i, v in enumerate(loop)}
            cols[k] = lpos[int(vlo)]
            cols[k + 1] = lpos[int(vhi)]
            edge_cols.append(cols)
        self._grad_edge_cols = edge_cols
        axes = self.scal.axes
        for pos, iE in enumerate(self.edge_list):
            er = quadrature.quad_points(mesh, "edge", iE, 2 * k + 3)
            gvals = edge_ops[iE].gamma_values(er.points)  # (k+2, nq)
            fv = self.scal.truncate(k).eval(er.points)    # (N2k, nq)
            blk = (fv * er.weights) @ gvals.T              # (N2k, k+2)
            for c in range(2):
                s = self.edge_omega[pos] * (axes[c] @ self.edge_nFE[pos])
                GF[np.ix_(c * N2k + np.arange(N2k), edge_cols[pos])] += s * blk
        self.GF = GF

        # ---- scalar face potential gamma_F ------------------------------
        # stiffness rows against P^{k+1} closed by the boundary-mean row
        K = np.zeros((N2kp1, N2kp1))
        for c in range(2):
            K += (gf_kp1[:, :, c] * w) @ gf_kp1[:, :, c].T
        Egrad = np.zeros((N2kp1, 2 * N2k))
        for c in range(2):
            Egrad[:, c * N2k:(c + 1) * N2k] = (gf_kp1[:, :, c] * w) @ sv_k.T
        A = np.zeros((N2kp1, N2kp1))
        rhs = np.zeros((N2kp1, self.n_grad))
        A[1:] = K[1:]
        rhs[1:] = Egrad[1:] @ GF
        for pos, iE in enumerate(self.edge_list):
            er = quadrature.quad_points(mesh, "edge", iE, 2 * k + 3)
            A[0] += self.P.eval(er.points) @ er.weights
            rhs[0, edge_cols[pos]] += \
                edge_ops[iE].gamma_values(er.points) @ er.weights
        gtilde = np.linalg.solve(A, rhs)
        self.gammaF = gtilde.copy()
        self.gammaF[:N2km1] = 0.0
        self.gammaF[:N2km1, :N2km1] = np.eye(N2km1)

        # ---- face curl C_F: N2k x n_curl ---------------------------------
        def vrot_expand(gframe, target_vals):
            # rot_{-pi/2} gradients expanded over the tensorized target
            n = target_vals.shape[0]
            out = np.zeros((gframe.shape[0], 2 * n))
            out[:, :n] = (gframe[:, :, 1] * w) @ target_vals.T
            out[:, n:] = -(gframe[:, :, 0] * w) @ target_vals.T
            return out

        CF = np.zeros((N2k, self.n_curl))
        nR = self.Rkm1.dim
        if nR:
            vr_km1 = vrot_expand(gf_k, sv_km1)
            CF[:, :nR] = vr_km1 @ self.Rkm1.coeffs.T
        curl_edge_cols = []
        o = nR + self.Rkperp.dim
        for pos, iE in enumerate(self.edge_list):
            curl_edge_cols.append(o + pos * (k + 1) + np.arange(k + 1))
        self._curl_edge_cols = curl_edge_cols
        edge_kp1 = {}
        for pos, iE in enumerate(self.edge_list):
            er = quadrature.quad_points(mesh, "edge", iE, 2 * k + 3)
            ev = edge_ops[iE].P.truncate(k).eval(er.points)
            fv = self.P.eval(er.points)
            blk = (fv * er.weights) @ ev.T  # (N2kp1, k+1)
            edge_kp1[pos] = blk
            CF[np.ix_(np.arange(N2k), curl_edge_cols[pos])] -= \
                self.edge_omega[pos] * blk[:N2k]
        self.CF = CF

        # ---- tangential trace gamma_tF: (2 N2k) x n_curl ----------------
        vr_kp1 = vrot_expand(gf_kp1[1:], sv_k)
        A = np.vstack([vr_kp1, self.Rkperp.coeffs])
        rhs = np.zeros((2 * N2k, self.n_curl))
        CF_pad = np.vstack([CF, np.zeros((N2kp1 - N2k, self.n_curl))])
        rhs[:N2kp1 - 1, :] = CF_pad[1:N2kp1]
        for pos in range(nE):
            rhs[np.ix_(np.arange(N2kp1 - 1), curl_edge_cols[pos])] += \
                self.edge_omega[pos] * edge_kp1[pos][1:]
        rhs[N2kp1 - 1:, nR:nR + self.Rkperp.dim] = np.eye(self.Rkperp.dim)
        try:
            self.gamma_t = np.linalg.solve(A, rhs)
        except np.linalg.LinAlgError:
            raise RuntimeError("singular tangential-trace system on face %d"
                               % iF)

        # projections of G_F for the global gradient's face blocks
        R_emb = embed_tensor(self.Rkm1.coeffs, N2km1, N2k, 2)
        self.GF_R = _solve(self.Rkm1.gram(), R_emb @ GF)
        self.GF_Rperp = self.Rkperp.coeffs @ GF


class ElemOps:
    """Element-local DDR operators: G_T, C_T, D_T and the dof maps."""

    def __init__(self, mesh, iT, k, face_ops, edge_ops):
        self.mesh = mesh
        self.index = iT
        self.k = k
        self.scal = ScalarBasis(mesh, "element", iT, k + 2,
                                quad_degree=2 * (k + 2) + 1)
        sub_m = subspace_bases(mesh, "element", iT, k - 1, scalar=self.scal)
        sub_k = subspace_bases(mesh, "element", iT, k, scalar=self.scal)
        self.Rkm1, self.Rkperp = sub_m["R"], sub_k["Rperp"]
        self.Gkm1, self.Gkperp = sub_m["G"], sub_k["Gperp"]
        self.Gkp1perp = subspace_bases(mesh, "element", iT, k + 1,
                                       scalar=self.scal,
                                       want=("G", "Gperp"))["Gperp"]

        N3k = dim_P(3, k)
        N3km1 = dim_P(3, k - 1)
        N3kp1 = dim_P(3, k + 1)
        self.N3k = N3k
        flist = mesh.elements[iT]
        self.flist = flist
        self.omega = mesh.elem_omega[iT]
        self.eidx = mesh.elem_edges[iT]
        self.vidx = mesh.elem_vertices[iT]

        # local layouts
        nF = len(flist)
        self.n_grad = (N3km1 + nF * dim_P(2, k - 1)
                       + len(self.eidx) * k + len(self.vidx))
        self.n_curl = (dim_R(3, k - 1) + dim_Rperp(3, k)
                       + nF * (dim_R(2, k - 1) + dim_Rperp(2, k))
                       + len(self.eidx) * (k + 1))
        self.n_div = dim_G(3, k - 1) + dim_Gperp(3, k) + nF * dim_P(2, k)

        edge_pos = {int(iE): i for i, iE in enumerate(self.eidx)}
        vert_pos = {int(iV): i for i, iV in enumerate(self.vidx)}

        # face-local -> element-local index maps
        fb2 = dim_P(2, k - 1)
        self.grad_face_cols = []
        o_face = N3km1
        o_edge = N3km1 + nF * fb2
        o_vert = o_edge + len(self.eidx) * k
        for pos, iF in enumerate(flist):
            fops = face_ops[iF]
            cols = [o_face + pos * fb2 + np.arange(fb2)]
            for iE in fops.edge_list:
                cols.append(o_edge + edge_pos[int(iE)] * k + np.arange(k))
            for iV in mesh.faces[iF]:
                cols.append(np.array([o_vert + vert_pos[int(iV)]]))
            self.grad_face_cols.append(np.concatenate(cols))
        cfb = dim_R(2, k - 1) + dim_Rperp(2, k)
        self.curl_face_cols = []
        o_face = dim_R(3, k - 1) + dim_Rperp(3, k)
        o_edge = o_face + nF * cfb
        for pos, iF in enumerate(flist):
            fops = face_ops[iF]
            cols = [o_face + pos * cfb + np.arange(cfb)]
            for iE in fops.edge_list:
                cols.append(o_edge + edge_pos[int(iE)] * (k + 1)
                            + np.arange(k + 1))
            self.curl_face_cols.append(np.concatenate(cols))
        dfb = dim_P(2, k)
        o_face = dim_G(3, k - 1) + dim_Gperp(3, k)
        self.div_face_cols = [o_face + pos * dfb + np.arange(dfb)
                              for pos in range(nF)]

        rule = quadrature.quad_points(mesh, "element", iT, 2 * k + 3)
        w = rule.weights
        sv_kp1 = self.scal.truncate(k + 1).eval(rule.points)
        sv_k = sv_kp1[:N3k]
        sv_km1 = sv_kp1[:N3km1]
        g_kp1 = self.scal.truncate(k + 1).grad_frame(rule.points)
        g_k = g_kp1[:N3k]

        def expand_km1(vals3):
            out = np.zeros((vals3.shape[0], 3 * N3km1))
            for c in range(3):
                out[:, c * N3km1:(c + 1) * N3km1] = \
                    (vals3[:, :, c] * w) @ sv_km1.T
            return out

        # face-trace pairings shared by several operators
        face_pair_kp1 = []   # int_F phi_T^m phi_F^j, m < N3kp1, j < N2kp1
        face_tensor = []     # int_F (tensorF_j . e_c) phi_T^i arrays
        face_svT = []
        for pos, iF in enumerate(flist):
            fops = face_ops[iF]
            fr = quadrature.quad_points(mesh, "face", iF, 2 * k + 3)
            svT = self.scal.truncate(k + 1).eval(fr.points)
            face_svT.append((fr, svT))
            face_pair_kp1.append((svT * fr.weights) @ fops.P.eval(fr.points).T)

        # ---- full element gradient G_T: (3 N3k) x n_grad ----------------
        GT = np.zeros((3 * N3k, self.n_grad))
        for c in range(3):
            GT[c * N3k:(c + 1) * N3k, :N3km1] = -(g_k[:, :, c] * w) @ sv_km1.T
        for pos, iF in enumerate(flist):
            fops = face_ops[iF]
            nrm = mesh.face_normal[iF]
            pair = face_pair_kp1[pos][:N3k]  # (N3k, N2kp1)
            blk = pair @ fops.gammaF         # (N3k, n_grad_F)
            for c in range(3):
                GT[np.ix_(c * N3k + np.arange(N3k),
                          self.grad_face_cols[pos])] += \
                    self.omega[pos] * nrm[c] * blk
        self.GT = GT

        # ---- full element curl C_T: (3 N3k) x n_curl --------------------
        CT = np.zeros((3 * N3k, self.n_curl))
        nRT = self.Rkm1.dim
        if nRT:
            eye = np.eye(3)
            rows = np.zeros((3 * N3k, 3 * N3km1))
            for c in range(3):
                gxe = np.cross(g_k, eye[c])  # (N3k, nq, 3)
                rows[c * N3k:(c + 1) * N3k] = expand_km1(gxe)
            CT[:, :nRT] = rows @ self.Rkm1.coeffs.T
        for pos, iF in enumerate(flist):
            fops = face_ops[iF]
            fr, svT = face_svT[pos]
            nrm = mesh.face_normal[iF]
            tf = VectorBasis.full(fops.scal.truncate(k)).eval(fr.points)
            B2 = np.zeros((3 * N3k, tf.shape[0]))
            for c in range(3):
                exn = np.cross(np.eye(3)[c], nrm)
                tdot = np.einsum("jpd,d->jp", tf, exn)
                B2[c * N3k:(c + 1) * N3k] = (svT[:N3k] * fr.weights) @ tdot.T
            CT[:, self.curl_face_cols[pos]] += \
                self.omega[pos] * (B2 @ fops.gamma_t)
        self.CT = CT

        # ---- divergence D_T: N3k x n_div --------------------------------
        DT = np.zeros((N3k, self.n_div))
        nGT = self.Gkm1.dim
        if nGT:
            rows = expand_km1(g_k)  # grad phi_m over the degree k-1 tensor
            DT[:, :nGT] = -(rows @ self.Gkm1.coeffs.T)
        for pos, iF in enumerate(flist):
            fops = face_ops[iF]
            pair = face_pair_kp1[pos][:N3k, :dim_P(2, k)]
            DT[:, self.div_face_cols[pos]] += self.omega[pos] * pair
        self.DT = DT

        # stash shared data for the potentials module
        self._rule = rule
        self._sv_k = sv_k
        self._g_kp1 = g_kp1
        self._face_pair_kp1 = face_pair_kp1
        self._face_svT = face_svT

    # embeddings of the R/G subspace bases into the degree-k tensor layout
    def R_emb(self):
        return embed_tensor(self.Rkm1.coeffs, dim_P(3, self.k - 1),
                            self.N3k, 3)

    def G_emb(self):
        return embed_tensor(self.Gkm1.coeffs, dim_P(3, self.k - 1),
                            self.N3k, 3)


class DDR:
    """All local operators plus the dof spaces for one (mesh, k) pair."""

    def __init__(self, mesh, k):
        if k < 0:
            raise ValueError("polynomial degree must be >= 0")
        self.mesh = mesh
        self.k = k
        self.edges = [EdgeOps(mesh, iE, k) for iE in range(mesh.n_edges)]
        self.faces = [FaceOps(mesh, iF, k, self.edges)
                      for iF in range(mesh.n_faces)]
        self.elems = [ElemOps(mesh, iT, k, self.faces, self.edges)
                      for iT in range(mesh.n_elements)]
        self.X = {kind: DofSpace(mesh, kind, k)
                  for kind in ("grad", "curl", "div")}
        self._globals = {}

    # ---- local-to-global maps ---------------------------------------

    def local_to_global(self, kind, iT):
        X = self.X[kind]
        el = self.elems[iT]
        parts = [X.elem_slice(iT)]
        if kind in ("grad", "curl", "div"):
            for iF in el.flist:
                parts.append(X.face_slice(iF))
        if kind in ("grad", "curl"):
            for iE in el.eidx:
                parts.append(X.edge_slice(iE))
        if kind == "grad":
            parts.append(np.asarray(el.vidx))
        return np.concatenate(parts)

    def face_to_global(self, kind, iF):
        X = self.X[kind]
        f = self.faces[iF]
        parts = [X.face_slice(iF)]
        for iE in f.edge_list:
            parts.append(X.edge_slice(iE))
        if kind == "grad":
            parts.append(np.asarray(self.mesh.faces[iF]))
        return np.concatenate(parts)

    # ---- interpolators ----------------------------------------------

    def interpolate(self, kind, f, degree=None):
        """Global dof vector of the canonical interpolate of f.

        grad: f scalar (n,3)->(n,); curl/div: f vector (n,3)->(n,3).
        """
        k = self.k
        if degree is None:
            degree = 2 * k + 5
        X = self.X[kind]
        out = np.zeros(X.dim)
        if kind == "grad":
            out[:self.mesh.n_vertices] = f(self.mesh.vertices)
            for iE in range(self.mesh.n_edges):
                out[X.edge_slice(iE)] = project(
                    f, self.edges[iE].P.truncate(k - 1), degree)
            for iF in range(self.mesh.n_faces):
                out[X.face_slice(iF)] = project(
                    f, self.faces[iF].scal.truncate(k - 1), degree)
            for iT in range(self.mesh.n_elements):
                out[X.elem_slice(iT)] = project(
                    f, self.elems[iT].scal.truncate(k - 1), degree)
        elif kind == "curl":
            for iE in range(self.mesh.n_edges):
                t = self.mesh.edge_tangent[iE]
                out[X.edge_slice(iE)] = project(
                    lambda p: np.asarray(f(p)) @ t,
                    self.edges[iE].P.truncate(k), degree)
            for iF in range(self.mesh.n_faces):
                fo = self.faces[iF]
                s = X.face_slice(iF)
                out[s[:fo.Rkm1.dim]] = project(f, fo.Rkm1, degree)
                out[s[fo.Rkm1.dim:]] = project(f, fo.Rkperp, degree)
            for iT in range(self.mesh.n_elements):
                el = self.elems[iT]
                s = X.elem_slice(iT)
                out[s[:el.Rkm1.dim]] = project(f, el.Rkm1, degree)
                out[s[el.Rkm1.dim:]] = project(f, el.Rkperp, degree)
        elif kind == "div":
            for iF in range(self.mesh.n_faces):
                nrm = self.mesh.face_normal[iF]
                out[X.face_slice(iF)] = project(
                    lambda p: np.asarray(f(p)) @ nrm,
                    self.faces[iF].scal.truncate(k), degree)
            for iT in range(self.mesh.n_elements):
                el = self.elems[iT]
                s = X.elem_slice(iT)
                out[s[:el.Gkm1.dim]] = project(f, el.Gkm1, degree)
                out[s[el.Gkm1.dim:]] = project(f, el.Gkperp, degree)
        else:
            raise ValueError("unknown dof-space kind %r" % (kind,))
        return out

    # ---- global operators -------------------------------------------

    def global_operator(self, kind):
        """Sparse G_h (curl x grad), C_h (div x curl) or D_h (P^k x div)."""
        if kind in self._globals:
            return self._globals[kind]
        mesh, k = self.mesh, self.k
        rows, cols, vals = [], [], []

        def add(rr, cc, block):
            r, c = np.meshgrid(rr, cc, indexing="ij")
            rows.append(r.ravel())
            cols.append(c.ravel())
            vals.append(np.asarray(block).ravel())

        if kind == "G":
            Xc, Xg = self.X["curl"], self.X["grad"]
            for iE in range(mesh.n_edges):
                eo = self.edges[iE]
                cc = np.concatenate([Xg.edge_slice(iE),
                                     np.asarray(mesh.edges[iE])])
                add(Xc.edge_slice(iE), cc, eo.GE)
            for iF in range(mesh.n_faces):
                fo = self.faces[iF]
                cc = self.face_to_global("grad", iF)
                rr = Xc.face_slice(iF)
                add(rr[:fo.Rkm1.dim], cc, fo.GF_R)
                add(rr[fo.Rkm1.dim:], cc, fo.GF_Rperp)
            for iT in range(mesh.n_elements):
                el = self.elems[iT]
                cc = self.local_to_global("grad", iT)
                rr = Xc.elem_slice(iT)
                Re = el.R_emb()
                add(rr[:el.Rkm1.dim], cc,
                    _solve(el.Rkm1.gram(), Re @ el.GT))
                add(rr[el.Rkm1.dim:], cc, el.Rkperp.coeffs @ el.GT)
            shape = (Xc.dim, Xg.dim)
        elif kind == "C":
            Xd, Xc = self.X["div"], self.X["curl"]
            for iF in range(mesh.n_faces):
                fo = self.faces[iF]
                add(Xd.face_slice(iF), self.face_to_global("curl", iF),
                    fo.CF)
            for iT in range(mesh.n_elements):
                el = self.elems[iT]
                cc = self.local_to_global("curl", iT)
                rr = Xd.elem_slice(iT)
                Ge = el.G_emb()
                add(rr[:el.Gkm1.dim], cc,
                    _solve(el.Gkm1.gram(), Ge @ el.CT))
                add(rr[el.Gkm1.dim:], cc, el.Gkperp.coeffs @ el.CT)
            shape = (Xd.dim, Xc.dim)
        elif kind == "D":
            Xd = self.X["div"]
            N3k = dim_P(3, k)
            for iT in range(mesh.n_elements):
                add(N3k * iT + np.arange(N3k),
                    self.local_to_global("div", iT), self.elems[iT].DT)
            shape = (N3k * mesh.n_elements, Xd.dim)
        else:
            raise ValueError("unknown global operator %r" % (kind,))
        M = sp.coo_matrix(
            (np.concatenate(vals),
             (np.concatenate(rows), np.concatenate(cols))),
            shape=shape).tocsr()
        M.sum_duplicates()
        self._globals[kind] = M
        return M


def global_operator(ddr, kind):
    return ddr.global_operator(kind)


def dump_operator(op, path):
    """Debug dump as `row col value` coordinate text, 17 sig digits."""
    coo = op.tocoo()
    with open(path, "w") as fh:
        for r, c, v in zip(coo.row, coo.col, coo.data):
            fh.write("%d %d %.17g\n" % (r, c, v))
