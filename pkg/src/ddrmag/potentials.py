"""Element vector potential reconstructions, stabilization forms, local
L2-product matrices, and the discrete norms built from them.

All element potentials are returned as dense matrices mapping local dof
vectors to coefficients over the orthonormal degree-k tensor basis of the
element, so plain coefficient dot products realize L2 pairings.
"""

import numpy as np
import scipy.sparse as sp

from . import quadrature
from .ddr_core import _solve, dim_P
from .polyspaces import VectorBasis


def p_div(ddr, iT):
    """P_div matrix (3 N_P^k x n_div dofs) for element iT."""
    el = ddr.elems[iT]
    k = ddr.k
    N3k, N3kp1 = dim_P(3, k), dim_P(3, k + 1)
    w = el._rule.weights
    E3 = np.zeros((N3kp1, 3 * N3k))
    for c in range(3):
        E3[:, c * N3k:(c + 1) * N3k] = (el._g_kp1[:, :, c] * w) @ el._sv_k.T
    A = np.vstack([E3[1:], el.Gkperp.coeffs])
    rhs = np.zeros((3 * N3k, el.n_div))
    DT_pad = np.vstack([el.DT, np.zeros((N3kp1 - N3k, el.n_div))])
    rhs[:N3kp1 - 1] = -DT_pad[1:N3kp1]
    N2k = dim_P(2, k)
    for pos in range(len(el.flist)):
        rhs[np.ix_(np.arange(N3kp1 - 1), el.div_face_cols[pos])] += \
            el.omega[pos] * el._face_pair_kp1[pos][1:, :N2k]
    nG = el.Gkm1.dim
    rhs[N3kp1 - 1:, nG:nG + el.Gkperp.dim] = np.eye(el.Gkperp.dim)
    try:
        return np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError:
        raise RuntimeError("singular divergence-potential system "
                           "on element %d" % iT)


def p_curl(ddr, iT):
    """P_curl matrix (3 N_P^k x n_curl dofs) for element iT."""
    el = ddr.elems[iT]
    mesh, k = ddr.mesh, ddr.k
    N3k, N3kp1 = dim_P(3, k), dim_P(3, k + 1)
    Gp = el.Gkp1perp
    w = el._rule.weights
    g = el._g_kp1
    eye3 = np.eye(3)
    curlrows = np.zeros((Gp.dim, 3 * N3k))
    for c in range(3):
        gxe = np.cross(g, eye3[c])
        Xc = np.zeros((N3kp1, 3 * N3k))
        for a in range(3):
            Xc[:, a * N3k:(a + 1) * N3k] = (gxe[:, :, a] * w) @ el._sv_k.T
        curlrows += Gp.coeffs[:, c * N3kp1:(c + 1) * N3kp1] @ Xc
    A = np.vstack([curlrows, el.Rkperp.coeffs])
    rhs = np.zeros((3 * N3k, el.n_curl))
    idx = np.concatenate([c * N3kp1 + np.arange(N3k) for c in range(3)])
    rhs[:Gp.dim] = Gp.coeffs[:, idx] @ el.CT
    for pos, iF in enumerate(el.flist):
        fo = ddr.faces[iF]
        fr, _ = el._face_svT[pos]
        nrm = mesh.face_normal[iF]
        vxn = np.cross(Gp.eval(fr.points), nrm)
        tb = VectorBasis.full(fo.scal.truncate(k)).eval(fr.points)
        B = np.einsum("jpd,tpd,p->jt", vxn, tb, fr.weights)
        rhs[np.ix_(np.arange(Gp.dim), el.curl_face_cols[pos])] -= \
            el.omega[pos] * (B @ fo.gamma_t)
    nR = el.Rkm1.dim
    rhs[Gp.dim:, nR:nR + el.Rkperp.dim] = np.eye(el.Rkperp.dim)
    try:
        Phat = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError:
        raise RuntimeError("singular curl-potential system on element %d"
                           % iT)
    Re = el.R_emb()
    P = Phat - Re.T @ _solve(el.Rkm1.gram(), Re @ Phat)
    P[:, :nR] += Re.T
    return P


def stab_curl_factors(ddr, iT, P=None):
    """Factored curl stabilization: list of (weight, M, D) with
    s(x, y) = sum_i w_i (D_i x)^T M_i (D_i y)."""
    el = ddr.elems[iT]
    mesh, k = ddr.mesh, ddr.k
    if P is None:
        P = p_curl(ddr, iT)
    factors = []
    for pos, iF in enumerate(el.flist):
        fo = ddr.faces[iF]
        fr = quadrature.quad_points(mesh, "face", iF, 2 * k + 3)
        ev = VectorBasis.full(el.scal.truncate(k)).eval(fr.points)
        hF = mesh.face_diam[iF]
        cols = el.curl_face_cols[pos]
        for basis, off in ((fo.Rkm1, 0), (fo.Rkperp, fo.Rkm1.dim)):
            if basis.dim == 0:
                continue
            bv = basis.eval(fr.points)
            Q = np.einsum("jpd,ipd,p->ji", bv, ev, fr.weights)
            M = basis.gram()
            D = _solve(M, Q @ P)
            D[:, cols[off:off + basis.dim]] -= np.eye(basis.dim)
            factors.append((hF, M, D))
    o_edge = (el.Rkm1.dim + el.Rkperp.dim
              + len(el.flist) * ddr.X["curl"].face_block)
    for pos, iE in enumerate(el.eidx):
        er = quadrature.quad_points(mesh, "edge", iE, 2 * k + 3)
        t = mesh.edge_tangent[iE]
        ev = VectorBasis.full(el.scal.truncate(k)).eval(er.points)
        pvals = np.einsum("ipd,d->ip", ev, t)
        phi = ddr.edges[iE].P.truncate(k).eval(er.points)
        D = ((phi * er.weights) @ pvals.T) @ P
        D[:, o_edge + pos * (k + 1) + np.arange(k + 1)] -= np.eye(k + 1)
        factors.append((mesh.edge_length[iE] ** 2, np.eye(k + 1), D))
    return factors


def stab_div_factors(ddr, iT, P=None):
    """Factored div stabilization, same convention as stab_curl_factors."""
    el = ddr.elems[iT]
    mesh, k = ddr.mesh, ddr.k
    if P is None:
        P = p_div(ddr, iT)
    factors = []
    Ge = el.G_emb()
    M = el.Gkm1.gram()
    D = _solve(M, Ge @ P)
    if el.Gkm1.dim:
        D[:, :el.Gkm1.dim] -= np.eye(el.Gkm1.dim)
        factors.append((1.0, M, D))
    N2k = dim_P(2, k)
    for pos, iF in enumerate(el.flist):
        fr = quadrature.quad_points(mesh, "face", iF, 2 * k + 3)
        nrm = mesh.face_normal[iF]
        ev = VectorBasis.full(el.scal.truncate(k)).eval(fr.points)
        pvals = np.einsum("ipd,d->ip", ev, nrm)
        phi = ddr.faces[iF].scal.truncate(k).eval(fr.points)
        D = ((phi * fr.weights) @ pvals.T) @ P
        D[:, el.div_face_cols[pos]] -= np.eye(N2k)
        factors.append((mesh.face_diam[iF], np.eye(N2k), D))
    return factors


def stab_matrix(factors):
    """Assemble a factored stabilization into a dense symmetric matrix."""
    n = factors[0][2].shape[1]
    S = np.zeros((n, n))
    for w, M, D in factors:
        S += w * (D.T @ M @ D)
    return S


def stab_value(factors, x, y=None):
    """Cancellation-free evaluation of the stabilization bilinear form."""
    if y is None:
        y = x
    return sum(w * ((D @ x) @ M @ (D @ y)) for w, M, D in factors)


def stab_curl(ddr, iT, P=None):
    """Stabilization matrix (n_curl x n_curl) for the curl product."""
    return stab_matrix(stab_curl_factors(ddr, iT, P))


def stab_div(ddr, iT, P=None):
    """Stabilization matrix (n_div x n_div) for the div product."""
    return stab_matrix(stab_div_factors(ddr, iT, P))


def local_products(ddr, iT, mu=None):
    """Local curl and div product matrices {"curl": aT, "div": dT}.

    mu: None (unit), a scalar (elementwise-constant value), or a callable
    mu(points)->(n,) integrated pointwise in the consistency term; the
    stabilization is then weighted by mu at the element centroid.
    """
    el = ddr.elems[iT]
    Pc = p_curl(ddr, iT)
    Pd = p_div(ddr, iT)
    Sc = stab_curl(ddr, iT, Pc)
    Sd = stab_div(ddr, iT, Pd)
    if mu is None:
        aT = Pc.T @ Pc + Sc
    elif np.isscalar(mu):
        aT = mu * (Pc.T @ Pc + Sc)
    else:
        rule = quadrature.quad_points(ddr.mesh, "element", iT,
                                      2 * ddr.k + 5)
        ev = VectorBasis.full(el.scal.truncate(ddr.k)).eval(rule.points)
        muv = np.asarray(mu(rule.points))
        Mmu = np.einsum("ipd,jpd,p->ij", ev, ev, muv * rule.weights)
        muT = float(mu(ddr.mesh.elem_centroid[iT][None, :])[0])
        aT = Pc.T @ Mmu @ Pc + muT * Sc
    dT = Pd.T @ Pd + Sd
    _check_spd(aT, "curl", iT)
    _check_spd(dT, "div", iT)
    return {"curl": aT, "div": dT}


def _check_spd(M, what, iT):
    asym = np.abs(M - M.T).max()
    scale = max(np.abs(M).max(), 1.0)
    if asym > 1e-12 * scale:
        raise RuntimeError("%s product on element %d not symmetric" %
                           (what, iT))
    ev = np.linalg.eigvalsh(0.5 * (M + M.T))
    if ev[0] < -1e-10 * max(ev[-1], 1.0):
        raise RuntimeError("%s product on element %d not positive "
                           "semidefinite (lambda_min=%g)" % (what, iT, ev[0]))


def assemble_product(ddr, kind, mu=None):
    """Global sparse Gram matrix of the curl or div inner product."""
    X = ddr.X[kind]
    rows, cols, vals = [], [], []
    for iT in range(ddr.mesh.n_elements):
        loc = local_products(ddr, iT, mu=mu)[kind]
        gl = ddr.local_to_global(kind, iT)
        r, c = np.meshgrid(gl, gl, indexing="ij")
        rows.append(r.ravel())
        cols.append(c.ravel())
        vals.append(loc.ravel())
    M = sp.coo_matrix((np.concatenate(vals),
                       (np.concatenate(rows), np.concatenate(cols))),
                      shape=(X.dim, X.dim)).tocsr()
    M.sum_duplicates()
    return M


def tilde_norm(ddr, kind, vec):
    """L2-like norm with h_F / h_F h_E scalings of the dof components."""
    mesh, k = ddr.mesh, ddr.k
    X = ddr.X[kind]
    total = 0.0
    if kind == "curl":
        for iT in range(mesh.n_elements):
            el = ddr.elems[iT]
            s = X.elem_slice(iT)
            zR = vec[s[:el.Rkm1.dim]]
            zP = vec[s[el.Rkm1.dim:]]
            tT = zR @ el.Rkm1.gram() @ zR + zP @ el.Rkperp.gram() @ zP
            for iF in el.flist:
                fo = ddr.faces[iF]
                sF = X.face_slice(iF)
                zR = vec[sF[:fo.Rkm1.dim]]
                zP = vec[sF[fo.Rkm1.dim:]]
                tF = zR @ fo.Rkm1.gram() @ zR + zP @ fo.Rkperp.gram() @ zP
                for iE in fo.edge_list:
                    zE = vec[X.edge_slice(iE)]
                    tF += mesh.edge_length[iE] * (zE @ zE)
                tT += mesh.face_diam[iF] * tF
            total += tT
    elif kind == "div":
        for iT in range(mesh.n_elements):
            el = ddr.elems[iT]
            s = X.elem_slice(iT)
            zG = vec[s[:el.Gkm1.dim]]
            zP = vec[s[el.Gkm1.dim:]]
            tT = zG @ el.Gkm1.gram() @ zG + zP @ el.Gkperp.gram() @ zP
            for iF in el.flist:
                zF = vec[X.face_slice(iF)]
                tT += mesh.face_diam[iF] * (zF @ zF)
            total += tT
    else:
        raise ValueError("tilde norm defined for curl/div only")
    return np.sqrt(total)


def one_norm(ddr, kind, vec, product=None, mu=None):
    """Graph norm: the product norm plus the norm of the discrete
    curl (measured in the div product) or divergence (in L2)."""
    if product is None:
        product = assemble_product(ddr, kind, mu=mu)
    base = vec @ (product @ vec)
    if kind == "curl":
        C = ddr.global_operator("C")
        Mdiv = assemble_product(ddr, "div")
        cv = C @ vec
        extra = cv @ (Mdiv @ cv)
    else:
        D = ddr.global_operator("D")
        dv = D @ vec
        extra = dv @ dv  # orthonormal elementwise basis
    return np.sqrt(base + extra)
