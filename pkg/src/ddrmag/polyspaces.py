"""Orthonormal hierarchical polynomial bases on mesh entities and the
gradient/curl subspaces G^l, G^l-perp, R^l, R^l-perp with projectors.

Scalar bases start from scaled monomials ((x - x_X)/h_X)^alpha in
degree-then-lexicographic order and are orthonormalized by Cholesky of the
monomial Gram matrix, which preserves the hierarchical prefix property:
the degree-l basis is the first N_P^l rows of the degree-(l+1) basis.

Face polynomials live in a fixed per-face 2D frame derived from n_F, so the
two elements sharing a face see identical face functions. Edge polynomials
are parameterized by arclength along t_E.

Vector polynomial spaces P^l(X)^d are tensorizations of the scalar basis,
component-major: tensor index j = c*N + i is scalar function i times axis c.
Subspace bases are stored as coefficient rows over that tensorization;
since the tensorization is orthonormal, L2 pairings reduce to coefficient
dot products and complements to Euclidean null spaces.
"""

import numpy as np
from scipy.linalg import null_space, solve

from . import quadrature


def dim_P(d, ell):
    """dim P^ell on a d-dimensional entity (0 for ell = -1)."""
    if ell < 0:
        return 0
    n = 1
    for i in range(1, d + 1):
        n = n * (ell + i) // i
    return n


def monomial_exponents(d, ell):
    """Exponent tuples up to total degree ell, degree-then-lexicographic."""
    exps = []
    for total in range(ell + 1):
        combos = []

        def rec(prefix, remaining, slots):
            if slots == 1:
                combos.append(prefix + (remaining,))
                return
            for e in range(remaining + 1):
                rec(prefix + (e,), remaining - e, slots - 1)

        rec((), total, d)
        combos.sort()
        exps.extend(combos)
    return np.array(exps, dtype=int).reshape(-1, d)


def _face_frame(normal):
    # deterministic in-plane axes: least-aligned canonical axis, then u x v = n
    k = int(np.argmin(np.abs(normal)))
    e = np.zeros(3)
    e[k] = 1.0
    u = e - (e @ normal) * normal
    u /= np.linalg.norm(u)
    v = np.cross(normal, u)
    return np.vstack([u, v])


class ScalarBasis:
    """Orthonormal hierarchical basis of P^degree on one mesh entity."""

    def __init__(self, mesh, kind, index, degree, quad_degree=None):
        self.mesh = mesh
        self.kind = kind
        self.index = index
        self.degree = degree
        if kind == "element":
            self.dim_entity = 3
            self.center = mesh.elem_centroid[index]
            self.hscale = mesh.elem_diam[index]
            self.axes = np.eye(3)
        elif kind == "face":
            self.dim_entity = 2
            self.center = mesh.face_centroid[index]
            self.hscale = mesh.face_diam[index]
            self.axes = _face_frame(mesh.face_normal[index])
        elif kind == "edge":
            self.dim_entity = 1
            self.center = mesh.edge_midpoint[index]
            self.hscale = mesh.edge_length[index]
            self.axes = mesh.edge_tangent[index][None, :]
        else:
            raise ValueError("unknown entity kind %r" % (kind,))
        self.exps = monomial_exponents(self.dim_entity, degree)
        self.dim = len(self.exps)
        if quad_degree is None:
            quad_degree = 2 * degree
        rule = quadrature.quad_points(mesh, kind, index, quad_degree)
        mono = self._mono(rule.points)
        M = (mono * rule.weights) @ mono.T
        M = 0.5 * (M + M.T)
        try:
            L = np.linalg.cholesky(M)
            self.coeffs = np.linalg.inv(np.tril(L))
        except np.linalg.LinAlgError:
            self.coeffs = self._mgs(M)

    def _mgs(self, M):
        # modified Gram-Schmidt in the metric M, with reorthogonalization;
        # keeps the hierarchical ordering of the monomials
        n = self.dim
        C = np.eye(n)
        for i in range(n):
            for _ in range(2):
                for j in range(i):
                    C[i] -= (C[j] @ M @ C[i]) * C[j]
            nrm = np.sqrt(C[i] @ M @ C[i])
            if not nrm > 0:
                raise np.linalg.LinAlgError("degenerate entity Gram matrix")
            C[i] /= nrm
        return np.tril(C)

    def _local(self, pts):
        # scaled local coordinates, (npts, dim_entity)
        return ((np.atleast_2d(pts) - self.center) @ self.axes.T) / self.hscale

    def _mono(self, pts):
        xi = self._local(pts)
        vals = np.ones((len(self.exps), len(xi)))
        for a in range(self.dim_entity):
            vals *= xi[:, a] ** self.exps[:, a][:, None]
        return vals

    def eval(self, pts):
        """(dim, npts) values of the basis functions."""
        return self.coeffs @ self._mono(pts)

    def grad(self, pts):
        """(dim, npts, 3) ambient (tangential) gradients."""
        xi = self._local(pts)
        out = np.zeros((self.dim, len(xi), 3))
        for a in range(self.dim_entity):
            dm = np.zeros((len(self.exps), len(xi)))
            for i, e in enumerate(self.exps):
                if e[a] > 0:
                    m = e.copy()
                    m[a] -= 1
                    dm[i] = e[a] * np.prod(xi ** m, axis=1)
            out += np.einsum("ip,c->ipc", self.coeffs @ dm,
                             self.axes[a]) / self.hscale
        return out

    def grad_frame(self, pts):
        """(dim, npts, d) gradients in the entity frame (arclength units)."""
        xi = self._local(pts)
        out = np.zeros((self.dim, len(xi), self.dim_entity))
        for a in range(self.dim_entity):
            dm = np.zeros((len(self.exps), len(xi)))
            for i, e in enumerate(self.exps):
                if e[a] > 0:
                    m = e.copy()
                    m[a] -= 1
                    dm[i] = e[a] * np.prod(xi ** m, axis=1)
            out[:, :, a] = (self.coeffs @ dm) / self.hscale
        return out

    def truncate(self, degree):
        """The degree-`degree` prefix of this basis (shared geometry)."""
        if degree > self.degree:
            raise ValueError("cannot truncate upward")
        sub = object.__new__(ScalarBasis)
        sub.__dict__.update(self.__dict__)
        sub.degree = degree
        m = dim_P(self.dim_entity, degree)
        sub.exps = self.exps[:m]
        sub.dim = m
        sub.coeffs = self.coeffs[:m, :m]
        return sub


class VectorBasis:
    """Basis of a subspace of P^degree(X)^d over the tensorized scalar basis.

    `coeffs` has shape (dim, d*N) with N = scalar.dim; column c*N+i is the
    coefficient of scalar function i along axis c. On faces the axes are the
    two in-plane frame vectors, so functions are tangent fields.
    """

    def __init__(self, scalar, coeffs, kind="P"):
        self.scalar = scalar
        self.coeffs = np.asarray(coeffs, dtype=float)
        self.kind = kind
        self.ncomp = 3 if scalar.kind == "element" else 2
        self.dim = len(self.coeffs)

    @classmethod
    def full(cls, scalar):
        n = scalar.dim
        d = 3 if scalar.kind == "element" else 2
        return cls(scalar, np.eye(d * n))

    def eval(self, pts):
        """(dim, npts, 3) ambient vector values."""
        sv = self.scalar.eval(pts)
        n = self.scalar.dim
        axes = self.scalar.axes if self.ncomp == 2 else np.eye(3)
        out = np.zeros((self.dim, sv.shape[1], 3))
        for c in range(self.ncomp):
            out += np.einsum("ip,d->ipd",
                             self.coeffs[:, c * n:(c + 1) * n] @ sv, axes[c])
        return out

    def gram(self):
        # tensorized basis is orthonormal
        return self.coeffs @ self.coeffs.T


def embed_tensor(coeffs, n_from, n_to, ncomp):
    """Re-pad component-major tensor coefficients to a larger scalar dim."""
    m = len(coeffs)
    out = np.zeros((m, ncomp * n_to))
    for c in range(ncomp):
        out[:, c * n_to:c * n_to + n_from] = \
            coeffs[:, c * n_from:(c + 1) * n_from]
    return out


RANK_RTOL = 1e-10


def _complement(coeffs, ncols, expected_dim, what):
    if len(coeffs) == 0:
        ns = np.eye(ncols)
    else:
        ns = null_space(coeffs, rcond=RANK_RTOL)
        ns = ns.T
    if len(ns) != expected_dim:
        raise RuntimeError(
            "null-space dimension mismatch for %s: got %d, formula says %d"
            % (what, len(ns), expected_dim))
    return ns


def subspace_bases(mesh, kind, index, ell, scalar=None,
                   want=("G", "Gperp", "R", "Rperp")):
    """Bases of G^ell, G^ell-perp, R^ell, R^ell-perp on a face or element.

    `scalar` may pass a prebuilt ScalarBasis (degree >= ell+2 on elements
    when R spaces are wanted, >= ell+1 otherwise) to share geometry and
    orthonormalization work. `want` limits which spaces are built.
    """
    d = 3 if kind == "element" else 2
    if ell < 0:
        # P^{-1} = {0}: every subspace and complement is empty
        if scalar is None:
            scalar = ScalarBasis(mesh, kind, index, 0, quad_degree=1)
        e = VectorBasis(_empty_scalar(scalar), np.zeros((0, 0)))
        return {name: e for name in want}
    need = ell + 2 if (kind == "element" and
                       ("R" in want or "Rperp" in want)) else ell + 1
    if scalar is None or scalar.degree < need:
        scalar = ScalarBasis(mesh, kind, index, need,
                             quad_degree=2 * need + 1)
    rule = quadrature.quad_points(mesh, kind, index, 2 * scalar.degree + 1)
    w = rule.weights

    def sb(deg):
        return scalar.truncate(deg)

    n_l = dim_P(d, ell)
    sv_l = sb(ell).eval(rule.points)

    def expand(vals3):
        # vals3: (m, npts, ncomp-in-frame) frame components at quad points;
        # coefficients over the tensorized ON basis of degree ell
        m = vals3.shape[0]
        out = np.zeros((m, d * n_l))
        for c in range(d):
            out[:, c * n_l:(c + 1) * n_l] = (vals3[:, :, c] * w) @ sv_l.T
        return out

    out = {}
    # G^ell from gradients of the zero-mean scalars of degree ell+1
    gvals = sb(ell + 1).grad_frame(rule.points)[1:]
    G = VectorBasis(sb(ell), expand(gvals), kind="G")
    dim_G = dim_P(d, ell + 1) - 1
    assert G.dim == dim_G
    out["G"] = G
    if "Gperp" in want:
        out["Gperp"] = VectorBasis(G.scalar, _complement(
            G.coeffs, d * n_l, d * n_l - dim_G,
            "G^%d(%s)perp" % (ell, kind)), kind="Gperp")
    if "R" not in want and "Rperp" not in want:
        return out

    if kind == "element":
        # R^ell = curl(G^{ell+1}perp), an isomorphism onto its image
        gvals2 = sb(ell + 2).grad_frame(rule.points)[1:]
        Gup = VectorBasis(sb(ell + 1), expand2(gvals2, sb(ell + 1), rule, d),
                          kind="G")
        n_up = dim_P(3, ell + 1)
        Gup_perp = _complement(Gup.coeffs, 3 * n_up,
                               3 * n_up - (dim_P(3, ell + 2) - 1),
                               "G^%d(T)perp" % (ell + 1))
        gu = sb(ell + 1).grad_frame(rule.points)  # (n_up, npts, 3)
        curls = np.zeros((len(Gup_perp), len(w), 3))
        eye = np.eye(3)
        for c in range(3):
            block = Gup_perp[:, c * n_up:(c + 1) * n_up]
            # curl(phi e_c) = grad phi x e_c
            gxe = np.cross(gu, eye[c])
            curls += np.einsum("ri,ipd->rpd", block, gxe)
        R = VectorBasis(sb(ell), expand(curls), kind="R")
        dim_R = 3 * n_up - (dim_P(3, ell + 2) - 1)
    else:
        # R^ell(F) = VROT_F P^{0,ell+1}: rot_{-pi/2} of the face gradients
        rvals = gvals[:, :, ::-1].copy()
        rvals[:, :, 1] *= -1.0
        R = VectorBasis(sb(ell), expand(rvals), kind="R")
        dim_R = dim_P(2, ell + 1) - 1
    assert R.dim == dim_R
    out["R"] = R
    if "Rperp" in want:
        out["Rperp"] = VectorBasis(R.scalar, _complement(
            R.coeffs, d * n_l, d * n_l - dim_R,
            "R^%d(%s)perp" % (ell, kind)), kind="Rperp")
    return out


def _empty_scalar(scalar):
    sub = object.__new__(ScalarBasis)
    sub.__dict__.update(scalar.__dict__)
    sub.degree = -1
    sub.exps = scalar.exps[:0]
    sub.dim = 0
    sub.coeffs = scalar.coeffs[:0, :0]
    return sub


def expand2(gvals, scalar_target, rule, d):
    # expand gradient values over the tensorized basis of scalar_target
    sv = scalar_target.eval(rule.points)
    n = scalar_target.dim
    out = np.zeros((gvals.shape[0], d * n))
    for c in range(d):
        out[:, c * n:(c + 1) * n] = (gvals[:, :, c] * rule.weights) @ sv.T
    return out


def project(f, basis, degree):
    """Coefficients of the L2-orthogonal projection of f onto `basis`.

    Scalar basis: f maps (n,3) points to (n,); vector basis: to (n,3).
    """
    sc = basis if isinstance(basis, ScalarBasis) else basis.scalar
    rule = quadrature.quad_points(sc.mesh, sc.kind, sc.index, degree)
    fv = np.asarray(f(rule.points))
    if isinstance(basis, ScalarBasis):
        return basis.eval(rule.points) @ (rule.weights * fv)
    vals = basis.eval(rule.points)
    m = np.einsum("ipd,pd,p->i", vals, fv, rule.weights)
    if basis.dim == 0:
        return m
    return solve(basis.gram(), m, assume_a="pos")


def gram(basisA, basisB, degree):
    """Matrix of pairwise L2 inner products between two bases."""
    sc = basisA if isinstance(basisA, ScalarBasis) else basisA.scalar
    rule = quadrature.quad_points(sc.mesh, sc.kind, sc.index, degree)
    if isinstance(basisA, ScalarBasis):
        va, vb = basisA.eval(rule.points), basisB.eval(rule.points)
        return (va * rule.weights) @ vb.T
    va, vb = basisA.eval(rule.points), basisB.eval(rule.points)
    return np.einsum("ipd,jpd,p->ij", va, vb, rule.weights)
