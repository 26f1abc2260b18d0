"""Mixed magnetostatics on the unit cube: assembly of the saddle-point
system in the discrete spaces, manufactured solutions, energy errors, and
convergence studies.

Unknowns are (H, A): H in the curl space, A in the div space. The block
system is [[a, -b^T], [b, c]] acting on (H, A), with b assembled from its
elementwise characterization (bulk pairing of the element curl with the
div potential plus face-difference penalties) and cross-checked against
its definition as the div product composed with the discrete curl.
"""

import csv
import io
import time

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import mesh as meshmod
from . import potentials, quadrature
from .ddr_core import DDR, dim_P
from .polyspaces import VectorBasis


class ManufacturedCase:
    """Closed-form exact solution (A, H, J, g) on the unit cube.

    A is the vector potential below; the magnetic field is derived as
    H = mu^-1 curl A and the current density as J = curl H, so the strong
    equations hold identically. g = A x n supplies the boundary datum.
    """

    def __init__(self, mu_mode="unit"):
        if mu_mode not in ("unit", "affine"):
            raise ValueError("mu_mode must be 'unit' or 'affine'")
        self.mu_mode = mu_mode
        self._validate()

    def mu(self, p):
        p = np.atleast_2d(p)
        if self.mu_mode == "unit":
            return np.ones(len(p))
        return 1.0 + p[:, 0] + p[:, 1] + p[:, 2]

    def A(self, p):
        p = np.atleast_2d(p)
        sx, cx = np.sin(np.pi * p[:, 0]), np.cos(np.pi * p[:, 0])
        sy, cy = np.sin(np.pi * p[:, 1]), np.cos(np.pi * p[:, 1])
        sz, cz = np.sin(np.pi * p[:, 2]), np.cos(np.pi * p[:, 2])
        return np.column_stack([cx * sy * sz, -2 * sx * cy * sz,
                                sx * sy * cz])

    def curlA(self, p):
        p = np.atleast_2d(p)
        sx, cx = np.sin(np.pi * p[:, 0]), np.cos(np.pi * p[:, 0])
        cy = np.cos(np.pi * p[:, 1])
        sz, cz = np.sin(np.pi * p[:, 2]), np.cos(np.pi * p[:, 2])
        z = np.zeros(len(p))
        return 3 * np.pi * np.column_stack([sx * cy * cz, z, -cx * cy * sz])

    def H(self, p):
        return self.curlA(p) / self.mu(p)[:, None]

    def J(self, p):
        # J = curl(K/mu) = mu^-1 curl K - mu^-2 grad(mu) x K, K = curl A
        p = np.atleast_2d(p)
        sx, cx = np.sin(np.pi * p[:, 0]), np.cos(np.pi * p[:, 0])
        sy, cy = np.sin(np.pi * p[:, 1]), np.cos(np.pi * p[:, 1])
        sz, cz = np.sin(np.pi * p[:, 2]), np.cos(np.pi * p[:, 2])
        curlK = 3 * np.pi ** 2 * np.column_stack(
            [cx * sy * sz, -2 * sx * cy * sz, sx * sy * cz])
        if self.mu_mode == "unit":
            return curlK
        mu = self.mu(p)
        K = self.curlA(p)
        gxK = np.column_stack([K[:, 2], K[:, 0] - K[:, 2], -K[:, 0]])
        return curlK / mu[:, None] - gxK / (mu ** 2)[:, None]

    def g(self, p, n):
        return np.cross(self.A(p), n)

    def _validate(self):
        # central finite differences of H confirm the closed-form J
        rng = np.random.default_rng(12345)
        pts = rng.uniform(0.1, 0.9, size=(20, 3))
        h = 1e-5
        curl_fd = np.zeros((len(pts), 3))
        for a in range(3):
            da = np.zeros(3)
            da[a] = h
            dH = (self.H(pts + da) - self.H(pts - da)) / (2 * h)
            # contribution of d/dx_a to the curl
            curl_fd[:, (a + 2) % 3] += dH[:, (a + 1) % 3]
            curl_fd[:, (a + 1) % 3] -= dH[:, (a + 2) % 3]
        err = np.abs(curl_fd - self.J(pts)).max()
        if err > 1e-6 * max(1.0, np.abs(self.J(pts)).max()):
            raise RuntimeError("manufactured current density fails the "
                               "finite-difference check (err=%g)" % err)


def assemble_forms(ddr, case=None, check_tol=None):
    """Sparse (a_h, b_h, c_h); b rows are div dofs, columns curl dofs."""
    mesh, k = ddr.mesh, ddr.k
    mu = None
    if case is not None and case.mu_mode != "unit":
        mu = case.mu
    a_h = potentials.assemble_product(ddr, "curl", mu=mu)
    D = ddr.global_operator("D")
    c_h = (D.T @ D).tocsr()

    N3k, N2k = dim_P(3, k), dim_P(2, k)
    rows, cols, vals = [], [], []
    for iT in range(mesh.n_elements):
        el = ddr.elems[iT]
        Pd = potentials.p_div(ddr, iT)
        B = Pd.T @ el.CT
        for pos, iF in enumerate(el.flist):
            fo = ddr.faces[iF]
            fr = quadrature.quad_points(mesh, "face", iF, 2 * k + 3)
            nrm = mesh.face_normal[iF]
            ev = VectorBasis.full(el.scal.truncate(k)).eval(fr.points)
            pvals = np.einsum("ipd,d->ip", ev, nrm)
            phi = fo.scal.truncate(k).eval(fr.points)
            tr = (phi * fr.weights) @ pvals.T  # (N2k, 3 N3k)
            Dd = tr @ Pd
            Dd[:, el.div_face_cols[pos]] -= np.eye(N2k)
            Dc = tr @ el.CT
            Dc[:, el.curl_face_cols[pos][:fo.CF.shape[1]]] -= fo.CF
            B += mesh.face_diam[iF] * (Dd.T @ Dc)
        gl_d = ddr.local_to_global("div", iT)
        gl_c = ddr.local_to_global("curl", iT)
        r, c = np.meshgrid(gl_d, gl_c, indexing="ij")
        rows.append(r.ravel())
        cols.append(c.ravel())
        vals.append(B.ravel())
    b_h = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(ddr.X["div"].dim, ddr.X["curl"].dim)).tocsr()
    b_h.sum_duplicates()

    if check_tol is not None:
        C = ddr.global_operator("C")
        Mdiv = potentials.assemble_product(ddr, "div")
        alt = (Mdiv @ C).tocsr()
        diff = abs(b_h - alt).max()
        scale = max(abs(b_h).max(), 1.0)
        if diff > check_tol * scale:
            raise RuntimeError("discrete curl pairing mismatch between the "
                               "two assemblies of b_h: %g" % (diff / scale))
    return a_h, b_h, c_h


def assemble_rhs(ddr, case):
    """(curl-block, div-block) load vectors for the manufactured case."""
    mesh, k = ddr.mesh, ddr.k
    rhs_c = np.zeros(ddr.X["curl"].dim)
    rhs_d = np.zeros(ddr.X["div"].dim)
    for iF in mesh.boundary_faces:
        fo = ddr.faces[iF]
        fr = quadrature.quad_points(mesh, "face", iF, 2 * k + 5)
        nrm = mesh.face_normal[iF]
        gv = case.g(fr.points, nrm)
        tb = VectorBasis.full(fo.scal.truncate(k)).eval(fr.points)
        mom = np.einsum("tpd,pd,p->t", tb, gv, fr.weights)
        rhs_c[ddr.face_to_global("curl", iF)] -= fo.gamma_t.T @ mom
    for iT in range(mesh.n_elements):
        el = ddr.elems[iT]
        Pd = potentials.p_div(ddr, iT)
        rule = quadrature.quad_points(mesh, "element", iT, 2 * k + 5)
        tb = VectorBasis.full(el.scal.truncate(k)).eval(rule.points)
        mom = np.einsum("tpd,pd,p->t", tb, case.J(rule.points), rule.weights)
        rhs_d[ddr.local_to_global("div", iT)] += Pd.T @ mom
    return rhs_c, rhs_d


def solve_system(a_h, b_h, c_h, rhs_c, rhs_d, residual_tol=1e-10):
    """Direct solve of [[a, -b^T], [b, c]] (H, A) = (rhs_c, rhs_d)."""
    K = sp.bmat([[a_h, -b_h.T], [b_h, c_h]], format="csc")
    rhs = np.concatenate([rhs_c, rhs_d])
    x = spla.spsolve(K, rhs)
    if not np.all(np.isfinite(x)):
        raise RuntimeError("direct solver returned non-finite values")
    res = np.linalg.norm(K @ x - rhs)
    den = max(np.linalg.norm(rhs), 1.0)
    if res > residual_tol * den:
        raise RuntimeError("relative residual %g exceeds tolerance %g"
                           % (res / den, residual_tol))
    n = a_h.shape[0]
    return x[:n], x[n:]


def interpolate_exact(ddr, case):
    """Dof vectors of the interpolated exact solution (H, A)."""
    return (ddr.interpolate("curl", case.H),
            ddr.interpolate("div", case.A))


def energy_error(a_h, c_h, H, A, H_ref, A_ref):
    eH = H - H_ref
    eA = A - A_ref
    val = eH @ (a_h @ eH) + eA @ (c_h @ eA)
    return np.sqrt(max(val, 0.0))


def solve_case(mesh, k, case, residual_tol=1e-10):
    """Assemble and solve one mesh/degree/permeability combination.

    Returns a dict with the solution, error, dimensions, and timings.
    """
    t0 = time.perf_counter()
    ddr = DDR(mesh, k)
    a_h, b_h, c_h = assemble_forms(ddr, case)
    rhs_c, rhs_d = assemble_rhs(ddr, case)
    t1 = time.perf_counter()
    H, A = solve_system(a_h, b_h, c_h, rhs_c, rhs_d, residual_tol)
    t2 = time.perf_counter()
    H_ref, A_ref = interpolate_exact(ddr, case)
    err = energy_error(a_h, c_h, H, A, H_ref, A_ref)
    return {
        "ddr": ddr,
        "H": H,
        "A": A,
        "energy_error": err,
        "h": mesh.h,
        "dim_curl": ddr.X["curl"].dim,
        "dim_div": ddr.X["div"].dim,
        "assembly_time": t1 - t0,
        "solve_time": t2 - t1,
    }


def convergence_run(family_or_meshes, levels, k, mu_mode="unit",
                    residual_tol=1e-10):
    """One row per level: h, energy error, dims, EOC, timings."""
    case = ManufacturedCase(mu_mode)
    rows = []
    for lev in levels:
        if isinstance(family_or_meshes, str):
            mesh = meshmod.generate_mesh(family_or_meshes, lev)
        else:
            mesh = family_or_meshes[lev]
        out = solve_case(mesh, k, case, residual_tol)
        row = {
            "MeshSize": out["h"],
            "EnergyError": out["energy_error"],
            "DimXCurl": out["dim_curl"],
            "DimXDiv": out["dim_div"],
            "EOC": None,
            "AssemblyTime": out["assembly_time"],
            "SolveTime": out["solve_time"],
        }
        if rows:
            prev = rows[-1]
            row["EOC"] = (np.log(prev["EnergyError"] / row["EnergyError"])
                          / np.log(prev["MeshSize"] / row["MeshSize"]))
        rows.append(row)
    return rows


CSV_HEADER = ["MeshSize", "EnergyError", "DimXCurl", "DimXDiv", "EOC",
              "AssemblyTime", "SolveTime"]


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.17g" % x


def rows_to_csv(rows, include_timings=False):
    """Deterministic CSV text; timing columns stay empty unless asked."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        rec = dict(r)
        if not include_timings:
            rec["AssemblyTime"] = None
            rec["SolveTime"] = None
        w.writerow([_fmt(rec[c]) for c in CSV_HEADER])
    return buf.getvalue()


def write_csv(rows, path, include_timings=False):
    with open(path, "w") as fh:
        fh.write(rows_to_csv(rows, include_timings))
