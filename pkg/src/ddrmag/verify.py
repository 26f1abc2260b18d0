"""Numerical certification of the structural properties of the discrete
complex: exactness ranks, polynomial consistency of potentials,
the link and projection identities, norm equivalence, the saddle-point
inf-sup constant, and the lowest-order curl commutation.

Each check returns a dict with "passed", the measured residuals, and the
tolerances used; `run_battery` chains them over a mesh/degree grid.
"""

import json

import numpy as np

from . import mesh as meshmod
from . import potentials, quadrature, scheme
from .ddr_core import DDR, _solve, dim_P
from .polyspaces import VectorBasis, monomial_exponents

RANK_TOL = 1e-9
RANK_GAP = 10.0


def _rank(M, tol=RANK_TOL, gap=RANK_GAP):
    """Singular-value rank with an explicit spectral-gap requirement."""
    sv = np.linalg.svd(M, compute_uv=False)
    if len(sv) == 0 or sv[0] == 0.0:
        return 0
    r = int(np.sum(sv > tol * sv[0]))
    if 0 < r < len(sv) and sv[r] > 0 and sv[r - 1] / sv[r] < gap:
        raise RuntimeError("ambiguous rank: gap %.2f below %.1f at index %d"
                           % (sv[r - 1] / sv[r], gap, r))
    return r


def _poly_scalar(rng, degree):
    exps = monomial_exponents(3, degree)
    co = rng.standard_normal(len(exps))

    def q(p):
        p = np.atleast_2d(p)
        return sum(c * np.prod(p ** e, axis=1) for c, e in zip(co, exps))
    return q


def _poly_vector(rng, degree):
    exps = monomial_exponents(3, degree)
    co = rng.standard_normal((3, len(exps)))

    def v(p):
        p = np.atleast_2d(p)
        out = np.zeros((len(p), 3))
        for a in range(3):
            for c, e in zip(co[a], exps):
                out[:, a] += c * np.prod(p ** e, axis=1)
        return out
    return v, co, exps


def _poly_vector_div(co, exps):
    def dv(p):
        p = np.atleast_2d(p)
        out = np.zeros(len(p))
        for a in range(3):
            for c, e in zip(co[a], exps):
                if e[a] > 0:
                    ee = e.copy()
                    ee[a] -= 1
                    out += c * e[a] * np.prod(p ** ee, axis=1)
        return out
    return dv


def check_exactness(ddr, tol=1e-11):
    """Ranks of the three global operators against the exactness counts."""
    G = ddr.global_operator("G").toarray()
    C = ddr.global_operator("C").toarray()
    D = ddr.global_operator("D").toarray()
    mesh, k = ddr.mesh, ddr.k
    dims = {kind: ddr.X[kind].dim for kind in ("grad", "curl", "div")}
    n_pk = dim_P(3, k) * mesh.n_elements
    rG, rC, rD = _rank(G), _rank(C), _rank(D)
    scale = max(np.abs(G).max(), np.abs(C).max(), 1.0)
    res_cg = np.abs(C @ G).max() / scale if G.size else 0.0
    scale = max(np.abs(C).max(), np.abs(D).max(), 1.0)
    res_dc = np.abs(D @ C).max() / scale if C.size else 0.0
    ok = (rD == n_pk
          and rC == dims["div"] - rD
          and rG == dims["grad"] - 1
          and res_cg <= tol and res_dc <= tol)
    return {
        "name": "exactness",
        "passed": bool(ok),
        "ranks": {"G": rG, "C": rC, "D": rD},
        "expected": {"G": dims["grad"] - 1, "C": dims["div"] - n_pk,
                     "D": n_pk},
        "complex_residuals": {"CG": res_cg, "DC": res_dc},
        "tolerance": tol,
    }


def check_consistency(ddr, tol=1e-10, seed=0):
    """Polynomial reproduction of the potentials and vanishing of the
    stabilizations on interpolated polynomial fields."""
    mesh, k = ddr.mesh, ddr.k
    rng = np.random.default_rng(seed)
    deg = 2 * k + 7

    q = _poly_scalar(rng, k + 1)
    Iq = ddr.interpolate("grad", q, degree=deg)
    err_gf = 0.0
    for iF in range(mesh.n_faces):
        fo = ddr.faces[iF]
        coef = fo.gammaF @ Iq[ddr.face_to_global("grad", iF)]
        r = quadrature.quad_points(mesh, "face", iF, deg)
        vals = coef @ fo.P.eval(r.points)
        ref = q(r.points)
        err_gf = max(err_gf, np.abs(vals - ref).max()
                     / max(np.abs(ref).max(), 1.0))

    v, co, exps = _poly_vector(rng, k)
    Ic = ddr.interpolate("curl", v, degree=deg)
    Id = ddr.interpolate("div", v, degree=deg)
    err_pc = err_pd = err_sc = err_sd = 0.0
    vscale = 0.0
    for iT in range(mesh.n_elements):
        el = ddr.elems[iT]
        Pc = potentials.p_curl(ddr, iT)
        Pd = potentials.p_div(ddr, iT)
        lc = ddr.local_to_global("curl", iT)
        ld = ddr.local_to_global("div", iT)
        r = el._rule
        tb = VectorBasis.full(el.scal.truncate(k)).eval(r.points)
        ref = v(r.points)
        vscale = max(vscale, np.abs(ref).max(), 1.0)
        vc = np.einsum("i,ipd->pd", Pc @ Ic[lc], tb)
        vd = np.einsum("i,ipd->pd", Pd @ Id[ld], tb)
        err_pc = max(err_pc, np.abs(vc - ref).max())
        err_pd = max(err_pd, np.abs(vd - ref).max())
        err_sc = max(err_sc, abs(potentials.stab_value(
            potentials.stab_curl_factors(ddr, iT, Pc), Ic[lc])))
        err_sd = max(err_sd, abs(potentials.stab_value(
            potentials.stab_div_factors(ddr, iT, Pd), Id[ld])))
    err_pc /= vscale
    err_pd /= vscale
    err_sc /= vscale ** 2
    err_sd /= vscale ** 2

    # commutation of the element divergence with interpolation
    vv, cco, eexps = _poly_vector(rng, k + 1)
    dv = _poly_vector_div(cco, eexps)
    Idd = ddr.interpolate("div", vv, degree=deg)
    D = ddr.global_operator("D")
    DI = D @ Idd
    err_dt = 0.0
    from .polyspaces import project
    for iT in range(mesh.n_elements):
        pi = project(dv, ddr.elems[iT].scal.truncate(k), deg)
        loc = DI[dim_P(3, k) * iT:dim_P(3, k) * (iT + 1)]
        err_dt = max(err_dt, np.abs(loc - pi).max()
                     / max(np.abs(pi).max(), 1.0))

    worst = max(err_gf, err_pc, err_pd, err_dt)
    ok = worst <= tol and err_sc <= 1e-18 and err_sd <= 1e-18
    return {
        "name": "consistency",
        "passed": bool(ok),
        "residuals": {"gammaF": err_gf, "p_curl": err_pc, "p_div": err_pd,
                      "stab_curl": err_sc, "stab_div": err_sd,
                      "div_commutation": err_dt},
        "tolerance": tol,
    }


def check_link_and_projections(ddr, tol=1e-11, n_samples=10, seed=1):
    """P_div composed with the element curl equals the full curl, and the
    curl potential projects back onto its R-type dofs."""
    rng = np.random.default_rng(seed)
    err_link = err_proj = 0.0
    for iT in range(ddr.mesh.n_elements):
        el = ddr.elems[iT]
        Pc = potentials.p_curl(ddr, iT)
        Pd = potentials.p_div(ddr, iT)
        Ge = el.G_emb()
        Re = el.R_emb()
        MG = el.Gkm1.gram()
        MR = el.Rkm1.gram()
        for _ in range(n_samples):
            z = rng.standard_normal(el.n_curl)
            ct = el.CT @ z
            w = np.zeros(el.n_div)
            w[:el.Gkm1.dim] = _solve(MG, Ge @ ct)
            w[el.Gkm1.dim:el.Gkm1.dim + el.Gkperp.dim] = \
                el.Gkperp.coeffs @ ct
            for pos, iF in enumerate(el.flist):
                w[el.div_face_cols[pos]] = \
                    ddr.faces[iF].CF @ z[el.curl_face_cols[pos]]
            scale = max(np.abs(ct).max(), 1.0)
            err_link = max(err_link, np.abs(Pd @ w - ct).max() / scale)
            p = Pc @ z
            scale = max(np.abs(z).max(), 1.0)
            if el.Rkm1.dim:
                err_proj = max(err_proj, np.abs(
                    _solve(MR, Re @ p) - z[:el.Rkm1.dim]).max() / scale)
            if el.Rkperp.dim:
                err_proj = max(err_proj, np.abs(
                    el.Rkperp.coeffs @ p
                    - z[el.Rkm1.dim:el.Rkm1.dim + el.Rkperp.dim]).max()
                    / scale)
    ok = err_link <= tol and err_proj <= tol
    return {
        "name": "link_and_projections",
        "passed": bool(ok),
        "residuals": {"link": err_link, "projections": err_proj},
        "tolerance": tol,
    }


def check_norm_equivalence(ddr, n_samples=100, seed=2, band=None):
    """Sampled ratios of the product norms to the scaled dof norms."""
    rng = np.random.default_rng(seed)
    out = {}
    for kind in ("curl", "div"):
        M = potentials.assemble_product(ddr, kind)
        dim = ddr.X[kind].dim
        ratios = []
        for _ in range(n_samples):
            z = rng.standard_normal(dim)
            a = np.sqrt(max(z @ (M @ z), 0.0))
            b = potentials.tilde_norm(ddr, kind, z)
            if b > 0:
                ratios.append(a / b)
        out[kind] = {"min": float(np.min(ratios)),
                     "max": float(np.max(ratios))}
    passed = all(v["min"] > 0 for v in out.values())
    if band is not None:
        passed = passed and all(v["max"] / v["min"] <= band
                                for v in out.values())
    return {"name": "norm_equivalence", "passed": bool(passed),
            "ratios": out}


def compute_infsup(ddr, mu_mode="unit", dof_cap=6000):
    """Inf-sup constant of the saddle-point form in the graph norms."""
    case = scheme.ManufacturedCase(mu_mode)
    mu = case.mu if mu_mode != "unit" else None
    nc = ddr.X["curl"].dim
    nd = ddr.X["div"].dim
    if nc + nd > dof_cap:
        raise RuntimeError("dense inf-sup computation needs %d dofs > cap %d"
                           % (nc + nd, dof_cap))
    a_h, b_h, c_h = scheme.assemble_forms(ddr, case)
    A = np.block([[a_h.toarray(), -b_h.toarray().T],
                  [b_h.toarray(), c_h.toarray()]])
    Mc = potentials.assemble_product(ddr, "curl", mu=mu).toarray()
    Md = potentials.assemble_product(ddr, "div").toarray()
    C = ddr.global_operator("C").toarray()
    D = ddr.global_operator("D").toarray()
    Nc = Mc + C.T @ Md @ C
    Nd = Md + D.T @ D
    N = np.block([[Nc, np.zeros((nc, nd))], [np.zeros((nd, nc)), Nd]])
    L = np.linalg.cholesky(N)
    Linv = np.linalg.solve(L, np.eye(nc + nd))
    sv = np.linalg.svd(Linv @ A @ Linv.T, compute_uv=False)
    return float(sv[-1])


def check_curl0_commutation(ddr, tol=1e-12, n_samples=20, seed=3):
    """Face averages of the discrete curl equal the lowest-order curl of
    the edge averages."""
    mesh, k = ddr.mesh, ddr.k
    rng = np.random.default_rng(seed)
    C = ddr.global_operator("C")
    X_c, X_d = ddr.X["curl"], ddr.X["div"]
    # edge-average and face-average extraction matrices
    edge_avg = np.zeros((mesh.n_edges, X_c.dim))
    for iE in range(mesh.n_edges):
        r = quadrature.quad_points(mesh, "edge", iE, 2 * k + 1)
        ints = ddr.edges[iE].P.truncate(k).eval(r.points) @ r.weights
        edge_avg[iE, X_c.edge_slice(iE)] = ints / mesh.edge_length[iE]
    face_avg = np.zeros((mesh.n_faces, X_d.dim))
    for iF in range(mesh.n_faces):
        r = quadrature.quad_points(mesh, "face", iF, 2 * k + 1)
        ints = ddr.faces[iF].scal.truncate(k).eval(r.points) @ r.weights
        face_avg[iF, X_d.face_slice(iF)] = ints / mesh.face_area[iF]
    curl0 = np.zeros((mesh.n_faces, mesh.n_edges))
    for iF in range(mesh.n_faces):
        for pos, iE in enumerate(mesh.face_edges[iF]):
            curl0[iF, iE] -= (mesh.face_edge_omega[iF][pos]
                              * mesh.edge_length[iE] / mesh.face_area[iF])
    err = 0.0
    for _ in range(n_samples):
        z = rng.standard_normal(X_c.dim)
        lhs = face_avg @ (C @ z)
        rhs = curl0 @ (edge_avg @ z)
        err = max(err, np.abs(lhs - rhs).max() / max(np.abs(z).max(), 1.0))
    return {"name": "curl0_commutation", "passed": bool(err <= tol),
            "residual": err, "tolerance": tol}


def verify_mesh(mesh, k, infsup_cap=6000):
    """All checks for one mesh and degree; inf-sup only when affordable."""
    ddr = DDR(mesh, k)
    checks = [
        check_exactness(ddr),
        check_consistency(ddr),
        check_link_and_projections(ddr),
        check_norm_equivalence(ddr),
        check_curl0_commutation(ddr),
    ]
    if ddr.X["curl"].dim + ddr.X["div"].dim <= infsup_cap:
        beta = compute_infsup(ddr)
        checks.append({"name": "infsup", "passed": bool(beta > 1e-3),
                       "beta": beta})
    return checks


def run_battery(degrees=(0, 1, 2), meshes=None):
    """Default certification grid; returns a nested report dict."""
    if meshes is None:
        meshes = [("cube", meshmod.generate_mesh("cartesian", 1)),
                  ("cartesian-2", meshmod.generate_mesh("cartesian", 2)),
                  ("kuhn-tet-1", meshmod.generate_mesh("kuhn-tet", 1))]
    report = {"cases": [], "passed": True}
    for name, mesh in meshes:
        for k in degrees:
            checks = verify_mesh(mesh, k)
            ok = all(c["passed"] for c in checks)
            report["cases"].append({"mesh": name, "degree": k,
                                    "passed": ok, "checks": checks})
            report["passed"] = report["passed"] and ok
    return report


def format_report(report):
    lines = []
    for case in report["cases"]:
        lines.append("mesh=%s degree=%d : %s"
                     % (case["mesh"], case["degree"],
                        "PASS" if case["passed"] else "FAIL"))
        for c in case["checks"]:
            detail = {k: v for k, v in c.items()
                      if k not in ("name", "passed")}
            lines.append("  %-22s %s  %s"
                         % (c["name"], "ok" if c["passed"] else "FAIL",
                            json.dumps(detail, default=float)))
    lines.append("overall: %s" % ("PASS" if report["passed"] else "FAIL"))
    return "\n".join(lines)
