"""Exact symbolic reference computations on the unit square [0,1]^2.

Everything here is rebuilt from the defining relations with sympy and exact
integration; nothing is shared with the package except the DOF convention.
"""

from functools import lru_cache

import numpy as np
import sympy as sp

x, y, s = sp.symbols("x y s", real=True)

SQUARE = [(0, 0), (1, 0), (1, 1), (0, 1)]


def _geometry(verts):
    V = [sp.Matrix(v) for v in verts]
    nv = len(V)
    edges = []
    for i in range(nv):
        a, b = V[i], V[(i + 1) % nv]
        L = sp.sqrt((b - a).dot(b - a))
        t = (b - a) / L
        n = sp.Matrix([t[1], -t[0]])
        edges.append((a, b, L, t, n))
    return V, edges


def _integrate_square(f):
    return sp.integrate(sp.integrate(f, (x, 0, 1)), (y, 0, 1))


def _trace(dofs, edges, nv, i):
    """Velocity on edge i as a function of s, from the interpolation conditions."""
    a, b, L, t, n = edges[i]
    j = (i + 1) % nv
    va = sp.Matrix(dofs[2 * i : 2 * i + 2])
    vb = sp.Matrix(dofs[2 * j : 2 * j + 2])
    m = dofs[2 * nv + i]
    c0, c1, c2 = sp.symbols("c0 c1 c2")
    vn = c0 + c1 * s + c2 * s**2
    sol = sp.solve(
        [vn.subs(s, 0) - va.dot(n), vn.subs(s, 1) - vb.dot(n), sp.integrate(vn, (s, 0, 1)) - m], [c0, c1, c2]
    )
    vn = vn.subs(sol)
    vt = (1 - s) * va.dot(t) + s * vb.dot(t)
    return vn * n + vt * t


def _on_edge(expr, edge):
    a, b = edge[0], edge[1]
    return expr.subs({x: a[0] + s * (b[0] - a[0]), y: a[1] + s * (b[1] - a[1])}, simultaneous=True)


@lru_cache(maxsize=None)
def unit_square_forms(nu=1.0, beta=(1.0, 0.0), alphaE=1.0):
    """Dense matrices (PiNabla, PiZero, Astiff, Sstab, Aconv, Mmass, Brow) for [0,1]^2."""
    V, edges = _geometry(SQUARE)
    nv = len(V)
    ndof = 3 * nv
    xc, yc = sp.Rational(1, 2), sp.Rational(1, 2)
    h = sp.sqrt(2)
    xi, eta = (x - xc) / h, (y - yc) / h
    basis = [sp.Matrix([1, 0]), sp.Matrix([xi, 0]), sp.Matrix([eta, 0]),
             sp.Matrix([0, 1]), sp.Matrix([0, xi]), sp.Matrix([0, eta])]
    perimeter = sum(e[2] for e in edges)

    def grad(vec):
        return sp.Matrix([[sp.diff(vec[a], x), sp.diff(vec[a], y)] for a in range(2)])

    def l2(u, w):
        return _integrate_square(u.dot(w))

    # energy projection: for each DOF basis vector
    PiN = sp.zeros(6, ndof)
    Pi0 = sp.zeros(6, ndof)
    H1 = sp.Matrix(6, 6, lambda k, l: _integrate_square(sum(grad(basis[k]).multiply_elementwise(grad(basis[l])))))
    H0 = sp.Matrix(6, 6, lambda k, l: l2(basis[k], basis[l]))

    # complement of grad P2 inside [P1]^2, by Gram-Schmidt against grad P2
    qs = [x, y, x**2, x * y, y**2]
    gradq = [sp.Matrix([sp.diff(q, x), sp.diff(q, y)]) for q in qs]
    Gm = sp.Matrix(5, 5, lambda a, b: l2(gradq[a], gradq[b]))
    cand = sp.Matrix([-y, x])
    rhs = sp.Matrix([l2(cand, g) for g in gradq])
    coeffs = Gm.solve(rhs)
    gperp = cand - sum((coeffs[a] * gradq[a] for a in range(5)), sp.zeros(2, 1))

    for j in range(ndof):
        dofs = [0] * ndof
        dofs[j] = 1
        traces = [_trace(dofs, edges, nv, i) for i in range(nv)]

        def bint(fun):
            return sum(sp.integrate(fun(i, traces[i]), (s, 0, 1)) * edges[i][2] for i in range(nv))

        c = sp.symbols("p0:6")
        p = sum((c[k] * basis[k] for k in range(6)), sp.zeros(2, 1))
        eqs = []
        for k in (1, 2, 4, 5):
            gk = grad(basis[k])
            lhs = _integrate_square(sum(gk.multiply_elementwise(grad(p))))
            rhs_k = bint(lambda i, tr: (gk * edges[i][4]).dot(tr))
            eqs.append(lhs - rhs_k)
        for a in range(2):
            eqs.append(bint(lambda i, tr: _on_edge(p[a], edges[i])) - bint(lambda i, tr: tr[a]))
        sol = sp.solve(eqs, c)
        PiN[:, j] = sp.Matrix([sol[ck] for ck in c])
        pin = sum((PiN[k, j] * basis[k] for k in range(6)), sp.zeros(2, 1))

        div = bint(lambda i, tr: tr.dot(edges[i][4])) / 1  # |K| = 1
        c0 = sp.symbols("r0:6")
        w = sum((c0[k] * basis[k] for k in range(6)), sp.zeros(2, 1))
        eqs = []
        for q, gq in zip(qs, gradq):
            rhs_q = -div * _integrate_square(q) + bint(lambda i, tr: tr.dot(edges[i][4]) * _on_edge(q, edges[i]))
            eqs.append(l2(w, gq) - rhs_q)
        eqs.append(l2(w, gperp) - l2(pin, gperp))
        sol = sp.solve(eqs, c0)
        Pi0[:, j] = sp.Matrix([sol[ck] for ck in c0])

    D = sp.zeros(ndof, 6)
    for k in range(6):
        for i in range(nv):
            val = basis[k].subs({x: V[i][0], y: V[i][1]})
            D[2 * i, k], D[2 * i + 1, k] = val[0], val[1]
            mid = (edges[i][0] + edges[i][1]) / 2
            D[2 * nv + i, k] = basis[k].subs({x: mid[0], y: mid[1]}).dot(edges[i][4])

    f = lambda M: np.array(M.evalf(30).tolist(), dtype=float)  # noqa: E731
    PiN_n, Pi0_n, H1_n, H0_n, D_n = map(f, (PiN, Pi0, H1, H0, D))
    I_DP = np.eye(ndof) - D_n @ PiN_n
    S = alphaE * nu * I_DP.T @ I_DP
    Astiff = nu * PiN_n.T @ H1_n @ PiN_n + S

    # convection: C_ij = int (grad PiN phi_j beta) . Pi0 phi_i
    bvec = sp.Matrix([sp.nsimplify(beta[0]), sp.nsimplify(beta[1])])
    C = np.zeros((ndof, ndof))
    gradp = [grad(basis[k]) * bvec for k in range(6)]
    Hc = f(sp.Matrix(6, 6, lambda k, l: l2(basis[k], gradp[l])))
    C = Pi0_n.T @ Hc @ PiN_n
    Aconv = 0.5 * (C - C.T)
    M = Pi0_n.T @ H0_n @ Pi0_n
    Brow = np.zeros((1, ndof))
    Brow[0, 2 * nv :] = [float(e[2]) for e in edges]
    return PiN_n, Pi0_n, Astiff, S, Aconv, M, Brow
