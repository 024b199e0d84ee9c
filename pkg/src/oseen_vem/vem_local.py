"""Lowest-order divergence-conforming virtual element on one polygon.

Local degrees of freedom on a polygon with ``nv`` vertices, in this order:

* ``2 * nv`` vertex values ``(v_x, v_y)`` of vertex 0, 1, ...
* ``nv`` normal means ``|e|^-1 int_e v.n`` over edge i = (vertex i, vertex i+1),
  with n the outward unit normal.

On each edge the normal trace is quadratic and the tangential trace linear.
The interior moments against the complement of grad P2 in [P1]^2 are not
stored; they are replaced by those of the energy projection.

Polynomials live in the 6-dimensional space [P1(K)]^2 with basis, in order,
``(1,0), (xi,0), (eta,0), (0,1), (0,xi), (0,eta)`` where
``(xi, eta) = (x - x_K) / h_K``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
import scipy.linalg as sla

from .errors import DegenerateCell, SingularProjector
from .quadrature import edge_quadrature, polygon_geometry, polygon_quadrature

__all__ = [
    "PhysicalParams",
    "ElementGeometry",
    "EdgeTrace",
    "LocalElementMatrices",
    "edge_traces",
    "edge_trace_matrix",
    "p1_basis",
    "p1_dofs",
    "projector_nabla",
    "projector_l2",
    "local_forms",
    "divergence_value",
]

N_P1 = 6


@dataclass(frozen=True)
class PhysicalParams:
    """Viscosity, convective field and stabilization scale.

    ``beta`` is a constant 2-vector or a callable mapping an (m, 2) point array
    to (m, 2) values. ``stab_nu_scaling`` multiplies the stabilization by ``nu``.
    """

    nu: float = 1.0
    beta: Union[tuple, Callable] = (1.0, 0.0)
    alphaE: float = 1.0
    stab_nu_scaling: bool = True

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError("nu must be positive")
        if not self.alphaE > 0:
            raise ValueError("alphaE must be positive")
        if not callable(self.beta):
            object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
            if len(self.beta) != 2:
                raise ValueError("beta must be a 2-vector")

    def beta_at(self, pts):
        pts = np.atleast_2d(pts)
        if callable(self.beta):
            return np.asarray(self.beta(pts), dtype=float).reshape(len(pts), 2)
        return np.broadcast_to(np.asarray(self.beta), (len(pts), 2))

    @property
    def stab_scale(self):
        return self.alphaE * (self.nu if self.stab_nu_scaling else 1.0)


class ElementGeometry:
    """Cached geometric quantities of a counterclockwise polygon."""

    def __init__(self, vertices):
        v = np.array(vertices, dtype=float)
        self.vertices = v
        self.nv = len(v)
        # element computations run in a frame centred on the vertex mean
        self.origin = v.mean(axis=0)
        self.local = v - self.origin
        self.area, c, self.h = polygon_geometry(self.local)
        self.local_centroid = c
        self.centroid = c + self.origin
        d = np.roll(self.local, -1, axis=0) - self.local
        self.lengths = np.hypot(d[:, 0], d[:, 1])
        if np.any(self.lengths <= 0):
            raise DegenerateCell("zero-length edge")
        self.tangents = d / self.lengths[:, None]
        self.normals = np.column_stack([self.tangents[:, 1], -self.tangents[:, 0]])
        self.local_midpoints = self.local + 0.5 * d
        self.midpoints = self.local_midpoints + self.origin
        self.perimeter = self.lengths.sum()

    @property
    def ndof(self):
        return 3 * self.nv

    def xi(self, pts, local=False):
        pts = np.atleast_2d(pts)
        if not local:
            pts = pts - self.origin
        return (pts - self.local_centroid) / self.h


def p1_basis(geom, pts, local=False):
    """Values of the 6 [P1]^2 basis fields: array (m, 2, 6)."""
    xi = geom.xi(pts, local)
    m = len(xi)
    scalar = np.column_stack([np.ones(m), xi[:, 0], xi[:, 1]])
    out = np.zeros((m, 2, N_P1))
    out[:, 0, 0:3] = scalar
    out[:, 1, 3:6] = scalar
    return out


def p1_gradients(geom):
    """Constant gradients: array (2, 2, 6) with [a, b, k] = d_b (phi_k)_a."""
    g = np.zeros((2, 2, N_P1))
    for a in range(2):
        g[a, 0, 3 * a + 1] = 1.0 / geom.h
        g[a, 1, 3 * a + 2] = 1.0 / geom.h
    return g


def p1_dofs(geom):
    """DOF-evaluation matrix D (3 nv, 6) of the [P1]^2 basis.

    Edge means of a linear field equal its value at the edge midpoint.
    """
    nv = geom.nv
    D = np.zeros((3 * nv, N_P1))
    phi_v = p1_basis(geom, geom.local, local=True)
    D[0 : 2 * nv : 2] = phi_v[:, 0, :]
    D[1 : 2 * nv : 2] = phi_v[:, 1, :]
    phi_m = p1_basis(geom, geom.local_midpoints, local=True)
    D[2 * nv :] = np.einsum("ma,mak->mk", geom.normals, phi_m)
    return D


def edge_trace_matrix(geom, i, s):
    """Map from local DOFs to the trace on edge i at parameters ``s``.

    Returns an array (len(s), 2, 3 nv): the velocity vector at each point.
    """
    s = np.atleast_1d(np.asarray(s, dtype=float))
    nv = geom.nv
    j = (i + 1) % nv
    n, t = geom.normals[i], geom.tangents[i]
    out = np.zeros((len(s), 2, 3 * nv))
    bubble = 6.0 * s * (1.0 - s)
    la, lb = 1.0 - s, s
    # normal trace: linear interpolation of endpoint normals plus a mean-fixing bubble
    wa = la - 0.5 * bubble
    wb = lb - 0.5 * bubble
    for comp in range(2):
        out[:, :, 2 * i + comp] += np.outer(wa * n[comp], n) + np.outer(la * t[comp], t)
        out[:, :, 2 * j + comp] += np.outer(wb * n[comp], n) + np.outer(lb * t[comp], t)
    out[:, :, 2 * nv + i] += np.outer(bubble, n)
    return out


def _edge_integrals(geom):
    """(nv, 2, 3 nv): DOF -> int_e v for each edge (vector valued)."""
    nv = geom.nv
    W = np.zeros((nv, 2, 3 * nv))
    for i in range(nv):
        j = (i + 1) % nv
        n, t, L = geom.normals[i], geom.tangents[i], geom.lengths[i]
        tt = 0.5 * L * np.outer(t, t)
        W[i, :, 2 * i : 2 * i + 2] += tt
        W[i, :, 2 * j : 2 * j + 2] += tt
        W[i, :, 2 * nv + i] = L * n
    return W


@dataclass(frozen=True)
class EdgeTrace:
    """Trace on one edge in the parameter s in [0, 1] (from vertex i to i+1).

    Coefficients are in the monomials 1, s, s^2.
    """

    normal: np.ndarray
    tangential: np.ndarray

    def normal_at(self, s):
        return np.polynomial.polynomial.polyval(s, self.normal)

    def tangential_at(self, s):
        return np.polynomial.polynomial.polyval(s, self.tangential)


def edge_traces(vertices, dof_values):
    geom = vertices if isinstance(vertices, ElementGeometry) else ElementGeometry(vertices)
    d = np.asarray(dof_values)
    nv = geom.nv
    out = []
    for i in range(nv):
        j = (i + 1) % nv
        n, t = geom.normals[i], geom.tangents[i]
        va, vb, m = d[2 * i : 2 * i + 2], d[2 * j : 2 * j + 2], d[2 * nv + i]
        a, b = va @ n, vb @ n
        c = m - 0.5 * (a + b)
        # (1-s) a + s b + 6 c s (1-s)
        normal = np.array([a, b - a + 6.0 * c, -6.0 * c])
        tangential = np.array([va @ t, vb @ t - va @ t])
        out.append(EdgeTrace(normal, tangential))
    return out


def divergence_value(vertices, dof_values):
    """Constant divergence |K|^-1 int_dK v.n."""
    geom = vertices if isinstance(vertices, ElementGeometry) else ElementGeometry(vertices)
    d = np.asarray(dof_values)
    return float(geom.lengths @ d[2 * geom.nv :]) / geom.area


def projector_nabla(geom):
    """Energy projection onto [P1]^2 as a (6, 3 nv) coefficient matrix.

    Gradients come from int_K grad p : grad v = int_dK (grad p n) . v, exact
    for linear p; the constants match boundary means.
    """
    if not isinstance(geom, ElementGeometry):
        geom = ElementGeometry(geom)
    W = _edge_integrals(geom)
    # G[a, b] = |K|^-1 sum_e (int_e v_a) n_b
    G = np.einsum("eaj,eb->abj", W, geom.normals) / geom.area
    P = np.zeros((N_P1, geom.ndof))
    bnd_mean = W.sum(axis=0) / geom.perimeter
    xi_mid = geom.xi(geom.local_midpoints, local=True)
    mean_xi = geom.lengths @ xi_mid / geom.perimeter
    for a in range(2):
        P[3 * a + 1] = geom.h * G[a, 0]
        P[3 * a + 2] = geom.h * G[a, 1]
        P[3 * a] = bnd_mean[a] - mean_xi[0] * P[3 * a + 1] - mean_xi[1] * P[3 * a + 2]
    if not np.all(np.isfinite(P)):
        raise SingularProjector("non-finite energy projection")
    return P


def _grad_p2(geom):
    """Gradients of h*(xi, eta, xi^2, xi*eta, eta^2) in the [P1]^2 basis: (6, 5)."""
    Gq = np.zeros((N_P1, 5))
    Gq[0, 0] = 1.0  # grad(h xi) = (1, 0)
    Gq[3, 1] = 1.0  # grad(h eta) = (0, 1)
    Gq[1, 2] = 2.0  # grad(h xi^2) = (2 xi, 0)
    Gq[2, 3] = 1.0  # grad(h xi eta) = (eta, xi)
    Gq[4, 3] = 1.0
    Gq[5, 4] = 2.0  # grad(h eta^2) = (0, 2 eta)
    return Gq


def _p2_values(geom, pts):
    xi = geom.xi(pts, local=True)
    return geom.h * np.column_stack([xi[:, 0], xi[:, 1], xi[:, 0] ** 2, xi[:, 0] * xi[:, 1], xi[:, 1] ** 2])


def projector_l2(geom, PiNabla, quad=None):
    """L2 projection onto [P1]^2 as a (6, 3 nv) coefficient matrix.

    Each test field is split as grad q + c g with q in P2 and g spanning the
    L2-orthogonal complement of grad P2 in [P1]^2. The gradient part is
    integrated by parts (constant divergence plus a boundary term); the
    complement part is taken from the energy projection. A supplied ``quad``
    must live in the element frame (``geom.local``).
    """
    if not isinstance(geom, ElementGeometry):
        geom = ElementGeometry(geom)
    if quad is None:
        quad = polygon_quadrature(geom.local, 4, geom.local_centroid)
    phi = p1_basis(geom, quad.points, local=True)
    H0 = np.einsum("q,qak,qal->kl", quad.weights, phi, phi)
    Gq = _grad_p2(geom)
    g = sla.null_space(Gq.T @ H0)
    if g.shape[1] != 1:
        raise SingularProjector("complement of grad P2 is not one-dimensional")
    T = np.column_stack([Gq, g])
    try:
        Z = np.linalg.solve(T, np.eye(N_P1))
    except np.linalg.LinAlgError as exc:
        raise SingularProjector(str(exc)) from exc

    nv = geom.nv
    R = np.zeros((N_P1, geom.ndof))
    int_q = quad.weights @ _p2_values(geom, quad.points)
    div_row = np.zeros(geom.ndof)
    div_row[2 * nv :] = geom.lengths / geom.area
    R[:5] = -np.outer(int_q, div_row)
    for i in range(nv):
        j = (i + 1) % nv
        rule, s = edge_quadrature(geom.local[i], geom.local[j], 4)
        E = edge_trace_matrix(geom, i, s)
        vn = np.einsum("a,qaj->qj", geom.normals[i], E)
        R[:5] += np.einsum("q,qk,qj->kj", rule.weights, _p2_values(geom, rule.points), vn)
    R[5] = g[:, 0] @ H0 @ PiNabla
    try:
        P0 = np.linalg.solve(H0, Z.T @ R)
    except np.linalg.LinAlgError as exc:
        raise SingularProjector(str(exc)) from exc
    return P0


@dataclass(frozen=True)
class LocalElementMatrices:
    """Local matrices, rows = test DOF, columns = trial DOF."""

    PiNabla: np.ndarray
    PiZero: np.ndarray
    Astiff: np.ndarray
    Sstab: np.ndarray
    Aconv: np.ndarray
    Mmass: np.ndarray
    Brow: np.ndarray
    D: np.ndarray


def local_forms(vertices, params: PhysicalParams, quad_degree=4):
    geom = vertices if isinstance(vertices, ElementGeometry) else ElementGeometry(vertices)
    quad = polygon_quadrature(geom.local, quad_degree, geom.local_centroid)
    PiN = projector_nabla(geom)
    Pi0 = projector_l2(geom, PiN, quad)
    D = p1_dofs(geom)

    grad = p1_gradients(geom)
    Hs = geom.area * np.einsum("abk,abl->kl", grad, grad)
    consistent = params.nu * PiN.T @ Hs @ PiN
    consistent = 0.5 * (consistent + consistent.T)
    I_DP = np.eye(geom.ndof) - D @ PiN
    Sraw = I_DP.T @ I_DP
    Sraw = 0.5 * (Sraw + Sraw.T)
    S = params.stab_scale * Sraw
    Astiff = consistent + S

    phi = p1_basis(geom, quad.points, local=True)
    H0 = np.einsum("q,qak,qal->kl", quad.weights, phi, phi)
    M = Pi0.T @ H0 @ Pi0
    M = 0.5 * (M + M.T)  # exact symmetry keeps the dual pencil an exact transpose

    # trial gradient Pi^0_0 grad w = grad Pi^nabla w (constant), applied to beta
    Gw = np.einsum("abk,kj->abj", grad, PiN)
    beta = params.beta_at(quad.points + geom.origin)
    Pv = np.einsum("qak,kj->qaj", phi, Pi0)
    conv = np.einsum("abj,qb->qaj", Gw, beta)
    C = np.einsum("q,qai,qaj->ij", quad.weights, Pv, conv)
    Aconv = 0.5 * (C - C.T)

    Brow = np.zeros((1, geom.ndof))
    Brow[0, 2 * geom.nv :] = geom.lengths
    return LocalElementMatrices(PiN, Pi0, Astiff, S, Aconv, M, Brow, D)
