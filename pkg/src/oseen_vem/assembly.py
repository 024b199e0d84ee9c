"""Global assembly of the velocity-pressure pencil."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.io import mmwrite

from .errors import AssemblyError, OseenVEMError, TooCoarse
from .mesh import EdgeTag, PolygonalMesh, tag_boundary
from .vem_local import ElementGeometry, PhysicalParams, local_forms

__all__ = ["GlobalDofMap", "GlobalSystem", "ProblemConfig", "assemble", "infsup_diagnostic", "export_matrices"]


@dataclass(frozen=True)
class GlobalDofMap:
    """Velocity DOFs: 2 per vertex (x, y interleaved), then 1 per edge.

    Global edge normals point to the right of the direction edges[e,0] -> edges[e,1];
    ``signs[k]`` flips local edge DOFs of polygon k whose outward normal is opposite.
    """

    n_vertices: int
    n_edges: int
    n_polygons: int
    local_to_global: tuple
    signs: tuple
    dirichlet: np.ndarray

    @property
    def n_u(self):
        return 2 * self.n_vertices + self.n_edges

    @property
    def n_p(self):
        return self.n_polygons

    @classmethod
    def build(cls, mesh: PolygonalMesh):
        nV = mesh.n_vertices
        l2g, signs = [], []
        for k, poly in enumerate(mesh.polygons):
            edges = mesh.polygon_edges[k]
            idx = np.empty(3 * len(poly), dtype=np.int64)
            idx[0 : 2 * len(poly) : 2] = 2 * poly
            idx[1 : 2 * len(poly) : 2] = 2 * poly + 1
            idx[2 * len(poly) :] = 2 * nV + edges
            sgn = np.ones(3 * len(poly))
            # local edge i runs poly[i] -> poly[i+1]; global orientation is low -> high
            sgn[2 * len(poly) :] = np.where(poly < np.roll(poly, -1), 1.0, -1.0)
            l2g.append(idx)
            signs.append(sgn)
        mask = np.zeros(2 * nV + mesh.n_edges, dtype=bool)
        dir_edges = np.flatnonzero(mesh.edge_tags == EdgeTag.DIRICHLET)
        dir_verts = np.unique(mesh.edges[dir_edges])
        mask[2 * dir_verts] = True
        mask[2 * dir_verts + 1] = True
        mask[2 * nV + dir_edges] = True
        return cls(nV, mesh.n_edges, mesh.n_polygons, tuple(l2g), tuple(signs), mask)


@dataclass(frozen=True)
class ProblemConfig:
    """Physics, boundary rule and primal/dual selection.

    ``bc`` is None (keep the mesh tags) or a predicate on boundary-edge
    midpoints returning an EdgeTag.
    """

    params: PhysicalParams = field(default_factory=PhysicalParams)
    bc: Optional[Callable] = None
    dual: bool = False


@dataclass(eq=False)
class GlobalSystem:
    """Matrices restricted to free velocity DOFs.

    A = stiffness (with stabilization) + skew convection; B is the (n_p, n_u)
    flux matrix (b(v, q) up to sign); M is the projected mass.
    """

    mesh: PolygonalMesh
    dofmap: GlobalDofMap
    config: ProblemConfig
    A: sp.csr_matrix
    B: sp.csr_matrix
    M: sp.csr_matrix
    stiffness: sp.csr_matrix
    stabilization: sp.csr_matrix
    meanvec: np.ndarray
    free: np.ndarray
    mean_constraint: bool
    local: list = field(default=None, repr=False)

    @property
    def n_u(self):
        return len(self.free)

    @property
    def n_p(self):
        return self.B.shape[0]

    @property
    def dim(self):
        return self.n_u + self.n_p + int(self.mean_constraint)

    def pencil(self):
        """(K, Mt) with K = [[A, B^T, 0], [B, 0, m], [0, m^T, 0]], Mt = diag(M, 0, 0).

        For the dual system the velocity block and couplings are conjugate
        transposed so that K_dual = K_primal^H entrywise.
        """
        A, B = self.A, self.B
        blocks = [[A, B.T.conj() if self.config.dual else B.T], [B.conj() if self.config.dual else B, None]]
        if self.mean_constraint:
            m = sp.csr_matrix(self.meanvec.reshape(-1, 1))
            blocks[0].append(None)
            blocks[1].append(m)
            blocks.append([None, m.T, None])
        K = sp.bmat(blocks, format="csc")
        n = K.shape[0]
        Mt = sp.block_diag([self.M, sp.csr_matrix((n - self.n_u, n - self.n_u))], format="csc")
        return K, Mt

    def expand_velocity(self, u):
        """Full-length velocity DOF vector with zeros on Dirichlet DOFs."""
        u = np.asarray(u)
        full = np.zeros((self.dofmap.n_u,) + u.shape[1:], dtype=u.dtype)
        full[self.free] = u
        return full

    def element_coefficients(self, u):
        """[P1]^2 coefficients of the L2 projection of u on every polygon, (n_polygons, 6, ...)."""
        full = self.expand_velocity(u)
        return np.stack(
            [L.PiZero @ (full[idx] * (sgn if full.ndim == 1 else sgn[:, None]))
             for L, idx, sgn in zip(self.local, self.dofmap.local_to_global, self.dofmap.signs)]
        )


def _local_matrices(mesh, params):
    out = []
    for k in range(mesh.n_polygons):
        try:
            out.append(local_forms(ElementGeometry(mesh.polygon_vertices(k)), params))
        except OseenVEMError as exc:
            raise AssemblyError(k, exc) from exc
    return out


def assemble(mesh: PolygonalMesh, config: ProblemConfig = None, local=None):
    """Scatter-add the local forms and eliminate homogeneous Dirichlet DOFs.

    ``local`` may pass precomputed local matrices (list per polygon).
    """
    config = config or ProblemConfig()
    if config.bc is not None:
        mesh = tag_boundary(mesh, config.bc)
    dm = GlobalDofMap.build(mesh)
    if local is None:
        local = _local_matrices(mesh, config.params)

    rows, cols = [], []
    vals = {"A": [], "S": [], "K": [], "M": []}
    brow, bcol, bval = [], [], []
    for k, L in enumerate(local):
        idx, sgn = dm.local_to_global[k], dm.signs[k]
        ss = np.outer(sgn, sgn)
        r = np.repeat(idx, len(idx))
        c = np.tile(idx, len(idx))
        rows.append(r)
        cols.append(c)
        vals["A"].append(((L.Astiff + L.Aconv) * ss).ravel())
        vals["K"].append((L.Astiff * ss).ravel())
        vals["S"].append((L.Sstab * ss).ravel())
        vals["M"].append((L.Mmass * ss).ravel())
        brow.append(np.full(len(idx), k))
        bcol.append(idx)
        bval.append(L.Brow[0] * sgn)
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    n = dm.n_u

    def mat(key):
        return sp.csr_matrix((np.concatenate(vals[key]), (rows, cols)), shape=(n, n))

    free = np.flatnonzero(~dm.dirichlet)
    if len(free) == 0:
        raise TooCoarse("no free velocity degrees of freedom")
    B = sp.csr_matrix((np.concatenate(bval), (np.concatenate(brow), np.concatenate(bcol))), shape=(dm.n_p, n))

    def restrict(X):
        return X[free][:, free].tocsr()

    A, Kst, S, M = (restrict(mat(key)) for key in ("A", "K", "S", "M"))
    if config.dual:
        A = A.T.conj().tocsr()
    has_neumann = np.any(mesh.edge_tags == EdgeTag.NEUMANN)
    system = GlobalSystem(
        mesh=mesh,
        dofmap=dm,
        config=config,
        A=A,
        B=B[:, free].tocsr(),
        M=M,
        stiffness=Kst,
        stabilization=S,
        meanvec=np.array(mesh.areas),
        free=free,
        mean_constraint=not has_neumann,
        local=local,
    )
    if system.n_u < system.n_p - int(system.mean_constraint):
        raise TooCoarse(f"{system.n_u} free velocity DOFs cannot balance {system.n_p} pressures")
    return system


def infsup_diagnostic(system: GlobalSystem):
    """Discrete inf-sup constant of the flux matrix.

    Smallest nonzero generalized singular value of B between the discrete
    H1 seminorm (unit-viscosity stiffness with stabilization) and the L2 norm
    of piecewise constants, on zero-mean pressures when the mean is fixed.
    """
    if system.n_u == 0:
        raise TooCoarse("no free velocity degrees of freedom")
    nu = system.config.params.nu
    H1 = (system.stiffness / nu).tocsc()
    lu = spla.splu(H1)
    Bt = system.B.T.toarray()
    X = lu.solve(Bt)
    Schur = system.B @ X
    Schur = 0.5 * (Schur + Schur.T)
    w = np.sqrt(system.meanvec)
    # symmetric scaling by the pressure mass sqrt
    Sm = Schur / np.outer(w, w)
    if system.mean_constraint:
        z = w / np.linalg.norm(w)
        Pz = np.eye(len(w)) - np.outer(z, z)
        Sm = Pz @ Sm @ Pz
        ev = np.linalg.eigvalsh(Sm)
        ev = ev[1:]  # the constant pressure mode
    else:
        ev = np.linalg.eigvalsh(Sm)
    return float(np.sqrt(max(ev.min(), 0.0)))


def export_matrices(system: GlobalSystem, prefix):
    """Write A, B, M as Matrix Market files ``<prefix>_A.mtx`` etc."""
    paths = {}
    for name, X in (("A", system.A), ("B", system.B), ("M", system.M)):
        path = f"{prefix}_{name}.mtx"
        mmwrite(path, X)
        paths[name] = path
    return paths
