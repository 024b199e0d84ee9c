import numpy as np
import pytest
import scipy.io
import scipy.sparse as sp

from oseen_vem.assembly import GlobalDofMap, ProblemConfig, assemble, export_matrices, infsup_diagnostic
from oseen_vem.errors import TooCoarse
from oseen_vem.mesh import EdgeTag, generate_mesh
from oseen_vem.vem_local import PhysicalParams


@pytest.fixture(scope="module")
def mesh8():
    return generate_mesh("distorted", 8)


def test_dof_counts_4x4():
    mesh = generate_mesh("distorted", 4)
    dm = GlobalDofMap.build(mesh)
    assert dm.n_u == 2 * 25 + 40
    system = assemble(mesh)
    # 9 interior vertices, 24 interior edges
    assert system.n_u == 2 * 9 + 24
    assert system.n_p == 16
    assert system.mean_constraint


def test_single_cell_is_too_coarse():
    with pytest.raises(TooCoarse):
        assemble(generate_mesh("distorted", 1))


def test_dirichlet_mask_matches_tags(mesh8):
    dm = GlobalDofMap.build(mesh8)
    bnd = mesh8.boundary_edges
    verts = np.unique(mesh8.edges[bnd])
    expected = np.zeros(dm.n_u, dtype=bool)
    expected[2 * verts] = expected[2 * verts + 1] = True
    expected[2 * mesh8.n_vertices + bnd] = True
    assert np.array_equal(dm.dirichlet, expected)
    for idx in dm.local_to_global:
        assert len(np.unique(idx)) == len(idx)


def test_neumann_edges_stay_free(mesh8):
    rule = lambda mid: EdgeTag.NEUMANN if mid[0] > 0.999 else EdgeTag.DIRICHLET  # noqa: E731
    system = assemble(mesh8, ProblemConfig(bc=rule))
    assert not system.mean_constraint
    full = assemble(mesh8)
    assert system.n_u > full.n_u


def test_dual_pencil_is_conjugate_transpose(mesh8):
    params = PhysicalParams(beta=(1.0, 0.5))
    K, Mt = assemble(mesh8, ProblemConfig(params)).pencil()
    Kd, Mtd = assemble(mesh8, ProblemConfig(params, dual=True)).pencil()
    assert abs(Kd - K.T.conj()).max() == 0.0
    assert abs(Mtd - Mt.T.conj()).max() == 0.0


def test_flux_of_constants_vanishes():
    # on polygons away from the boundary every DOF is free, and a constant field has no flux
    mesh = generate_mesh("voronoi", 6)
    system = assemble(mesh)
    nV = mesh.n_vertices
    t = mesh.vertices[mesh.edges[:, 1]] - mesh.vertices[mesh.edges[:, 0]]
    # global edge normal is the right-hand normal of edges[e,0] -> edges[e,1]
    normal = np.column_stack([t[:, 1], -t[:, 0]]) / np.hypot(t[:, 0], t[:, 1])[:, None]
    interior = [k for k, idx in enumerate(system.dofmap.local_to_global) if not system.dofmap.dirichlet[idx].any()]
    assert len(interior) > 5
    for c in ((1.0, 0.0), (0.0, 1.0), (0.3, -2.0)):
        u = np.zeros(system.dofmap.n_u)
        u[0 : 2 * nV : 2], u[1 : 2 * nV : 2] = c
        u[2 * nV :] = normal @ np.array(c)
        flux = system.B @ u[system.free]
        assert np.abs(flux[interior]).max() < 1e-13


def test_linearity_in_viscosity(mesh8):
    a = assemble(mesh8, ProblemConfig(PhysicalParams(nu=0.7)))
    b = assemble(mesh8, ProblemConfig(PhysicalParams(nu=2.3)))
    unit = assemble(mesh8, ProblemConfig(PhysicalParams(nu=1.0)))
    diff = (b.A - a.A) - 1.6 * unit.stiffness
    assert abs(diff).max() < 1e-12 * abs(unit.stiffness).max()


@pytest.mark.parametrize("family", ["distorted", "voronoi", "trapezoidal", "midpoint-quads", "midpoint-triangles"])
@pytest.mark.parametrize("alphaE", [1 / 32, 1.0, 32.0])
def test_coercivity(family, alphaE):
    mesh = generate_mesh(family, 6)
    system = assemble(mesh, ProblemConfig(PhysicalParams(alphaE=alphaE)))
    A = system.A.toarray()
    herm = 0.5 * (A + A.conj().T)
    assert np.linalg.eigvalsh(herm).min() > 0
    Mm = system.M.toarray()
    assert np.abs(Mm - Mm.T).max() < 1e-14
    assert np.linalg.eigvalsh(Mm).min() > -1e-14


def test_convection_skew_part_only(mesh8):
    system = assemble(mesh8, ProblemConfig(PhysicalParams(beta=(1.0, 0.0))))
    skew = system.A - system.stiffness
    assert abs(skew + skew.T).max() < 1e-14


def test_infsup_positive_and_bounded():
    vals = [infsup_diagnostic(assemble(generate_mesh("distorted", n))) for n in (8, 16, 32)]
    assert min(vals) > 0
    assert (max(vals) - min(vals)) / max(vals) < 0.5


def test_infsup_error_without_free_dofs():
    with pytest.raises(TooCoarse):
        infsup_diagnostic(assemble(generate_mesh("distorted", 1)))


def test_export_matrices(tmp_path, mesh8):
    system = assemble(mesh8)
    paths = export_matrices(system, str(tmp_path / "sys"))
    for name, X in (("A", system.A), ("B", system.B), ("M", system.M)):
        Y = sp.csr_matrix(scipy.io.mmread(paths[name]))
        assert Y.shape == X.shape
        assert abs(Y - X).max() < 1e-14
