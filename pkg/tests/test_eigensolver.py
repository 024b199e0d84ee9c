import numpy as np
import pytest
import scipy.sparse as sp

from oseen_vem.assembly import ProblemConfig, assemble
from oseen_vem.eigensolver import EigenRequest, Mode, Solver, cross_validate, match_eigenvalues, solve_gevp
from oseen_vem.errors import DimensionTooLarge
from oseen_vem.mesh import generate_mesh
from oseen_vem.study import mixed_problem
from oseen_vem.vem_local import PhysicalParams

STOKES_SQUARE = 52.3447 / 4  # unit-square Dirichlet Stokes value rescaled to (-1,1)^2


@pytest.fixture(scope="module")
def oseen8():
    return assemble(generate_mesh("distorted", 8), ProblemConfig(PhysicalParams(beta=(1.0, 0.0))))


@pytest.fixture(scope="module")
def mixed8():
    # with unit convection the leading mixed spectrum is real; |beta| = 10 gives conjugate pairs
    mesh = generate_mesh("midpoint-triangles", 8, "square01")
    return assemble(mesh, mixed_problem(PhysicalParams(beta=(10.0, 0.0))))


class TinySystem:
    """Duck-typed 2x2 pencil diag(2, 5) x = lambda I x with no pressure."""

    n_u, n_p, dim = 2, 0, 2
    M = sp.identity(2, format="csr")
    stiffness = stabilization = sp.csr_matrix(np.diag([2.0, 5.0]))
    B = sp.csr_matrix((0, 2))

    def pencil(self):
        return sp.csc_matrix(np.diag([2.0, 5.0])), sp.identity(2, format="csc")


def test_stokes_first_eigenvalue_n32():
    system = assemble(generate_mesh("distorted", 32), ProblemConfig(PhysicalParams(beta=(0.0, 0.0))))
    sol = solve_gevp(system, EigenRequest(k=1))
    assert abs(sol.values[0] - STOKES_SQUARE) / STOKES_SQUARE < 0.02


def test_diagnostics(oseen8):
    sol = solve_gevp(oseen8, EigenRequest(k=6))
    assert len(sol) == 6
    assert np.all(sol.residual <= 1e-8)
    assert np.all(sol.divergence <= 1e-8)
    assert np.all(np.diff(np.abs(sol.values)) >= -1e-12)
    assert np.all((sol.stab_fraction >= 0) & (sol.stab_fraction <= 1))
    assert sol.velocity.shape == (oseen8.n_u, 6) and sol.pressure.shape == (oseen8.n_p, 6)


def test_dual_spectrum_is_conjugate(oseen8):
    mesh = oseen8.mesh
    dual = assemble(mesh, ProblemConfig(oseen8.config.params, dual=True))
    # a complex shift makes the comparison sensitive to the conjugation
    primal = solve_gevp(oseen8, EigenRequest(k=6, shift=1.0 + 0.5j))
    adj = solve_gevp(dual, EigenRequest(k=6, shift=1.0 - 0.5j))
    for _, _, d in match_eigenvalues(primal.values, np.conj(adj.values)):
        assert d <= 1e-9 * abs(primal.values).max()


def test_dual_mode_request(oseen8):
    primal = solve_gevp(oseen8, EigenRequest(k=4))
    dual = solve_gevp(oseen8, EigenRequest(k=4, mode=Mode.Dual))
    assert np.abs(np.sort_complex(primal.values) - np.sort_complex(np.conj(dual.values))).max() < 1e-9


def test_stokes_spectrum_is_real():
    system = assemble(generate_mesh("voronoi", 8), ProblemConfig(PhysicalParams(beta=(0.0, 0.0))))
    sol = solve_gevp(system, EigenRequest(k=6))
    assert np.abs(sol.values.imag).max() <= 1e-9


def test_shift_independence(oseen8):
    a = solve_gevp(oseen8, EigenRequest(k=4, shift=1.0)).values
    b = solve_gevp(oseen8, EigenRequest(k=4, shift=-3.0, extra=6)).values
    assert np.abs(a - b).max() <= 1e-8


def test_cross_validate_stokes_n8():
    system = assemble(generate_mesh("distorted", 8), ProblemConfig(PhysicalParams(beta=(0.0, 0.0))))
    assert cross_validate(system, k=4) <= 1e-8


def test_cross_validate_mixed_complex_pairs(mixed8):
    si = solve_gevp(mixed8, EigenRequest(k=10, shift=0.5))
    assert si.is_complex.any()
    qz = solve_gevp(mixed8, EigenRequest(k=12, solver=Solver.DenseQZ))
    for _, _, d in match_eigenvalues(si.values, qz.values):
        assert d <= 1e-8
    z = si.values[si.is_complex]
    assert np.abs(np.sort_complex(z) - np.sort_complex(np.conj(z))).max() <= 1e-8
    assert cross_validate(mixed8, k=10, shift=0.5) <= 1e-8


def test_trivial_pencil():
    sol = solve_gevp(TinySystem(), EigenRequest(k=1, shift=0.0))
    assert np.allclose(sol.values, [2.0])
    assert cross_validate(TinySystem(), k=1, shift=0.0) == pytest.approx(0.0, abs=1e-14)


def test_dense_dimension_limit():
    system = assemble(generate_mesh("distorted", 32))
    assert system.dim > 3000
    with pytest.raises(DimensionTooLarge):
        cross_validate(system)
    with pytest.raises(DimensionTooLarge):
        solve_gevp(system, EigenRequest(solver="dense-qz"))


def test_request_validation():
    with pytest.raises(ValueError):
        EigenRequest(k=0)
    with pytest.raises(ValueError):
        EigenRequest(solver="lanczos")
