import json

import numpy as np
import pytest

from oseen_vem.errors import IllConditionedFit, OseenVEMError
from oseen_vem.study import (
    ConvergenceStudy,
    SpuriousCriteria,
    _flag,
    convergence_table,
    export_eigenfunction,
    fit_rate,
    run_convergence,
    run_spurious_sweep,
    sample_velocity,
    sweep_table,
    write_convergence_csv,
    write_json,
    write_sweep_csv,
)
from oseen_vem.vem_local import PhysicalParams


# ------------------------------------------------------------- rate fit


def test_fit_exact_quadratic():
    f = fit_rate([1, 0.5, 0.25], [3, 2.25, 2.0625])
    assert f.alpha == pytest.approx(2, abs=1e-8)
    assert f.lambda_extr == pytest.approx(2, abs=1e-8)
    assert f.C == pytest.approx(1, abs=1e-8)


def test_fit_complex_synthetic():
    h = np.array([1, 1 / 2, 1 / 4, 1 / 8])
    f = fit_rate(h, 7 + (2 + 1j) * h**1.5)
    assert abs(f.alpha - 1.5) < 1e-8
    assert abs(f.C - (2 + 1j)) < 1e-8
    assert abs(f.lambda_extr - 7) < 1e-8
    assert f.residual < 1e-8
    assert abs(f.predict(0.1) - (7 + (2 + 1j) * 0.1**1.5)) < 1e-8


def test_fit_small_h_synthetic():
    h = np.array([0.125, 0.0625, 0.03125, 0.015625])
    f = fit_rate(h, 5 + 3 * h**2)
    assert abs(f.alpha - 2) < 1e-8
    assert abs(f.lambda_extr - 5) < 1e-8
    assert abs(f.C - 3) < 1e-6


@pytest.mark.parametrize("seed", range(20))
def test_fit_noisy(seed):
    rng = np.random.default_rng(seed)
    h = np.array([1 / 8, 1 / 16, 1 / 32, 1 / 64])
    lam = 13.6 + 40 * h**2
    lam = lam + 1e-6 * rng.standard_normal(4)
    assert abs(fit_rate(h, lam).alpha - 2) < 0.05


def test_fit_alpha_stays_in_range():
    h = np.array([1, 0.5, 0.25, 0.125])
    f = fit_rate(h, 1 + h**6)
    assert 0.25 <= f.alpha <= 4


def test_fit_errors():
    with pytest.raises(ValueError):
        fit_rate([1, 0.5], [1, 2])
    with pytest.raises(ValueError):
        fit_rate([1, 1, 0.5], [1, 2, 3])
    with pytest.raises(ValueError):
        fit_rate([1, -0.5, 0.25], [1, 2, 3])
    with pytest.raises(IllConditionedFit):
        fit_rate([1.0, 1.0 + 1e-9, 1.0 + 2e-9], [1.0, 2.0, 3.0])


# ------------------------------------------------------------- convergence


@pytest.fixture(scope="module")
def small_study():
    return run_convergence("distorted", [16, 24, 32], PhysicalParams(), k=4)


def test_study_shape(small_study):
    st = small_study
    assert isinstance(st, ConvergenceStudy)
    assert np.all(np.diff(st.hs) < 0)
    assert st.branches.shape == (3, 4)
    assert len(st.fits) == 4
    header, rows = convergence_table(st)
    assert header == ["lambda_hi", "N=16", "N=24", "N=32", "Order", "Exact"]
    assert len(rows) == 4


def test_tracking_continuity(small_study):
    assert small_study.overlaps.min() > 0.8


def test_study_report_roundtrip(small_study, tmp_path):
    path = write_json(small_study, tmp_path / "s.json", meta={"seed": 0})
    doc = json.loads(open(path).read())
    assert doc["meta"]["seed"] == 0
    assert len(doc["levels"]) == 3 and len(doc["fits"]) == 4
    assert np.allclose([complex(*z) for z in doc["branches"][2]], small_study.branches[2])
    csv_path = write_convergence_csv(small_study, tmp_path / "s.csv")
    assert open(csv_path).read().splitlines()[0].startswith("lambda_hi,N=16")


def test_study_rejects_few_levels():
    with pytest.raises(ValueError):
        run_convergence("distorted", [8, 16], PhysicalParams())


def test_study_error_carries_level():
    with pytest.raises(OseenVEMError) as info:
        run_convergence("distorted", [1, 2, 4], PhysicalParams())
    assert info.value.level == 1


def test_sample_velocity_at_centroids(small_study):
    # at its own centroid a polygon's projected field is its constant coefficient
    lv = small_study.levels[0]
    u = lv.solution.velocity[:, 0]
    coef = lv.system.element_coefficients(u)
    vals = sample_velocity(lv.system, u, lv.system.mesh.centroids)
    assert np.allclose(vals[:, 0], coef[:, 0], atol=1e-13)
    assert np.allclose(vals[:, 1], coef[:, 3], atol=1e-13)


# ------------------------------------------------------------- spurious sweep


def test_flag_rule():
    crit = SpuriousCriteria()
    values = np.array([10.0, 20.0, 30.0])
    low = np.array([0.1, 0.1, 0.1])
    flags, moved = _flag(values, np.array([0.1, 0.7, 0.1]), None, crit)
    assert flags.tolist() == [False, True, False] and moved is None
    # the others are calm (< 2%) and the third jumps by 33%
    flags, moved = _flag(values, low, np.array([10.1, 20.1, 45.0, 60.0]), crit)
    assert flags.tolist() == [False, False, True]
    assert moved == pytest.approx([0.01, 0.005, 0.33])
    # a 10% move elsewhere means the refinement is not resolved: no refinement flags
    flags, _ = _flag(values, low, np.array([11.0, 20.1, 45.0]), crit)
    assert flags.tolist() == [False, False, False]
    # exactly at the jump threshold is not a jump
    flags, _ = _flag(values, low, np.array([10.1, 20.1, 36.0]), crit)
    assert flags.tolist() == [False, False, False]
    off = SpuriousCriteria(tau=0.5, refinement=False)
    assert _flag(values, low, None, off)[0].tolist() == [False, False, False]


@pytest.fixture(scope="module")
def sweep():
    return run_spurious_sweep("midpoint-quads", 4, [1 / 32, 1, 32], k=6, criteria=SpuriousCriteria(refinement=False))


def test_sweep_is_deterministic(sweep):
    again = run_spurious_sweep("midpoint-quads", 4, [1 / 32, 1, 32], k=6, criteria=SpuriousCriteria(refinement=False))
    assert again.counts == sweep.counts
    for p, q in zip(sweep.points, again.points):
        assert np.array_equal(p.values, q.values) and np.array_equal(p.flags, q.flags)


def test_sweep_output(sweep, tmp_path):
    header, rows = sweep_table(sweep)
    assert header == ["alphaE=0.03125", "alphaE=1", "alphaE=32"]
    assert len(rows) == 6
    flagged = sum(cell.startswith("[") for row in rows for cell in row)
    assert flagged == sum(sweep.counts)
    write_sweep_csv(sweep, tmp_path / "w.csv")
    doc = json.loads(open(write_json(sweep, tmp_path / "w.json")).read())
    assert [p["alphaE"] for p in doc["points"]] == [1 / 32, 1, 32]


def test_sweep_rejects_empty():
    with pytest.raises(ValueError):
        run_spurious_sweep("midpoint-quads", 4, [])


def test_dirichlet_square_has_no_flags_at_unit_stabilization():
    crit = SpuriousCriteria(refinement=False)
    sw = run_spurious_sweep("distorted", 16, [1.0], k=4, criteria=crit, neumann_sides=(), domain="square", shift=1.0)
    assert sw.counts == [0]
    assert sw.points[0].rho.max() < crit.tau


# ------------------------------------------------------------- field export


def _read_vtk(path):
    lines = open(path).read().splitlines()
    out = {}
    i = 0
    while i < len(lines):
        tok = lines[i].split()
        if tok and tok[0] in ("POINTS", "POLYGONS", "POINT_DATA", "CELL_DATA"):
            out[tok[0]] = (i, int(tok[1]))
        if tok[:2] == ["SCALARS", "pressure"]:
            out["pressure"] = i + 2
        if tok[:2] == ["SCALARS", "magnitude"]:
            out["magnitude"] = i + 2
        if tok[:2] == ["VECTORS", "velocity"]:
            out["velocity"] = i + 1
        i += 1
    return lines, out


def test_export_eigenfunction(tmp_path):
    st = run_convergence("distorted", [8, 16, 32], PhysicalParams(), k=1, extra=2)
    lv = st.levels[-1]
    mesh = lv.system.mesh
    path = export_eigenfunction(lv.solution, 0, lv.system, tmp_path / "e.vtk")
    lines, idx = _read_vtk(path)
    assert lines[0] == "# vtk DataFile Version 2.0"
    assert idx["POINTS"][1] == mesh.n_vertices
    assert idx["POLYGONS"][1] == mesh.n_polygons
    assert idx["POINT_DATA"][1] == mesh.n_vertices
    assert idx["CELL_DATA"][1] == mesh.n_polygons
    p = np.array([float(x) for x in lines[idx["pressure"] : idx["pressure"] + mesh.n_polygons]])
    mag = np.array([float(x) for x in lines[idx["magnitude"] : idx["magnitude"] + mesh.n_vertices]])
    vel = np.array([list(map(float, x.split())) for x in lines[idx["velocity"] : idx["velocity"] + mesh.n_vertices]])
    assert len(p) == mesh.n_polygons and len(vel) == mesh.n_vertices
    assert abs(mesh.areas @ p) / mesh.areas.sum() < 1e-10
    assert mag.min() >= 0
    assert np.all(mag >= np.hypot(vel[:, 0], vel[:, 1]) - 1e-12)
    with pytest.raises(IndexError):
        export_eigenfunction(lv.solution, 5, lv.system, tmp_path / "x.vtk")
