"""Refinement studies, order extrapolation, stabilization sweeps and reports."""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment, minimize_scalar
from scipy.spatial import cKDTree

from .assembly import GlobalSystem, ProblemConfig, assemble
from .eigensolver import EigenRequest, EigenSolution, solve_gevp
from .errors import IllConditionedFit, OseenVEMError
from .mesh import DOMAINS, EdgeTag, PolygonalMesh, generate_mesh, side_rule
from .vem_local import PhysicalParams

__all__ = [
    "RateFit",
    "fit_rate",
    "Level",
    "ConvergenceStudy",
    "run_convergence",
    "track_branches",
    "SweepPoint",
    "SpuriousSweep",
    "SpuriousCriteria",
    "run_spurious_sweep",
    "sample_velocity",
    "export_eigenfunction",
    "write_convergence_csv",
    "write_sweep_csv",
    "write_json",
]

ALPHA_MIN, ALPHA_MAX, ALPHA_STEP = 0.25, 4.0, 0.01

# the mixed problem: Dirichlet on the inflow side x = 0 only
MIXED_NEUMANN_SIDES = ("top", "bottom", "right")


# ---------------------------------------------------------------- rate fit


@dataclass(frozen=True)
class RateFit:
    """lambda_h ~ lambda_extr + C h^alpha."""

    lambda_extr: complex
    C: complex
    alpha: float
    residual: float

    def predict(self, h):
        return self.lambda_extr + self.C * np.asarray(h, dtype=float) ** self.alpha


def _inner_fit(h, lam, alpha):
    X = np.column_stack([np.ones_like(h), h**alpha]).astype(complex)
    coef, *_ = np.linalg.lstsq(X, lam, rcond=None)
    r = lam - X @ coef
    return coef, float(np.real(np.vdot(r, r)))


def fit_rate(hs: Sequence[float], lambdas: Sequence[complex], cond_limit: float = 1e14) -> RateFit:
    """Least-squares fit of the extrapolation model.

    Outer search over alpha on a 0.01 grid in [0.25, 4] followed by a bounded
    scalar refinement around the best grid point; the inner problem in
    (lambda_extr, C) is linear.
    """
    h = np.asarray(hs, dtype=float)
    lam = np.asarray(lambdas, dtype=complex)
    if h.ndim != 1 or len(h) < 3 or len(h) != len(lam):
        raise ValueError("fit_rate needs at least 3 (h, lambda) samples")
    if np.any(h <= 0) or len(np.unique(h)) != len(h):
        raise ValueError("mesh sizes must be distinct and positive")

    grid = np.linspace(ALPHA_MIN, ALPHA_MAX, int(round((ALPHA_MAX - ALPHA_MIN) / ALPHA_STEP)) + 1)
    obj = np.array([_inner_fit(h, lam, a)[1] for a in grid])
    i = int(np.argmin(obj))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, len(grid) - 1)]
    res = minimize_scalar(lambda a: _inner_fit(h, lam, a)[1], bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-13})
    alpha = float(res.x) if res.fun <= obj[i] else float(grid[i])

    X = np.column_stack([np.ones_like(h), h**alpha])
    if np.linalg.cond(X.T @ X) > cond_limit:
        raise IllConditionedFit(f"normal matrix singular at alpha={alpha:.3f}")
    coef, ss = _inner_fit(h, lam, alpha)
    return RateFit(complex(coef[0]), complex(coef[1]), alpha, float(np.sqrt(ss)))


# ---------------------------------------------------------------- fields


def sample_velocity(system: GlobalSystem, u, points):
    """Evaluate the projected velocity at points via the nearest polygon centroid.

    Returns (m, 2, ...) values; u is one free-DOF vector or (n_u, k).
    """
    mesh = system.mesh
    coef = system.element_coefficients(u)
    pts = np.atleast_2d(points)
    _, owner = cKDTree(mesh.centroids).query(pts)
    xi = (pts - mesh.centroids[owner]) / mesh.diameters[owner][:, None]
    c = coef[owner]
    vx = c[:, 0] + c[:, 1] * _bc(xi[:, 0], c) + c[:, 2] * _bc(xi[:, 1], c)
    vy = c[:, 3] + c[:, 4] * _bc(xi[:, 0], c) + c[:, 5] * _bc(xi[:, 1], c)
    return np.stack([vx, vy], axis=1)


def _bc(x, like):
    return x.reshape((-1,) + (1,) * (like.ndim - 2))


def _probe_points(mesh: PolygonalMesh, m=24):
    lo_x, hi_x, lo_y, hi_y = mesh.domain.bounds
    t = (np.arange(m) + 0.5) / m
    X, Y = np.meshgrid(lo_x + t * (hi_x - lo_x), lo_y + t * (hi_y - lo_y), indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    return pts[mesh.domain.contains(pts)]


def _overlap_matrix(sys_a, Ua, sys_b, Ub, pts):
    fa = sample_velocity(sys_a, Ua, pts).reshape(-1, Ua.shape[1])
    fb = sample_velocity(sys_b, Ub, pts).reshape(-1, Ub.shape[1])
    fa = fa / np.linalg.norm(fa, axis=0)
    fb = fb / np.linalg.norm(fb, axis=0)
    return np.abs(fa.conj().T @ fb)


# ---------------------------------------------------------------- convergence


@dataclass
class Level:
    n: int
    h: float
    values: np.ndarray
    solution: EigenSolution = field(repr=False)
    system: GlobalSystem = field(repr=False)
    seconds: float = 0.0


@dataclass
class ConvergenceStudy:
    family: str
    ns: list
    params: PhysicalParams
    k: int
    levels: list
    branches: np.ndarray  # (n_levels, k) tracked eigenvalues
    overlaps: np.ndarray  # (n_levels - 1, k) eigenvector continuity between levels
    fits: list
    domain: str = "square"
    seed: int = 0

    @property
    def hs(self):
        return np.array([lv.h for lv in self.levels])

    @property
    def orders(self):
        return np.array([f.alpha if f is not None else np.nan for f in self.fits])

    @property
    def extrapolated(self):
        return np.array([f.lambda_extr if f is not None else np.nan for f in self.fits])

    def to_dict(self):
        return {
            "family": self.family,
            "domain": self.domain,
            "seed": self.seed,
            "ns": list(self.ns),
            "k": self.k,
            "params": _params_dict(self.params),
            "levels": [
                {"n": lv.n, "h": lv.h, "eigenvalues": _cpx(lv.values), "seconds": lv.seconds,
                 "residual": lv.solution.residual.tolist(), "divergence": lv.solution.divergence.tolist()}
                for lv in self.levels
            ],
            "branches": [_cpx(row) for row in self.branches],
            "overlaps": self.overlaps.tolist(),
            "fits": [None if f is None else {"lambda_extr": _cpx([f.lambda_extr])[0], "C": _cpx([f.C])[0],
                                          "alpha": f.alpha, "residual": f.residual} for f in self.fits],
        }


def _cpx(values):
    return [[float(np.real(v)), float(np.imag(v))] for v in values]


def _params_dict(params):
    d = asdict(params)
    if callable(params.beta):
        d["beta"] = repr(params.beta)
    else:
        d["beta"] = list(params.beta)
    return d


def track_branches(levels, k, tie_tol=1e-3):
    """Follow the k lowest branches of the first level through the others.

    Assignment minimises relative eigenvalue distance; candidates whose
    distances are within ``tie_tol`` are separated by eigenvector overlap.
    """
    pts = _probe_points(levels[-1].system.mesh)
    branches = np.empty((len(levels), k), dtype=complex)
    overlaps = np.empty((len(levels) - 1, k))
    current = np.arange(k)
    branches[0] = levels[0].values[:k]
    for l in range(1, len(levels)):
        prev, cur = levels[l - 1], levels[l]
        lam_prev = prev.values[current]
        d = np.abs(lam_prev[:, None] - cur.values[None, :]) / np.abs(lam_prev)[:, None]
        ov = _overlap_matrix(prev.system, prev.solution.velocity[:, current], cur.system, cur.solution.velocity, pts)
        _, col = linear_sum_assignment(d + tie_tol * (1.0 - ov))
        branches[l] = cur.values[col]
        overlaps[l - 1] = ov[np.arange(k), col]
        current = col
    return branches, overlaps


def _solve_level(mesh, config, request):
    t0 = time.perf_counter()
    system = assemble(mesh, config)
    sol = solve_gevp(system, request)
    return system, sol, time.perf_counter() - t0


def _map(fn, items, threads):
    if threads is None or threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def run_convergence(
    family,
    ns: Sequence[int],
    params: PhysicalParams = None,
    k: int = 4,
    domain: str = "square",
    bc=None,
    shift: complex = 1.0,
    extra: int = 2,
    threads: Optional[int] = None,
    seed: int = 0,
) -> ConvergenceStudy:
    """Solve each refinement level, track k branches and fit their orders.

    Solver errors propagate with the failing refinement stored as ``exc.level``.

    ``extra`` additional eigenvalues are computed per level so that a branch
    can be matched even if ordering changes between levels.
    """
    ns = [int(n) for n in ns]
    if len(ns) < 3:
        raise ValueError("a convergence study needs at least 3 levels")
    params = params or PhysicalParams()
    config = ProblemConfig(params, bc)
    request = EigenRequest(k=k + extra, shift=shift)
    meshes = [generate_mesh(_family(family, seed), n, domain) for n in ns]

    def one(i):
        try:
            return _solve_level(meshes[i], config, request)
        except OseenVEMError as exc:
            exc.level = ns[i]
            raise

    results = _map(one, list(range(len(ns))), threads)
    levels = [Level(n, float(m.h), sol.values, sol, system, dt) for n, m, (system, sol, dt) in zip(ns, meshes, results)]
    hs = [lv.h for lv in levels]
    if np.any(np.diff(hs) >= 0):
        raise ValueError("mesh size must decrease strictly across levels")
    branches, overlaps = track_branches(levels, k)
    fits = []
    for j in range(k):
        try:
            fits.append(fit_rate(hs, branches[:, j]))
        except IllConditionedFit:
            fits.append(None)
    return ConvergenceStudy(_tag(family), ns, params, k, levels, branches, overlaps, fits, domain, seed)


def _family(family, seed):
    from .mesh import MeshFamily

    if isinstance(family, MeshFamily):
        return replace(family, seed=seed) if seed != family.seed else family
    return MeshFamily(family, seed=seed)


def _tag(family):
    return getattr(getattr(family, "tag", family), "value", str(family))


# ---------------------------------------------------------------- spurious sweep


@dataclass(frozen=True)
class SpuriousCriteria:
    """Automatable flags for stabilization-induced modes.

    A pair is flagged when its stabilization energy fraction exceeds ``tau``,
    or (with ``refinement``) when it moves by more than ``jump`` under one
    uniform refinement while every unflagged pair moves by less than ``calm``.
    """

    tau: float = 0.5
    refinement: bool = True
    jump: float = 0.20
    calm: float = 0.02


@dataclass
class SweepPoint:
    alphaE: float
    values: np.ndarray
    rho: np.ndarray
    flags: np.ndarray
    moved: Optional[np.ndarray] = None
    seconds: float = 0.0

    @property
    def n_flags(self):
        return int(self.flags.sum())


@dataclass
class SpuriousSweep:
    family: str
    n: int
    alphaE: list
    points: list
    criteria: SpuriousCriteria
    k: int
    neumann_sides: tuple = MIXED_NEUMANN_SIDES
    seed: int = 0

    @property
    def counts(self):
        return [p.n_flags for p in self.points]

    def to_dict(self):
        return {
            "family": self.family,
            "n": self.n,
            "k": self.k,
            "seed": self.seed,
            "neumann_sides": list(self.neumann_sides),
            "criteria": asdict(self.criteria),
            "points": [
                {"alphaE": p.alphaE, "eigenvalues": _cpx(p.values), "rho": p.rho.tolist(),
                 "flags": p.flags.astype(bool).tolist(),
                 "moved": None if p.moved is None else p.moved.tolist(), "seconds": p.seconds}
                for p in self.points
            ],
        }


def mixed_problem(params: PhysicalParams, neumann_sides=MIXED_NEUMANN_SIDES, domain="square01"):
    return ProblemConfig(params, side_rule(list(neumann_sides), DOMAINS[domain]))


def _flag(values, rho, refined_values, criteria):
    flags = rho > criteria.tau
    moved = None
    if refined_values is not None:
        d = np.abs(values[:, None] - refined_values[None, :]) / np.abs(values)[:, None]
        moved = d.min(axis=1)
        # the reference set: pairs neither flagged by rho nor jumping themselves
        calm = ~flags & (moved <= criteria.jump)
        if calm.any() and moved[calm].max() < criteria.calm:
            flags = flags | (moved > criteria.jump)
    return flags, moved


def run_spurious_sweep(
    family,
    n: int,
    alphaE_list: Sequence[float],
    params: PhysicalParams = None,
    k: int = 10,
    criteria: SpuriousCriteria = None,
    neumann_sides=MIXED_NEUMANN_SIDES,
    domain: str = "square01",
    shift: complex = 0.5,
    threads: Optional[int] = None,
    seed: int = 0,
) -> SpuriousSweep:
    """Solve the mixed problem on (0,1)^2 for each alpha_E and flag spurious pairs."""
    alphaE_list = [float(a) for a in alphaE_list]
    if not alphaE_list:
        raise ValueError("alphaE_list must be nonempty")
    params = params or PhysicalParams(beta=(1.0, 0.0))
    criteria = criteria or SpuriousCriteria()
    fam = _family(family, seed)
    mesh = generate_mesh(fam, n, domain)
    fine = generate_mesh(fam, 2 * n, domain) if criteria.refinement else None

    def one(a):
        t0 = time.perf_counter()
        config = mixed_problem(replace(params, alphaE=a), neumann_sides, domain)
        sol = solve_gevp(assemble(mesh, config), EigenRequest(k=k, shift=shift))
        refined = None
        if fine is not None:
            refined = solve_gevp(assemble(fine, config), EigenRequest(k=k + 4, shift=shift)).values
        flags, moved = _flag(sol.values, sol.stab_fraction, refined, criteria)
        return SweepPoint(a, sol.values, sol.stab_fraction, flags, moved, time.perf_counter() - t0)

    points = _map(one, alphaE_list, threads)
    return SpuriousSweep(_tag(family), n, alphaE_list, points, criteria, k, tuple(neumann_sides), seed)


# ---------------------------------------------------------------- output


def export_eigenfunction(solution: EigenSolution, index: int, system: GlobalSystem, path):
    """Legacy VTK POLYDATA file of one eigenpair.

    Point data: projected velocity averaged over the polygons sharing a
    vertex (real part), and its magnitude. Cell data: pressure (real part).
    """
    if not 0 <= index < len(solution):
        raise IndexError(f"eigenpair index {index} out of range ({len(solution)})")
    mesh = system.mesh
    coef = system.element_coefficients(solution.velocity[:, index])
    acc = np.zeros((mesh.n_vertices, 2), dtype=complex)
    weight = np.zeros(mesh.n_vertices)
    for k, poly in enumerate(mesh.polygons):
        xi = (mesh.vertices[poly] - mesh.centroids[k]) / mesh.diameters[k]
        c = coef[k]
        acc[poly, 0] += mesh.areas[k] * (c[0] + c[1] * xi[:, 0] + c[2] * xi[:, 1])
        acc[poly, 1] += mesh.areas[k] * (c[3] + c[4] * xi[:, 0] + c[5] * xi[:, 1])
        weight[poly] += mesh.areas[k]
    vel = acc / weight[:, None]
    mag = np.linalg.norm(vel, axis=1)
    vel = vel.real
    pressure = solution.pressure[:, index].real

    n_conn = sum(len(p) + 1 for p in mesh.polygons)
    with open(path, "w") as fp:
        fp.write("# vtk DataFile Version 2.0\n")
        fp.write(f"eigenpair {index} lambda={solution.values[index]:.12g}\n")
        fp.write("ASCII\nDATASET POLYDATA\n")
        fp.write(f"POINTS {mesh.n_vertices} double\n")
        for x, y in mesh.vertices:
            fp.write(f"{x:.16e} {y:.16e} 0\n")
        fp.write(f"POLYGONS {mesh.n_polygons} {n_conn}\n")
        for poly in mesh.polygons:
            fp.write(f"{len(poly)} " + " ".join(str(int(v)) for v in poly) + "\n")
        fp.write(f"POINT_DATA {mesh.n_vertices}\n")
        fp.write("VECTORS velocity double\n")
        for vx, vy in vel:
            fp.write(f"{vx:.16e} {vy:.16e} 0\n")
        fp.write("SCALARS magnitude double 1\nLOOKUP_TABLE default\n")
        for v in mag:
            fp.write(f"{v:.16e}\n")
        fp.write(f"CELL_DATA {mesh.n_polygons}\n")
        fp.write("SCALARS pressure double 1\nLOOKUP_TABLE default\n")
        for p in pressure:
            fp.write(f"{p:.16e}\n")
    return path


def _fmt(v, digits=5):
    v = complex(v)
    if abs(v.imag) > 1e-6 * abs(v):
        return f"{v.real:.{digits}f}{v.imag:+.{digits}f}i"
    return f"{v.real:.{digits}f}"


def convergence_table(study: ConvergenceStudy):
    """Rows of lambda_hi, one column per N, then Order and Exact."""
    header = ["lambda_hi"] + [f"N={n}" for n in study.ns] + ["Order", "Exact"]
    rows = []
    for j in range(study.k):
        f = study.fits[j]
        rows.append(
            [f"lambda_h{j + 1}"]
            + [_fmt(v) for v in study.branches[:, j]]
            + (["nan", "nan"] if f is None else [f"{f.alpha:.2f}", _fmt(f.lambda_extr)])
        )
    return header, rows


def sweep_table(sweep: SpuriousSweep):
    """One column per alpha_E; spurious entries are wrapped in brackets."""
    header = [f"alphaE={a:g}" for a in sweep.alphaE]
    rows = []
    for i in range(sweep.k):
        row = []
        for p in sweep.points:
            if i >= len(p.values):
                row.append("")
                continue
            s = _fmt(p.values[i])
            row.append(f"[{s}]" if p.flags[i] else s)
        rows.append(row)
    return header, rows


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fp:
        w = csv.writer(fp)
        w.writerow(header)
        w.writerows(rows)
    return path


def write_convergence_csv(study, path):
    return _write_csv(path, *convergence_table(study))


def write_sweep_csv(sweep, path):
    return _write_csv(path, *sweep_table(sweep))


def write_json(report, path, meta=None):
    doc = report.to_dict()
    if meta:
        doc["meta"] = meta
    with open(path, "w") as fp:
        json.dump(doc, fp, indent=2)
    return path


def format_table(header, rows):
    widths = [max(len(str(x)) for x in col) for col in zip(header, *rows)]
    lines = ["  ".join(str(x).rjust(w) for x, w in zip(r, widths)) for r in [header] + rows]
    return "\n".join(lines)


def boundary_summary(mesh: PolygonalMesh):
    return {tag.name.lower(): int(np.sum(mesh.edge_tags == tag)) for tag in EdgeTag}
