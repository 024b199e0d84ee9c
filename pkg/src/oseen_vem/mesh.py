"""Polygonal meshes: the six test families, validation, boundary tags, file I/O."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import Voronoi, cKDTree

from .errors import DegenerateCell, EmptyDirichlet, InvalidDomain, NonSimplePolygon
from .quadrature import polygon_geometry

__all__ = [
    "EdgeTag",
    "Domain",
    "DOMAINS",
    "FamilyTag",
    "MeshFamily",
    "PolygonalMesh",
    "MeshQualityReport",
    "generate_mesh",
    "check_assumptions",
    "tag_boundary",
    "side_rule",
    "write_mesh",
    "read_mesh",
]


class EdgeTag(enum.IntEnum):
    INTERIOR = 0
    DIRICHLET = 1
    NEUMANN = 2


@dataclass(frozen=True)
class Domain:
    """Axis-aligned rectangle, or the L-shape obtained by removing the
    lower-left quarter of the bounding square."""

    kind: str
    bounds: tuple = (-1.0, 1.0, -1.0, 1.0)

    def __post_init__(self):
        if self.kind not in ("rectangle", "lshape"):
            raise InvalidDomain(f"unknown domain kind {self.kind!r}")
        x0, x1, y0, y1 = self.bounds
        if not (x1 > x0 and y1 > y0):
            raise InvalidDomain(f"empty bounds {self.bounds}")

    @property
    def area(self):
        x0, x1, y0, y1 = self.bounds
        a = (x1 - x0) * (y1 - y0)
        return 0.75 * a if self.kind == "lshape" else a

    @property
    def corner(self):
        """Re-entrant corner of the L-shape (center of the bounding box)."""
        x0, x1, y0, y1 = self.bounds
        return np.array([0.5 * (x0 + x1), 0.5 * (y0 + y1)])

    def contains(self, pts, tol=1e-12):
        pts = np.atleast_2d(pts)
        x0, x1, y0, y1 = self.bounds
        inside = (
            (pts[:, 0] >= x0 - tol)
            & (pts[:, 0] <= x1 + tol)
            & (pts[:, 1] >= y0 - tol)
            & (pts[:, 1] <= y1 + tol)
        )
        if self.kind == "lshape":
            c = self.corner
            inside &= ~((pts[:, 0] < c[0] - tol) & (pts[:, 1] < c[1] - tol))
        return inside


DOMAINS = {
    "square": Domain("rectangle", (-1.0, 1.0, -1.0, 1.0)),
    "square01": Domain("rectangle", (0.0, 1.0, 0.0, 1.0)),
    "lshape": Domain("lshape", (-1.0, 1.0, -1.0, 1.0)),
}


class FamilyTag(str, enum.Enum):
    DistortedSquares = "distorted"
    Voronoi = "voronoi"
    Trapezoidal = "trapezoidal"
    PolygonsWithMidpoints = "midpoint-quads"
    TrianglesWithMidpoints = "midpoint-triangles"
    LShapeUniform = "lshape"


@dataclass(frozen=True)
class MeshFamily:
    tag: FamilyTag
    distortion: float = 0.2
    lloyd_iterations: int = 3
    shear: float = 0.25
    seed: int = 0
    min_edge_ratio: float = 0.05

    def __post_init__(self):
        object.__setattr__(self, "tag", FamilyTag(self.tag))


@dataclass(frozen=True, eq=False)
class PolygonalMesh:
    """Conforming polygonal mesh.

    ``edges`` are stored with ``edges[e, 0] < edges[e, 1]``; ``polygon_edges[k][i]``
    is the global edge joining local vertices i and i+1 of polygon k.
    """

    vertices: np.ndarray
    polygons: tuple
    edges: np.ndarray
    edge_tags: np.ndarray
    polygon_edges: tuple
    edge_polygons: np.ndarray
    domain: Domain = field(default_factory=lambda: DOMAINS["square"])

    @classmethod
    def from_polygons(cls, vertices, polygons, domain, boundary_tag=EdgeTag.DIRICHLET):
        vertices = np.array(vertices, dtype=float)
        polygons = tuple(np.array(p, dtype=np.int64) for p in polygons)
        edge_index = {}
        edges, edge_polys, poly_edges = [], [], []
        for k, poly in enumerate(polygons):
            loc = np.empty(len(poly), dtype=np.int64)
            for i in range(len(poly)):
                a, b = int(poly[i]), int(poly[(i + 1) % len(poly)])
                key = (a, b) if a < b else (b, a)
                e = edge_index.get(key)
                if e is None:
                    e = len(edges)
                    edge_index[key] = e
                    edges.append(key)
                    edge_polys.append([k, -1])
                elif edge_polys[e][1] == -1:
                    edge_polys[e][1] = k
                else:
                    raise DegenerateCell(f"edge {key} shared by more than two polygons")
                loc[i] = e
            poly_edges.append(loc)
        edges = np.array(edges, dtype=np.int64).reshape(-1, 2)
        edge_polys = np.array(edge_polys, dtype=np.int64).reshape(-1, 2)
        tags = np.where(edge_polys[:, 1] < 0, int(boundary_tag), int(EdgeTag.INTERIOR)).astype(np.int8)
        mesh = cls(vertices, polygons, edges, tags, tuple(poly_edges), edge_polys, domain)
        mesh._freeze()
        return mesh

    def _freeze(self):
        for arr in (self.vertices, self.edges, self.edge_tags, self.edge_polygons, *self.polygons, *self.polygon_edges):
            arr.setflags(write=False)

    def with_tags(self, tags):
        tags = np.array(tags, dtype=np.int8)
        mesh = PolygonalMesh(
            self.vertices, self.polygons, self.edges, tags, self.polygon_edges, self.edge_polygons, self.domain
        )
        mesh._freeze()
        return mesh

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def n_polygons(self):
        return len(self.polygons)

    def polygon_vertices(self, k):
        return self.vertices[self.polygons[k]]

    @cached_property
    def _geometry(self):
        g = [polygon_geometry(self.polygon_vertices(k)) for k in range(self.n_polygons)]
        areas = np.array([a for a, _, _ in g])
        centroids = np.array([c for _, c, _ in g]).reshape(-1, 2)
        diameters = np.array([d for _, _, d in g])
        return areas, centroids, diameters

    @property
    def areas(self):
        return self._geometry[0]

    @property
    def centroids(self):
        return self._geometry[1]

    @property
    def diameters(self):
        return self._geometry[2]

    @property
    def h(self):
        return float(self.diameters.max())

    @property
    def boundary_edges(self):
        return np.flatnonzero(self.edge_polygons[:, 1] < 0)

    def edge_midpoints(self, edges=None):
        e = self.edges if edges is None else self.edges[edges]
        return 0.5 * (self.vertices[e[:, 0]] + self.vertices[e[:, 1]])

    def edge_lengths(self):
        d = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        return np.hypot(d[:, 0], d[:, 1])

    def validate(self, area_rtol=1e-12):
        """Raise if any structural invariant fails; return self otherwise."""
        areas = self.areas
        if np.any(areas <= 0):
            raise DegenerateCell("non-positive polygon area")
        for k in range(self.n_polygons):
            if not _is_simple(self.polygon_vertices(k)):
                raise NonSimplePolygon(f"polygon {k} is not simple")
        interior = self.edge_tags == EdgeTag.INTERIOR
        if np.any(interior != (self.edge_polygons[:, 1] >= 0)):
            raise DegenerateCell("edge tags inconsistent with incidence")
        total = areas.sum()
        if abs(total - self.domain.area) > area_rtol * self.domain.area:
            raise DegenerateCell(f"polygon areas sum to {total}, domain area {self.domain.area}")
        return self


def _segments_cross(p1, p2, q1, q2):
    def orient(a, b, c):
        return np.sign((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))

    return orient(p1, p2, q1) * orient(p1, p2, q2) < 0 and orient(q1, q2, p1) * orient(q1, q2, p2) < 0


def _is_simple(v):
    n = len(v)
    if n < 3:
        return False
    if len({tuple(p) for p in np.round(v, 14)}) < n:
        return False
    for i in range(n):
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            if _segments_cross(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]):
                return False
    return True


# ---------------------------------------------------------------------------
# generators


def _grid(n, bounds):
    x0, x1, y0, y1 = bounds
    xs = np.linspace(x0, x1, n + 1)
    ys = np.linspace(y0, y1, n + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    return np.column_stack([X.ravel(), Y.ravel()])


def _node(i, j, n):
    return i * (n + 1) + j


def _quads(n):
    return [
        [_node(i, j, n), _node(i + 1, j, n), _node(i + 1, j + 1, n), _node(i, j + 1, n)]
        for j in range(n)
        for i in range(n)
    ]


def _distorted_nodes(n, bounds, amplitude, rng):
    pts = _grid(n, bounds)
    hx = (bounds[1] - bounds[0]) / n
    idx = np.array([_node(i, j, n) for i in range(1, n) for j in range(1, n)], dtype=np.int64)
    if len(idx):
        r = rng.uniform(0.0, 1.0, len(idx))
        t = rng.uniform(0.0, 2.0 * np.pi, len(idx))
        pts[idx] += (amplitude * hx * r)[:, None] * np.column_stack([np.cos(t), np.sin(t)])
    return pts


def _trapezoidal_nodes(n, bounds, shear):
    pts = _grid(n, bounds)
    hy = (bounds[3] - bounds[2]) / n
    for i in range(n + 1):
        for j in range(1, n):
            pts[_node(i, j, n), 1] += (-1) ** (i + j) * shear * hy
    return pts


def _triangles(n):
    tris = []
    for j in range(n):
        for i in range(n):
            a, b, c, d = _node(i, j, n), _node(i + 1, j, n), _node(i + 1, j + 1, n), _node(i, j + 1, n)
            if (i + j) % 2 == 0:
                tris += [[a, b, c], [a, c, d]]
            else:
                tris += [[a, b, d], [b, c, d]]
    return tris


def _insert_midpoints(vertices, polygons):
    vertices = list(map(tuple, vertices))
    mid = {}
    out = []
    for poly in polygons:
        loop = []
        for i in range(len(poly)):
            a, b = poly[i], poly[(i + 1) % len(poly)]
            key = (min(a, b), max(a, b))
            if key not in mid:
                mid[key] = len(vertices)
                pa, pb = vertices[a], vertices[b]
                vertices.append((0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])))
            loop += [a, mid[key]]
        out.append(loop)
    return np.array(vertices), out


def _ccw(vertices, poly):
    v = vertices[poly]
    x, y = v[:, 0], v[:, 1]
    area = 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
    return list(poly) if area > 0 else list(poly[::-1])


def _bounded_voronoi(seeds, bounds):
    """Voronoi cells of ``seeds`` clipped to a rectangle by mirror reflection."""
    x0, x1, y0, y1 = bounds
    s = seeds
    refl = [
        np.column_stack([2 * x0 - s[:, 0], s[:, 1]]),
        np.column_stack([2 * x1 - s[:, 0], s[:, 1]]),
        np.column_stack([s[:, 0], 2 * y0 - s[:, 1]]),
        np.column_stack([s[:, 0], 2 * y1 - s[:, 1]]),
    ]
    vor = Voronoi(np.vstack([s, *refl]))
    cells = []
    for i in range(len(s)):
        region = vor.regions[vor.point_region[i]]
        if -1 in region or len(region) < 3:
            raise DegenerateCell(f"unbounded Voronoi region for seed {i}")
        cells.append(list(region))
    return vor.vertices.copy(), cells


def _voronoi_mesh(n, domain, family, rng):
    if domain.kind != "rectangle":
        raise InvalidDomain("Voronoi family requires a rectangular domain")
    x0, x1, y0, y1 = domain.bounds
    # one uniform seed per cell of the n x n grid (stratified sampling)
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    u = (i.ravel() + rng.uniform(size=n * n)) / n
    v = (j.ravel() + rng.uniform(size=n * n)) / n
    seeds = np.column_stack([x0 + (x1 - x0) * u, y0 + (y1 - y0) * v])
    for _ in range(max(0, family.lloyd_iterations)):
        verts, cells = _bounded_voronoi(seeds, domain.bounds)
        seeds = np.array([polygon_geometry(verts[_ccw(verts, np.array(c))])[1] for c in cells])
    verts, cells = _bounded_voronoi(seeds, domain.bounds)
    scale = max(x1 - x0, y1 - y0)
    tol = 1e-10 * scale
    for col, lo, hi in ((0, x0, x1), (1, y0, y1)):
        verts[np.abs(verts[:, col] - lo) < tol, col] = lo
        verts[np.abs(verts[:, col] - hi) < tol, col] = hi
    used = np.unique(np.concatenate(cells))
    # merge numerically coincident Voronoi vertices
    tree = cKDTree(verts[used])
    parent = np.arange(len(verts))
    for a, b in sorted(tree.query_pairs(1e-9 * scale)):
        ra, rb = used[a], used[b]
        while parent[ra] != ra:
            ra = parent[ra]
        while parent[rb] != rb:
            rb = parent[rb]
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    def root(i):
        while parent[i] != i:
            i = parent[i]
        return i

    polys = []
    for c in cells:
        loop = [root(i) for i in c]
        loop = [v for k, v in enumerate(loop) if v != loop[k - 1]] if len(loop) > 1 else loop
        polys.append(loop)
    keep = np.unique(np.concatenate(polys))
    remap = -np.ones(len(verts), dtype=np.int64)
    remap[keep] = np.arange(len(keep))
    V = verts[keep]
    polys = [_ccw(V, remap[np.array(p)]) for p in polys]
    if family.min_edge_ratio > 0:
        cell = np.sqrt(domain.area / len(polys))
        V, polys = _collapse_short_edges(V, polys, family.min_edge_ratio * cell, domain.bounds)
    return V, polys


def _collapse_short_edges(V, polys, threshold, bounds):
    """Merge the endpoints of edges shorter than ``threshold``.

    Corner vertices never move; side vertices only move along their side.
    """
    x0, x1, y0, y1 = bounds
    tol = 1e-10 * max(x1 - x0, y1 - y0)
    V = V.copy()
    polys = [list(p) for p in polys]

    def sides(p):
        return (abs(p[0] - x0) < tol, abs(p[0] - x1) < tol, abs(p[1] - y0) < tol, abs(p[1] - y1) < tol)

    def mergeable(sa, sb):
        ra, rb = sum(sa), sum(sb)
        if ra > 1 and rb > 1:
            return False
        if ra and rb:
            # both on the boundary: they must share a side
            return any(p and q for p, q in zip(sa, sb))
        return True

    while True:
        pairs = {tuple(sorted((p[i], p[(i + 1) % len(p)]))) for p in polys for i in range(len(p))}
        E = np.array(sorted(pairs), dtype=np.int64)
        d = np.hypot(*(V[E[:, 0]] - V[E[:, 1]]).T)
        order = np.argsort(d)
        order = order[d[order] < threshold]
        target = np.arange(len(V))
        touched = set()
        for e in order:
            a, b = E[e]
            if a in touched or b in touched:
                continue
            sa, sb = sides(V[a]), sides(V[b])
            if not mergeable(sa, sb):
                continue
            if sum(sb) > sum(sa):
                a, b = b, a
            elif sum(sa) == sum(sb):
                V[a] = 0.5 * (V[a] + V[b])
            target[b] = a
            touched.update((a, b))
        if not touched:
            break
        new = []
        for poly in polys:
            loop = [int(target[v]) for v in poly]
            new.append([v for k, v in enumerate(loop) if v != loop[k - 1]])
        polys = new
    keep = np.unique(np.concatenate(polys))
    remap = -np.ones(len(V), dtype=np.int64)
    remap[keep] = np.arange(len(keep))
    V = V[keep]
    return V, [list(remap[np.array(p)]) for p in polys]


def _lshape_mesh(n, domain):
    if domain.kind != "lshape":
        raise InvalidDomain("LShapeUniform family requires the L-shaped domain")
    if n < 2 or n % 2:
        raise InvalidDomain("L-shape subdivisions must be a positive even integer")
    pts = _grid(n, domain.bounds)
    c = domain.corner
    polys = []
    for q in _quads(n):
        center = pts[q].mean(axis=0)
        if center[0] < c[0] and center[1] < c[1]:
            continue
        polys.append(q)
    used = np.unique(np.concatenate(polys))
    remap = -np.ones(len(pts), dtype=np.int64)
    remap[used] = np.arange(len(used))
    return pts[used], [list(remap[np.array(p)]) for p in polys]


def generate_mesh(family, n, domain="square"):
    """Build one member of a mesh family.

    ``n`` is the number of cells along the bottom side (exact for the grid-based
    families, approximate for Voronoi where n**2 seeds are used). For the
    L-shape it is the number of subdivisions along the long side.
    """
    if not isinstance(family, MeshFamily):
        family = MeshFamily(FamilyTag(family))
    if isinstance(domain, str):
        try:
            domain = DOMAINS[domain]
        except KeyError:
            raise InvalidDomain(f"unknown domain {domain!r}") from None
    n = int(n)
    if n < 1:
        raise InvalidDomain("n must be >= 1")
    tag = family.tag
    if tag == FamilyTag.LShapeUniform:
        V, P = _lshape_mesh(n, domain)
    else:
        if domain.kind != "rectangle":
            raise InvalidDomain(f"family {tag.value} requires a rectangular domain")
        rng = np.random.default_rng(family.seed)
        if tag == FamilyTag.DistortedSquares:
            V, P = _distorted_nodes(n, domain.bounds, family.distortion, rng), _quads(n)
        elif tag == FamilyTag.Trapezoidal:
            V, P = _trapezoidal_nodes(n, domain.bounds, family.shear), _quads(n)
        elif tag == FamilyTag.PolygonsWithMidpoints:
            V, P = _insert_midpoints(_distorted_nodes(n, domain.bounds, family.distortion, rng), _quads(n))
        elif tag == FamilyTag.TrianglesWithMidpoints:
            V, P = _insert_midpoints(_distorted_nodes(n, domain.bounds, family.distortion, rng), _triangles(n))
        elif tag == FamilyTag.Voronoi:
            V, P = _voronoi_mesh(n, domain, family, rng)
        else:  # pragma: no cover
            raise InvalidDomain(f"unsupported family {tag}")
    return PolygonalMesh.from_polygons(V, P, domain).validate()


# ---------------------------------------------------------------------------
# quality


@dataclass(frozen=True)
class MeshQualityReport:
    h: float
    star_ratio: np.ndarray
    vertex_distance_ratio: np.ndarray
    gamma: float

    @property
    def a1_pass(self):
        return bool(np.all(self.star_ratio >= self.gamma))

    @property
    def a2_pass(self):
        return bool(np.all(self.vertex_distance_ratio >= self.gamma))

    @property
    def min_star_ratio(self):
        return float(self.star_ratio.min())

    @property
    def min_vertex_distance_ratio(self):
        return float(self.vertex_distance_ratio.min())


def kernel_radius(vertices):
    """Radius of the largest disc inside the kernel of a CCW polygon.

    The kernel is the intersection of the inner half-planes of all edges; the
    largest inscribed disc is its Chebyshev center, found by a small LP.
    Returns 0 when the kernel is empty.
    """
    v = np.asarray(vertices, dtype=float)
    d = np.roll(v, -1, axis=0) - v
    normals = np.column_stack([d[:, 1], -d[:, 0]])
    norms = np.hypot(normals[:, 0], normals[:, 1])
    normals /= norms[:, None]
    rhs = np.einsum("ij,ij->i", normals, v)
    # maximise r subject to n_i . c + r <= n_i . v_i
    A = np.column_stack([normals, np.ones(len(v))])
    res = linprog([0.0, 0.0, -1.0], A_ub=A, b_ub=rhs, bounds=[(None, None), (None, None), (0, None)], method="highs")
    if res.status != 0:
        return 0.0
    return float(max(res.x[2], 0.0))


def check_assumptions(mesh, gamma):
    """Measure A1 (star-shapedness radius over h_K) and A2 (vertex spacing over h_K)."""
    star, dist = [], []
    for k in range(mesh.n_polygons):
        v = mesh.polygon_vertices(k)
        hk = mesh.diameters[k]
        star.append(kernel_radius(v) / hk)
        dv = v[:, None, :] - v[None, :, :]
        r = np.sqrt((dv**2).sum(-1))
        dist.append(r[np.triu_indices(len(v), 1)].min() / hk)
    return MeshQualityReport(mesh.h, np.array(star), np.array(dist), float(gamma))


# ---------------------------------------------------------------------------
# boundary conditions


def side_rule(neumann_sides, domain):
    """Boundary predicate marking the listed sides of a rectangle as Neumann.

    ``neumann_sides`` is an iterable over {"left", "right", "bottom", "top"}.
    """
    sides = {s for s in neumann_sides if s and s != "none"}
    bad = sides - {"left", "right", "bottom", "top"}
    if bad:
        raise ValueError(f"unknown side(s) {sorted(bad)}")
    x0, x1, y0, y1 = domain.bounds
    tol = 1e-10 * max(x1 - x0, y1 - y0)

    def rule(mid):
        on = {
            "left": abs(mid[0] - x0) < tol,
            "right": abs(mid[0] - x1) < tol,
            "bottom": abs(mid[1] - y0) < tol,
            "top": abs(mid[1] - y1) < tol,
        }
        return EdgeTag.NEUMANN if any(on[s] for s in sides) else EdgeTag.DIRICHLET

    return rule


def tag_boundary(mesh, rule: Callable):
    """Return a copy of ``mesh`` whose boundary edges are tagged by ``rule(midpoint)``."""
    tags = np.array(mesh.edge_tags)
    bnd = mesh.boundary_edges
    for e, mid in zip(bnd, mesh.edge_midpoints(bnd)):
        tags[e] = int(EdgeTag(rule(mid)))
    if not np.any(tags[bnd] == EdgeTag.DIRICHLET):
        raise EmptyDirichlet("boundary rule leaves no Dirichlet edge")
    return mesh.with_tags(tags)


# ---------------------------------------------------------------------------
# file format


def write_mesh(mesh, path):
    x0, x1, y0, y1 = mesh.domain.bounds
    lines = [f"DOMAIN {mesh.domain.kind} {x0!r} {x1!r} {y0!r} {y1!r}", f"VERTICES {mesh.n_vertices}"]
    lines += [f"{x!r} {y!r}" for x, y in mesh.vertices.tolist()]
    lines.append(f"POLYGONS {mesh.n_polygons}")
    lines += [" ".join(map(str, p.tolist())) for p in mesh.polygons]
    bnd = mesh.boundary_edges
    lines.append(f"BOUNDARY {len(bnd)}")
    names = {EdgeTag.DIRICHLET: "dirichlet", EdgeTag.NEUMANN: "neumann"}
    lines += [f"{mesh.edges[e, 0]} {mesh.edges[e, 1]} {names[EdgeTag(mesh.edge_tags[e])]}" for e in bnd]
    Path(path).write_text("\n".join(lines) + "\n")


def read_mesh(path):
    lines = [ln.strip() for ln in Path(path).read_text().splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    domain = DOMAINS["square"]
    pos = 0
    verts, polys, bnd = [], [], []
    while pos < len(lines):
        head = lines[pos].split()
        pos += 1
        if head[0] == "DOMAIN":
            domain = Domain(head[1], tuple(float(t) for t in head[2:6]))
        elif head[0] == "VERTICES":
            cnt = int(head[1])
            verts = [tuple(map(float, lines[pos + i].split())) for i in range(cnt)]
            pos += cnt
        elif head[0] == "POLYGONS":
            cnt = int(head[1])
            polys = [list(map(int, lines[pos + i].split())) for i in range(cnt)]
            pos += cnt
        elif head[0] == "BOUNDARY":
            cnt = int(head[1])
            bnd = [lines[pos + i].split() for i in range(cnt)]
            pos += cnt
        else:
            raise ValueError(f"unknown mesh file section {head[0]!r}")
    mesh = PolygonalMesh.from_polygons(verts, polys, domain)
    lookup = {tuple(e): i for i, e in enumerate(mesh.edges.tolist())}
    tags = np.array(mesh.edge_tags)
    for a, b, t in bnd:
        a, b = int(a), int(b)
        tags[lookup[(min(a, b), max(a, b))]] = EdgeTag.NEUMANN if t == "neumann" else EdgeTag.DIRICHLET
    return mesh.with_tags(tags).validate()
