"""Polygon geometry, quadrature on polygons and segments, scaled monomials."""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DegenerateCell, NonSimplePolygon

__all__ = [
    "QuadratureRule",
    "ScaledMonomialBasis",
    "polygon_geometry",
    "polygon_quadrature",
    "edge_quadrature",
    "triangle_quadrature",
    "triangulate",
]


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray
    weights: np.ndarray
    degree: int

    def integrate(self, f):
        """Integrate a callable taking an (m, 2) (or (m,) for 1D) point array."""
        return np.tensordot(self.weights, f(self.points), axes=(0, 0))


def polygon_geometry(vertices):
    """Return (area, centroid, diameter) of a counterclockwise polygon.

    Area is the signed shoelace area; a non-positive value raises
    DegenerateCell (clockwise or collapsed input).
    """
    v = np.asarray(vertices, dtype=float)
    # work relative to the first vertex so small cells far from the origin keep their digits
    o = v[0]
    x, y = v[:, 0] - o[0], v[:, 1] - o[1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * cross.sum()
    if not area > 0.0:
        raise DegenerateCell(f"polygon area {area!r} is not positive")
    cx = ((x + xn) * cross).sum() / (6.0 * area) + o[0]
    cy = ((y + yn) * cross).sum() / (6.0 * area) + o[1]
    d = v[:, None, :] - v[None, :, :]
    diameter = np.sqrt((d**2).sum(axis=-1).max())
    return area, np.array([cx, cy]), diameter


@lru_cache(maxsize=None)
def _collapsed_gauss(degree):
    # Duffy-collapsed tensor Gauss rule on the reference triangle (0,0),(1,0),(0,1).
    m = (degree + 3) // 2
    g, w = np.polynomial.legendre.leggauss(m)
    g = 0.5 * (g + 1.0)
    w = 0.5 * w
    u, v = np.meshgrid(g, g, indexing="ij")
    wu, wv = np.meshgrid(w, w, indexing="ij")
    # x = u, y = v (1 - u); Jacobian (1 - u)
    pts = np.column_stack([u.ravel(), (v * (1.0 - u)).ravel()])
    wts = (wu * wv * (1.0 - u)).ravel()
    return pts, wts


def triangle_quadrature(a, b, c, degree):
    """Rule on triangle abc exact for total degree <= degree."""
    ref_pts, ref_w = _collapsed_gauss(degree)
    a, b, c = (np.asarray(p, dtype=float) for p in (a, b, c))
    jac = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])
    pts = a + np.outer(ref_pts[:, 0], b - a) + np.outer(ref_pts[:, 1], c - a)
    return pts, ref_w * abs(jac)


def _signed_area(p, q, r):
    return 0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]))


def _ear_clip(v):
    idx = list(range(len(v)))
    tris = []
    guard = 0
    while len(idx) > 3:
        guard += 1
        if guard > 10 * len(v) ** 2:
            raise NonSimplePolygon("ear clipping failed; polygon is not simple")
        n = len(idx)
        for k in range(n):
            i0, i1, i2 = idx[k - 1], idx[k], idx[(k + 1) % n]
            if _signed_area(v[i0], v[i1], v[i2]) <= 0.0:
                continue
            inside = False
            for j in idx:
                if j in (i0, i1, i2):
                    continue
                if (
                    _signed_area(v[i0], v[i1], v[j]) >= 0
                    and _signed_area(v[i1], v[i2], v[j]) >= 0
                    and _signed_area(v[i2], v[i0], v[j]) >= 0
                ):
                    inside = True
                    break
            if not inside:
                tris.append((i0, i1, i2))
                del idx[k]
                break
        else:
            raise NonSimplePolygon("no ear found; polygon is not simple")
    tris.append(tuple(idx))
    return tris


def triangulate(vertices, centroid=None):
    """Sub-triangles of a polygon as a list of (3, 2) arrays.

    The centroid fan is used when every fan triangle has positive area;
    otherwise ear clipping.
    """
    v = np.asarray(vertices, dtype=float)
    if centroid is None:
        centroid = polygon_geometry(v)[1]
    nxt = np.roll(v, -1, axis=0)
    fan_area = 0.5 * (
        (v[:, 0] - centroid[0]) * (nxt[:, 1] - centroid[1])
        - (nxt[:, 0] - centroid[0]) * (v[:, 1] - centroid[1])
    )
    if np.all(fan_area > 0.0):
        return [np.array([centroid, v[i], nxt[i]]) for i in range(len(v))]
    return [v[list(t)] for t in _ear_clip(v)]


def polygon_quadrature(vertices, degree=4, centroid=None):
    """Quadrature rule on a simple polygon, exact up to total degree ``degree``."""
    if degree > 8:
        raise ValueError("polygon quadrature supports degree <= 8")
    v = np.asarray(vertices, dtype=float)
    if len(v) < 3:
        raise NonSimplePolygon("a polygon needs at least 3 vertices")
    pts, wts = [], []
    for tri in triangulate(v, centroid):
        p, w = triangle_quadrature(tri[0], tri[1], tri[2], degree)
        pts.append(p)
        wts.append(w)
    return QuadratureRule(np.vstack(pts), np.concatenate(wts), degree)


@lru_cache(maxsize=None)
def _gauss01(degree):
    m = degree // 2 + 1
    g, w = np.polynomial.legendre.leggauss(m)
    return 0.5 * (g + 1.0), 0.5 * w


def edge_quadrature(a, b, degree=4):
    """Gauss-Legendre rule on segment ab, exact up to ``degree``.

    Returns ``(rule, s)``: the rule has 2D points and weights summing to |ab|,
    and ``s`` holds the matching parameters in [0, 1] measured from a.
    """
    if degree > 6:
        raise ValueError("edge quadrature supports degree <= 6")
    s, w = _gauss01(degree)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    length = np.hypot(*(b - a))
    pts = a + np.outer(s, b - a)
    return QuadratureRule(pts, w * length, degree), s


@dataclass(frozen=True)
class ScaledMonomialBasis:
    """m_alpha(x) = ((x - center) / scale)^alpha, graded lexicographic order.

    For degree 2 the order is 1, xi, eta, xi^2, xi*eta, eta^2.
    """

    center: np.ndarray
    scale: float
    degree: int = 1

    @property
    def exponents(self):
        return [(i - j, j) for i in range(self.degree + 1) for j in range(i + 1)]

    def __len__(self):
        return (self.degree + 1) * (self.degree + 2) // 2

    def local(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return (x - self.center) / self.scale

    def values(self, x):
        """(m, n_basis) array of basis values at points x."""
        xi = self.local(x)
        return np.column_stack([xi[:, 0] ** a * xi[:, 1] ** b for a, b in self.exponents])

    def gradients(self, x):
        """(m, n_basis, 2) array of physical gradients."""
        xi = self.local(x)
        out = np.zeros((len(xi), len(self), 2))
        for k, (a, b) in enumerate(self.exponents):
            if a > 0:
                out[:, k, 0] = a * xi[:, 0] ** (a - 1) * xi[:, 1] ** b
            if b > 0:
                out[:, k, 1] = b * xi[:, 0] ** a * xi[:, 1] ** (b - 1)
        return out / self.scale
