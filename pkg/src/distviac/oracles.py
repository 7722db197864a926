"""Reference distance functions and error norms for the test geometries.

The slit-annulus solution is the interesting one: the domain is the
annulus ``1 <= |x| <= 2`` cut along the segment ``[1, 2] x {0}``, and the
distance is measured to that two-sided slit.  Where the straight segment
to the nearest slit point stays inside the annulus it is the answer;
otherwise the geodesic runs tangent to the inner circle (length
``sqrt(|x|^2 - 1)``) and then hugs the circle to the slit corner at
``(1, 0)``, adding the arclength of the wrap.  Both wrap directions are
admissible (the slit is two-sided), so the smaller is taken.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .errors import MeshMismatchError, OutsideDomainError, UnreachableVertexError
from .solver import DISTANCE, ScalarField

DOMAIN_TOL = 1e-9
#: tolerance on the segment-vs-unit-disk visibility discriminant
VISIBILITY_TOL = 1e-12


@dataclass
class ExactCase:
    """A named geometry with an exact (or reference) distance function."""

    case_id: str  # annulus | slit-annulus | strip | polyline
    r_in: float = 1.0
    r_out: float = 2.0
    length: float = 1.0
    width: float = 0.2
    polyline: np.ndarray | None = None

    def __post_init__(self):
        known = ("annulus", "slit-annulus", "strip", "polyline")
        if self.case_id not in known:
            raise ValueError(f"unknown case {self.case_id!r} (expected {known})")
        if self.case_id in ("annulus", "slit-annulus"):
            if not 1.0 <= self.r_in < self.r_out:
                raise ValueError(
                    f"need 1 <= r_in < r_out, got {self.r_in}, {self.r_out}"
                )
        if self.case_id == "strip" and (self.length <= 0 or self.width <= 0):
            raise ValueError("strip needs positive length and width")
        if self.case_id == "polyline":
            self.polyline = np.asarray(self.polyline, dtype=np.float64)
            if self.polyline.ndim != 2 or len(self.polyline) < 2:
                raise ValueError("polyline needs at least two vertices")

    def evaluate(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if self.case_id == "annulus":
            return annulus_exact(points, self.r_in, self.r_out)
        if self.case_id == "slit-annulus":
            return slit_annulus_exact(points, self.r_in, self.r_out)
        if self.case_id == "strip":
            return strip_exact(points, self.length, self.width)
        return polyline_exact(points, self.polyline)

    @classmethod
    def for_mesh(cls, case_id, mesh):
        """Build a case whose parameters match a fixture mesh (the strip
        dimensions are read off the bounding box)."""
        if case_id == "strip":
            hi = mesh.vertices.max(axis=0)
            return cls("strip", length=float(hi[0]), width=float(hi[1]))
        return cls(case_id)


def annulus_exact(points, r_in=1.0, r_out=2.0):
    """Distance to the inner circle: ``|x| - r_in``."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    r = np.hypot(points[:, 0], points[:, 1])
    if (r < r_in - DOMAIN_TOL).any() or (r > r_out + DOMAIN_TOL).any():
        bad = points[(r < r_in - DOMAIN_TOL) | (r > r_out + DOMAIN_TOL)][0]
        raise OutsideDomainError(f"point {bad} outside the annulus")
    return r - r_in


def strip_exact(points, length=1.0, width=0.2):
    """Distance to the left edge of ``[0, length] x [0, width]``: ``x``."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    x, y = points[:, 0], points[:, 1]
    ok = (
        (x >= -DOMAIN_TOL)
        & (x <= length + DOMAIN_TOL)
        & (y >= -DOMAIN_TOL)
        & (y <= width + DOMAIN_TOL)
    )
    if not ok.all():
        raise OutsideDomainError(f"point {points[~ok][0]} outside the strip")
    return x.copy()


def polyline_exact(points, polyline):
    """Unsigned Euclidean distance to an open polyline (no obstruction)."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    a = polyline[:-1]
    seg = polyline[1:] - a
    seg_len2 = np.maximum((seg * seg).sum(axis=1), 1e-300)
    diff = points[:, None, :] - a[None, :, :]  # (k, s, 2)
    t = np.clip((diff * seg[None]).sum(axis=2) / seg_len2[None], 0.0, 1.0)
    closest = a[None] + t[..., None] * seg[None]
    return np.linalg.norm(points[:, None, :] - closest, axis=2).min(axis=1)


def slit_annulus_exact(points, r_in=1.0, r_out=2.0):
    """Geodesic distance to the slit ``[r_in, r_out] x {0}`` inside the
    slit annulus, wrap paths taken around the inner circle.

    The published closed form covers the inner circle of radius 1; the
    implementation keeps that normalization and rejects other radii.
    """
    if (r_in, r_out) != (1.0, 2.0):
        raise ValueError("the slit-annulus solution is tabulated for radii (1, 2)")
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    x, y = points[:, 0], points[:, 1]
    r2 = x * x + y * y
    r = np.sqrt(r2)
    if (r < r_in - DOMAIN_TOL).any() or (r > r_out + DOMAIN_TOL).any():
        bad = points[(r < r_in - DOMAIN_TOL) | (r > r_out + DOMAIN_TOL)][0]
        raise OutsideDomainError(f"point {bad} outside the annulus")

    cand = np.full((len(points), 4), np.inf)

    # straight drop onto the slit for points radially over it
    over = (x >= r_in - DOMAIN_TOL) & (x <= r_out + DOMAIN_TOL)
    cand[over, 0] = np.abs(y[over])

    # straight segment to the slit corner (1, 0) when it clears the disk
    dx, dy = 1.0 - x, -y
    dd = dx * dx + dy * dy
    t = np.clip(-(x * dx + y * dy) / np.where(dd > 0.0, dd, 1.0), 0.0, 1.0)
    clearance = np.hypot(x + t * dx, y + t * dy)
    visible = clearance >= 1.0 - VISIBILITY_TOL
    cand[visible, 1] = np.sqrt(dd[visible])

    # tangent to the inner circle plus the wrap arc to (1, 0), both sides
    rc = np.maximum(r, 1.0)
    d1 = np.sqrt(np.maximum(r2 - 1.0, 0.0))
    delta = np.arccos(np.clip(1.0 / rc, -1.0, 1.0))
    psi = np.arctan2(y, x)
    for k, sign in enumerate((1.0, -1.0)):
        tangent_angle = psi + sign * delta
        tangent_angle = (tangent_angle + np.pi) % (2.0 * np.pi) - np.pi
        cand[:, 2 + k] = d1 + np.abs(tangent_angle)

    return cand.min(axis=1)


def graph_geodesic_oracle(mesh, sources=None):
    """Multi-source Dijkstra over the mesh edge graph, Euclidean weights.

    An independent brute-force reference: path lengths bound the continuum
    distance from above (edge paths cannot beat the metric), with an
    overestimation factor set by mesh quality.

    Raises
    ------
    UnreachableVertexError
        Some vertex is not connected to the source set.
    """
    if sources is None:
        sources = mesh.dirichlet_vertices
    sources = np.asarray(sources, dtype=np.int64)
    verts = mesh.vertices
    dist = np.full(mesh.n_vertices, np.inf)
    dist[sources] = 0.0
    heap = [(0.0, int(s)) for s in sources]
    heapq.heapify(heap)
    indptr, indices = mesh.nbr_indptr, mesh.nbr_indices
    while heap:
        d, i = heapq.heappop(heap)
        if d > dist[i]:
            continue
        for j in indices[indptr[i]: indptr[i + 1]]:
            nd = d + float(np.hypot(*(verts[j] - verts[i])))
            if nd < dist[j]:
                dist[j] = nd
                heapq.heappush(heap, (nd, int(j)))
    if not np.isfinite(dist).all():
        raise UnreachableVertexError(
            f"vertex {int(np.flatnonzero(~np.isfinite(dist))[0])} unreachable "
            "from the source set"
        )
    return ScalarField(mesh, dist, DISTANCE)


@dataclass
class ErrorReport:
    linf: float
    l2: float
    near_linf: float
    band: float
    n_excluded: int = 0
    errors: np.ndarray = field(default=None, repr=False)

    def as_dict(self):
        return {
            "linf": self.linf,
            "l2": self.l2,
            "near_linf": self.near_linf,
            "band": self.band,
            "n_excluded": self.n_excluded,
        }


def error_norms(d_h, exact, band=None):
    """Error norms of a distance field against a reference.

    ``exact`` may be an :class:`ExactCase`, another field on the same
    mesh, or a plain array.  Infinite-sentinel vertices are excluded and
    counted.  The L2 norm is weighted by the consistent mass matrix; the
    near-boundary norm restricts to vertices whose exact distance is at
    most ``band`` (default: 10% of the mesh bounding-box diagonal).
    """
    from .assembly import global_matrices

    mesh = d_h.mesh
    if isinstance(exact, ExactCase):
        ref = exact.evaluate(mesh.vertices)
    elif isinstance(exact, ScalarField):
        if exact.mesh is not mesh:
            raise MeshMismatchError("fields live on different meshes")
        ref = exact.values
    else:
        ref = np.asarray(exact, dtype=np.float64)
        if ref.shape != (mesh.n_vertices,):
            raise MeshMismatchError(
                f"reference has shape {ref.shape}, mesh has {mesh.n_vertices} vertices"
            )

    if band is None:
        band = 0.1 * mesh.bbox_diagonal()

    err = np.abs(d_h.values - ref)
    ok = np.isfinite(err)
    n_excluded = int((~ok).sum())
    masked = np.where(ok, err, 0.0)

    M, _ = global_matrices(mesh)
    l2 = float(np.sqrt(max(masked @ (M @ masked), 0.0)))
    linf = float(masked.max(initial=0.0))
    near = ok & (ref <= band)
    near_linf = float(err[near].max(initial=0.0))
    full_err = np.where(ok, err, np.inf)
    return ErrorReport(linf, l2, near_linf, float(band), n_excluded, full_err)
