"""P1 element matrices and global system assembly.

The weak form being discretized is

    nu^2 * (grad phi, grad psi) + (phi, psi) = 0

over piecewise-linear hat functions on triangles, with prescribed values
eliminated by row/column removal and a lift on the right-hand side.  The
hat-function gradient on a triangle (a_i, a_j, a_k) is
``grad theta_i = (a_k - a_j)^perp / (2 |K|)``, which makes the stiffness
entries equal to the classical cotangent expressions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateElementError, EmptyDirichletSetError
from .mesh import BoundaryTag, VertexClass, cross2
from .sparse import SparseSymMatrix

#: relative area threshold: elements with |K| <= AREA_EPS_FACTOR * diag^2
#: of the relevant bounding box are rejected as degenerate
AREA_EPS_FACTOR = 1e-14

_MASS_PATTERN = (np.ones((3, 3)) + np.eye(3)) / 12.0


@dataclass
class ElementMatrix:
    """A 3x3 element contribution with its element index and area."""

    entries: np.ndarray
    element_index: int
    area: float


def _edges_and_area(coords):
    """Opposite-edge vectors e_p = a_{p+2} - a_{p+1} and the signed area."""
    coords = np.asarray(coords, dtype=np.float64)
    e = coords[[2, 0, 1]] - coords[[1, 2, 0]]
    area = 0.5 * cross2(e[1], e[2])
    return e, area


def _check_area(area, coords, index):
    coords = np.asarray(coords, dtype=np.float64)
    span = coords.max(axis=0) - coords.min(axis=0)
    eps = AREA_EPS_FACTOR * float(span @ span)
    if area <= eps:
        raise DegenerateElementError(
            f"element {index} has area {area:g} <= threshold {eps:g}"
        )


def element_stiffness(coords, element_index=-1):
    """Stiffness contribution R_pq = integral of grad theta_p . grad theta_q.

    Rows sum to zero; entries match the cotangent formula (see
    :func:`element_stiffness_cot`).
    """
    e, area = _edges_and_area(coords)
    _check_area(area, coords, element_index)
    entries = (e @ e.T) / (4.0 * area)
    return ElementMatrix(entries, element_index, float(area))


def element_stiffness_cot(coords):
    """Stiffness via cotangents of the interior angles.

    Independent of :func:`element_stiffness` (no shared intermediates):
    off-diagonal ``-cot(angle at the opposite vertex)/2``, diagonal the sum
    of the two adjacent cotangents halved.
    """
    coords = np.asarray(coords, dtype=np.float64)
    cots = np.empty(3)
    for p in range(3):
        d1 = coords[(p + 1) % 3] - coords[p]
        d2 = coords[(p + 2) % 3] - coords[p]
        cots[p] = (d1 @ d2) / cross2(d1, d2)
    entries = np.empty((3, 3))
    for p in range(3):
        for q in range(3):
            if p == q:
                entries[p, p] = 0.5 * (cots[(p + 1) % 3] + cots[(p + 2) % 3])
            else:
                opp = 3 - p - q
                entries[p, q] = -0.5 * cots[opp]
    return entries


def element_mass(coords, element_index=-1):
    """Consistent mass contribution: |K|/12 on off-diagonals, |K|/6 on the
    diagonal; entries sum to |K|."""
    coords = np.asarray(coords, dtype=np.float64)
    _, area = _edges_and_area(coords)
    _check_area(area, coords, element_index)
    return ElementMatrix(area * _MASS_PATTERN, element_index, float(area))


def _all_element_arrays(mesh):
    """Vectorized e-vectors, areas, and degeneracy check for every element."""
    v = mesh.vertices[mesh.triangles]  # (m, 3, 2)
    e = v[:, [2, 0, 1]] - v[:, [1, 2, 0]]
    areas = 0.5 * cross2(e[:, 1], e[:, 2])
    eps = AREA_EPS_FACTOR * mesh.bbox_diagonal() ** 2
    if (areas <= eps).any():
        k = int(np.argmin(areas))
        raise DegenerateElementError(
            f"element {k} has area {areas[k]:g} <= threshold {eps:g}"
        )
    return e, areas


def global_matrices(mesh, lumped=False):
    """Assemble the global mass and stiffness matrices (M, R).

    Contributions are canonicalized before compression, so the result does
    not depend on element order beyond floating-point reassociation.
    ``lumped=True`` replaces M by its row-sum diagonal, which strengthens
    the discrete maximum principle on marginal meshes.
    """
    e, areas = _all_element_arrays(mesh)
    m = len(mesh.triangles)
    n = mesh.n_vertices

    r_local = np.einsum("mpd,mqd->mpq", e, e) / (4.0 * areas)[:, None, None]
    rows = np.repeat(mesh.triangles, 3, axis=1).reshape(m, 3, 3)
    cols = np.tile(mesh.triangles, (1, 3)).reshape(m, 3, 3)
    R = SparseSymMatrix.from_triplets(
        n, rows.ravel(), cols.ravel(), r_local.ravel()
    )

    if lumped:
        # row sums of the consistent mass: |K|/3 per incident vertex
        diag = np.bincount(
            mesh.triangles.ravel(),
            weights=np.repeat(areas / 3.0, 3),
            minlength=n,
        )
        M = SparseSymMatrix.from_triplets(n, np.arange(n), np.arange(n), diag)
    else:
        m_local = areas[:, None, None] * _MASS_PATTERN
        M = SparseSymMatrix.from_triplets(
            n, rows.ravel(), cols.ravel(), m_local.ravel()
        )
    return M, R


def assemble_boundary_mass(mesh, edges=None):
    """1-D P1 mass matrix accumulated over boundary edges.

    ``edges`` defaults to the Soner subset; each edge of length L
    contributes L/6 * [[2, 1], [1, 2]] on its two vertices.  Used by the
    Robin mode as the weak form of the outflow condition.
    """
    if edges is None:
        sel = mesh.boundary_tags == BoundaryTag.SONER
        edges = mesh.boundary_edges[sel]
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    n = mesh.n_vertices
    if len(edges) == 0:
        return SparseSymMatrix.from_triplets(n, [], [], [])
    i, j = edges.T
    lengths = np.linalg.norm(mesh.vertices[i] - mesh.vertices[j], axis=1)
    rows = np.concatenate([i, j, i, j])
    cols = np.concatenate([i, j, j, i])
    vals = np.concatenate(
        [lengths / 3.0, lengths / 3.0, lengths / 6.0, lengths / 6.0]
    )
    return SparseSymMatrix.from_triplets(n, rows, cols, vals)


class FemSystem:
    """Assembled SPD system with Dirichlet-lift bookkeeping.

    ``A`` is the full operator restricted to free vertices.  Fixed-vertex
    values enter through the right-hand side only, and :meth:`relift`
    rebuilds that vector for new values without touching ``A``.
    """

    def __init__(self, mesh, nu, mass, stiffness, boundary_mass, a_full, fixed_mask):
        self.mesh = mesh
        self.nu = float(nu)
        self.mass = mass
        self.stiffness = stiffness
        self.boundary_mass = boundary_mass
        self.fixed_mask = fixed_mask
        self.free_idx = np.flatnonzero(~fixed_mask)
        self.fixed_idx = np.flatnonzero(fixed_mask)

        # restriction A[free, free] and the lift block A[free, fixed]
        nnz_rows = a_full._rows
        nnz_cols = a_full.indices
        local = -np.ones(mesh.n_vertices, dtype=np.int64)
        local[self.free_idx] = np.arange(len(self.free_idx))
        row_free = ~fixed_mask[nnz_rows]
        col_free = ~fixed_mask[nnz_cols]

        keep = row_free & col_free
        self.A = SparseSymMatrix.from_triplets(
            len(self.free_idx),
            local[nnz_rows[keep]],
            local[nnz_cols[keep]],
            a_full.data[keep],
        )
        lift = row_free & ~col_free
        self._lift_rows = local[nnz_rows[lift]]
        self._lift_cols = nnz_cols[lift]
        self._lift_vals = a_full.data[lift]

        self.fixed_values = np.ones(mesh.n_vertices)
        self.b = self.relift(self.fixed_values)

    @property
    def n_free(self):
        return len(self.free_idx)

    def relift(self, values):
        """Right-hand side for prescribed values ``g``:
        ``b_i = -sum_{j fixed} A_full[i, j] * g_j``.

        ``values`` is a full-length vector; only fixed entries are read.
        """
        values = np.asarray(values, dtype=np.float64)
        return -np.bincount(
            self._lift_rows,
            weights=self._lift_vals * values[self._lift_cols],
            minlength=self.n_free,
        )

    def expand(self, x_free, values):
        """Scatter a free-vertex solution into a full-length vector."""
        full = np.asarray(values, dtype=np.float64).copy()
        full[self.free_idx] = x_free
        return full


def assemble_global(mesh, nu, fix_soner=False, lumped=False, robin=False):
    """Build the global system ``(M + nu^2 R [+ nu B]) phi = lift``.

    Dirichlet vertices are always eliminated with lift value 1.  With
    ``fix_soner`` the Soner vertices are eliminated too (their values are
    supplied externally through :meth:`FemSystem.relift`); with ``robin``
    they stay free and the Soner boundary mass ``nu * B`` is added.
    """
    if nu <= 0.0:
        raise ValueError(f"nu must be positive, got {nu}")
    if fix_soner and robin:
        raise ValueError("fix_soner and robin are mutually exclusive")
    cls = mesh.vertex_class
    if not (cls == VertexClass.DIRICHLET).any():
        raise EmptyDirichletSetError("mesh has no Dirichlet vertices")

    M, R = global_matrices(mesh, lumped=lumped)
    B = assemble_boundary_mass(mesh)
    terms = [(nu * nu, R)]
    if robin:
        terms.append((nu, B))
    a_full = M.scaled_sum(*terms)

    fixed = cls == VertexClass.DIRICHLET
    if fix_soner:
        fixed = fixed | (cls == VertexClass.SONER)
    return FemSystem(mesh, nu, M, R, B, a_full, fixed)


def element_gradients(mesh, values):
    """Per-element gradient of a P1 field, shape (m, 2)."""
    values = np.asarray(values, dtype=np.float64)
    e, areas = _all_element_arrays(mesh)
    perp = np.stack([-e[..., 1], e[..., 0]], axis=-1)  # rotate +90 degrees
    grads = perp / (2.0 * areas)[:, None, None]
    return np.einsum("mp,mpd->md", values[mesh.triangles], grads)
