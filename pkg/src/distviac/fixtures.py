"""Canned test geometries used by the test suite and handy for demos.

These are deliberately simple constructions (structured grids and filtered
Delaunay point clouds), not a mesh generator.
"""

from __future__ import annotations

import numpy as np

from .mesh import BoundaryTag, TriMesh

D = BoundaryTag.DIRICHLET
S = BoundaryTag.SONER


def strip_mesh(length=1.0, width=0.2, h=0.02, dirichlet="left", diagonal="right"):
    """Structured right-triangle mesh of ``[0, length] x [0, width]``.

    ``dirichlet`` selects which sides carry the zero-distance condition:
    ``"left"``, ``"both"`` (left and right), or ``"all"``.  Remaining sides
    are Soner.  ``diagonal="mirrored"`` flips the cell diagonals on the
    right half so the mesh is symmetric about ``x = length/2``.
    """
    nx = max(1, round(length / h))
    ny = max(1, round(width / h))
    xs = np.linspace(0.0, length, nx + 1)
    ys = np.linspace(0.0, width, ny + 1)

    def vid(i, j):
        return j * (nx + 1) + i

    verts = np.array([[x, y] for y in ys for x in xs])
    tris = []
    for j in range(ny):
        for i in range(nx):
            a, b = vid(i, j), vid(i + 1, j)
            c, d = vid(i + 1, j + 1), vid(i, j + 1)
            right = True
            if diagonal == "mirrored" and (i + 0.5) > nx / 2:
                right = False
            if right:
                tris += [[a, b, c], [a, c, d]]
            else:
                tris += [[a, b, d], [b, c, d]]

    left_tag = D
    right_tag = D if dirichlet in ("both", "all") else S
    other_tag = D if dirichlet == "all" else S
    edges = []
    for j in range(ny):
        edges.append((vid(0, j), vid(0, j + 1), left_tag))
        edges.append((vid(nx, j), vid(nx, j + 1), right_tag))
    for i in range(nx):
        edges.append((vid(i, 0), vid(i + 1, 0), other_tag))
        edges.append((vid(i, ny), vid(i + 1, ny), other_tag))

    return TriMesh.build(verts, tris, edges)


def annulus_mesh(r_in=1.0, r_out=2.0, h=0.05, inner_tag=D, outer_tag=S):
    """Delaunay mesh of the annulus ``r_in <= |x| <= r_out``.

    Points are laid out on concentric rings spaced ~``h`` apart with ring
    counts matched to the circumference, then triangulated with Delaunay
    and filtered to the annulus.  Inner-circle edges are tagged
    ``inner_tag`` (default Dirichlet), outer-circle edges ``outer_tag``.
    """
    from scipy.spatial import Delaunay

    n_rings = max(2, round((r_out - r_in) / h))
    pts = []
    for k in range(n_rings + 1):
        r = r_in + (r_out - r_in) * k / n_rings
        n_theta = max(8, round(2.0 * np.pi * r / h))
        # stagger alternate rings for better-shaped triangles
        theta = (np.arange(n_theta) + 0.5 * (k % 2)) * (2.0 * np.pi / n_theta)
        pts.append(np.column_stack([r * np.cos(theta), r * np.sin(theta)]))
    verts = np.concatenate(pts)

    tri = Delaunay(verts)
    cent = verts[tri.simplices].mean(axis=1)
    rc = np.hypot(cent[:, 0], cent[:, 1])
    keep = (rc > r_in) & (rc < r_out)
    tris = tri.simplices[keep]

    used = np.unique(tris)
    remap = -np.ones(len(verts), dtype=np.int64)
    remap[used] = np.arange(len(used))
    verts = verts[used]
    tris = remap[tris]

    edges = _boundary_edges_by_radius(verts, tris, r_in, r_out, inner_tag, outer_tag)
    return TriMesh.build(verts, tris, edges)


def _boundary_edges_by_radius(verts, tris, r_in, r_out, inner_tag, outer_tag):
    directed = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    und = np.sort(directed, axis=1)
    uniq, counts = np.unique(und, axis=0, return_counts=True)
    rad = np.hypot(verts[:, 0], verts[:, 1])
    edges = []
    for i, j in uniq[counts == 1]:
        ri, rj = rad[i], rad[j]
        if abs(ri - r_in) < 1e-9 and abs(rj - r_in) < 1e-9:
            tag = inner_tag
        elif abs(ri - r_out) < 1e-9 and abs(rj - r_out) < 1e-9:
            tag = outer_tag
        else:
            raise ValueError(
                f"boundary edge ({i}, {j}) not on either circle; "
                "ring spacing too coarse for Delaunay filtering"
            )
        edges.append((int(i), int(j), tag))
    return edges


def slit_annulus_mesh(n_radial=40, r_in=1.0, r_out=2.0):
    """Polar structured mesh of the annulus slit along the segment
    ``[r_in, r_out] x {0}``.

    The slit is the Dirichlet boundary; both circles are Soner.  Vertex
    rows at angle 0 and 2*pi are duplicated so the slit is genuine
    boundary (the mesh is a manifold rectangle in polar coordinates).
    Every interior quad is an isosceles trapezoid, hence cyclic, so the
    diagonal edges satisfy the opposite-angle condition with equality.
    """
    dr = (r_out - r_in) / n_radial
    r_mid = 0.5 * (r_in + r_out)
    n_theta = max(8, round(2.0 * np.pi * r_mid / dr))
    radii = np.linspace(r_in, r_out, n_radial + 1)
    thetas = np.linspace(0.0, 2.0 * np.pi, n_theta + 1)  # duplicated seam

    def vid(k, t):
        return t * (n_radial + 1) + k

    verts = np.empty(((n_radial + 1) * (n_theta + 1), 2))
    for t, th in enumerate(thetas):
        verts[t * (n_radial + 1) : (t + 1) * (n_radial + 1), 0] = radii * np.cos(th)
        verts[t * (n_radial + 1) : (t + 1) * (n_radial + 1), 1] = radii * np.sin(th)
    # pin the seam rows to exact coordinates so the two slit sides coincide
    verts[: n_radial + 1] = np.column_stack([radii, np.zeros(n_radial + 1)])
    verts[n_theta * (n_radial + 1) :] = verts[: n_radial + 1]

    tris = []
    for t in range(n_theta):
        for k in range(n_radial):
            a, b = vid(k, t), vid(k + 1, t)
            c, d = vid(k + 1, t + 1), vid(k, t + 1)
            tris += [[a, b, c], [a, c, d]]

    edges = []
    for k in range(n_radial):  # both sides of the slit
        edges.append((vid(k, 0), vid(k + 1, 0), D))
        edges.append((vid(k, n_theta), vid(k + 1, n_theta), D))
    for t in range(n_theta):  # circles
        edges.append((vid(0, t), vid(0, t + 1), S))
        edges.append((vid(n_radial, t), vid(n_radial, t + 1), S))

    return TriMesh.build(verts, tris, edges)


def box_with_polygon_hole(polygon, half=1.5, h=0.1):
    """Square ``[-half, half]^2`` with a polygonal obstacle cut out.

    The obstacle boundary is Dirichlet, the outer box Soner: the solve
    then measures distance to the obstacle.  ``polygon`` is a closed ccw
    vertex loop (first vertex not repeated).  No exact solution exists in
    general; tests compare against the edge-graph geodesic bound.
    """
    from matplotlib.path import Path
    from scipy.spatial import Delaunay

    polygon = np.asarray(polygon, dtype=np.float64)
    path = Path(polygon)

    n_cells = max(2, round(2.0 * half / h))
    xs = np.linspace(-half, half, n_cells + 1)
    grid = np.array([[x, y] for y in xs for x in xs])
    ring = []
    closed = np.vstack([polygon, polygon[:1]])
    for a, b in zip(closed[:-1], closed[1:]):
        n_seg = max(1, int(np.ceil(np.linalg.norm(b - a) / h)))
        for k in range(n_seg):
            ring.append(a + (b - a) * k / n_seg)
    ring = np.array(ring)

    # drop grid points inside or hugging the obstacle so its ring is the
    # only boundary there
    keep = ~path.contains_points(grid, radius=1.4 * h)
    on_rim = (np.abs(np.abs(grid[:, 0]) - half) < 1e-12) | (
        np.abs(np.abs(grid[:, 1]) - half) < 1e-12
    )
    keep |= on_rim & ~path.contains_points(grid, radius=0.0)
    verts = np.concatenate([grid[keep], ring])

    tri = Delaunay(verts)
    cent = verts[tri.simplices].mean(axis=1)
    tris = tri.simplices[~path.contains_points(cent)]

    used = np.unique(tris)
    remap = -np.ones(len(verts), dtype=np.int64)
    remap[used] = np.arange(len(used))
    verts = verts[used]
    tris = remap[tris]

    directed = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    und = np.sort(directed, axis=1)
    uniq, counts = np.unique(und, axis=0, return_counts=True)
    edges = []
    for i, j in uniq[counts == 1]:
        pi, pj = verts[i], verts[j]
        if (np.abs(np.abs(pi) - half) < 1e-9).any() and (
            np.abs(np.abs(pj) - half) < 1e-9
        ).any():
            edges.append((int(i), int(j), S))
        else:
            edges.append((int(i), int(j), D))
    return TriMesh.build(verts, tris, edges)


def unit_square_two_triangles(left_tag=D, other_tag=S):
    """The 4-vertex unit square split along the main diagonal."""
    verts = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]
    tris = [[0, 1, 2], [0, 2, 3]]
    edges = [
        (0, 1, other_tag),
        (1, 2, other_tag),
        (2, 3, other_tag),
        (3, 0, left_tag),
    ]
    return TriMesh.build(verts, tris, edges)


def single_triangle(tag=D):
    """Smallest valid mesh: one triangle, all edges tagged alike."""
    verts = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]
    return TriMesh.build(verts, [[0, 1, 2]], [(0, 1, tag), (1, 2, tag), (2, 0, tag)])
