"""Conforming 2-D triangular meshes with tagged boundary parts.

A mesh carries two kinds of boundary edges: those where the distance is
prescribed to zero (DIRICHLET) and outflow edges treated by the nonlinear
boundary update (SONER).  Meshes are immutable after construction and safe
to share across threads.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError, TagError, TopologyError

logger = logging.getLogger(__name__)

NATIVE_HEADER = "DISTMESH 1"

#: opposite-angle sums may exceed pi by this much before an edge is reported
TOL_ANGLE = 1e-9


class BoundaryTag(enum.IntEnum):
    DIRICHLET = 1
    SONER = 2


class VertexClass(enum.IntEnum):
    INTERIOR = 0
    DIRICHLET = 1
    SONER = 2


def _as_readonly(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def cross2(u, v):
    """z-component of the cross product of stacked 2-D vectors."""
    u = np.asarray(u)
    v = np.asarray(v)
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


class TriMesh:
    """Immutable triangular mesh with tagged boundary edges.

    Parameters
    ----------
    vertices : (n, 2) float array
        Vertex coordinates.  Duplicated rows are allowed (and used to
        represent slits: the two sides of a slit are distinct vertices at
        identical coordinates).
    triangles : (m, 3) int array
        Vertex index triples, counterclockwise.  Use :meth:`build` to
        repair clockwise input.
    boundary_edges : sequence of (i, j, tag)
        One entry per boundary edge with its :class:`BoundaryTag`.  The set
        {i, j} must coincide exactly with the set of edges incident to a
        single triangle.

    Raises
    ------
    TopologyError
        Non-positive triangle area, non-manifold edge, isolated vertex,
        empty Dirichlet set, or a tagged edge that is not a boundary edge.
    TagError
        A boundary edge of the triangulation is missing from
        ``boundary_edges``.
    """

    def __init__(self, vertices, triangles, boundary_edges, _n_reoriented=0):
        v = np.asarray(vertices, dtype=np.float64)
        t = np.asarray(triangles, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 2:
            raise TopologyError(f"vertices must be (n, 2), got {v.shape}")
        if t.ndim != 2 or t.shape[1] != 3:
            raise TopologyError(f"triangles must be (m, 3), got {t.shape}")
        if t.size and (t.min() < 0 or t.max() >= len(v)):
            raise TopologyError("triangle index out of range")

        be = list(boundary_edges)
        edges = np.array([[i, j] for i, j, _ in be], dtype=np.int64).reshape(-1, 2)
        tags = np.array([int(tag) for _, _, tag in be], dtype=np.int64)
        if tags.size and not np.isin(tags, (1, 2)).all():
            raise TagError("boundary tags must be DIRICHLET (1) or SONER (2)")

        self.vertices = _as_readonly(v)
        self.triangles = _as_readonly(t)
        self.boundary_edges = _as_readonly(edges)
        self.boundary_tags = _as_readonly(tags)
        self.n_reoriented = int(_n_reoriented)

        self.signed_areas = _as_readonly(_signed_areas(v, t))
        if (self.signed_areas <= 0.0).any():
            k = int(np.argmin(self.signed_areas))
            raise TopologyError(
                f"triangle {k} has non-positive area {self.signed_areas[k]:g}"
            )

        self._check_topology()
        self._build_adjacency()
        self.vertex_class = _as_readonly(_classify(len(v), edges, tags))
        if not (self.vertex_class == VertexClass.DIRICHLET).any():
            raise TopologyError("the Dirichlet boundary set is empty")

    # -- construction helpers -------------------------------------------------

    @classmethod
    def build(cls, vertices, triangles, boundary_edges, reorient=True):
        """Construct a mesh, repairing clockwise triangles when asked.

        Repaired triangles are counted in ``n_reoriented`` (reported by
        :func:`validate_mesh`); zero-area triangles are never repairable.
        """
        v = np.asarray(vertices, dtype=np.float64)
        t = np.asarray(triangles, dtype=np.int64).copy()
        n_fixed = 0
        if reorient and len(t):
            areas = _signed_areas(v, t)
            flip = areas < 0.0
            n_fixed = int(flip.sum())
            if n_fixed:
                t[flip] = t[flip][:, [0, 2, 1]]
        return cls(v, t, boundary_edges, _n_reoriented=n_fixed)

    # -- invariant checks (constructor only) ----------------------------------

    def _check_topology(self):
        t = self.triangles
        n = len(self.vertices)
        if len(t) == 0:
            raise TopologyError("mesh has no triangles")
        if (t[:, 0] == t[:, 1]).any() or (t[:, 1] == t[:, 2]).any() or (
            t[:, 0] == t[:, 2]
        ).any():
            raise TopologyError("triangle with a repeated vertex")

        used = np.zeros(n, dtype=bool)
        used[t.ravel()] = True
        if not used.all():
            raise TopologyError(f"isolated vertex {int(np.flatnonzero(~used)[0])}")

        directed = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        und = np.sort(directed, axis=1)
        uniq, inv, counts = np.unique(
            und, axis=0, return_inverse=True, return_counts=True
        )
        inv = inv.reshape(-1)  # shape varies across numpy versions
        if (counts > 2).any():
            i, j = uniq[counts > 2][0]
            raise TopologyError(f"non-manifold edge ({int(i)}, {int(j)})")

        on_boundary = counts == 1
        derived = {(int(i), int(j)) for i, j in uniq[on_boundary]}
        provided = {
            (int(min(i, j)), int(max(i, j))) for i, j in self.boundary_edges
        }
        extra = provided - derived
        if extra:
            raise TopologyError(f"tagged edge {sorted(extra)[0]} is interior or absent")
        missing = derived - provided
        if missing:
            raise TagError(f"boundary edge {sorted(missing)[0]} carries no tag")

        # ccw-directed copy of each boundary edge, as it appears in its triangle
        bmask = on_boundary[inv]
        self.oriented_boundary_edges = _as_readonly(directed[bmask])
        self._edge_unique = uniq
        self._edge_counts = counts

    def _build_adjacency(self):
        und = self._edge_unique
        both = np.concatenate([und, und[:, ::-1]])
        order = np.lexsort((both[:, 1], both[:, 0]))
        both = both[order]
        n = len(self.vertices)
        self.nbr_indptr = _as_readonly(
            np.concatenate([[0], np.cumsum(np.bincount(both[:, 0], minlength=n))])
        )
        self.nbr_indices = _as_readonly(both[:, 1])

    # -- queries ---------------------------------------------------------------

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    @property
    def dirichlet_vertices(self):
        return np.flatnonzero(self.vertex_class == VertexClass.DIRICHLET)

    @property
    def soner_vertices(self):
        return np.flatnonzero(self.vertex_class == VertexClass.SONER)

    def neighbors(self, i):
        """Vertices sharing an edge with vertex ``i`` (sorted)."""
        return self.nbr_indices[self.nbr_indptr[i] : self.nbr_indptr[i + 1]]

    def bbox_diagonal(self):
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return float(np.hypot(*(hi - lo)))

    def __repr__(self):
        nd = len(self.dirichlet_vertices)
        ns = len(self.soner_vertices)
        return (
            f"TriMesh({self.n_vertices} vertices, {self.n_triangles} triangles, "
            f"{nd} Dirichlet / {ns} Soner boundary vertices)"
        )


def _signed_areas(vertices, triangles):
    a = vertices[triangles[:, 0]]
    b = vertices[triangles[:, 1]]
    c = vertices[triangles[:, 2]]
    return 0.5 * cross2(b - a, c - a)


def _classify(n, edges, tags):
    cls = np.full(n, VertexClass.INTERIOR, dtype=np.int64)
    if len(edges):
        soner = edges[tags == BoundaryTag.SONER].ravel()
        cls[soner] = VertexClass.SONER
        # Dirichlet wins on vertices carrying both tags: the prescribed value
        # is the stronger constraint.
        diri = edges[tags == BoundaryTag.DIRICHLET].ravel()
        cls[diri] = VertexClass.DIRICHLET
    return cls


def vertex_classification(mesh):
    """Per-vertex class: INTERIOR, DIRICHLET, or SONER.

    Returned directly from the mesh; kept as a function so callers can
    re-derive classes for an edge subset if they ever need to.
    """
    return mesh.vertex_class.copy()


# -- quality report -----------------------------------------------------------


@dataclass
class MeshQualityReport:
    """Result of :func:`validate_mesh`."""

    n_vertices: int
    n_triangles: int
    min_angle: float
    max_angle: float
    violations: list = field(default_factory=list)
    angle_condition_ok: bool = True
    n_reoriented: int = 0

    def as_dict(self):
        return {
            "n_vertices": self.n_vertices,
            "n_triangles": self.n_triangles,
            "min_angle": self.min_angle,
            "max_angle": self.max_angle,
            "violations": [
                {"edge": [int(i), int(j)], "opposite_angle_sum": float(s)}
                for i, j, s in self.violations
            ],
            "angle_condition_ok": self.angle_condition_ok,
            "n_reoriented": self.n_reoriented,
        }


def triangle_angles(mesh):
    """Interior angles of every triangle, shape (m, 3), radians."""
    v = mesh.vertices[mesh.triangles]  # (m, 3, 2)
    angles = np.empty((len(mesh.triangles), 3))
    for p in range(3):
        d1 = v[:, (p + 1) % 3] - v[:, p]
        d2 = v[:, (p + 2) % 3] - v[:, p]
        angles[:, p] = np.arctan2(cross2(d1, d2), (d1 * d2).sum(axis=1))
    return angles


def validate_mesh(mesh, tol_angle=TOL_ANGLE):
    """Check the interior-edge angle condition.

    For every interior edge the two angles opposite the edge are summed;
    the edge is reported when the sum exceeds ``pi + tol_angle``.  The
    condition guarantees non-positive off-diagonal stiffness entries and
    with them a discrete maximum principle.
    """
    angles = triangle_angles(mesh)
    t = mesh.triangles
    # half-edge (j, k) opposite vertex p carries the angle at p
    edges = np.concatenate([t[:, [1, 2]], t[:, [2, 0]], t[:, [0, 1]]])
    opp = np.concatenate([angles[:, 0], angles[:, 1], angles[:, 2]])
    und = np.sort(edges, axis=1)
    order = np.lexsort((und[:, 1], und[:, 0]))
    und = und[order]
    opp = opp[order]
    boundary_change = np.any(und[1:] != und[:-1], axis=1)
    starts = np.concatenate([[0], np.flatnonzero(boundary_change) + 1])
    counts = np.diff(np.concatenate([starts, [len(und)]]))
    sums = np.add.reduceat(opp, starts)

    violations = []
    for s, c, total in zip(starts, counts, sums):
        if c == 2 and total > np.pi + tol_angle:
            i, j = und[s]
            violations.append((int(i), int(j), float(total)))

    return MeshQualityReport(
        n_vertices=mesh.n_vertices,
        n_triangles=mesh.n_triangles,
        min_angle=float(angles.min()),
        max_angle=float(angles.max()),
        violations=violations,
        angle_condition_ok=not violations,
        n_reoriented=mesh.n_reoriented,
    )


# -- native format -------------------------------------------------------------

_TAG_TO_TOKEN = {BoundaryTag.DIRICHLET: "D", BoundaryTag.SONER: "S"}
_TOKEN_TO_TAG = {"D": BoundaryTag.DIRICHLET, "S": BoundaryTag.SONER}


def write_native(mesh, path):
    """Write the whitespace-delimited native format.

    Layout: header line, vertex count and coordinates, triangle count and
    index triples, boundary edge count and tagged pairs.  Coordinates use
    %.17g so a round trip reproduces the mesh bit-exactly.  Indices are
    0-based.  Duplicated vertex rows (slits) are stored as-is.
    """
    lines = [NATIVE_HEADER, str(mesh.n_vertices)]
    lines += [f"{x:.17g} {y:.17g}" for x, y in mesh.vertices]
    lines.append(str(mesh.n_triangles))
    lines += [f"{i} {j} {k}" for i, j, k in mesh.triangles]
    lines.append(str(len(mesh.boundary_edges)))
    lines += [
        f"{i} {j} {_TAG_TO_TOKEN[BoundaryTag(tag)]}"
        for (i, j), tag in zip(mesh.boundary_edges, mesh.boundary_tags)
    ]
    with open(path, "w", newline="\n") as f:
        f.write("\n".join(lines) + "\n")


class _LineReader:
    def __init__(self, path):
        self.path = path
        with open(path) as f:
            self.lines = f.read().splitlines()
        self.pos = 0

    def next_tokens(self, expect=None):
        while self.pos < len(self.lines):
            self.pos += 1
            toks = self.lines[self.pos - 1].split()
            if toks:
                if expect is not None and len(toks) != expect:
                    self.fail(f"expected {expect} fields, got {len(toks)}")
                return toks
        self.fail("unexpected end of file")

    def fail(self, message):
        raise ParseError(message, path=self.path, line=self.pos)


def load_native(path):
    r = _LineReader(path)
    header = " ".join(r.next_tokens())
    if header != NATIVE_HEADER:
        r.fail(f"bad header {header!r}, expected {NATIVE_HEADER!r}")

    def read_int():
        toks = r.next_tokens(expect=1)
        try:
            return int(toks[0])
        except ValueError:
            r.fail(f"expected an integer, got {toks[0]!r}")

    nv = read_int()
    verts = np.empty((nv, 2))
    for i in range(nv):
        toks = r.next_tokens(expect=2)
        try:
            verts[i] = [float(toks[0]), float(toks[1])]
        except ValueError:
            r.fail(f"bad coordinate pair {toks!r}")

    nt = read_int()
    tris = np.empty((nt, 3), dtype=np.int64)
    for i in range(nt):
        toks = r.next_tokens(expect=3)
        try:
            tris[i] = [int(t) for t in toks]
        except ValueError:
            r.fail(f"bad triangle {toks!r}")

    nb = read_int()
    edges = []
    for _ in range(nb):
        toks = r.next_tokens(expect=3)
        tag = _TOKEN_TO_TAG.get(toks[2].upper())
        if tag is None:
            r.fail(f"unknown boundary tag {toks[2]!r}")
        try:
            edges.append((int(toks[0]), int(toks[1]), tag))
        except ValueError:
            r.fail(f"bad boundary edge {toks!r}")

    return TriMesh.build(verts, tris, edges)


# -- GMSH MSH 2.2 ASCII ---------------------------------------------------------


def _normalize_keys(keys):
    out = set()
    for k in keys:
        if isinstance(k, str) and not k.lstrip("-").isdigit():
            out.add(k.lower())
        else:
            out.add(int(k))
    return out


def load_gmsh22(path, dirichlet_keys=("gammad", 1), soner_keys=("gammas", 2)):
    """Parse a GMSH MSH 2.2 ASCII file.

    Element type 2 becomes a triangle, type 1 a tagged boundary edge; the
    first element tag is the physical group.  Physical groups are matched
    against ``dirichlet_keys`` / ``soner_keys``, each a mix of group names
    (case-insensitive) and numeric ids.  Point elements (type 15) and any
    volumetric types are ignored.
    """
    d_keys = _normalize_keys(dirichlet_keys)
    s_keys = _normalize_keys(soner_keys)
    r = _LineReader(path)

    node_ids = []
    coords = []
    tri_nodes = []
    line_elems = []
    phys_names = {}

    while r.pos < len(r.lines):
        toks = r.lines[r.pos].split()
        r.pos += 1
        if not toks or not toks[0].startswith("$"):
            continue
        section = toks[0]
        if section == "$MeshFormat":
            toks = r.next_tokens()
            if not toks[0].startswith("2."):
                r.fail(f"unsupported MSH version {toks[0]} (need 2.x ASCII)")
            if len(toks) > 1 and toks[1] != "0":
                r.fail("binary MSH files are not supported")
        elif section == "$PhysicalNames":
            count = int(r.next_tokens()[0])
            for _ in range(count):
                toks = r.next_tokens()
                if len(toks) < 3:
                    r.fail("malformed physical name record")
                phys_names[int(toks[1])] = " ".join(toks[2:]).strip('"').lower()
        elif section == "$Nodes":
            count = int(r.next_tokens()[0])
            for _ in range(count):
                toks = r.next_tokens()
                if len(toks) < 3:
                    r.fail("node record needs id and coordinates")
                try:
                    node_ids.append(int(toks[0]))
                    coords.append((float(toks[1]), float(toks[2])))
                except ValueError:
                    r.fail(f"bad node record {toks!r}")
        elif section == "$Elements":
            count = int(r.next_tokens()[0])
            for _ in range(count):
                toks = r.next_tokens()
                try:
                    etype = int(toks[1])
                    ntags = int(toks[2])
                    tags = [int(t) for t in toks[3 : 3 + ntags]]
                    nodes = [int(t) for t in toks[3 + ntags :]]
                except (ValueError, IndexError):
                    r.fail(f"bad element record {toks!r}")
                if etype == 2:
                    if len(nodes) != 3:
                        r.fail("triangle element needs 3 nodes")
                    tri_nodes.append(nodes)
                elif etype == 1:
                    if len(nodes) != 2:
                        r.fail("line element needs 2 nodes")
                    line_elems.append((tags[0] if tags else None, nodes, r.pos))

    if not coords:
        raise ParseError("no $Nodes section", path=path)
    if not tri_nodes:
        raise ParseError("no triangles in $Elements", path=path)

    remap = {nid: i for i, nid in enumerate(node_ids)}
    verts = np.array(coords)
    try:
        tris = np.array([[remap[n] for n in t] for t in tri_nodes], dtype=np.int64)
    except KeyError as exc:
        raise ParseError(f"triangle references unknown node {exc}", path=path)

    def resolve(phys, lineno):
        keys = {phys} if phys is not None else set()
        if phys in phys_names:
            keys.add(phys_names[phys])
        if keys & d_keys:
            return BoundaryTag.DIRICHLET
        if keys & s_keys:
            return BoundaryTag.SONER
        raise TagError(
            f"{path}:{lineno}: boundary edge physical tag {phys!r} matches "
            f"neither the Dirichlet nor the Soner group"
        )

    edges = []
    for phys, (a, b), lineno in line_elems:
        try:
            edges.append((remap[a], remap[b], resolve(phys, lineno)))
        except KeyError as exc:
            raise ParseError(f"edge references unknown node {exc}", path=path)

    return TriMesh.build(verts, tris, edges)


def load_mesh(path, fmt="auto", dirichlet_keys=("gammad", 1), soner_keys=("gammas", 2)):
    """Load a mesh from ``path``.

    ``fmt`` is one of ``"gmsh22"``, ``"native"``, or ``"auto"`` (sniff the
    first line).
    """
    if fmt == "auto":
        with open(path) as f:
            first = f.readline().strip()
        fmt = "native" if first == NATIVE_HEADER else "gmsh22"
    if fmt == "native":
        return load_native(path)
    if fmt == "gmsh22":
        return load_gmsh22(path, dirichlet_keys, soner_keys)
    raise ValueError(f"unknown mesh format {fmt!r}")
