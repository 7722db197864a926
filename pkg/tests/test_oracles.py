import numpy as np
import pytest

from distviac import fixtures
from distviac.errors import (
    MeshMismatchError,
    OutsideDomainError,
    UnreachableVertexError,
)
from distviac.mesh import BoundaryTag, TriMesh
from distviac.oracles import (
    ExactCase,
    annulus_exact,
    error_norms,
    graph_geodesic_oracle,
    polyline_exact,
    slit_annulus_exact,
    strip_exact,
)
from distviac.solver import DISTANCE, ScalarField

D = BoundaryTag.DIRICHLET
S = BoundaryTag.SONER

SQRT3 = np.sqrt(3.0)


class TestAnnulusExact:
    def test_inner_circle_is_zero(self):
        assert annulus_exact([[1.0, 0.0]])[0] == 0.0
        assert annulus_exact([[0.0, -1.0]])[0] == pytest.approx(0.0, abs=1e-15)

    def test_outer_circle_is_one(self):
        assert annulus_exact([[2.0, 0.0]])[0] == pytest.approx(1.0)

    def test_midpoint(self):
        assert annulus_exact([[1.5, 0.0]])[0] == pytest.approx(0.5)

    def test_outside_raises(self):
        with pytest.raises(OutsideDomainError):
            annulus_exact([[0.5, 0.0]])
        with pytest.raises(OutsideDomainError):
            annulus_exact([[2.5, 0.0]])

    def test_gradient_modulus_one(self):
        rng = np.random.default_rng(4)
        r = rng.uniform(1.1, 1.9, 50)
        t = rng.uniform(0.0, 2 * np.pi, 50)
        pts = np.column_stack([r * np.cos(t), r * np.sin(t)])
        h = 1e-6
        gx = (
            annulus_exact(pts + [h, 0.0]) - annulus_exact(pts - [h, 0.0])
        ) / (2 * h)
        gy = (
            annulus_exact(pts + [0.0, h]) - annulus_exact(pts - [0.0, h])
        ) / (2 * h)
        assert np.abs(np.hypot(gx, gy) - 1.0).max() < 1e-6


class TestStripExact:
    def test_values(self):
        assert strip_exact([[0.0, 0.1]])[0] == 0.0
        assert strip_exact([[0.7, 0.05]])[0] == pytest.approx(0.7)
        assert strip_exact([[1.0, 0.2]])[0] == pytest.approx(1.0)

    def test_outside_raises(self):
        with pytest.raises(OutsideDomainError):
            strip_exact([[1.5, 0.1]])


class TestPolylineExact:
    def test_distance_to_segment(self):
        poly = np.array([[0.0, 0.0], [1.0, 0.0]])
        assert polyline_exact([[0.5, 0.3]], poly)[0] == pytest.approx(0.3)
        assert polyline_exact([[2.0, 0.0]], poly)[0] == pytest.approx(1.0)

    def test_case_wrapper(self):
        case = ExactCase("polyline", polyline=[[0.0, 0.0], [0.0, 1.0]])
        assert case.evaluate([[0.4, 0.5]])[0] == pytest.approx(0.4)


class TestSlitAnnulusExact:
    def test_radially_over_the_slit(self):
        assert slit_annulus_exact([[1.5, 0.3]])[0] == pytest.approx(0.3)
        assert slit_annulus_exact([[1.5, -0.3]])[0] == pytest.approx(0.3)

    def test_antipode_maximum(self):
        # tangent length sqrt(3) plus a 2*pi/3 wrap on either side
        val = slit_annulus_exact([[-2.0, 0.0]])[0]
        assert val == pytest.approx(SQRT3 + 2 * np.pi / 3, abs=1e-12)
        assert val == pytest.approx(3.8264, abs=5e-5)

    def test_north_point(self):
        val = slit_annulus_exact([[0.0, 2.0]])[0]
        assert val == pytest.approx(SQRT3 + np.pi / 6, abs=1e-12)

    def test_on_inner_circle_is_arclength(self):
        t = 0.8
        val = slit_annulus_exact([[np.cos(t), np.sin(t)]])[0]
        assert val == pytest.approx(t, abs=1e-9)
        val = slit_annulus_exact([[np.cos(-t), np.sin(-t)]])[0]
        assert val == pytest.approx(t, abs=1e-9)

    def test_slit_itself_is_zero(self):
        pts = [[1.0, 0.0], [1.7, 0.0], [2.0, 0.0]]
        assert np.abs(slit_annulus_exact(pts)).max() == 0.0

    def test_symmetry_about_the_slit(self):
        rng = np.random.default_rng(9)
        r = rng.uniform(1.0, 2.0, 100)
        t = rng.uniform(0.0, np.pi, 100)
        up = np.column_stack([r * np.cos(t), r * np.sin(t)])
        down = up * [1.0, -1.0]
        assert np.abs(
            slit_annulus_exact(up) - slit_annulus_exact(down)
        ).max() < 1e-12

    def test_continuity_along_rays(self):
        # sweep circles of several radii through all angle regimes; the
        # distance is 1-Lipschitz along the geodesic metric, so adjacent
        # samples can differ by little more than their separation
        for r in (1.0001, 1.3, 1.7, 2.0):
            t = np.linspace(-np.pi, np.pi, 200001)
            pts = np.column_stack([r * np.cos(t), r * np.sin(t)])
            vals = slit_annulus_exact(pts)
            step = r * (t[1] - t[0])
            assert np.abs(np.diff(vals)).max() <= 2.0 * step + 1e-9

    def test_below_graph_oracle_on_mesh_vertices(self):
        # graph paths may undercut the continuum arcs slightly because the
        # discrete inner boundary is a polygon inside the circle; the
        # chord-vs-arc defect is O(h^2) per unit path length
        mesh = fixtures.slit_annulus_mesh(n_radial=16)
        graph = graph_geodesic_oracle(mesh)
        exact = slit_annulus_exact(mesh.vertices)
        i, j = mesh.boundary_edges.T
        h_max = np.linalg.norm(mesh.vertices[i] - mesh.vertices[j], axis=1).max()
        slack = h_max * h_max
        assert (exact <= graph.values + slack).all()

    def test_north_value_against_graph_oracle(self):
        mesh = fixtures.slit_annulus_mesh(n_radial=32)
        graph = graph_geodesic_oracle(mesh)
        i = int(np.argmin(np.linalg.norm(mesh.vertices - [0.0, 2.0], axis=1)))
        exact = SQRT3 + np.pi / 6
        assert exact - 1e-9 <= graph.values[i] <= exact * 1.09

    def test_outside_raises(self):
        with pytest.raises(OutsideDomainError):
            slit_annulus_exact([[0.2, 0.2]])


class TestGraphGeodesic:
    def test_source_vertex_is_zero(self):
        mesh = fixtures.annulus_mesh(h=0.25)
        field = graph_geodesic_oracle(mesh)
        assert np.array_equal(
            field.values[mesh.dirichlet_vertices],
            np.zeros(len(mesh.dirichlet_vertices)),
        )

    def test_chain_of_edges(self):
        verts = [[0.0, 0.0], [0.2, 0.0], [0.5, 0.0], [0.25, 0.5]]
        tris = [[0, 1, 3], [1, 2, 3]]
        edges = [(0, 1, D), (1, 2, S), (2, 3, S), (3, 0, S)]
        mesh = TriMesh(verts, tris, edges)
        field = graph_geodesic_oracle(mesh, sources=[0])
        assert field.values[2] == pytest.approx(0.5, abs=1e-15)

    def test_annulus_lower_bound(self):
        mesh = fixtures.annulus_mesh(h=0.15)
        field = graph_geodesic_oracle(mesh)
        r = np.hypot(mesh.vertices[:, 0], mesh.vertices[:, 1])
        assert (field.values >= r - 1.0 - 1e-12).all()

    def test_unreachable_raises(self):
        verts = [
            [0.0, 0.0], [1.0, 0.0], [0.0, 1.0],
            [5.0, 5.0], [6.0, 5.0], [5.0, 6.0],
        ]
        tris = [[0, 1, 2], [3, 4, 5]]
        edges = [
            (0, 1, D), (1, 2, D), (2, 0, D),
            (3, 4, D), (4, 5, D), (5, 3, D),
        ]
        mesh = TriMesh(verts, tris, edges)
        with pytest.raises(UnreachableVertexError):
            graph_geodesic_oracle(mesh, sources=[0])


class TestErrorNorms:
    def make_field(self, mesh, values):
        return ScalarField(mesh, values, DISTANCE)

    def test_exact_field_gives_zero(self):
        mesh = fixtures.strip_mesh(h=0.05)
        case = ExactCase.for_mesh("strip", mesh)
        field = self.make_field(mesh, case.evaluate(mesh.vertices))
        rep = error_norms(field, case)
        assert rep.linf == 0.0 and rep.l2 == 0.0 and rep.near_linf == 0.0

    def test_constant_offset(self):
        mesh = fixtures.strip_mesh(h=0.05)
        case = ExactCase.for_mesh("strip", mesh)
        field = self.make_field(mesh, case.evaluate(mesh.vertices) + 0.25)
        rep = error_norms(field, case)
        assert rep.linf == pytest.approx(0.25)
        assert rep.near_linf == pytest.approx(0.25)

    def test_l2_bounded_by_linf_times_sqrt_area(self):
        mesh = fixtures.annulus_mesh(h=0.2)
        rng = np.random.default_rng(2)
        noise = rng.uniform(0.0, 0.3, mesh.n_vertices)
        exact = annulus_exact(mesh.vertices)
        rep = error_norms(self.make_field(mesh, exact + noise), exact)
        area = mesh.signed_areas.sum()
        assert rep.l2 <= rep.linf * np.sqrt(area) + 1e-12

    def test_infinite_sentinels_excluded_and_counted(self):
        mesh = fixtures.strip_mesh(h=0.1)
        case = ExactCase.for_mesh("strip", mesh)
        vals = case.evaluate(mesh.vertices)
        vals[3] = np.inf
        rep = error_norms(self.make_field(mesh, vals), case)
        assert rep.n_excluded == 1
        assert rep.linf == 0.0

    def test_mesh_mismatch_raises(self):
        mesh1 = fixtures.strip_mesh(h=0.1)
        mesh2 = fixtures.strip_mesh(h=0.2)
        f1 = self.make_field(mesh1, np.zeros(mesh1.n_vertices))
        f2 = self.make_field(mesh2, np.zeros(mesh2.n_vertices))
        with pytest.raises(MeshMismatchError):
            error_norms(f1, f2)

    def test_band_parameter(self):
        mesh = fixtures.strip_mesh(h=0.05)
        case = ExactCase.for_mesh("strip", mesh)
        err = np.where(mesh.vertices[:, 0] > 0.5, 1.0, 0.0)
        field = self.make_field(mesh, case.evaluate(mesh.vertices) + err)
        rep = error_norms(field, case, band=0.3)
        assert rep.near_linf == 0.0
        assert rep.linf == 1.0
