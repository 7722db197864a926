"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines.
Heavy solves are shared through module-scoped fixtures.
"""

import time

import numpy as np
import pytest

from distviac import fixtures
from distviac.assembly import assemble_global, element_gradients, element_mass, element_stiffness
from distviac.mesh import validate_mesh
from distviac.oracles import ExactCase, error_norms
from distviac.solver import SolverConfig, solve, solve_soner
from distviac.sparse import dense_solve, spd_solve


def report_line(num, name, ok, detail):
    status = "PASS" if ok else "FAIL"
    print(f"[acceptance {num}] {name}: {status} ({detail})", flush=True)
    assert ok, f"criterion {num} ({name}): {detail}"


def timed_solve(mesh, **cfg_kwargs):
    cfg = SolverConfig(**cfg_kwargs)
    t0 = time.perf_counter()
    phi, dist, rep = solve(mesh, cfg)
    return phi, dist, rep, time.perf_counter() - t0


@pytest.fixture(scope="module")
def strip_run():
    mesh = fixtures.strip_mesh(length=1.0, width=0.2, h=0.02)
    return mesh, *timed_solve(mesh, nu=0.05, bc_mode="soner", track_history=True)


@pytest.fixture(scope="module")
def strip_fine_run():
    mesh = fixtures.strip_mesh(length=1.0, width=0.2, h=0.01)
    return mesh, *timed_solve(mesh, nu=0.05, bc_mode="soner")


@pytest.fixture(scope="module")
def annulus_run():
    mesh = fixtures.annulus_mesh(h=0.05)
    return mesh, *timed_solve(mesh, nu=0.1, bc_mode="soner", track_history=True)


@pytest.fixture(scope="module")
def annulus_fine_run():
    mesh = fixtures.annulus_mesh(h=0.025)
    return mesh, *timed_solve(mesh, nu=0.1, bc_mode="soner")


@pytest.fixture(scope="module")
def slit_fine_mesh():
    return fixtures.slit_annulus_mesh(n_radial=100)


@pytest.fixture(scope="module")
def slit_fine_run(slit_fine_mesh):
    return slit_fine_mesh, *timed_solve(slit_fine_mesh, nu=0.01, bc_mode="soner")


@pytest.fixture(scope="module")
def slit_mid_run():
    mesh = fixtures.slit_annulus_mesh(n_radial=50)
    return mesh, *timed_solve(mesh, nu=0.01, bc_mode="soner")


@pytest.fixture(scope="module")
def slit_small_run():
    mesh = fixtures.slit_annulus_mesh(n_radial=24)
    return mesh, *timed_solve(mesh, nu=0.05, bc_mode="soner", track_history=True)


def test_criterion_1_element_exactness():
    t0 = time.perf_counter()
    tri = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    stiff = element_stiffness(tri)
    expected = 0.5 * np.array([[2, -1, -1], [-1, 1, 0], [-1, 0, 1.0]])
    stiff_err = np.abs(stiff.entries - expected).max()
    mass = element_mass(tri)
    mass_err = abs(mass.entries.sum() - mass.area)
    elapsed = time.perf_counter() - t0
    ok = stiff_err <= 1e-12 and mass_err <= 1e-12 and elapsed < 1.0
    report_line(
        1,
        "element exactness",
        ok,
        f"stiffness err {stiff_err:.2e}, mass-sum err {mass_err:.2e}, "
        f"{elapsed:.3f}s < 1s",
    )


def test_criterion_2_strip_sanity(strip_run, strip_fine_run):
    mesh, _, dist, rep, t_coarse = strip_run
    mesh_f, _, dist_f, rep_f, t_fine = strip_fine_run
    x = mesh.vertices[:, 0]
    err = np.abs(dist.values - x)[x <= 0.5].max()
    x_f = mesh_f.vertices[:, 0]
    err_f = np.abs(dist_f.values - x_f)[x_f <= 0.5].max()
    elapsed = t_coarse + t_fine
    ok = (
        rep.converged
        and rep_f.converged
        and err <= 0.05
        and err_f < err
        and elapsed < 10.0
    )
    report_line(
        2,
        "strip sanity",
        ok,
        f"err(h=0.02)={err:.4f} <= 0.05, err(h=0.01)={err_f:.4f} decreased, "
        f"{elapsed:.1f}s < 10s",
    )


def test_criterion_3_annulus(annulus_run, annulus_fine_run):
    mesh, _, dist, rep, t0 = annulus_run
    mesh_f, _, dist_f, rep_f, t1 = annulus_fine_run
    case = ExactCase("annulus")
    norms = error_norms(dist, case)
    norms_f = error_norms(dist_f, case)
    elapsed = t0 + t1
    ok = (
        rep.converged
        and norms.linf <= 0.1
        and norms.near_linf <= norms.linf
        and norms_f.linf < norms.linf
        and elapsed < 30.0
    )
    report_line(
        3,
        "annulus",
        ok,
        f"Linf={norms.linf:.4f} <= 0.1, near={norms.near_linf:.4f}, "
        f"refined Linf={norms_f.linf:.4f} decreased, {elapsed:.1f}s < 30s",
    )


def test_criterion_4_slit_annulus(slit_fine_run):
    mesh, _, dist, rep, elapsed = slit_fine_run
    quality_ok = validate_mesh(mesh).angle_condition_ok
    finite = np.isfinite(dist.values)
    dmax = float(dist.values[finite].max())
    norms = error_norms(dist, ExactCase("slit-annulus"))
    ok = (
        mesh.n_vertices >= 20_000
        and quality_ok
        and rep.converged
        and 3.5 <= dmax <= 4.1
        and norms.n_excluded == 0
        and norms.linf <= 0.3
        and elapsed < 120.0
    )
    report_line(
        4,
        "slit annulus",
        ok,
        f"n={mesh.n_vertices} >= 20k, angle condition {'ok' if quality_ok else 'BAD'}, "
        f"dmax={dmax:.4f} in [3.5, 4.1], Linf={norms.linf:.4f} <= 0.3, "
        f"{elapsed:.1f}s < 120s",
    )


def test_criterion_5_iteration_scaling(slit_mid_run, slit_fine_run):
    _, _, _, rep_mid, _ = slit_mid_run
    _, _, _, rep_fine, _ = slit_fine_run
    ratio = rep_fine.outer_iterations / rep_mid.outer_iterations
    ok = rep_mid.converged and rep_fine.converged and 1.5 <= ratio <= 3.0
    report_line(
        5,
        "iteration scaling",
        ok,
        f"iterations {rep_mid.outer_iterations} -> {rep_fine.outer_iterations}, "
        f"ratio {ratio:.2f} in [1.5, 3.0]",
    )


def test_criterion_6_maximum_principle(strip_run, annulus_run, slit_small_run):
    details = []
    ok = True
    for label, (mesh, phi, _, rep, _) in (
        ("strip", strip_run),
        ("annulus", annulus_run),
        ("slit", slit_small_run),
    ):
        angle_ok = validate_mesh(mesh).angle_condition_ok
        lo = min(b[0] for b in rep.phi_bounds)
        hi = max(b[1] for b in rep.phi_bounds)
        bounded = 0.0 < lo and hi <= 1.0 + 1e-12
        hist = np.array(rep.soner_history)
        direction = 1.0 if (hist[1] - hist[0]).sum() >= 0 else -1.0
        monotone = (np.diff(hist, axis=0) * direction >= -1e-13).all()
        ok = ok and angle_ok and bounded and monotone and rep.converged
        details.append(
            f"{label}: angles={'ok' if angle_ok else 'BAD'} "
            f"phi in ({lo:.2e}, {hi:.6f}] monotone={monotone} "
            f"converged={rep.converged}"
        )
    report_line(6, "maximum principle + monotone fixed point", ok, "; ".join(details))


def test_criterion_7_robin_inferiority(slit_fine_mesh, slit_fine_run):
    _, _, dist_s, _, _ = slit_fine_run
    _, dist_r, _, _ = timed_solve(slit_fine_mesh, nu=0.01, bc_mode="robin")
    case = ExactCase("slit-annulus")
    linf_s = error_norms(dist_s, case).linf
    linf_r = error_norms(dist_r, case).linf
    ok = linf_r > linf_s
    report_line(
        7,
        "robin inferiority",
        ok,
        f"robin Linf={linf_r:.4f} > soner Linf={linf_s:.4f}",
    )


def test_criterion_8_solver_oracles(strip_run):
    # (a) iterative solver against dense factorization on small systems
    rng = np.random.default_rng(42)
    worst = 0.0
    for mesh, nu in (
        (fixtures.strip_mesh(h=0.05), 0.05),
        (fixtures.annulus_mesh(h=0.22), 0.1),
    ):
        fem = assemble_global(mesh, nu, fix_soner=True)
        assert 0 < fem.n_free <= 200
        b = rng.standard_normal(fem.n_free)
        x_cg, stats = spd_solve(fem.A, b, tol=1e-13)
        x_dense = dense_solve(fem.A, b)
        worst = max(worst, float(np.abs(x_cg - x_dense).max()))
    # (b) Godunov consistency of the converged distance field
    mesh, _, dist, rep, _ = strip_run
    d = dist.values
    gap = 0.0
    for i in mesh.soner_vertices:
        nbrs = mesh.neighbors(i)
        lengths = np.linalg.norm(mesh.vertices[nbrs] - mesh.vertices[i], axis=1)
        gap = max(gap, abs(d[i] - (d[nbrs] + lengths).min()))
    ok = worst <= 1e-8 and gap <= 1e-8
    report_line(
        8,
        "solver oracle equivalence",
        ok,
        f"cg-vs-dense max diff {worst:.2e} <= 1e-8, "
        f"godunov gap {gap:.2e} <= 1e-8",
    )


def test_criterion_9_gradient_property(strip_run):
    mesh, _, dist, _, _ = strip_run
    grads = element_gradients(mesh, dist.values)
    norms = np.linalg.norm(grads, axis=1)
    centroids = mesh.vertices[mesh.triangles].mean(axis=1)
    away = centroids[:, 0] > 0.1
    frac = float(((norms[away] >= 0.8) & (norms[away] <= 1.2)).mean())
    ok = frac >= 0.95
    report_line(
        9,
        "unit gradient",
        ok,
        f"{100 * frac:.1f}% of elements away from the source have "
        f"|grad d| in [0.8, 1.2] (need >= 95%)",
    )
