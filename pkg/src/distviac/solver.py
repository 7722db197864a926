"""Distance-field solves on a triangular mesh.

Three boundary treatments are available for the screened Poisson problem
``nu^2 lap(phi) = phi`` with ``phi = 1`` on the Dirichlet boundary:

* ``dirichlet``: prescribe ``phi = 1`` on every boundary vertex and solve
  once.  Cheap and reliable near the Dirichlet set.
* ``soner``: a two-step fixed point.  Outflow (Soner) vertices are frozen
  at their previous values while the interior is solved, then updated by a
  Godunov-type neighbor rule ``d_i = min_j (d_j + |a_i a_j|)`` expressed in
  the distance variable.  Starting from ``phi = 1`` everywhere the outflow
  values sweep monotonically to the fixed point.
* ``robin``: replace the nonlinear update by the linear outflow condition
  ``grad(phi) . n = -phi / nu`` (the unit-normal-derivative condition on
  the distance), adding the boundary mass ``nu * B``; one linear solve.

The distance field is recovered as ``d = -nu * log(phi)``.  All nonlinear
bookkeeping is done in the distance variable: for distances much larger
than ``nu`` the values of ``phi`` underflow long before ``d`` loses
meaning.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .assembly import assemble_global
from .errors import MeshMismatchError, NonPositivePhiError
from .mesh import VertexClass
from .sparse import SolveStats, spd_factorize, spd_solve

logger = logging.getLogger(__name__)

PHI = "phi"
DISTANCE = "distance"

#: phi above 1 + MAX_PRINCIPLE_TOL counts as a maximum-principle violation
MAX_PRINCIPLE_TOL = 1e-12

#: free-vertex count up to which "auto" prefers the factorized direct path
DIRECT_SOLVER_LIMIT = 300_000


@dataclass
class SolverConfig:
    """Run configuration shared by all solve modes."""

    nu: float = 0.1
    bc_mode: str = "soner"  # dirichlet | soner | robin
    reducer: str = "min"  # min reproduces the Godunov relation; max is
    #                       the literal transcription kept for comparison
    fp_tol: float = 1e-12
    fp_max_iter: int = 5000
    lin_tol: float = 1e-12
    lin_max_iter: int | None = None
    linear_solver: str = "auto"  # auto | cg | direct
    lumped_mass: bool = False
    warm_start_robin: bool = False
    clamp: str = "zero"  # zero: phi > 1 maps to d = 0 (counted)
    track_history: bool = False  # keep per-iteration Soner values (tests)

    def __post_init__(self):
        if self.nu <= 0.0:
            raise ValueError(f"nu must be positive, got {self.nu}")
        if self.fp_tol <= 0.0:
            raise ValueError(f"fp_tol must be positive, got {self.fp_tol}")
        if self.bc_mode not in ("dirichlet", "soner", "robin"):
            raise ValueError(f"unknown bc_mode {self.bc_mode!r}")
        if self.reducer not in ("min", "max"):
            raise ValueError(f"unknown reducer {self.reducer!r}")
        if self.linear_solver not in ("auto", "cg", "direct"):
            raise ValueError(f"unknown linear_solver {self.linear_solver!r}")
        if self.clamp not in ("zero", "keep"):
            raise ValueError(f"unknown clamp policy {self.clamp!r}")


@dataclass
class ScalarField:
    """Per-vertex values bound to a mesh; ``kind`` is ``phi`` or ``distance``."""

    mesh: object
    values: np.ndarray
    kind: str = PHI

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (self.mesh.n_vertices,):
            raise MeshMismatchError(
                f"field has {self.values.shape} values for a mesh with "
                f"{self.mesh.n_vertices} vertices"
            )


@dataclass
class SolveReport:
    mode: str
    outer_iterations: int = 0
    sup_changes_phi: list = field(default_factory=list)
    sup_changes_distance: list = field(default_factory=list)
    linear_stats: list = field(default_factory=list)
    phi_bounds: list = field(default_factory=list)  # (min, max) per iterate
    soner_history: list = field(default_factory=list)  # only when tracked
    converged: bool = False
    max_principle_violated: bool = False
    clamped_vertex_count: int = 0
    nonpositive_phi_count: int = 0
    wall_time: float = 0.0

    def as_dict(self):
        return {
            "mode": self.mode,
            "outer_iterations": self.outer_iterations,
            "sup_changes_phi": [float(c) for c in self.sup_changes_phi],
            "sup_changes_distance": [float(c) for c in self.sup_changes_distance],
            "linear_iterations_total": int(
                sum(s.iterations for s in self.linear_stats)
            ),
            "converged": self.converged,
            "max_principle_violated": self.max_principle_violated,
            "clamped_vertex_count": self.clamped_vertex_count,
            "nonpositive_phi_count": self.nonpositive_phi_count,
        }


# -- linear path ----------------------------------------------------------------


class _LinearPath:
    """One linear-solve strategy for a fixed reduced matrix.

    ``auto`` prefers the reusable factorization: the solve is then
    componentwise stable on these M-matrix systems, which matters once
    phi spans hundreds of orders of magnitude (nu much smaller than the
    domain size).  ``cg`` keeps the Jacobi-preconditioned iterative path,
    warm-started across outer iterations.
    """

    def __init__(self, A, cfg):
        choice = cfg.linear_solver
        if choice == "auto":
            choice = "direct" if A.n <= DIRECT_SOLVER_LIMIT else "cg"
        self.choice = choice
        self.A = A
        self.cfg = cfg
        self._factor = spd_factorize(A) if choice == "direct" else None
        self._prev = None

    def solve(self, b):
        if self.A.n == 0:
            return np.zeros(0), SolveStats(0, 0.0, 0.0)
        if self._factor is not None:
            t0 = time.perf_counter()
            x = self._factor.solve(b)
            r = b - self.A @ x
            nb = float(np.linalg.norm(b))
            relres = float(np.linalg.norm(r)) / nb if nb else 0.0
            return x, SolveStats(1, relres, time.perf_counter() - t0)
        x, stats = spd_solve(
            self.A, b, tol=self.cfg.lin_tol, max_iter=self.cfg.lin_max_iter,
            x0=self._prev,
        )
        self._prev = x
        return x, stats


# -- distance recovery ------------------------------------------------------------


@dataclass
class ClampInfo:
    overshoot_clamped: int = 0
    nonpositive: int = 0


def recover_distance(phi, nu, clamp="zero"):
    """Map a phi field to the distance field ``d = -nu log(phi)``.

    Vertices with ``phi > 1`` (maximum-principle overshoot on distorted
    meshes) are clamped to distance 0 and counted; vertices with
    ``phi <= 0`` get an infinite sentinel and are counted.  Dirichlet
    vertices are forced to exactly 0.  Returns ``(field, ClampInfo)``.
    """
    values = phi.values
    if not np.isfinite(values).all():
        raise ValueError("phi field contains non-finite values")
    info = ClampInfo()

    d = np.full_like(values, np.inf)
    positive = values > 0.0
    info.nonpositive = int((~positive).sum())
    with np.errstate(divide="ignore"):
        d[positive] = -nu * np.log(values[positive])

    over = values > 1.0
    info.overshoot_clamped = int(over.sum())
    if clamp == "zero":
        d[over] = 0.0

    d[phi.mesh.vertex_class == VertexClass.DIRICHLET] = 0.0
    return ScalarField(phi.mesh, d, DISTANCE), info


# -- Soner update ------------------------------------------------------------------


def _soner_neighbor_arrays(mesh):
    """CSR neighbor slabs restricted to Soner-vertex rows, plus edge lengths."""
    soner = mesh.soner_vertices
    counts = np.diff(mesh.nbr_indptr)
    seg_ptr = np.concatenate([[0], np.cumsum(counts[soner])])
    seg_idx = np.concatenate(
        [mesh.nbr_indices[mesh.nbr_indptr[i]: mesh.nbr_indptr[i + 1]] for i in soner]
    ) if len(soner) else np.zeros(0, dtype=np.int64)
    lengths = np.linalg.norm(
        mesh.vertices[np.repeat(soner, counts[soner])] - mesh.vertices[seg_idx],
        axis=1,
    )
    return soner, seg_ptr, seg_idx, lengths


def _reduce_over_neighbors(d_tilde, seg_ptr, seg_idx, lengths, reducer):
    """Per Soner vertex: reducer over neighbors of (d_j + edge length).

    Neighbors with unusable (infinite) distance are skipped by choosing a
    sentinel the reducer ignores; a row left with no usable neighbor
    reduces to the sentinel and is reported by the caller.
    """
    vals = d_tilde[seg_idx] + lengths
    if reducer == "min":
        vals = np.where(np.isfinite(vals), vals, np.inf)
        return np.minimum.reduceat(vals, seg_ptr[:-1])
    vals = np.where(np.isfinite(vals), vals, -np.inf)
    return np.maximum.reduceat(vals, seg_ptr[:-1])


def soner_update(phi_tilde, mesh, nu, reducer="min"):
    """Nonlinear boundary update: new phi values on the Soner vertices.

    For each Soner vertex ``i`` the neighbor distances
    ``d_j = -nu log(phi_j)`` are combined as
    ``v_i = reducer_j (d_j + |a_i a_j|)`` and ``phi_i = exp(-v_i / nu)``.
    With the ``min`` reducer this realizes the Godunov relation
    ``u_i = min_j (u_j + |a_i a_j|)``.

    Raises
    ------
    NonPositivePhiError
        Some Soner vertex has no neighbor with positive phi, so no
        logarithm in its update is defined.
    """
    if phi_tilde.mesh is not mesh:
        raise MeshMismatchError("phi_tilde is bound to a different mesh")
    values = phi_tilde.values
    d_tilde = np.full(mesh.n_vertices, np.inf)
    pos = values > 0.0
    d_tilde[pos] = -nu * np.log(values[pos])

    soner, seg_ptr, seg_idx, lengths = _soner_neighbor_arrays(mesh)
    if len(soner) == 0:
        return np.zeros(0)
    v = _reduce_over_neighbors(d_tilde, seg_ptr, seg_idx, lengths, reducer)
    if not np.isfinite(v).all():
        bad = soner[~np.isfinite(v)]
        raise NonPositivePhiError(
            f"no neighbor of Soner vertex {int(bad[0])} has positive phi"
        )
    return np.exp(-v / nu)


# -- solve modes --------------------------------------------------------------------


def _check_max_principle(phi, report):
    report.phi_bounds.append((float(phi.min()), float(phi.max())))
    if (phi <= 0.0).any() or (phi > 1.0 + MAX_PRINCIPLE_TOL).any():
        report.max_principle_violated = True


def solve_dirichlet(mesh, cfg):
    """Prescribe ``phi = 1`` on every boundary vertex (Soner tags
    overridden) and solve the linear system once."""
    t0 = time.perf_counter()
    fem = assemble_global(mesh, cfg.nu, fix_soner=True, lumped=cfg.lumped_mass)
    path = _LinearPath(fem.A, cfg)
    x, stats = path.solve(fem.b)
    phi = fem.expand(x, fem.fixed_values)

    report = SolveReport(mode="dirichlet", outer_iterations=1,
                         linear_stats=[stats], converged=stats.converged)
    _check_max_principle(phi, report)
    report.wall_time = time.perf_counter() - t0
    return ScalarField(mesh, phi, PHI), report


def solve_robin(mesh, cfg):
    """Linear outflow treatment: solve ``(M + nu^2 R + nu B) phi = lift``
    with the Soner vertices free."""
    t0 = time.perf_counter()
    fem = assemble_global(mesh, cfg.nu, robin=True, lumped=cfg.lumped_mass)
    path = _LinearPath(fem.A, cfg)
    x, stats = path.solve(fem.b)
    phi = fem.expand(x, fem.fixed_values)

    report = SolveReport(mode="robin", outer_iterations=1,
                         linear_stats=[stats], converged=stats.converged)
    _check_max_principle(phi, report)
    report.wall_time = time.perf_counter() - t0
    return ScalarField(mesh, phi, PHI), report


def solve_soner(mesh, cfg):
    """Fixed-point iteration between interior solves and the Godunov-type
    boundary update.

    The system matrix is assembled and factorized once; each outer
    iteration only rebuilds the lift vector from the frozen boundary
    values, solves, and updates the Soner values in the distance variable.
    Convergence requires the sup-change on the Soner set to drop to
    ``fp_tol`` in *both* variables: with distances spanning many
    multiples of ``nu`` the phi-changes of far vertices underflow the
    tolerance long before their distances settle, so the phi criterion
    alone would stop the sweep early.  In the maximum-principle regime
    the iteration is monotone and reaches an exact floating-point fixed
    point, where both changes are zero.
    """
    t0 = time.perf_counter()
    soner = mesh.soner_vertices
    report = SolveReport(mode="soner")

    if len(soner) == 0:
        # nothing to iterate on: identical to the all-Dirichlet solve
        phi, inner = solve_dirichlet(mesh, cfg)
        inner.mode = "soner"
        return phi, inner

    fem = assemble_global(mesh, cfg.nu, fix_soner=True, lumped=cfg.lumped_mass)
    path = _LinearPath(fem.A, cfg)
    _, seg_ptr, seg_idx, lengths = _soner_neighbor_arrays(mesh)

    d_soner = np.zeros(len(soner))  # phi^0 = 1 on the outflow boundary
    if cfg.warm_start_robin:
        phi_r, _ = solve_robin(mesh, cfg)
        start = np.maximum(phi_r.values[soner], 1e-300)  # guard the log
        d_soner = np.maximum(-cfg.nu * np.log(start), 0.0)

    g = np.ones(mesh.n_vertices)
    phi_tilde = g.copy()
    for it in range(1, cfg.fp_max_iter + 1):
        g[soner] = np.exp(-d_soner / cfg.nu)
        b = fem.relift(g)
        x, stats = path.solve(b)
        report.linear_stats.append(stats)
        phi_tilde = fem.expand(x, g)
        _check_max_principle(phi_tilde, report)

        d_tilde = np.full(mesh.n_vertices, np.inf)
        pos = phi_tilde > 0.0
        d_tilde[pos] = -cfg.nu * np.log(phi_tilde[pos])

        v = _reduce_over_neighbors(d_tilde, seg_ptr, seg_idx, lengths, cfg.reducer)
        if not np.isfinite(v).all():
            bad = soner[~np.isfinite(v)]
            raise NonPositivePhiError(
                f"no neighbor of Soner vertex {int(bad[0])} has positive phi "
                f"at outer iteration {it}"
            )

        change_d = float(np.abs(v - d_soner).max())
        change_phi = float(np.abs(np.exp(-v / cfg.nu) - g[soner]).max())
        report.sup_changes_distance.append(change_d)
        report.sup_changes_phi.append(change_phi)
        d_soner = v
        if cfg.track_history:
            report.soner_history.append(d_soner.copy())
        report.outer_iterations = it
        if change_phi <= cfg.fp_tol and change_d <= cfg.fp_tol:
            report.converged = True
            break
    else:
        logger.warning(
            "fixed point not converged after %d iterations "
            "(last sup-changes: phi %.3e, distance %.3e)",
            cfg.fp_max_iter,
            report.sup_changes_phi[-1],
            report.sup_changes_distance[-1],
        )

    phi = phi_tilde.copy()
    phi[soner] = np.exp(-d_soner / cfg.nu)
    report.wall_time = time.perf_counter() - t0
    return ScalarField(mesh, phi, PHI), report


_MODES = {"dirichlet": solve_dirichlet, "soner": solve_soner, "robin": solve_robin}


def solve(mesh, cfg):
    """Run the configured mode; returns ``(phi, distance, report)`` with
    clamp counts folded into the report."""
    phi, report = _MODES[cfg.bc_mode](mesh, cfg)
    dist, info = recover_distance(phi, cfg.nu, clamp=cfg.clamp)
    report.clamped_vertex_count = info.overshoot_clamped
    report.nonpositive_phi_count += info.nonpositive
    return phi, dist, report
