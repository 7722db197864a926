"""Matplotlib renderers for solve, compare, and study artifacts.

Everything goes straight to files (Agg backend); the CLI calls these
alongside its CSV/VTK output so a run leaves inspectable figures behind.
"""

from __future__ import annotations

import numpy as np
import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.tri import Triangulation  # noqa: E402

DPI = 150
N_ISOLINES = 30


def _triangulation(mesh):
    return Triangulation(
        mesh.vertices[:, 0], mesh.vertices[:, 1], mesh.triangles
    )


def _finite(values):
    v = np.asarray(values, dtype=np.float64)
    finite = np.isfinite(v)
    if finite.all():
        return v
    cap = v[finite].max() if finite.any() else 0.0
    return np.where(finite, v, cap)


def save_field_figure(mesh, values, path, title="", isolines=N_ISOLINES):
    """Filled field with isolines, equal aspect."""
    tri = _triangulation(mesh)
    v = _finite(values)
    fig, ax = plt.subplots(figsize=(6.0, 5.0))
    im = ax.tripcolor(tri, v, shading="gouraud", cmap="viridis")
    if v.max() > v.min():
        ax.tricontour(
            tri, v, levels=isolines, colors="white", linewidths=0.4, alpha=0.7
        )
    fig.colorbar(im, ax=ax, shrink=0.9)
    ax.set_aspect("equal")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)


def save_comparison_figure(mesh, computed, exact, path, title="", isolines=N_ISOLINES):
    """Overlay of isolines: exact in red, computed in black, over the
    exact field as background."""
    tri = _triangulation(mesh)
    comp = _finite(computed)
    ex = _finite(exact)
    lo, hi = float(ex.min()), float(ex.max())
    levels = np.linspace(lo, hi, isolines) if hi > lo else isolines
    fig, ax = plt.subplots(figsize=(6.0, 5.0))
    im = ax.tripcolor(tri, ex, shading="gouraud", cmap="viridis", alpha=0.85)
    ax.tricontour(tri, ex, levels=levels, colors="red", linewidths=0.7)
    ax.tricontour(tri, comp, levels=levels, colors="black", linewidths=0.7)
    fig.colorbar(im, ax=ax, shrink=0.9)
    ax.set_aspect("equal")
    ax.set_title(title or "exact (red) vs computed (black)")
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)


def save_convergence_figure(report, path):
    """Sup-change per outer iteration, log scale, both variables."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    its = np.arange(1, len(report.sup_changes_phi) + 1)
    floor = 1e-300
    ax.semilogy(
        its, np.maximum(report.sup_changes_phi, floor), label="sup-change of phi"
    )
    ax.semilogy(
        its,
        np.maximum(report.sup_changes_distance, floor),
        label="sup-change of distance",
        linestyle="--",
    )
    ax.set_xlabel("outer iteration")
    ax.set_ylabel("sup-change on the outflow boundary")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)


def save_study_figure(rows, path):
    """Iterations and error versus vertex count, log-log."""
    n = np.array([row["n_vertices"] for row in rows], dtype=float)
    iters = np.array([row["outer_iterations"] for row in rows], dtype=float)
    linf = np.array([row.get("linf", np.nan) for row in rows], dtype=float)
    fig, axes = plt.subplots(1, 2, figsize=(9.0, 4.0))
    axes[0].loglog(n, iters, "o-")
    axes[0].set_xlabel("vertices")
    axes[0].set_ylabel("outer iterations")
    axes[0].grid(True, which="both", alpha=0.3)
    if np.isfinite(linf).any():
        axes[1].loglog(n, linf, "s-", color="tab:red")
    axes[1].set_xlabel("vertices")
    axes[1].set_ylabel("L-inf error")
    axes[1].grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
