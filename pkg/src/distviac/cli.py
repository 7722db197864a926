"""Command-line interface: solve | validate | compare | study.

Every run writes a machine-readable JSON report next to its artifacts;
timing lives under the report's "timing" key so identical runs produce
identical reports apart from it.  Exit codes: 0 success, 1 parse/config
error, 2 solver failure, 3 I/O or locking error, 4 validation failure
under --strict.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SOLVER = 2
EXIT_IO = 3
EXIT_STRICT = 4

CASES = ("annulus", "slit-annulus", "strip")


def _apply_thread_cap():
    cap = os.environ.get("DISTVIAC_THREADS")
    if not cap:
        return
    for var in (
        "OMP_NUM_THREADS",
        "OPENBLAS_NUM_THREADS",
        "MKL_NUM_THREADS",
        "NUMEXPR_NUM_THREADS",
    ):
        os.environ.setdefault(var, cap)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="distviac",
        description="Approximate distance fields on triangular meshes via "
        "a screened-Poisson transform.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_mesh_args(p, multiple=False):
        p.add_argument(
            "--mesh",
            required=True,
            action="append" if multiple else "store",
            help="mesh file" + (" (repeat for each refinement)" if multiple else ""),
        )
        p.add_argument(
            "--format",
            choices=("auto", "gmsh", "native"),
            default="auto",
            help="mesh file format (default: sniff the first line)",
        )
        p.add_argument(
            "--tag-dirichlet",
            default="gammad,1",
            help="comma list of physical names/ids mapped to the Dirichlet "
            "boundary (gmsh input)",
        )
        p.add_argument(
            "--tag-soner",
            default="gammas,2",
            help="comma list of physical names/ids mapped to the Soner boundary",
        )

    def add_solver_args(p):
        p.add_argument("--nu", type=float, default=0.1, help="viscosity length scale")
        p.add_argument(
            "--bc",
            choices=("dirichlet", "soner", "robin"),
            default="soner",
            help="outflow boundary treatment",
        )
        p.add_argument("--reducer", choices=("min", "max"), default="min")
        p.add_argument("--fp-tol", type=float, default=1e-12)
        p.add_argument("--fp-max-iter", type=int, default=5000)
        p.add_argument("--lin-tol", type=float, default=1e-12)
        p.add_argument(
            "--lin-solver", choices=("auto", "cg", "direct"), default="auto"
        )
        p.add_argument("--lumped-mass", action="store_true")
        p.add_argument("--warm-start-robin", action="store_true")

    def add_output_args(p):
        p.add_argument(
            "--out-prefix",
            default="distviac_out/run",
            help="prefix for all written artifacts",
        )
        p.add_argument(
            "--no-figures",
            action="store_true",
            help="skip rendering PNG figures",
        )

    p = sub.add_parser("solve", help="solve one mesh and write fields")
    add_mesh_args(p)
    add_solver_args(p)
    p.add_argument(
        "--case",
        choices=CASES,
        help="attach the named exact solution to the CSV output",
    )
    add_output_args(p)

    p = sub.add_parser("validate", help="mesh quality / angle-condition report")
    add_mesh_args(p)
    p.add_argument(
        "--strict",
        action="store_true",
        help="exit 4 when the angle condition fails",
    )
    add_output_args(p)

    p = sub.add_parser("compare", help="solve and compare against an exact case")
    add_mesh_args(p)
    add_solver_args(p)
    p.add_argument("--case", choices=CASES, required=True)
    p.add_argument(
        "--both",
        action="store_true",
        help="run soner and robin modes and print the L-inf comparison",
    )
    add_output_args(p)

    p = sub.add_parser("study", help="iteration/error scaling over refinements")
    add_mesh_args(p, multiple=True)
    add_solver_args(p)
    p.add_argument("--case", choices=CASES, required=True)
    add_output_args(p)

    return parser


def _parse_tags(spec):
    return tuple(tok.strip() for tok in spec.split(",") if tok.strip())


def _load(args, path):
    from .mesh import load_mesh

    fmt = {"gmsh": "gmsh22", "native": "native", "auto": "auto"}[args.format]
    return load_mesh(
        path,
        fmt=fmt,
        dirichlet_keys=_parse_tags(args.tag_dirichlet),
        soner_keys=_parse_tags(args.tag_soner),
    )


def _solver_config(args):
    from .solver import SolverConfig

    return SolverConfig(
        nu=args.nu,
        bc_mode=args.bc,
        reducer=args.reducer,
        fp_tol=args.fp_tol,
        fp_max_iter=args.fp_max_iter,
        lin_tol=args.lin_tol,
        linear_solver=args.lin_solver,
        lumped_mass=args.lumped_mass,
        warm_start_robin=args.warm_start_robin,
    )


def _config_payload(args, keys):
    return {k: getattr(args, k.replace("-", "_")) for k in keys}

_SOLVER_KEYS = (
    "nu", "bc", "reducer", "fp_tol", "fp_max_iter", "lin_tol", "lin_solver",
    "lumped_mass", "warm_start_robin", "format",
)


def _mesh_payload(mesh):
    return {
        "n_vertices": mesh.n_vertices,
        "n_triangles": mesh.n_triangles,
        "n_dirichlet": int(len(mesh.dirichlet_vertices)),
        "n_soner": int(len(mesh.soner_vertices)),
        "n_reoriented": mesh.n_reoriented,
    }


def _exact_for(args, mesh):
    from .oracles import ExactCase

    if getattr(args, "case", None) is None:
        return None
    return ExactCase.for_mesh(args.case, mesh)


def cmd_solve(args):
    import numpy as np

    from . import plots, report as rep
    from .solver import solve

    t0 = time.perf_counter()
    mesh = _load(args, args.mesh)
    cfg = _solver_config(args)
    case = _exact_for(args, mesh)
    phi, dist, solve_report = solve(mesh, cfg)
    exact = case.evaluate(mesh.vertices) if case else None

    prefix = args.out_prefix
    artifacts = {}
    with rep.output_lock(prefix):
        scalars = {"phi": phi.values, "distance": dist.values}
        rep.write_vtk(f"{prefix}.vtk", mesh, scalars)
        artifacts["vtk"] = f"{prefix}.vtk"
        rep.write_csv(f"{prefix}.csv", mesh, phi.values, dist.values, exact)
        artifacts["csv"] = f"{prefix}.csv"
        if not args.no_figures:
            plots.save_field_figure(
                mesh, dist.values, f"{prefix}_distance.png", title="distance"
            )
            artifacts["distance_figure"] = f"{prefix}_distance.png"
            if solve_report.sup_changes_phi:
                plots.save_convergence_figure(
                    solve_report, f"{prefix}_convergence.png"
                )
                artifacts["convergence_figure"] = f"{prefix}_convergence.png"
        payload = {
            "command": "solve",
            "config": _config_payload(args, _SOLVER_KEYS),
            "mesh": _mesh_payload(mesh),
            "solve": solve_report.as_dict(),
            "artifacts": artifacts,
            "timing": {
                "total_s": time.perf_counter() - t0,
                "solve_s": solve_report.wall_time,
            },
        }
        if case:
            from .oracles import error_norms

            payload["norms"] = error_norms(dist, case).as_dict()
        rep.write_json_report(f"{prefix}_report.json", payload)

    print(
        f"{args.bc} solve on {mesh.n_vertices} vertices: "
        f"{solve_report.outer_iterations} outer iterations, "
        f"converged={solve_report.converged}"
    )
    return EXIT_OK if solve_report.converged else EXIT_SOLVER


def cmd_validate(args):
    import numpy as np

    from . import report as rep
    from .mesh import validate_mesh

    mesh = _load(args, args.mesh)
    quality = validate_mesh(mesh)
    print(
        f"{args.mesh}: {quality.n_vertices} vertices, "
        f"{quality.n_triangles} triangles"
    )
    print(
        f"  angles: min {np.degrees(quality.min_angle):.2f} deg, "
        f"max {np.degrees(quality.max_angle):.2f} deg"
    )
    print(f"  reoriented triangles: {quality.n_reoriented}")
    if quality.angle_condition_ok:
        print("  angle condition: OK")
    else:
        print(f"  angle condition: FAILED on {len(quality.violations)} edges")
        for i, j, total in quality.violations[:10]:
            print(f"    edge ({i}, {j}): opposite angles sum to {total:.6f} rad")
    with rep.output_lock(args.out_prefix):
        rep.write_json_report(
            f"{args.out_prefix}_quality.json",
            {"command": "validate", "mesh_file": args.mesh, **quality.as_dict()},
        )
    if args.strict and not quality.angle_condition_ok:
        return EXIT_STRICT
    return EXIT_OK


def _run_mode(mesh, args, bc_mode):
    from .oracles import error_norms
    from .solver import solve

    cfg = _solver_config(args)
    cfg.bc_mode = bc_mode
    phi, dist, solve_report = solve(mesh, cfg)
    case = _exact_for(args, mesh)
    norms = error_norms(dist, case)
    return phi, dist, solve_report, norms


def cmd_compare(args):
    import numpy as np

    from . import plots, report as rep

    t0 = time.perf_counter()
    mesh = _load(args, args.mesh)
    case = _exact_for(args, mesh)
    exact = case.evaluate(mesh.vertices)
    modes = ("soner", "robin") if args.both else (args.bc,)

    prefix = args.out_prefix
    payload = {
        "command": "compare",
        "case": args.case,
        "config": _config_payload(args, _SOLVER_KEYS),
        "mesh": _mesh_payload(mesh),
        "modes": {},
        "artifacts": {},
        "timing": {},
    }
    ok = True
    with rep.output_lock(prefix):
        for mode in modes:
            phi, dist, solve_report, norms = _run_mode(mesh, args, mode)
            ok = ok and solve_report.converged
            tag = f"{prefix}_{mode}"
            rep.write_vtk(
                f"{tag}.vtk",
                mesh,
                {
                    "phi": phi.values,
                    "distance": dist.values,
                    "exact": exact,
                    "abs_error": norms.errors,
                },
            )
            rep.write_csv(f"{tag}.csv", mesh, phi.values, dist.values, exact)
            if not args.no_figures:
                plots.save_comparison_figure(
                    mesh, dist.values, exact, f"{tag}_isolines.png",
                    title=f"{args.case}: exact (red) vs {mode} (black)",
                )
                plots.save_field_figure(
                    mesh,
                    np.where(np.isfinite(norms.errors), norms.errors, 0.0),
                    f"{tag}_error.png",
                    title=f"absolute error ({mode})",
                )
            payload["modes"][mode] = {
                "solve": solve_report.as_dict(),
                "norms": norms.as_dict(),
            }
            payload["artifacts"][mode] = {
                "vtk": f"{tag}.vtk",
                "csv": f"{tag}.csv",
            }
            print(
                f"{mode}: L-inf {norms.linf:.6g}, L2 {norms.l2:.6g}, "
                f"near-boundary L-inf {norms.near_linf:.6g}"
            )
        if args.both:
            li = {m: payload["modes"][m]["norms"]["linf"] for m in modes}
            verdict = ">" if li["robin"] > li["soner"] else "<="
            print(
                f"comparison: robin L-inf {li['robin']:.6g} {verdict} "
                f"soner L-inf {li['soner']:.6g}"
            )
        payload["timing"]["total_s"] = time.perf_counter() - t0
        rep.write_json_report(f"{prefix}_report.json", payload)
    return EXIT_OK if ok else EXIT_SOLVER


def cmd_study(args):
    from . import plots, report as rep

    if len(args.mesh) < 2:
        print("study needs at least two meshes (--mesh, repeated)", file=sys.stderr)
        return EXIT_CONFIG

    t0 = time.perf_counter()
    rows = []
    prev_iters = None
    prefix = args.out_prefix
    ok = True
    with rep.output_lock(prefix):
        for path in args.mesh:
            mesh = _load(args, path)
            phi, dist, solve_report, norms = _run_mode(mesh, args, args.bc)
            ok = ok and solve_report.converged
            ratio = (
                solve_report.outer_iterations / prev_iters
                if prev_iters
                else float("nan")
            )
            prev_iters = solve_report.outer_iterations
            rows.append(
                {
                    "mesh": path,
                    "n_vertices": mesh.n_vertices,
                    "outer_iterations": solve_report.outer_iterations,
                    "iteration_ratio": float(ratio),
                    "linf": norms.linf,
                    "l2": norms.l2,
                    "near_linf": norms.near_linf,
                    "converged": solve_report.converged,
                    "wall_time_s": solve_report.wall_time,
                }
            )
            print(
                f"{path}: {mesh.n_vertices} vertices, "
                f"{solve_report.outer_iterations} iterations, "
                f"L-inf {norms.linf:.6g}"
            )
        rep.write_study_csv(f"{prefix}_study.csv", rows)
        if not args.no_figures:
            plots.save_study_figure(rows, f"{prefix}_study.png")
        payload = {
            "command": "study",
            "case": args.case,
            "config": _config_payload(args, _SOLVER_KEYS),
            "rows": [
                {k: v for k, v in row.items() if k != "wall_time_s"}
                for row in rows
            ],
            "timing": {
                "total_s": time.perf_counter() - t0,
                "per_mesh_s": [row["wall_time_s"] for row in rows],
            },
        }
        rep.write_json_report(f"{prefix}_report.json", payload)
    return EXIT_OK if ok else EXIT_SOLVER


_COMMANDS = {
    "solve": cmd_solve,
    "validate": cmd_validate,
    "compare": cmd_compare,
    "study": cmd_study,
}


def main(argv=None):
    _apply_thread_cap()
    args = build_parser().parse_args(argv)

    from .errors import (
        DistviacError,
        NonPositivePhiError,
        OutputLockedError,
        ParseError,
        TagError,
        TopologyError,
    )

    try:
        return _COMMANDS[args.command](args)
    except (ParseError, TagError, TopologyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NonPositivePhiError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OutputLockedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except DistviacError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
