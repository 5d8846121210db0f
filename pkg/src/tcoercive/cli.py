"""Command line interface: ``tcoercive <subcommand> CONFIG [--out DIR] [--seed N] [--threads N]``.

Exit codes: 0 success, 1 invalid input, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import contextlib
import os
import sys

from .errors import IoError, NumericalError, TCoerciveError, ValidationError

COMMANDS = ("bounds", "mesh", "solve", "study", "evp", "oracle")


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with status 1 (invalid input) instead of argparse's 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _parser():
    p = _Parser(prog="tcoercive", description="T-coercive FEM for sign-changing coefficients")
    sub = p.add_subparsers(dest="command", metavar="{" + ",".join(COMMANDS) + "}")
    sub.required = True
    helps = {
        "bounds": "print reflection norm bounds and admissible band widths",
        "mesh": "generate and write meshes for every h",
        "solve": "solve one source problem (first h) and write VTK + CSV",
        "study": "run a convergence study over the h list",
        "evp": "solve the dispersive eigenvalue problem with the contour method",
        "oracle": "roots of the disc dispersion relation",
    }
    for name in COMMANDS:
        s = sub.add_parser(name, help=helps[name])
        s.add_argument("config", help="TOML configuration file")
        s.add_argument("--out", default=None, help="output directory (default: run.out)")
        s.add_argument("--seed", type=int, default=None, help="random seed (default: run.seed)")
        s.add_argument("--threads", type=int, default=None, help="BLAS thread limit")
    return p


def _threads(n):
    if n is None:
        return contextlib.nullcontext()
    if n < 1:
        raise ValidationError("must be >= 1", "--threads")
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def _outdir(cfg, args):
    out = args.out if args.out is not None else cfg.run["out"]
    try:
        os.makedirs(out, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create {out}: {exc}") from exc
    return out


def _cmd_bounds(cfg, args, out):
    from .geometry import MINUS, PLUS, max_delta_for_contrast, norm_bound
    from .output import write_rows

    k_plus = abs(cfg.sigma.plus / cfg.sigma.minus)
    rows = []
    print(f"delta = {cfg.delta:.6g}, contrast k+ = {k_plus:.6g}, k- = {1 / k_plus:.6g}")
    for i, p in enumerate(cfg.patches):
        kappa = max(abs(c) for c in p.curvatures())
        bm = norm_bound(p, cfg.delta, MINUS)
        bp = norm_bound(p, cfg.delta, PLUS)
        kk = max(k_plus, 1 / k_plus)
        dmax = max_delta_for_contrast(kappa, kk) if kk > 1 else float("nan")
        name = type(p).__name__
        print(f"patch {i} {name}: kappa={kappa:.6g} |R-|<={bm:.6g} |R+|<={bp:.6g} max_delta={dmax:.6g}")
        rows.append((i, name, kappa, bm, bp, dmax))
    write_rows(os.path.join(out, "bounds.csv"),
               ("patch", "kind", "kappa", "bound_minus", "bound_plus", "max_delta"), rows)


def _cmd_mesh(cfg, args, out):
    from .mesh import write_mesh

    prob = cfg.problem()
    for i, h in enumerate(cfg.hs):
        m = prob.mesh(h)
        path = os.path.join(out, f"mesh_{i}.msh")
        write_mesh(m, path)
        print(f"h={h:g}: {len(m.vertices)} vertices, {m.n_elements} elements -> {path}")


def _disc_reference(prob):
    return (prob.u, prob.grad_u) if prob.has_exact else None


def _cmd_solve(cfg, args, out):
    from .output import write_rows, write_solution_vtk
    from .solver import error_norms, solve_problem

    d = cfg.discretization
    prob = cfg.problem()
    h = cfg.hs[0]
    res = solve_problem(prob, h, d["order"], d["method"], d["subdivisions"], d["degree"])
    write_solution_vtk(res.space.mesh, res.space, res.u, os.path.join(out, "solution.vtk"))
    ref = _disc_reference(prob)
    l2 = h1 = float("nan")
    if ref is not None:
        l2, h1 = error_norms(res.space, res.u, *ref)
    write_rows(os.path.join(out, "solve.csv"), ("h", "dofs", "l2_rel", "h1_rel"),
               [(float(h), res.space.ndofs, float(l2), float(h1))])
    print(f"h={h:g} dofs={res.space.ndofs} l2_rel={l2:.4e} h1_rel={h1:.4e}")


def _cmd_study(cfg, args, out):
    from .solver import reference_field, run_convergence_study, solve_problem

    d = cfg.discretization
    prob = cfg.problem()
    ref = _disc_reference(prob)
    if ref is None:
        h_ref = d["reference_h"] or min(cfg.hs) / 4.0
        r = solve_problem(prob, h_ref, d["order"], d["reference_method"], d["subdivisions"], d["degree"])
        ref = reference_field(r.space, r.u)
    report = run_convergence_study(prob, cfg.hs, d["order"], d["method"], d["subdivisions"],
                                   d["degree"], reference=ref)
    report.write_csv(os.path.join(out, "study.csv"))
    sys.stdout.write(report.to_csv())


def _cmd_evp(cfg, args, out):
    from .assembly import default_profile
    from .evp import beyn_solve, build_pencil, law_eval
    from .fespace import FeSpace
    from .geometry import modified_side
    from .output import write_eigenvalues_csv

    if cfg.kind != "disc" and cfg.kind != "rounded_triangle":
        raise ValidationError("the eigenvalue solver needs a meshable geometry", "geometry.kind")
    law = cfg.lorentz_law()
    cc = cfg.contour_config()
    d = cfg.discretization
    prob = cfg.problem()
    mesh = prob.mesh(cfg.hs[0])
    space = FeSpace(mesh, d["order"])
    side = modified_side(law_eval(law, cc.center.real, "minus")[0], law_eval(law, cc.center.real, "plus")[0])
    pencil = build_pencil(space, law, mesh.tubes, default_profile(cfg.delta), side, d["method"])
    seed = args.seed if args.seed is not None else cfg.run["seed"]
    res = beyn_solve(pencil, cc, seed=seed)
    write_eigenvalues_csv(os.path.join(out, "eigenvalues.csv"), res.pairs)
    print(f"rank={res.rank} eigenvalues={len(res.pairs)}")
    for p in res.pairs:
        print(f"{p.value.real:.10f} {p.value.imag:+.3e}i residual={p.residual:.2e}")


def _cmd_oracle(cfg, args, out):
    from .evp import disc_reference_eigenvalues
    from .output import write_oracle_csv

    if cfg.kind != "disc":
        raise ValidationError("the dispersion oracle needs the disc geometry", "geometry.kind")
    o = cfg.oracle
    modes = o["modes"]
    if not (isinstance(modes, list) and len(modes) == 2 and 0 <= modes[0] <= modes[1]):
        raise ValidationError("expected [m_min, m_max]", "oracle.modes")
    interval = o["interval"]
    if interval is None:
        cc = cfg.contour_config()
        interval = (cc.center.real - cc.radius, cc.center.real + cc.radius)
    g = cfg.geometry
    roots = disc_reference_eigenvalues(cfg.lorentz_law(), g["r_in"], g["r_out"],
                                       range(modes[0], modes[1] + 1), interval, o["samples"])
    write_oracle_csv(os.path.join(out, "oracle.csv"), roots)
    for m, w in roots:
        print(f"m={m} omega={w:.12f}")


_DISPATCH = {
    "bounds": _cmd_bounds, "mesh": _cmd_mesh, "solve": _cmd_solve,
    "study": _cmd_study, "evp": _cmd_evp, "oracle": _cmd_oracle,
}


def cli_main(argv=None):
    """Run the CLI and return the exit code."""
    from .config import load_config

    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        cfg = load_config(args.config)
        out = _outdir(cfg, args)
        with _threads(args.threads):
            _DISPATCH[args.command](cfg, args, out)
    except ValidationError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return 1
    except IoError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 2
    except TCoerciveError as exc:  # pragma: no cover
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


def main():  # console-script entry point
    sys.exit(cli_main())


if __name__ == "__main__":  # pragma: no cover
    main()
