"""Command-line interface: run studies, emit references, validate configs."""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .config import load_config, resolve_ic, validate_config
from .reference import (
    CharacteristicsSolution,
    FourierParams,
    FourierSolution,
    SteadyShockSolution,
    fine_fem_reference,
)
from .solver import BurgersProblem
from .studies import (
    ConfigError,
    builtin_study,
    list_studies,
    run_riemann_gallery,
    run_study,
)


def _add_run_options(parser):
    parser.add_argument("--study", help="name of a built-in study")
    parser.add_argument("--config", help="path to a .toml or .json study config")
    parser.add_argument("--out", default=None, help="output directory root")
    parser.add_argument(
        "--paper-fidelity", action="store_true",
        help="full-fidelity settings: 1/5000 steps and a 5000-element reference",
    )
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads for independent study cells")


def _load_study(args):
    if bool(args.study) == bool(args.config):
        raise SystemExit("exactly one of --study or --config is required")
    if args.study:
        if args.study == "riemann-gallery":
            return "riemann-gallery"
        return builtin_study(args.study)
    return load_config(args.config)


def _cmd_list(_args) -> int:
    width = max(len(name) for name, _ in list_studies())
    for name, description in list_studies():
        print(f"{name:<{width}}  {description}")
    return 0


def _cmd_validate(args) -> int:
    try:
        config = load_config(args.config)
    except (ValueError, OSError) as err:
        print(f"invalid\nerror: {err}")
        return 1
    report = validate_config(config)
    print(report)
    return 0 if report.ok else 1


def _cmd_run(args, print_tables: bool = False) -> int:
    config = _load_study(args)
    out = args.out if args.out is not None else "out"
    if config == "riemann-gallery":
        result = run_riemann_gallery(out)
        print(f"wrote {len(result['cases'])} case grids to {result['out_dir']}")
        return 0
    try:
        result = run_study(config, out_root=args.out, threads=args.threads,
                           paper_fidelity=args.paper_fidelity)
    except ConfigError as err:
        print(err, file=sys.stderr)
        return 2
    if print_tables:
        _print_tables(result)
    print(f"study {config.name}: {result['status']} -> {result['out_dir']}")
    return 0 if result["status"] == "ok" else 1


def _print_tables(result):
    for nu, rows in result["tables"].items():
        print(f"\nviscosity {nu:g} (columns: time, dofs, rel_l2, rel_h1, rate_l2, rate_h1)")
        for row in rows:
            time_v, dofs, l2, h1, r2, r1 = row
            r2s = "" if r2 is None else f"{r2:.2f}"
            r1s = "" if r1 is None else f"{r1:.2f}"
            print(f"  t={time_v:<8g} dofs={dofs:<6d} l2={l2:.6e} h1={h1:.6e} {r2s:>6} {r1s:>6}")


def _cmd_reference(args) -> int:
    ic_fn, ic_prime, _ = resolve_ic(args.ic)
    times = [float(t) for t in args.times.split(",")]
    x = np.linspace(args.xlo, args.xhi, args.points)
    kind = args.kind
    if kind == "auto":
        kind = "characteristics" if args.nu == 0 else "fine_fem"
    if kind == "fourier":
        ref = FourierSolution(FourierParams(args.nu)).as_reference()
    elif kind == "characteristics":
        ref = CharacteristicsSolution(ic_fn, args.xlo, args.xhi,
                                      u_ic_prime=ic_prime).as_reference()
    elif kind == "steady_state":
        ref = SteadyShockSolution(args.nu).as_reference()
    elif kind == "fine_fem":
        dirichlet = tuple(
            (float(pair.split(":")[0]), float(pair.split(":")[1]))
            for pair in args.dirichlet.split(",")
        )
        problem = BurgersProblem(nu=args.nu, u_ic=ic_fn, dirichlet=dirichlet,
                                 lo=args.xlo, hi=args.xhi)
        ref = fine_fem_reference(problem, n_elements=args.elements, dt=args.dt,
                                 snapshot_times=times)
    else:
        raise SystemExit(f"unknown reference kind {kind!r}")

    with open(args.out, "w", newline="") as fh:
        fh.write("x,t,u\n")
        for t in times:
            u, _ = ref(x, t)
            for i in range(len(x)):
                fh.write(f"{x[i]!r},{t!r},{u[i]!r}\n")
    print(f"wrote {args.out}")
    return 0


def _cmd_riemann(args) -> int:
    bs = [float(b) for b in args.b.split(",")]
    times = tuple(float(t) for t in args.times.split(","))
    result = run_riemann_gallery(args.out, bs=bs, x_lo=args.xlo, x_hi=args.xhi,
                                 points=args.points, times=times)
    print(f"wrote {len(result['cases'])} case grids to {result['out_dir']}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="burgers-gfem",
        description="1D generalized finite element solver for the unsteady "
                    "Burgers' equation with solution-tailored enrichments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("list", help="list the built-in studies")

    p_validate = sub.add_parser("validate", help="check a config without running")
    p_validate.add_argument("--config", required=True)

    p_run = sub.add_parser("run", help="run a study and write CSV/JSON outputs")
    _add_run_options(p_run)

    p_conv = sub.add_parser(
        "convergence", help="run a study and print its convergence tables"
    )
    _add_run_options(p_conv)

    p_ref = sub.add_parser("reference", help="emit a reference solution grid as CSV")
    p_ref.add_argument("--ic", default="sin_pi_x")
    p_ref.add_argument("--nu", type=float, required=True)
    p_ref.add_argument("--kind", default="auto",
                       choices=["auto", "fourier", "characteristics",
                                "steady_state", "fine_fem"])
    p_ref.add_argument("--times", default="0.0,0.5")
    p_ref.add_argument("--points", type=int, default=401)
    p_ref.add_argument("--xlo", type=float, default=0.0)
    p_ref.add_argument("--xhi", type=float, default=1.0)
    p_ref.add_argument("--elements", type=int, default=1000)
    p_ref.add_argument("--dt", type=float, default=1e-3)
    p_ref.add_argument("--dirichlet", default="0:0,1:0",
                       help="fine-FEM boundary data as x:value pairs")
    p_ref.add_argument("--out", required=True)

    p_riem = sub.add_parser("riemann", help="write the ramp-data solution gallery")
    p_riem.add_argument("--b", default="-1.25,-1,0,0.5,1,1.25")
    p_riem.add_argument("--times", default="0.0,0.25,0.45,0.5,0.75,1.0")
    p_riem.add_argument("--points", type=int, default=401)
    p_riem.add_argument("--xlo", type=float, default=-1.0)
    p_riem.add_argument("--xhi", type=float, default=3.0)
    p_riem.add_argument("--out", default="out")

    args = parser.parse_args(argv)
    if args.command == "list":
        return _cmd_list(args)
    if args.command == "validate":
        return _cmd_validate(args)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "convergence":
        return _cmd_run(args, print_tables=True)
    if args.command == "reference":
        return _cmd_reference(args)
    if args.command == "riemann":
        return _cmd_riemann(args)
    raise SystemExit(f"unknown command {args.command!r}")


if __name__ == "__main__":
    raise SystemExit(main())
