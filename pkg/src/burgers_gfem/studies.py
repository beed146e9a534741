"""Built-in study definitions and the study runner with CSV/JSON outputs."""

from __future__ import annotations

import dataclasses
import json
import time as _time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import _kernels
from .analysis import ErrorSample, convergence_rate, error_time_series
from .config import (
    EnrichmentSpec,
    ReferenceSpec,
    StudyConfig,
    ValidationReport,
    resolve_ic,
    validate_config,
)
from .enrichment import (
    build_dof_map,
    exponential_rule,
    heaviside_rule,
    tanh_rule,
)
from .linalg import LinearSolveConfig
from .mesh import build_uniform_mesh
from .reference import (
    CharacteristicsSolution,
    FourierParams,
    FourierSolution,
    ReferenceSolution,
    SteadyShockSolution,
    fine_fem_reference,
    riemann_ic,
    riemann_ic_prime,
)
from .solver import (
    BurgersProblem,
    NewtonConfig,
    SimulationError,
    TimeConfig,
    run_simulation,
)


class ConfigError(ValueError):
    def __init__(self, report: ValidationReport):
        super().__init__("invalid study configuration:\n" + str(report))
        self.report = report


# ---------------------------------------------------------------------------
# built-in study registry

_T_THIRD = 1.0 / np.pi  # snapshot near the breaking time of the sin initial data

_DESK_GRIDS = (11, 23, 47, 95)
_EX1_SNAPSHOTS = (0.0, 0.25, _T_THIRD, 0.5, 0.75, 1.0)
_EX2_SNAPSHOTS = (0.0, 0.25, 0.3, 0.35, 0.5, 0.75)
_DENSE_TIMES = tuple(round(i * 0.025, 6) for i in range(31))  # 0 .. 0.75


def _example1(name, description, nus, enrichments=()):
    return StudyConfig(
        name=name,
        description=description,
        ic="sin_pi_x",
        dirichlet=((0.0, 0.0), (1.0, 0.0)),
        nus=nus,
        grids=_DESK_GRIDS,
        dt=1e-3,
        t_end=1.0,
        snapshot_times=_EX1_SNAPSHOTS,
        enrichments=enrichments,
    )


def _example2(name, description, nus, enrichments=(), error_times="snapshots"):
    return StudyConfig(
        name=name,
        description=description,
        ic="cos_pi_x",
        dirichlet=((0.0, 1.0), (1.0, -1.0)),
        nus=nus,
        grids=_DESK_GRIDS,
        dt=1e-3,
        t_end=0.75,
        snapshot_times=_EX2_SNAPSHOTS,
        error_times=error_times,
        enrichments=enrichments,
    )


def builtin_study(name: str) -> StudyConfig:
    try:
        return _BUILTINS[name]()
    except KeyError:
        raise ValueError(f"unknown study {name!r}; see `list`") from None


_BUILTINS = {
    "example1-fem": lambda: _example1(
        "example1-fem",
        "boundary-layer problem (sin initial data), plain linear FEM sweep",
        nus=(0.1, 0.02, 0.01, 0.0),
    ),
    "example1-exp-gfem": lambda: _example1(
        "example1-exp-gfem",
        "boundary-layer problem enriched with exponentials on [0.8, 1]",
        nus=(0.01,),
        enrichments=(EnrichmentSpec(kind="exponential", rate="auto", local=(0.8, 1.0)),),
    ),
    "example1-disc-gfem": lambda: _example1(
        "example1-disc-gfem",
        "inviscid boundary-layer problem with a Heaviside DOF at the right boundary",
        nus=(0.0,),
        enrichments=(EnrichmentSpec(kind="boundary_heaviside", side="right"),),
    ),
    "example2-fem": lambda: _example2(
        "example2-fem",
        "stationary-shock problem (cos initial data), plain linear FEM sweep",
        nus=(0.02, 0.01, 0.002, 0.001),
    ),
    "example2-ss-gfem": lambda: _example2(
        "example2-ss-gfem",
        "stationary-shock problem enriched with the steady shock profile",
        nus=(0.02, 0.01, 0.002, 0.001),
        enrichments=(EnrichmentSpec(kind="tanh_shock", thickness="nu"),),
    ),
    "example2-ss-rho": lambda: _example2(
        "example2-ss-rho",
        "stationary-shock problem with the steady profile plus a family of "
        "sharper shock enrichments",
        nus=(0.002,),
        enrichments=(
            EnrichmentSpec(kind="tanh_shock", thickness="nu"),
            EnrichmentSpec(kind="tanh_shock", thickness=1.0 / 50.0),
            EnrichmentSpec(kind="tanh_shock", thickness=1.0 / 100.0),
            EnrichmentSpec(kind="tanh_shock", thickness=1.0 / 200.0),
        ),
        error_times=_DENSE_TIMES,
    ),
}

_RIEMANN_DESCRIPTION = (
    "inviscid ramp data gallery: characteristics solutions for a family of "
    "vertical translations; pre-breaking times only for moving shocks"
)


def list_studies():
    """(name, description) pairs for every built-in study."""
    out = [(name, _BUILTINS[name]().description) for name in sorted(_BUILTINS)]
    out.append(("riemann-gallery", _RIEMANN_DESCRIPTION))
    return out


def apply_paper_fidelity(config: StudyConfig) -> StudyConfig:
    """Full-fidelity settings: 1/5000 steps, 5000-element reference, one-shot
    linearization per step, and the 191-element grid added to the sweep."""
    grids = tuple(config.grids)
    if 191 not in grids:
        grids = grids + (191,)
    return dataclasses.replace(
        config,
        dt=1.0 / 5000.0,
        grids=grids,
        reference=dataclasses.replace(config.reference, elements=5000, dt=1.0 / 5000.0),
        newton=dataclasses.replace(config.newton, max_iters=1),
    )


# ---------------------------------------------------------------------------
# rule resolution


def _ic_peak(ic_fn, lo, hi):
    x = np.linspace(lo, hi, 10001)
    return float(np.max(np.abs(np.asarray(ic_fn(x), dtype=float))))


def build_rules(specs, nu, mesh, ic_fn, enrich_boundary_nodes=True):
    """Concrete enrichment rules for one (viscosity, mesh) cell."""
    rules = []
    lo, hi = mesh.domain_lo, mesh.domain_hi
    half_h = 0.5 * mesh.h
    for spec in specs:
        if spec.kind == "exponential":
            if spec.rate == "auto":
                if nu == 0:
                    raise ValueError("auto exponential rate is undefined for nu = 0")
                rate = _ic_peak(ic_fn, lo, hi) / nu
            else:
                rate = float(spec.rate)
            if spec.local == "auto":
                raise ValueError("exponential enrichment needs an explicit interval")
            r_lo, r_hi = float(spec.local[0]), float(spec.local[1])
            if not enrich_boundary_nodes:
                r_lo = max(r_lo, lo + half_h)
                r_hi = min(r_hi, hi - half_h)
            rules.append(exponential_rule(rate, r_lo, r_hi, conditioned=spec.conditioned))
        elif spec.kind == "tanh_shock":
            thickness = nu if spec.thickness == "nu" else float(spec.thickness)
            if spec.local == "auto":
                rules.append(tanh_rule(spec.center, thickness, mesh.h))
            else:
                from .enrichment import EnrichmentRule, TanhShock

                rules.append(
                    EnrichmentRule(
                        TanhShock(spec.center, thickness),
                        float(spec.local[0]),
                        float(spec.local[1]),
                    )
                )
        elif spec.kind == "boundary_heaviside":
            node_x = lo if spec.side == "left" else hi
            rules.append(heaviside_rule(mesh, node_x))
        else:
            raise ValueError(f"unknown enrichment kind {spec.kind!r}")
    return rules


# ---------------------------------------------------------------------------
# reference resolution


def build_reference(config: StudyConfig, nu: float, times) -> ReferenceSolution:
    ic_fn, ic_prime, _ = resolve_ic(config.ic)
    kind = config.reference.kind
    if kind == "auto":
        kind = "characteristics" if nu == 0 else "fine_fem"
    if kind == "characteristics":
        return CharacteristicsSolution(
            ic_fn, config.lo, config.hi, u_ic_prime=ic_prime
        ).as_reference()
    if kind == "fourier":
        return FourierSolution(FourierParams(nu)).as_reference()
    if kind == "steady_state":
        return SteadyShockSolution(nu).as_reference()
    if kind == "fine_fem":
        problem = BurgersProblem(
            nu=nu, u_ic=ic_fn, dirichlet=config.dirichlet,
            neumann=config.neumann, lo=config.lo, hi=config.hi,
        )
        return fine_fem_reference(
            problem,
            n_elements=config.reference.elements,
            dt=config.reference.dt,
            snapshot_times=times,
            linear=LinearSolveConfig(
                config.linear.eps1, config.linear.eps2, config.linear.max_refinements
            ),
        )
    raise ValueError(f"unknown reference kind {kind!r}")


# ---------------------------------------------------------------------------
# output helpers


def _fmt(value):
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if value is None or value == "":
        return ""
    return repr(float(value))


def _write_csv(path: Path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _nu_label(nu: float) -> str:
    return f"nu{nu:g}"


# ---------------------------------------------------------------------------
# the runner


def _actual_times(dt: float, t_end: float, times):
    n = round(t_end / dt)
    out = []
    for t in times:
        step = min(n, max(0, round(t / dt)))
        out.append(step * dt)
    return tuple(dict.fromkeys(out))


def _run_cell(config: StudyConfig, nu: float, n_elements: int,
              reference: ReferenceSolution, out_dir: Path,
              snapshot_times, error_times):
    started = _time.perf_counter()
    ic_fn, _, _ = resolve_ic(config.ic)
    mesh = build_uniform_mesh(n_elements, config.lo, config.hi)
    rules = build_rules(
        config.enrichments, nu, mesh, ic_fn,
        enrich_boundary_nodes=config.enrich_boundary_nodes,
    )
    dof_map = build_dof_map(mesh, rules)
    problem = BurgersProblem(
        nu=nu, u_ic=ic_fn, dirichlet=config.dirichlet,
        neumann=config.neumann, lo=config.lo, hi=config.hi,
    )
    all_times = tuple(dict.fromkeys(snapshot_times + error_times))
    time_cfg = TimeConfig(config.dt, config.t_end, all_times)
    newton = NewtonConfig(
        tol=config.newton.tol,
        max_iters=config.newton.max_iters,
        require_convergence=config.newton.max_iters > 1,
    )
    linear = LinearSolveConfig(
        config.linear.eps1, config.linear.eps2, config.linear.max_refinements
    )
    history = run_simulation(
        problem, mesh, dof_map, time_cfg, newton=newton, linear=linear,
        quadrature_points=config.quadrature_points,
        beta_scale=config.penalty_beta_scale,
    )

    samples = error_time_series(history, reference, error_times, config.lo, config.hi)

    x_grid = np.linspace(config.lo, config.hi, config.solution_points)
    sol_rows = []
    for t in snapshot_times:
        k = history.snapshot_index(t)
        u = history.evaluator(k)(x_grid)[0]
        sol_rows.extend((x_grid[i], history.times[k], u[i]) for i in range(len(x_grid)))
    _write_csv(out_dir / "solution.csv", ("x", "t", "u"), sol_rows)
    _write_csv(
        out_dir / "errors.csv",
        ("t", "dofs", "rel_l2", "rel_h1"),
        [(s.time, s.dofs, s.rel_l2, s.rel_h1) for s in samples],
    )

    return {
        "nu": nu,
        "n_elements": n_elements,
        "dofs": dof_map.total_dofs,
        "dof_warnings": dof_map.warnings,
        "status": "ok",
        "wall_time_s": _time.perf_counter() - started,
        "newton_iterations_max": history.diagnostics["newton_iterations_max"],
        "newton_iterations_mean": history.diagnostics["newton_iterations_mean"],
        "linear_refinements": history.diagnostics["linear_refinements"],
        "beta": history.diagnostics["beta"],
        "quadrature_points": history.diagnostics["quadrature_points"],
        "samples": samples,
        "files": ["solution.csv", "errors.csv"],
    }


def run_study(config: StudyConfig, out_root=None, threads: int = 1,
              paper_fidelity: bool = False):
    """Run every (viscosity, grid) cell of a study and write all outputs.

    Returns a result dict with status "ok" or "partial"; partial results keep
    whatever outputs completed plus a machine-readable error record in the
    manifest.
    """
    if paper_fidelity:
        config = apply_paper_fidelity(config)
    report = validate_config(config)
    if not report.ok:
        raise ConfigError(report)

    started = _time.perf_counter()
    out_dir = Path(out_root if out_root is not None else config.out_dir) / config.name
    out_dir.mkdir(parents=True, exist_ok=True)

    snapshot_times = _actual_times(config.dt, config.t_end, config.snapshot_times)
    error_times = _actual_times(config.dt, config.t_end, config.resolved_error_times())
    needed = tuple(dict.fromkeys(snapshot_times + error_times))

    references = {}
    errors = []
    for nu in config.nus:
        try:
            references[nu] = build_reference(config, nu, needed)
        except Exception as err:  # noqa: BLE001 - recorded in the manifest
            errors.append({
                "stage": "reference",
                "nu": nu,
                "type": type(err).__name__,
                "message": str(err),
            })

    cells = [
        (nu, g) for nu in config.nus for g in config.grids if nu in references
    ]

    def run_one(cell):
        nu, g = cell
        cell_dir = out_dir / _nu_label(nu) / f"n{g}"
        try:
            return _run_cell(
                config, nu, g, references[nu], cell_dir, snapshot_times, error_times
            )
        except Exception as err:  # noqa: BLE001 - recorded in the manifest
            record = {
                "nu": nu,
                "n_elements": g,
                "status": "failed",
                "error": {"type": type(err).__name__, "message": str(err)},
            }
            if isinstance(err, SimulationError):
                record["error"]["failed_step"] = err.step_index
            return record

    if threads > 1 and len(cells) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run_one, cells))
    else:
        results = [run_one(c) for c in cells]

    # convergence tables: per viscosity, per snapshot time, across grids
    tables = {}
    for nu in config.nus:
        ok_cells = [
            r for r in results if r["nu"] == nu and r["status"] == "ok"
        ]
        if not ok_cells:
            continue
        rows = []
        for t in snapshot_times:
            per_grid = []
            for cell in sorted(ok_cells, key=lambda r: r["dofs"]):
                sample = next(
                    (s for s in cell["samples"] if abs(s.time - t) <= 1e-9), None
                )
                if sample is not None:
                    per_grid.append(sample)
            for i, s in enumerate(per_grid):
                if i == 0:
                    rate_l2 = rate_h1 = None
                else:
                    pair = [per_grid[i - 1], s]
                    rate_l2 = convergence_rate(pair, "l2")
                    rate_h1 = convergence_rate(pair, "h1")
                rows.append((
                    s.time, s.dofs, s.rel_l2, s.rel_h1,
                    None if rate_l2 is None else round(rate_l2, 2),
                    None if rate_h1 is None else round(rate_h1, 2),
                ))
        tables[nu] = rows
        _write_csv(
            out_dir / _nu_label(nu) / "convergence.csv",
            ("time", "dofs", "rel_l2", "rel_h1", "rate_l2", "rate_h1"),
            rows,
        )

    failed = [r for r in results if r["status"] != "ok"] or errors
    status = "partial" if failed else "ok"
    manifest = {
        "study": config.name,
        "status": status,
        "config": dataclasses.asdict(config),
        "kernel_backend": _kernels.backend(),
        "snapshot_times": list(snapshot_times),
        "error_times": list(error_times),
        "references": {
            _nu_label(nu): {"kind": ref.kind, **{
                k: v for k, v in ref.metadata.items() if k != "times"
            }}
            for nu, ref in references.items()
        },
        "errors": errors,
        "cells": [
            {k: v for k, v in r.items() if k != "samples"} for r in results
        ],
        "wall_time_s": _time.perf_counter() - started,
    }
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, default=float)
        fh.write("\n")

    return {
        "status": status,
        "out_dir": out_dir,
        "cells": results,
        "tables": tables,
        "manifest": manifest,
    }


# ---------------------------------------------------------------------------
# the ramp-data gallery


def run_riemann_gallery(out_root, bs=(-1.25, -1.0, 0.0, 0.5, 1.0, 1.25),
                        x_lo: float = -1.0, x_hi: float = 3.0, points: int = 401,
                        times=(0.0, 0.25, 0.45, 0.5, 0.75, 1.0)):
    """Characteristics solution grids for the translated ramp data.

    Moving-shock translations only get times strictly before breaking.
    """
    started = _time.perf_counter()
    out_dir = Path(out_root) / "riemann-gallery"
    out_dir.mkdir(parents=True, exist_ok=True)
    x = np.linspace(x_lo, x_hi, points)
    records = []
    for b in bs:
        sol = CharacteristicsSolution(
            lambda xx, b=b: riemann_ic(b, xx),
            x_lo, x_hi,
            u_ic_prime=lambda xx, b=b: riemann_ic_prime(b, xx),
        )
        moving = sol.shock_x is None and sol.t_break is not None
        kept = [
            t for t in times
            if sol.t_break is None or t < sol.t_break or not moving
        ]
        rows = []
        for t in kept:
            u, _ = sol(x, t)
            rows.extend((x[i], t, u[i]) for i in range(len(x)))
        fname = f"riemann_b{b:g}.csv"
        _write_csv(out_dir / fname, ("x", "t", "u"), rows)
        records.append({
            "b": b,
            "moving_shock": moving,
            "breaking_time": sol.t_break,
            "shock_x": sol.shock_x,
            "times": kept,
            "file": fname,
        })
    manifest = {
        "study": "riemann-gallery",
        "status": "ok",
        "cases": records,
        "x_range": [x_lo, x_hi],
        "points": points,
        "wall_time_s": _time.perf_counter() - started,
    }
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, default=float)
        fh.write("\n")
    return {"status": "ok", "out_dir": out_dir, "cases": records}
