"""Crank-Nicolson time stepping with a Newton solve per step.

Each step solves the trapezoidal update of the semi-discrete system
M dc/dt = -(A(c) + K) c + loads with penalty-enforced Dirichlet data.  The
default Newton loop re-linearizes about the current iterate; capping it at a
single iteration recovers the plain one-shot linearization about the previous
step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .assembly import (
    advection_pair,
    assemble_boundary_penalty,
    assemble_mass,
    assemble_neumann,
    assemble_stiffness,
    project_initial_condition,
)
from .enrichment import DofMap, point_table, quadrature_table
from .linalg import (
    LinearSolveConfig,
    LinearSolveError,
    linear_solve,
    linear_solve_with_info,
)
from .mesh import Mesh1D
from .quadrature import auto_points, gauss_rule

DEFAULT_BETA_SCALE = 1e8


@dataclass(frozen=True)
class TimeConfig:
    dt: float
    t_end: float
    snapshot_times: tuple = ()

    def __post_init__(self):
        if not self.dt > 0 or not self.t_end > 0:
            raise ValueError("dt and t_end must be positive")
        n = round(self.t_end / self.dt)
        if n < 1 or abs(n * self.dt - self.t_end) > 1e-12 * max(1.0, self.t_end):
            raise ValueError(f"dt={self.dt} does not divide t_end={self.t_end}")
        for t in self.snapshot_times:
            if t < -1e-12 or t > self.t_end + 1e-12:
                raise ValueError(f"snapshot time {t} outside [0, {self.t_end}]")

    @property
    def n_steps(self) -> int:
        return round(self.t_end / self.dt)

    def snapshot_steps(self):
        """Step index of each requested snapshot (nearest step)."""
        return tuple(
            min(self.n_steps, max(0, round(t / self.dt))) for t in self.snapshot_times
        )


@dataclass
class NewtonConfig:
    tol: float = 1e-10
    max_iters: int = 25
    require_convergence: bool = True

    def __post_init__(self):
        if not self.tol > 0 or self.max_iters < 1:
            raise ValueError("need tol > 0 and max_iters >= 1")


class NewtonError(RuntimeError):
    def __init__(self, message, iterations, correction_norm):
        super().__init__(message)
        self.iterations = iterations
        self.correction_norm = correction_norm


class SimulationError(RuntimeError):
    """A time step failed; carries the partial history and the failing step index."""

    def __init__(self, message, history, step_index):
        super().__init__(message)
        self.history = history
        self.step_index = step_index


def _as_time_fn(value) -> Callable[[float], float]:
    if callable(value):
        return value
    return lambda t, v=float(value): v


@dataclass(frozen=True)
class BurgersProblem:
    """Problem data: viscosity, initial condition, and boundary conditions.

    ``dirichlet``/``neumann`` are sequences of (boundary coordinate, value)
    pairs where the value may be a constant or a callable of time.
    """

    nu: float
    u_ic: Callable
    dirichlet: Sequence = ()
    neumann: Sequence = ()
    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self):
        if self.nu < 0:
            raise ValueError("viscosity must be non-negative")
        d_coords = {float(x) for x, _ in self.dirichlet}
        n_coords = {float(x) for x, _ in self.neumann}
        if d_coords & n_coords:
            raise ValueError(
                "Dirichlet and Neumann boundaries overlap: "
                f"{sorted(d_coords & n_coords)}"
            )


def _boundary_node(mesh: Mesh1D, x: float) -> int:
    node = int(np.argmin(np.abs(mesh.node_coords - x)))
    if abs(mesh.node_coords[node] - x) > 1e-12 * (mesh.domain_hi - mesh.domain_lo):
        raise ValueError(f"no mesh node at boundary coordinate {x}")
    return node


class BurgersSystem:
    """Assembled time-independent pieces of one discretization.

    Holds the quadrature table, mass and diffusion matrices, the penalty
    matrix (already scaled by beta), and the load builders; the advection
    matrices are assembled on demand from the current state.
    """

    def __init__(self, problem: BurgersProblem, mesh: Mesh1D, dof_map: DofMap,
                 rule, dt: float, beta_scale: float = DEFAULT_BETA_SCALE,
                 advection: bool = True):
        self.problem = problem
        self.mesh = mesh
        self.dof_map = dof_map
        self.rule = rule
        self.dt = float(dt)
        self.advection = advection
        self.table = quadrature_table(mesh, dof_map, rule)

        self.mass = assemble_mass(mesh, dof_map, rule, table=self.table)
        self.stiffness = assemble_stiffness(mesh, dof_map, problem.nu, rule, table=self.table)

        core = (2.0 / self.dt) * self.mass + self.stiffness
        self.beta = beta_scale * float(np.max(np.diagonal(core))) if problem.dirichlet else 0.0

        self._dirichlet_nodes = [_boundary_node(mesh, x) for x, _ in problem.dirichlet]
        self._dirichlet_fns = [_as_time_fn(g) for _, g in problem.dirichlet]
        self._neumann_nodes = [_boundary_node(mesh, x) for x, _ in problem.neumann]
        self._neumann_fns = [_as_time_fn(g) for _, g in problem.neumann]

        if self._dirichlet_nodes:
            pen_mat, _ = assemble_boundary_penalty(
                mesh, dof_map, self._dirichlet_nodes,
                [0.0] * len(self._dirichlet_nodes), self.beta,
            )
            self.penalty_matrix = pen_mat
        else:
            self.penalty_matrix = np.zeros_like(self.mass)
        self.base = self.penalty_matrix + core

    def advection_matrices(self, c):
        if not self.advection:
            n = self.dof_map.total_dofs
            return np.zeros((n, n)), np.zeros((n, n))
        return advection_pair(self.table, c)

    def penalty_load(self, t: float):
        if not self._dirichlet_nodes:
            return np.zeros(self.dof_map.total_dofs)
        g = [fn(t) for fn in self._dirichlet_fns]
        _, vec = assemble_boundary_penalty(
            self.mesh, self.dof_map, self._dirichlet_nodes, g, self.beta
        )
        return vec

    def neumann_load(self, t: float):
        if not self._neumann_nodes:
            return np.zeros(self.dof_map.total_dofs)
        g = [fn(t) for fn in self._neumann_fns]
        return assemble_neumann(self.mesh, self.dof_map, self._neumann_nodes, g, self.problem.nu)


@dataclass
class NewtonStats:
    iterations: int
    correction_norm: float
    linear_refinements: int


def newton_solve_timestep(system: BurgersSystem, c_n, t_n: float,
                          newton: NewtonConfig | None = None,
                          linear: LinearSolveConfig | None = None):
    """Advance one Crank-Nicolson step from t_n; returns (c_next, NewtonStats).

    Iterates corrections of the trapezoidal system, re-linearizing about the
    current iterate, until the relative correction norm meets the tolerance.
    """
    newton = newton if newton is not None else NewtonConfig()
    c_n = np.asarray(c_n, dtype=float)
    dt = system.dt
    t_next = t_n + dt

    loads = (
        system.neumann_load(t_n)
        + system.neumann_load(t_next)
        + system.penalty_load(t_next)
    )

    c = c_n.copy()
    rhs = None
    refinements = 0
    rel = np.inf
    for it in range(1, newton.max_iters + 1):
        adv, adv_tan = system.advection_matrices(c)
        if rhs is None:
            # at this point c == c_n, so adv carries the previous-step advection
            rhs = (2.0 / dt) * (system.mass @ c_n) - adv @ c_n \
                - system.stiffness @ c_n + loads
        residual = system.base @ c + adv @ c - rhs
        jac = system.base + adv + adv_tan
        try:
            eps, info = linear_solve_with_info(jac, -residual, linear)
        except LinearSolveError as err:
            raise NewtonError(
                f"linear solve failed in Newton iteration {it}: {err}", it, rel
            ) from err
        refinements += info.refinements
        c = c + eps
        rel = float(np.linalg.norm(eps)) / max(float(np.linalg.norm(c)), 1.0)
        if rel <= newton.tol:
            return c, NewtonStats(it, rel, refinements)
    if newton.require_convergence:
        raise NewtonError(
            f"Newton did not converge in {newton.max_iters} iterations "
            f"(relative correction {rel:.3e})",
            newton.max_iters,
            rel,
        )
    return c, NewtonStats(newton.max_iters, rel, refinements)


class SolutionHistory:
    """Coefficient snapshots of one simulation plus field evaluators."""

    def __init__(self, mesh, dof_map, times, coefficients, newton_iters, diagnostics=None):
        self.mesh = mesh
        self.dof_map = dof_map
        self.times = np.asarray(times, dtype=float)
        self.coefficients = [np.asarray(c, dtype=float) for c in coefficients]
        self.newton_iters = list(newton_iters)
        self.diagnostics = dict(diagnostics or {})

    @property
    def n_snapshots(self) -> int:
        return len(self.coefficients)

    def snapshot_index(self, t: float) -> int:
        hits = np.nonzero(np.abs(self.times - t) <= 1e-9)[0]
        if hits.size == 0:
            raise ValueError(f"no snapshot recorded at t = {t}")
        return int(hits[0])

    def evaluator(self, snapshot: int):
        """Callable x -> (u, du) for one snapshot."""
        c = self.coefficients[snapshot]
        mesh, dof_map = self.mesh, self.dof_map

        def evaluate(x):
            return point_table(mesh, dof_map, x).value_and_slope(c)

        return evaluate


def evaluate_solution(history: SolutionHistory, x, snapshot: int):
    """Field values of one snapshot at points ``x``."""
    table = point_table(history.mesh, history.dof_map, x)
    return table.value(history.coefficients[snapshot])


def evaluate_solution_derivative(history: SolutionHistory, x, snapshot: int):
    table = point_table(history.mesh, history.dof_map, x)
    _, du = table.value_and_slope(history.coefficients[snapshot])
    return du


def run_simulation(problem: BurgersProblem, mesh: Mesh1D, dof_map: DofMap,
                   time: TimeConfig, newton: NewtonConfig | None = None,
                   linear: LinearSolveConfig | None = None,
                   quadrature_points="auto", beta_scale: float = DEFAULT_BETA_SCALE,
                   advection: bool = True) -> SolutionHistory:
    """Project the initial condition and run the full Crank-Nicolson time loop.

    Snapshots are recorded at the steps nearest the requested times (always
    including t = 0 when requested).  A step failure raises SimulationError
    carrying the partial history and the failing step index.
    """
    n_pts = auto_points(mesh.h) if quadrature_points == "auto" else int(quadrature_points)
    rule = gauss_rule(n_pts)
    system = BurgersSystem(problem, mesh, dof_map, rule, time.dt,
                           beta_scale=beta_scale, advection=advection)

    penalty = None
    if problem.dirichlet:
        penalty = (system.penalty_matrix, system.penalty_load(0.0))
    c = project_initial_condition(
        mesh, dof_map, problem.u_ic, rule,
        penalty=penalty, lin_config=linear, table=system.table,
    )

    snap_steps = time.snapshot_steps()
    wanted = {}
    for step in snap_steps:
        wanted.setdefault(step, step * time.dt)

    times, coeffs, iters = [], [], []
    refinements = 0
    if 0 in wanted:
        times.append(0.0)
        coeffs.append(c.copy())

    for step in range(1, time.n_steps + 1):
        t_n = (step - 1) * time.dt
        try:
            c, stats = newton_solve_timestep(system, c, t_n, newton, linear)
        except (NewtonError, LinearSolveError) as err:
            partial = SolutionHistory(
                mesh, dof_map, times, coeffs, iters,
                {"status": "failed", "failed_step": step},
            )
            raise SimulationError(
                f"step {step} (t = {step * time.dt:.6g}) failed: {err}",
                partial, step,
            ) from err
        iters.append(stats.iterations)
        refinements += stats.linear_refinements
        if step in wanted:
            times.append(step * time.dt)
            coeffs.append(c.copy())

    diagnostics = {
        "beta": system.beta,
        "quadrature_points": rule.n,
        "linear_refinements": refinements,
        "newton_iterations_max": max(iters) if iters else 0,
        "newton_iterations_mean": float(np.mean(iters)) if iters else 0.0,
    }
    return SolutionHistory(mesh, dof_map, times, coeffs, iters, diagnostics)
