"""Assembly of the dense system matrices, boundary terms, and the IC projection.

All matrices are stored dense: enrichment couplings widen the band
unpredictably and the problem sizes stay small enough for dense solves.
"""

from __future__ import annotations

import numpy as np

from . import _kernels
from .enrichment import DofMap, ShapeTable, point_table, quadrature_table
from .linalg import LinearSolveConfig, LinearSolveError, linear_solve
from .mesh import Mesh1D
from .quadrature import QuadRule


def _table(mesh, dof_map, rule, table):
    if table is not None:
        return table
    return quadrature_table(mesh, dof_map, rule)


def assemble_mass(mesh: Mesh1D, dof_map: DofMap, rule: QuadRule, table: ShapeTable | None = None):
    """Mass matrix with entries ∫ v_i v_j; bitwise symmetric by construction."""
    t = _table(mesh, dof_map, rule, table)
    return _kernels.sym_product_matrix(t.vals, t.wdet, t.gdof, t.n_dofs)


def assemble_stiffness(mesh: Mesh1D, dof_map: DofMap, nu: float, rule: QuadRule,
                       table: ShapeTable | None = None):
    """Diffusion matrix nu * ∫ v_i' v_j'; exactly zero when nu = 0."""
    if nu < 0:
        raise ValueError("viscosity must be non-negative")
    t = _table(mesh, dof_map, rule, table)
    return nu * _kernels.sym_product_matrix(t.ders, t.wdet, t.gdof, t.n_dofs)


def assemble_advection(mesh: Mesh1D, dof_map: DofMap, c, rule: QuadRule,
                       table: ShapeTable | None = None):
    """Advection matrix with entries ∫ v_i u v_j', u the field with coefficients c."""
    a, _ = advection_pair(_table(mesh, dof_map, rule, table), np.asarray(c, dtype=float))
    return a


def assemble_advection_tangent(mesh: Mesh1D, dof_map: DofMap, c, rule: QuadRule,
                               table: ShapeTable | None = None):
    """Companion matrix ∫ v_i v_j u'; together with the advection matrix it gives
    the exact directional derivative of c -> A(c) c."""
    _, at = advection_pair(_table(mesh, dof_map, rule, table), np.asarray(c, dtype=float))
    return at


def advection_pair(table: ShapeTable, c):
    """Both advection matrices in one pass over the quadrature table."""
    c = np.asarray(c, dtype=float)
    if c.shape != (table.n_dofs,):
        raise ValueError(
            f"coefficient length {c.shape} does not match {table.n_dofs} DOFs"
        )
    return _kernels.advection_pair(table.vals, table.ders, table.wdet, table.gdof, c)


def boundary_columns(mesh: Mesh1D, dof_map: DofMap, nodes):
    """Shape-function value columns at the given boundary nodes; (n_dofs, n_nodes)."""
    nodes = list(nodes)
    cols = np.zeros((dof_map.total_dofs, len(nodes)))
    if not nodes:
        return cols
    xs = mesh.node_coords[np.asarray(nodes, dtype=int)]
    pt = point_table(mesh, dof_map, xs)
    for b in range(len(nodes)):
        for s in range(pt.gdof.shape[1]):
            g = pt.gdof[b, s]
            if g >= 0:
                cols[g, b] += pt.vals[b, s]
    return cols


def assemble_boundary_penalty(mesh: Mesh1D, dof_map: DofMap, dirichlet_nodes,
                              g_values, beta: float):
    """Point-evaluation penalty terms enforcing u(x_b) = g(x_b).

    In 1D the boundary integrals reduce to point evaluations at the boundary
    nodes; both the matrix and the load carry the penalty factor beta.  Adding
    them to the system enforces the boundary value with residual O(1/beta).
    """
    if not beta > 0:
        raise ValueError("penalty parameter must be positive")
    nodes = list(dirichlet_nodes)
    g = np.asarray(list(g_values), dtype=float)
    if g.shape[0] != len(nodes):
        raise ValueError("one boundary value per Dirichlet node is required")
    cols = boundary_columns(mesh, dof_map, nodes)
    mat = beta * (cols @ cols.T)
    vec = beta * (cols @ g)
    return mat, vec


def assemble_neumann(mesh: Mesh1D, dof_map: DofMap, neumann_nodes, g_values, nu: float):
    """Flux load vector nu * g(x_b) * v_i(x_b) summed over Neumann boundary nodes."""
    nodes = list(neumann_nodes)
    g = np.asarray(list(g_values), dtype=float)
    if g.shape[0] != len(nodes):
        raise ValueError("one flux value per Neumann node is required")
    cols = boundary_columns(mesh, dof_map, nodes)
    return nu * (cols @ g)


def load_vector(table: ShapeTable, f):
    """RHS vector with entries ∫ v_i f for a pointwise-evaluable f."""
    fq = np.asarray(f(table.x), dtype=float)
    elem = np.einsum("eaq,eq->ea", table.vals, table.wdet * fq)
    out = np.zeros(table.n_dofs + 1)
    np.add.at(out, table.gdof, elem)
    return out[: table.n_dofs].copy()


def project_initial_condition(mesh: Mesh1D, dof_map: DofMap, u_ic, rule: QuadRule,
                              penalty=None, lin_config: LinearSolveConfig | None = None,
                              table: ShapeTable | None = None):
    """Coefficients of the L2 projection of ``u_ic`` onto the shape set.

    ``penalty`` is an optional (matrix, vector) pair of boundary-penalty terms
    added to the mass system so the projection satisfies the Dirichlet data.
    """
    t = _table(mesh, dof_map, rule, table)
    mat = assemble_mass(mesh, dof_map, rule, table=t)
    rhs = load_vector(t, u_ic)
    if penalty is not None:
        pen_mat, pen_vec = penalty
        mat = mat + pen_mat
        rhs = rhs + pen_vec
    try:
        return linear_solve(mat, rhs, lin_config)
    except LinearSolveError as err:
        raise LinearSolveError(
            "initial-condition projection failed; the shape set is likely "
            f"linearly dependent ({err})",
            last_iterate=err.last_iterate,
            ratio=err.ratio,
        ) from err
