"""Enrichment functions, their application domains, and the GFEM shape-function map.

A GFEM shape function is the product of a nodal hat with an enrichment factor.
Enrichments are shifted by their nodal value so they vanish at their own node
and the standard hat coefficient keeps its nodal-value meaning.  The one
exception is the boundary Heaviside enrichment, which is attached unshifted:
it equals the hat on the boundary element but is forced to zero exactly at the
designated node, so the discrete solution can hold a nonzero one-sided limit
there while a point constraint pins the nodal value itself.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .mesh import Mesh1D

MEMBERSHIP_RTOL = 1e-12


@dataclass(frozen=True)
class Exponential:
    """E(x) = exp(rate * x), evaluated in conditioned (patch-local) form by default.

    The conditioned form uses exp(rate * (x - x_node)) - 1 per node, which spans
    the same local space as the shifted raw exponential up to a positive scale
    per DOF while keeping magnitudes near unity on the patch.  Set
    ``conditioned=False`` to evaluate the raw form for fidelity experiments.
    """

    rate: float
    conditioned: bool = True

    def __post_init__(self):
        if self.rate == 0:
            raise ValueError("exponential enrichment needs a nonzero rate")


@dataclass(frozen=True)
class HeavisideLastElement:
    """Indicator of the boundary element adjacent to the designated boundary node.

    The factor is 1 on that element except exactly at the designated node,
    where it is 0.
    """

    node_x: float


@dataclass(frozen=True)
class TanhShock:
    """E(x) = tanh((center - x) / (2 * thickness)); thickness sets the shock width."""

    center: float
    thickness: float

    def __post_init__(self):
        if not self.thickness > 0:
            raise ValueError("tanh enrichment needs thickness > 0")


EnrichmentKind = Union[Exponential, HeavisideLastElement, TanhShock]


@dataclass(frozen=True)
class EnrichmentRule:
    """An enrichment kind applied to every node inside [local_lo, local_hi]."""

    kind: EnrichmentKind
    local_lo: float
    local_hi: float

    def __post_init__(self):
        if not self.local_lo < self.local_hi:
            raise ValueError(
                f"empty application interval [{self.local_lo}, {self.local_hi}]"
            )


def local_domain_for_tanh(center: float, thickness: float, h_e: float):
    """Application interval for a tanh enrichment.

    Symmetric about the center with half-width 2 * thickness * atanh(0.99) + h_e,
    covering the region where the profile magnitude is below 0.99 plus one
    element of margin.
    """
    if not thickness > 0:
        raise ValueError("thickness must be positive")
    if not h_e > 0:
        raise ValueError("element size must be positive")
    half = 2.0 * thickness * np.arctanh(0.99) + h_e
    return center - half, center + half


def tanh_rule(center: float, thickness: float, h_e: float) -> EnrichmentRule:
    lo, hi = local_domain_for_tanh(center, thickness, h_e)
    return EnrichmentRule(TanhShock(center, thickness), lo, hi)


def exponential_rule(rate: float, lo: float, hi: float, conditioned: bool = True) -> EnrichmentRule:
    return EnrichmentRule(Exponential(rate, conditioned), lo, hi)


def heaviside_rule(mesh: Mesh1D, node_x: float) -> EnrichmentRule:
    """Heaviside rule whose application interval holds only the designated node."""
    half = 0.5 * mesh.h
    return EnrichmentRule(HeavisideLastElement(node_x), node_x - half, node_x + half)


@dataclass(frozen=True)
class ShapeEval:
    value: float
    derivative: float


class DofMap:
    """Global numbering of standard and enrichment DOFs.

    Ordering: the standard (hat) DOF of every node in node order first, then
    enrichment DOFs grouped by rule, each group in node order.
    """

    def __init__(self, mesh: Mesh1D, rules, dof_node, dof_rule, node_enrich, warns):
        self.mesh = mesh
        self.rules = tuple(rules)
        self.dof_node = dof_node          # node index per global DOF
        self.dof_rule = dof_rule          # rule index per global DOF, -1 = standard
        self.node_enrich = node_enrich    # per node: list of enrichment DOF ids
        self.warnings = list(warns)

    @property
    def total_dofs(self) -> int:
        return self.dof_node.shape[0]

    @property
    def n_dofs(self) -> int:
        return self.total_dofs

    @property
    def m_alpha(self) -> np.ndarray:
        """Per-node DOF count (1 standard plus one per applied rule)."""
        counts = np.ones(self.mesh.n_nodes, dtype=int)
        for alpha, dofs in enumerate(self.node_enrich):
            counts[alpha] += len(dofs)
        return counts

    @property
    def entries(self):
        """(node, j) pairs in global DOF order; j = 1 is the standard hat."""
        j_next = np.full(self.mesh.n_nodes, 2, dtype=int)
        out = []
        for g in range(self.total_dofs):
            alpha = int(self.dof_node[g])
            if self.dof_rule[g] < 0:
                out.append((alpha, 1))
            else:
                out.append((alpha, int(j_next[alpha])))
                j_next[alpha] += 1
        return out


def _designated_element(mesh: Mesh1D, kind: HeavisideLastElement) -> int:
    coords = mesh.node_coords
    tol = MEMBERSHIP_RTOL * (mesh.domain_hi - mesh.domain_lo)
    node = int(np.argmin(np.abs(coords - kind.node_x)))
    if abs(coords[node] - kind.node_x) > tol:
        raise ValueError(f"no node at x = {kind.node_x}")
    if node == 0:
        return 0
    if node == mesh.n_nodes - 1:
        return mesh.n_elements - 1
    raise ValueError("Heaviside enrichment requires a boundary node")


def build_dof_map(mesh: Mesh1D, rules=()) -> DofMap:
    """Assign global DOF ids for the hats and every applied enrichment rule.

    A rule whose interval contains no node is kept but reported through the
    returned map's ``warnings`` (and a runtime warning).
    """
    rules = tuple(rules)
    span = mesh.domain_hi - mesh.domain_lo
    tol = MEMBERSHIP_RTOL * span
    for rule in rules:
        if rule.local_hi < mesh.domain_lo - tol or rule.local_lo > mesh.domain_hi + tol:
            raise ValueError(
                f"rule interval [{rule.local_lo}, {rule.local_hi}] does not meet the domain"
            )
        if isinstance(rule.kind, HeavisideLastElement):
            _designated_element(mesh, rule.kind)

    n_nodes = mesh.n_nodes
    dof_node = list(range(n_nodes))
    dof_rule = [-1] * n_nodes
    node_enrich = [[] for _ in range(n_nodes)]
    warns = []
    coords = mesh.node_coords
    for k, rule in enumerate(rules):
        inside = np.nonzero(
            (coords >= rule.local_lo - tol) & (coords <= rule.local_hi + tol)
        )[0]
        if isinstance(rule.kind, HeavisideLastElement):
            elem = _designated_element(mesh, rule.kind)
            adjacent = set(mesh.elements[elem])
            bad = [int(a) for a in inside if int(a) not in adjacent]
            if bad:
                raise ValueError(
                    "Heaviside rule enriches nodes outside its boundary element: "
                    f"{bad}"
                )
        if inside.size == 0:
            msg = (
                f"rule {k} ({type(rule.kind).__name__}) on "
                f"[{rule.local_lo}, {rule.local_hi}] contains no node"
            )
            warns.append(msg)
            warnings.warn(msg, stacklevel=2)
            continue
        for alpha in inside:
            g = len(dof_node)
            dof_node.append(int(alpha))
            dof_rule.append(k)
            node_enrich[int(alpha)].append(g)

    return DofMap(
        mesh,
        rules,
        np.asarray(dof_node, dtype=np.int64),
        np.asarray(dof_rule, dtype=np.int64),
        node_enrich,
        warns,
    )


def _enrichment_factor(kind, mesh, x, x_node, elem):
    """Shifted enrichment factor and derivative at points ``x`` for node ``x_node``.

    ``elem`` is the element index of each point, needed by element-indicator
    kinds.  Returns (F, dF) with F(x_node) = 0 for every kind.
    """
    if isinstance(kind, Exponential):
        if kind.conditioned:
            g = np.exp(kind.rate * (x - x_node))
            return g - 1.0, kind.rate * g
        g = np.exp(kind.rate * x)
        return g - np.exp(kind.rate * x_node), kind.rate * g
    if isinstance(kind, TanhShock):
        s = np.tanh((kind.center - x) / (2.0 * kind.thickness))
        s0 = np.tanh((kind.center - x_node) / (2.0 * kind.thickness))
        return s - s0, -(1.0 - s * s) / (2.0 * kind.thickness)
    if isinstance(kind, HeavisideLastElement):
        target = _designated_element(mesh, kind)
        on = (elem == target) & (x != kind.node_x)
        return np.where(on, 1.0, 0.0), np.zeros_like(np.asarray(x, dtype=float))
    raise TypeError(f"unknown enrichment kind: {kind!r}")


def _element_dof_lists(mesh: Mesh1D, dof_map: DofMap):
    """Per-element global DOF lists padded with -1; shape (n_elements, D)."""
    lists = []
    for e in range(mesh.n_elements):
        l, r = mesh.elements[e]
        lists.append([int(l), int(r)] + dof_map.node_enrich[l] + dof_map.node_enrich[r])
    width = max(len(v) for v in lists)
    out = np.full((mesh.n_elements, width), -1, dtype=np.int64)
    for e, v in enumerate(lists):
        out[e, : len(v)] = v
    return out


def _eval_slots(mesh: Mesh1D, dof_map: DofMap, elem, x, elem_dofs):
    """Evaluate all supported shape functions at points ``x`` in elements ``elem``.

    Returns (vals, ders, gdof) of shape (npoints, D); padding slots carry
    gdof = -1 and zero values.
    """
    elem = np.asarray(elem, dtype=np.int64)
    x = np.asarray(x, dtype=float)
    npts = x.shape[0]
    width = elem_dofs.shape[1]
    coords = mesh.node_coords
    left_nodes = mesh.elements[elem, 0]
    xl = coords[left_nodes]
    xr = coords[mesh.elements[elem, 1]]
    w = xr - xl

    vals = np.zeros((npts, width))
    ders = np.zeros((npts, width))
    gdof = elem_dofs[elem]

    for s in range(width):
        g = gdof[:, s]
        valid = g >= 0
        if not np.any(valid):
            continue
        node = dof_map.dof_node[np.where(valid, g, 0)]
        is_left = node == left_nodes
        hat_v = np.where(is_left, (xr - x) / w, (x - xl) / w)
        hat_d = np.where(is_left, -1.0 / w, 1.0 / w)
        rule_ids = dof_map.dof_rule[np.where(valid, g, 0)]
        fv = np.ones(npts)
        fd = np.zeros(npts)
        for k, rule in enumerate(dof_map.rules):
            mask = valid & (rule_ids == k)
            if not np.any(mask):
                continue
            fk, dk = _enrichment_factor(
                rule.kind, mesh, x[mask], coords[node[mask]], elem[mask]
            )
            fv[mask] = fk
            fd[mask] = dk
        vals[:, s] = np.where(valid, hat_v * fv, 0.0)
        ders[:, s] = np.where(valid, hat_d * fv + hat_v * fd, 0.0)
    return vals, ders, gdof


class PointTable:
    """Shape values and slopes at a fixed set of points, for fast field evaluation."""

    def __init__(self, vals, ders, gdof, n_dofs):
        self.vals = vals
        self.ders = ders
        self.gdof = gdof
        self.n_dofs = n_dofs

    def value(self, c):
        cpad = np.append(np.asarray(c, dtype=float), 0.0)
        ce = cpad[self.gdof]
        return np.einsum("pd,pd->p", self.vals, ce)

    def value_and_slope(self, c):
        cpad = np.append(np.asarray(c, dtype=float), 0.0)
        ce = cpad[self.gdof]
        return (
            np.einsum("pd,pd->p", self.vals, ce),
            np.einsum("pd,pd->p", self.ders, ce),
        )


def point_table(mesh: Mesh1D, dof_map: DofMap, x) -> PointTable:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    elem = mesh.locate(x)
    elem_dofs = _element_dof_lists(mesh, dof_map)
    vals, ders, gdof = _eval_slots(mesh, dof_map, elem, x, elem_dofs)
    return PointTable(vals, ders, gdof, dof_map.total_dofs)


class ShapeTable:
    """Shape values at every element quadrature point, ready for assembly kernels.

    ``vals``/``ders`` have shape (n_elements, D, Q); ``wdet`` are the mapped
    quadrature weights (n_elements, Q); ``gdof`` the global DOF ids (n_elements, D)
    padded with -1; ``x`` the quadrature point coordinates.
    """

    def __init__(self, vals, ders, wdet, gdof, x, n_dofs):
        self.vals = np.ascontiguousarray(vals)
        self.ders = np.ascontiguousarray(ders)
        self.wdet = np.ascontiguousarray(wdet)
        self.gdof = np.ascontiguousarray(gdof)
        self.x = x
        self.n_dofs = n_dofs


def quadrature_table(mesh: Mesh1D, dof_map: DofMap, rule) -> ShapeTable:
    ne = mesh.n_elements
    nq = rule.n
    coords = mesh.node_coords
    xl = coords[mesh.elements[:, 0]]
    xr = coords[mesh.elements[:, 1]]
    half = 0.5 * (xr - xl)
    mid = 0.5 * (xr + xl)
    xq = mid[:, None] + half[:, None] * rule.points[None, :]
    wdet = half[:, None] * rule.weights[None, :]

    elem_flat = np.repeat(np.arange(ne, dtype=np.int64), nq)
    elem_dofs = _element_dof_lists(mesh, dof_map)
    vals, ders, _ = _eval_slots(mesh, dof_map, elem_flat, xq.ravel(), elem_dofs)
    width = elem_dofs.shape[1]
    vals = vals.reshape(ne, nq, width).transpose(0, 2, 1)
    ders = ders.reshape(ne, nq, width).transpose(0, 2, 1)
    return ShapeTable(vals, ders, wdet, elem_dofs, xq, dof_map.total_dofs)


def shape_eval(mesh: Mesh1D, dof_map: DofMap, dof: int, x: float) -> ShapeEval:
    """Evaluate one GFEM shape function (value and derivative) at ``x``."""
    if not 0 <= dof < dof_map.total_dofs:
        raise ValueError(f"dof index {dof} out of range")
    table = point_table(mesh, dof_map, np.asarray([float(x)]))
    hit = np.nonzero(table.gdof[0] == dof)[0]
    if hit.size == 0:
        return ShapeEval(0.0, 0.0)
    s = int(hit[0])
    return ShapeEval(float(table.vals[0, s]), float(table.ders[0, s]))
