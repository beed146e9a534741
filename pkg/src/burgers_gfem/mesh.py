"""Uniform 1D meshes, nodal patches, and the linear hat-function partition of unity."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Mesh1D:
    """Uniform mesh on [domain_lo, domain_hi].

    ``node_coords`` is strictly increasing with the domain endpoints as its
    first and last entries; ``elements`` holds (left, right) node index pairs
    covering the domain without gaps or overlap.
    """

    domain_lo: float
    domain_hi: float
    node_coords: np.ndarray
    elements: np.ndarray
    h: float

    @property
    def n_nodes(self) -> int:
        return self.node_coords.shape[0]

    @property
    def n_elements(self) -> int:
        return self.elements.shape[0]

    def element_bounds(self, e: int) -> tuple[float, float]:
        l, r = self.elements[e]
        return float(self.node_coords[l]), float(self.node_coords[r])

    def locate(self, x):
        """Element index containing each x, left element when x is a node.

        Points exactly at ``domain_lo`` fall in element 0.  Raises for points
        outside the closed domain.
        """
        x = np.asarray(x, dtype=float)
        if np.any(x < self.domain_lo) or np.any(x > self.domain_hi):
            raise ValueError(
                f"point outside domain [{self.domain_lo}, {self.domain_hi}]"
            )
        idx = np.searchsorted(self.node_coords, x, side="left") - 1
        return np.clip(idx, 0, self.n_elements - 1)


@dataclass(frozen=True)
class HatEval:
    value: float
    derivative: float


def build_uniform_mesh(n_elements: int, lo: float = 0.0, hi: float = 1.0) -> Mesh1D:
    """Uniform mesh with ``n_elements`` elements on [lo, hi]."""
    if n_elements < 1:
        raise ValueError("n_elements must be at least 1")
    if not lo < hi:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    coords = np.linspace(lo, hi, n_elements + 1)
    idx = np.arange(n_elements)
    elements = np.stack([idx, idx + 1], axis=1)
    h = (hi - lo) / n_elements
    return Mesh1D(float(lo), float(hi), coords, elements, h)


def patch(mesh: Mesh1D, alpha: int) -> set[int]:
    """Indices of the elements sharing node ``alpha`` (the node's patch)."""
    if not 0 <= alpha < mesh.n_nodes:
        raise ValueError(f"node index {alpha} out of range")
    return {e for e in (alpha - 1, alpha) if 0 <= e < mesh.n_elements}


def hat_eval(mesh: Mesh1D, alpha: int, x: float) -> HatEval:
    """Evaluate the linear hat of node ``alpha`` at ``x``.

    At a node exactly, the derivative is the left-limit value by convention.
    Zero (value and derivative) outside the closure of the node's patch.
    """
    if not 0 <= alpha < mesh.n_nodes:
        raise ValueError(f"node index {alpha} out of range")
    e = int(mesh.locate(x))
    l, r = mesh.elements[e]
    xl = mesh.node_coords[l]
    xr = mesh.node_coords[r]
    w = xr - xl
    if alpha == l:
        return HatEval((xr - x) / w, -1.0 / w)
    if alpha == r:
        return HatEval((x - xl) / w, 1.0 / w)
    return HatEval(0.0, 0.0)
