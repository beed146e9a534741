"""Relative L2/H1 error norms, error-vs-time series, and convergence rates."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .quadrature import gauss_rule, map_to_interval


@dataclass(frozen=True)
class ErrorSample:
    time: float
    rel_l2: float
    rel_h1: float
    dofs: int


@lru_cache(maxsize=32)
def _composite_grid(lo: float, hi: float, n_subintervals: int, points_per: int):
    """Fixed composite Gauss grid, independent of any solution mesh."""
    rule = gauss_rule(points_per)
    edges = np.linspace(lo, hi, n_subintervals + 1)
    xs, ws = [], []
    for i in range(n_subintervals):
        x, w = map_to_interval(rule, edges[i], edges[i + 1])
        xs.append(x)
        ws.append(w)
    return np.concatenate(xs), np.concatenate(ws)


def _norm_pieces(approx, ref, lo, hi, n_subintervals, points_per):
    x, w = _composite_grid(float(lo), float(hi), int(n_subintervals), int(points_per))
    ua, da = approx(x)
    ur, dr = ref(x)
    num_l2 = float(w @ (ua - ur) ** 2)
    den_l2 = float(w @ ur**2)
    num_d = float(w @ (da - dr) ** 2)
    den_d = float(w @ dr**2)
    return num_l2, den_l2, num_d, den_d


def relative_error(approx, ref, lo: float = 0.0, hi: float = 1.0, norm: str = "l2",
                   n_subintervals: int = 2000, points_per_subinterval: int = 4,
                   seminorm: bool = False) -> float:
    """Relative integral error of ``approx`` against ``ref``.

    Both arguments are evaluators x -> (u, du).  The H1 norm includes the L2
    part unless ``seminorm`` is set.
    """
    num_l2, den_l2, num_d, den_d = _norm_pieces(
        approx, ref, lo, hi, n_subintervals, points_per_subinterval
    )
    if norm == "l2":
        num, den = num_l2, den_l2
    elif norm == "h1":
        if seminorm:
            num, den = num_d, den_d
        else:
            num, den = num_l2 + num_d, den_l2 + den_d
    else:
        raise ValueError(f"unknown norm {norm!r}")
    if den == 0.0:
        raise ValueError("reference norm is zero; relative error undefined")
    return float(np.sqrt(num / den))


def relative_errors(approx, ref, lo: float = 0.0, hi: float = 1.0,
                    n_subintervals: int = 2000, points_per_subinterval: int = 4,
                    seminorm: bool = False):
    """(rel_l2, rel_h1) sharing one pass over the integration grid."""
    num_l2, den_l2, num_d, den_d = _norm_pieces(
        approx, ref, lo, hi, n_subintervals, points_per_subinterval
    )
    if den_l2 == 0.0:
        raise ValueError("reference norm is zero; relative error undefined")
    l2 = float(np.sqrt(num_l2 / den_l2))
    if seminorm:
        h1 = float(np.sqrt(num_d / max(den_d, 1e-300)))
    else:
        h1 = float(np.sqrt((num_l2 + num_d) / (den_l2 + den_d)))
    return l2, h1


def error_time_series(history, reference, times, lo: float = 0.0, hi: float = 1.0,
                      n_subintervals: int = 2000, points_per_subinterval: int = 4):
    """ErrorSample per requested time, against the reference at the snapshot time."""
    out = []
    dofs = history.dof_map.total_dofs
    for t in times:
        k = history.snapshot_index(t)
        actual = float(history.times[k])
        l2, h1 = relative_errors(
            history.evaluator(k), reference.at(actual), lo, hi,
            n_subintervals, points_per_subinterval,
        )
        out.append(ErrorSample(actual, l2, h1, dofs))
    return out


def convergence_rate(samples, norm: str = "l2"):
    """Rate from the two finest grids: -log(e_f/e_c) / log(d_f/d_c).

    Returns None when either error sits at the precision floor (zero), since
    the rate is then meaningless.
    """
    if len(samples) < 2:
        raise ValueError("need at least two samples")
    ordered = sorted(samples, key=lambda s: s.dofs)
    coarse, fine = ordered[-2], ordered[-1]
    if fine.dofs == coarse.dofs:
        raise ValueError("samples must have distinct DOF counts")
    e_c = getattr(coarse, f"rel_{norm}")
    e_f = getattr(fine, f"rel_{norm}")
    if e_c == 0.0 or e_f == 0.0:
        return None
    return -float(np.log(e_f / e_c) / np.log(fine.dofs / coarse.dofs))


def count_sign_changes(nodal_values, node_coords, window, tol: float = 1e-12) -> int:
    """Sign alternations of consecutive nodal differences inside a window.

    Differences are taken over every element whose interval intersects the
    window; differences below ``tol`` in magnitude carry no sign and are
    skipped.
    """
    values = np.asarray(nodal_values, dtype=float)
    coords = np.asarray(node_coords, dtype=float)
    w_lo, w_hi = window
    keep = (coords[1:] >= w_lo) & (coords[:-1] <= w_hi)
    diffs = np.diff(values)[keep]
    signs = [1 if d > tol else -1 for d in diffs if abs(d) > tol]
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)
