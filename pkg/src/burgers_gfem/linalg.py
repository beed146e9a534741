"""Direct linear solver with diagonal scaling, perturbation, and iterative refinement.

Enriched shape sets make the assembled systems severely ill-conditioned, and a
boundary Heaviside enrichment makes them singular up to the point-constraint
terms.  The solver scales the system symmetrically by the inverse square roots
of the diagonal magnitudes, factorizes the scaled matrix perturbed by eps1 on
the diagonal once, and refines the solution until the energy ratio
|e A e / c A c| of the next correction e against the iterate c drops below
eps2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.linalg import lapack

_TINY = 1e-300
_BAND_LIMIT = 16
_BAND_MIN_SIZE = 64


@dataclass
class LinearSolveConfig:
    eps1: float = 1e-10
    eps2: float = 1e-10
    max_refinements: int = 100

    def __post_init__(self):
        if not 0 < self.eps1 < 1 or not 0 < self.eps2 < 1:
            raise ValueError("eps1 and eps2 must lie in (0, 1)")


@dataclass
class LinearSolveInfo:
    refinements: int
    ratio: float
    ratios: list = field(default_factory=list)


class LinearSolveError(RuntimeError):
    def __init__(self, message, last_iterate=None, ratio=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.ratio = ratio


class _DenseLU:
    def __init__(self, a):
        self._lu, self._piv = scipy.linalg.lu_factor(a, check_finite=False)

    def solve(self, b):
        return scipy.linalg.lu_solve((self._lu, self._piv), b, check_finite=False)


class _BandedLU:
    """LAPACK general-band factorization, reused across refinement solves."""

    def __init__(self, a, band):
        n = a.shape[0]
        kl = ku = band
        ab = np.zeros((2 * kl + ku + 1, n))
        for d in range(-kl, ku + 1):
            diag = np.diagonal(a, d)
            ab[kl + ku - d, max(d, 0) : max(d, 0) + diag.shape[0]] = diag
        lu, ipiv, info = lapack.dgbtrf(ab, kl, ku)
        if info != 0:
            raise LinearSolveError(f"banded factorization failed (info={info})")
        self._lu = lu
        self._ipiv = ipiv
        self._kl = kl
        self._ku = ku

    def solve(self, b):
        x, info = lapack.dgbtrs(self._lu, self._kl, self._ku, b, self._ipiv)
        if info != 0:
            raise LinearSolveError(f"banded solve failed (info={info})")
        return x


def _bandwidth(a):
    rows, cols = np.nonzero(a)
    if rows.size == 0:
        return 0
    return int(np.max(np.abs(rows - cols)))


def _factorize(a):
    n = a.shape[0]
    if n >= _BAND_MIN_SIZE:
        band = _bandwidth(a)
        if band <= _BAND_LIMIT:
            return _BandedLU(a, band)
    return _DenseLU(a)


def linear_solve_with_info(a, b, config: LinearSolveConfig | None = None):
    """Solve a @ x = b; returns (x, LinearSolveInfo)."""
    cfg = config if config is not None else LinearSolveConfig()
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix must be square, got shape {a.shape}")
    if b.shape != (a.shape[0],):
        raise ValueError("right-hand side length does not match the matrix")
    if not np.all(np.isfinite(a)) or not np.all(np.isfinite(b)):
        raise LinearSolveError("non-finite entries in the linear system")
    if not np.any(b):
        return np.zeros_like(b), LinearSolveInfo(0, 0.0, [0.0])

    d = np.diagonal(a)
    if np.any(d == 0.0):
        raise LinearSolveError(
            "zero diagonal entry: diagonal scaling is undefined"
        )
    t = 1.0 / np.sqrt(np.abs(d))
    a_s = a * t[:, None]
    a_s *= t[None, :]
    b_s = b * t

    a_eps = a_s.copy()
    a_eps[np.diag_indices_from(a_eps)] += cfg.eps1
    fact = _factorize(a_eps)

    c = fact.solve(b_s)
    r = b_s - a_s @ c
    e = fact.solve(r)

    def ratio(e_vec, c_vec):
        num = e_vec @ (a_s @ e_vec)
        den = c_vec @ (a_s @ c_vec)
        return abs(num) / max(abs(den), _TINY)

    rho = ratio(e, c)
    ratios = [rho]
    k = 0
    while rho > cfg.eps2:
        if k >= cfg.max_refinements:
            raise LinearSolveError(
                f"refinement stalled after {k} iterations (ratio {rho:.3e})",
                last_iterate=t * c,
                ratio=rho,
            )
        c = c + e
        r = r - a_s @ e
        e = fact.solve(r)
        rho = ratio(e, c)
        ratios.append(rho)
        k += 1
    return t * c, LinearSolveInfo(k, rho, ratios)


def linear_solve(a, b, config: LinearSolveConfig | None = None):
    """Solve a @ x = b, returning only the solution vector."""
    x, _ = linear_solve_with_info(a, b, config)
    return x
