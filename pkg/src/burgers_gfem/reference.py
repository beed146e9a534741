"""Ground-truth evaluators: Fourier series, characteristics, steady shock, fine FEM.

Every evaluator exposes ``(x, t) -> (u, du)`` through a ReferenceSolution
wrapper so error norms can treat them interchangeably.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .mesh import build_uniform_mesh
from .enrichment import build_dof_map
from .quadrature import gauss_rule, map_to_interval
from .solver import (
    BurgersProblem,
    LinearSolveConfig,
    NewtonConfig,
    SolutionHistory,
    TimeConfig,
    run_simulation,
)


@dataclass
class ReferenceSolution:
    """Uniform wrapper around an (x, t) -> (u, du) evaluator."""

    kind: str
    fn: Callable
    metadata: dict

    def __call__(self, x, t):
        return self.fn(np.atleast_1d(np.asarray(x, dtype=float)), float(t))

    def at(self, t: float):
        def evaluate(x):
            return self(x, t)

        return evaluate


# ---------------------------------------------------------------------------
# Fourier series solution of the homogeneous boundary-layer problem


@dataclass(frozen=True)
class FourierParams:
    nu: float
    max_terms: int = 10000
    term_tol: float = 1e-14
    coeff_quad_points: int = 200

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError("the series solution requires nu > 0")


class FourierTruncationError(RuntimeError):
    """Raised when the series still carries weight at the term cap.

    The series converges slowly for small nu and t; fall back to a fine-grid
    FEM reference in that regime.
    """


class FourierSolution:
    """Series solution u = 2 pi nu * N / D of the sin-initial-data problem.

    N and D are cosine-transform series of exp(-(1 - cos(pi x)) / (2 pi nu));
    coefficients are computed by Gauss quadrature, with the point count doubled
    until two successive resolutions agree to 1e-13.
    """

    def __init__(self, params: FourierParams):
        if isinstance(params, (int, float)):
            params = FourierParams(float(params))
        self.params = params
        self._coeffs = None

    def _compute_coeffs(self, n_max: int):
        p = self.params
        m = max(p.coeff_quad_points, 4 * n_max + 16)
        prev = None
        for _ in range(30):
            rule = gauss_rule(64)
            # composite rule: split [0, 1] so the total point count reaches m
            n_sub = max(1, int(np.ceil(m / 64)))
            edges = np.linspace(0.0, 1.0, n_sub + 1)
            xs, ws = [], []
            for i in range(n_sub):
                xq, wq = map_to_interval(rule, edges[i], edges[i + 1])
                xs.append(xq)
                ws.append(wq)
            x = np.concatenate(xs)
            w = np.concatenate(ws)
            envelope = np.exp(-(1.0 - np.cos(np.pi * x)) / (2.0 * np.pi * p.nu))
            n = np.arange(n_max + 1)
            cosines = np.cos(np.outer(n, np.pi * x))
            coeffs = cosines @ (w * envelope)
            coeffs[1:] *= 2.0
            if prev is not None and np.max(np.abs(coeffs - prev)) <= 1e-13 * max(
                1.0, float(np.max(np.abs(coeffs)))
            ):
                return coeffs
            prev = coeffs
            m *= 2
        raise FourierTruncationError("series coefficient quadrature did not settle")

    def _ensure_coeffs(self, n_max: int):
        if self._coeffs is None or self._coeffs.shape[0] <= n_max:
            self._coeffs = self._compute_coeffs(max(n_max, 64))
        return self._coeffs

    def __call__(self, x, t):
        p = self.params
        x = np.atleast_1d(np.asarray(x, dtype=float))
        t = float(t)
        a = self._ensure_coeffs(64)
        num = np.zeros_like(x)        # sum a_n E_n n sin(n pi x)
        den = np.full_like(x, a[0])   # a_0 + sum a_n E_n cos(n pi x)
        numx = np.zeros_like(x)       # sum a_n E_n n^2 cos(n pi x)
        small_streak = 0
        tiny = 1e-300
        n = 0
        while n < p.max_terms:
            n += 1
            a = self._ensure_coeffs(n)
            decay = math.exp(-(n * n) * math.pi * math.pi * p.nu * t)
            term_scale = abs(a[n]) * decay * n
            num += a[n] * decay * n * np.sin(n * np.pi * x)
            den += a[n] * decay * np.cos(n * np.pi * x)
            numx += a[n] * decay * n * n * np.cos(n * np.pi * x)
            num_floor = max(float(np.max(np.abs(num))), tiny)
            den_floor = max(float(np.max(np.abs(den))), tiny)
            if term_scale <= p.term_tol * num_floor and term_scale <= p.term_tol * den_floor:
                small_streak += 1
                if small_streak >= 3:
                    break
            else:
                small_streak = 0
        else:
            raise FourierTruncationError(
                f"series not converged after {p.max_terms} terms "
                f"(nu={p.nu}, t={t}); the series converges slowly for small "
                "nu and t, use a fine-grid FEM reference instead"
            )
        scale = 2.0 * np.pi * p.nu
        u = scale * num / den
        du = scale * np.pi * (numx * den + num * num) / (den * den)
        return u, du

    def as_reference(self) -> ReferenceSolution:
        return ReferenceSolution(
            "fourier", self.__call__, {"nu": self.params.nu}
        )


def fourier_solution(params: FourierParams, x: float, t: float) -> float:
    """Series solution value at a single point."""
    u, _ = FourierSolution(params)(np.asarray([x]), t)
    return float(u[0])


# ---------------------------------------------------------------------------
# characteristics


def _numeric_derivative(f, x, step=1e-6):
    x = np.asarray(x, dtype=float)
    return (np.asarray(f(x + step)) - np.asarray(f(x - step))) / (2.0 * step)


def breaking_time(u_ic, lo: float, hi: float, n_scan: int = 20001,
                  u_ic_prime=None):
    """First shock time -1 / min(u_ic'), or None when the slope never drops below 0.

    The slope is scanned on a uniform grid; an analytic derivative can be
    supplied, otherwise central differences are used.
    """
    x = np.linspace(lo, hi, n_scan)
    slope = (
        np.asarray(u_ic_prime(x), dtype=float)
        if u_ic_prime is not None
        else _numeric_derivative(u_ic, x)
    )
    m = float(np.min(slope))
    if m >= 0.0:
        return None
    return -1.0 / m


def riemann_ic(b: float, x):
    """Translated ramp data: b+1 left of 1/2, linear ramp of slope -2, b-1 past 3/2."""
    x = np.asarray(x, dtype=float)
    return np.where(
        x <= 0.5, b + 1.0, np.where(x < 1.5, b + 2.0 * (1.0 - x), b - 1.0)
    )


def riemann_ic_prime(b: float, x):
    x = np.asarray(x, dtype=float)
    return np.where((x > 0.5) & (x < 1.5), -2.0, 0.0)


class MovingShockError(RuntimeError):
    """Post-breaking evaluation requested for a non-stationary shock."""


class CharacteristicsSolution:
    """Inviscid solution by the method of characteristics.

    Pre-breaking values solve u = u_ic(x - u t) by bracketed bisection with a
    Newton polish.  Past the breaking time, a stationary shock (initial data
    crossing zero with negative slope at x_b) splits the domain into a left
    branch (largest root) and a right branch (smallest root), with u(x_b) = 0
    exactly.  Data of one sign with negative slope forms a moving shock and is
    rejected past breaking.
    """

    def __init__(self, u_ic, lo: float, hi: float, u_ic_prime=None,
                 n_scan: int = 20001, bracket_pad: float = 1e-9):
        self.u_ic = u_ic
        self.lo = float(lo)
        self.hi = float(hi)
        self.u_ic_prime = u_ic_prime
        x = np.linspace(lo, hi, n_scan)
        values = np.asarray(u_ic(x), dtype=float)
        self.u_min = float(np.min(values)) - bracket_pad
        self.u_max = float(np.max(values)) + bracket_pad
        self.t_break = breaking_time(u_ic, lo, hi, n_scan, u_ic_prime)
        self.shock_x = self._find_stationary_shock(x, values)

    def _slope(self, x):
        if self.u_ic_prime is not None:
            return np.asarray(self.u_ic_prime(np.asarray(x, dtype=float)), dtype=float)
        return _numeric_derivative(self.u_ic, x)

    def _find_stationary_shock(self, x, values):
        # classify values below a tiny relative threshold as zero so that
        # data whose zero is only approximate in floating point still counts
        tol = 1e-9 * max(float(np.max(np.abs(values))), 1e-30)
        pos = values > tol
        nonpos = values <= tol
        neg = values < -tol
        nonneg = values >= -tol
        crossing = np.nonzero(pos[:-1] & nonpos[1:])[0]
        touch = np.nonzero(nonneg[:-1] & neg[1:])[0]
        candidates = sorted(set(crossing) | set(touch))
        for i in candidates:
            a, bnd = x[i], x[i + 1]
            fa = float(self.u_ic(np.asarray([a]))[0])
            for _ in range(80):
                mid = 0.5 * (a + bnd)
                fm = float(self.u_ic(np.asarray([mid]))[0])
                if (fa > tol) == (fm > tol):
                    a, fa = mid, fm
                else:
                    bnd = mid
            xb = 0.5 * (a + bnd)
            # snap to a scan point (or cell edge) that is an exact-enough zero
            for cand in (x[i], x[i + 1]):
                if abs(float(self.u_ic(np.asarray([cand]))[0])) <= tol and abs(
                    cand - xb
                ) <= (x[i + 1] - x[i]):
                    xb = float(cand)
                    break
            # the zero may sit at a kink; test the slope over a neighborhood
            # so one-sided negative slopes qualify
            step = x[1] - x[0]
            probes = np.array([xb - step, xb, xb + step])
            if float(np.min(self._slope(probes))) < 0.0:
                return xb
        return None

    def _root(self, x, t, lo, hi, largest: bool, n_cells: int = 512):
        """Vectorized bracketed bisection for u - u_ic(x - u t) = 0."""
        x = np.asarray(x, dtype=float)
        lo = np.broadcast_to(np.asarray(lo, dtype=float), x.shape).copy()
        hi = np.broadcast_to(np.asarray(hi, dtype=float), x.shape).copy()

        grid = lo[None, :] + (hi - lo)[None, :] * (
            np.arange(n_cells + 1, dtype=float)[:, None] / n_cells
        )
        f = grid - np.asarray(self.u_ic(x[None, :] - grid * t), dtype=float)
        signchange = f[:-1] * f[1:] <= 0.0
        if largest:
            rev = signchange[::-1]
            k = n_cells - 1 - np.argmax(rev, axis=0)
        else:
            k = np.argmax(signchange, axis=0)
        found = np.any(signchange, axis=0)
        cols = np.arange(x.shape[0])
        a = grid[k, cols]
        b = grid[k + 1, cols]
        a = np.where(found, a, lo)
        b = np.where(found, b, hi)
        fa = a - np.asarray(self.u_ic(x - a * t), dtype=float)
        for _ in range(60):
            mid = 0.5 * (a + b)
            fm = mid - np.asarray(self.u_ic(x - mid * t), dtype=float)
            same = (fa > 0) == (fm > 0)
            a = np.where(same, mid, a)
            fa = np.where(same, fm, fa)
            b = np.where(same, b, mid)
        u = 0.5 * (a + b)
        if self.u_ic_prime is not None:
            for _ in range(2):
                xi = x - u * t
                fu = u - np.asarray(self.u_ic(xi), dtype=float)
                dfu = 1.0 + t * np.asarray(self.u_ic_prime(xi), dtype=float)
                safe = np.abs(dfu) > 1e-12
                u = np.where(safe, u - fu / np.where(safe, dfu, 1.0), u)
                u = np.clip(u, self.u_min, self.u_max)
        return u

    def __call__(self, x, t):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        t = float(t)
        if t < 0:
            raise ValueError("t must be non-negative")
        if t == 0.0:
            u = np.asarray(self.u_ic(x), dtype=float)
            return u, self._slope(x)

        post_breaking = self.t_break is not None and t >= self.t_break
        if post_breaking and self.shock_x is None:
            raise MovingShockError(
                "initial data of one sign with negative slope forms a moving "
                f"shock at t >= {self.t_break:.6g}; only stationary shocks are "
                "supported past breaking"
            )
        if not post_breaking:
            u = self._root(x, t, self.u_min, self.u_max, largest=True)
        else:
            xb = self.shock_x
            u = np.empty_like(x)
            left = x < xb
            right = x > xb
            if np.any(left):
                u[left] = self._root(x[left], t, 0.0, self.u_max, largest=True)
            if np.any(right):
                u[right] = self._root(x[right], t, self.u_min, 0.0, largest=False)
            u[np.abs(x - xb) == 0.0] = 0.0
        xi = x - u * t
        slope_ic = self._slope(xi)
        denom = 1.0 + t * slope_ic
        du = np.where(np.abs(denom) > 1e-12, slope_ic / np.where(denom == 0, 1.0, denom), 0.0)
        if post_breaking:
            du = np.where(np.abs(x - self.shock_x) == 0.0, 0.0, du)
        return u, du

    def as_reference(self) -> ReferenceSolution:
        return ReferenceSolution(
            "characteristics",
            self.__call__,
            {"t_break": self.t_break, "shock_x": self.shock_x},
        )


def inviscid_solution(u_ic, x: float, t: float, lo: float = 0.0, hi: float = 1.0,
                      u_ic_prime=None) -> float:
    """Characteristics solution value at a single point."""
    sol = CharacteristicsSolution(u_ic, lo, hi, u_ic_prime=u_ic_prime)
    u, _ = sol(np.asarray([x]), t)
    return float(u[0])


# ---------------------------------------------------------------------------
# steady shock profile


def _steady_residual(k: float, nu: float):
    s = math.sqrt(k / (8.0 * nu * nu))
    f = math.sqrt(2.0 * k) * math.tanh(s) - 1.0
    sech2 = 1.0 / math.cosh(s) ** 2 if s < 350.0 else 0.0
    df = math.tanh(s) / math.sqrt(2.0 * k) + math.sqrt(2.0 * k) * sech2 / (16.0 * nu * nu * s)
    return f, df


def solve_steady_k(nu: float) -> float:
    """Constant of the steady shock profile, from a bracketed Newton iteration."""
    if not nu > 0:
        raise ValueError("nu must be positive")
    lo, hi = 1e-6, 2.0
    f_lo, _ = _steady_residual(lo, nu)
    f_hi, _ = _steady_residual(hi, nu)
    if f_lo * f_hi > 0:
        raise RuntimeError(f"steady-state bracket failed for nu = {nu}")
    k = 0.5 * (lo + hi)
    for _ in range(200):
        f, df = _steady_residual(k, nu)
        if abs(f) <= 1e-14:
            return k
        step = f / df if df != 0 else 0.0
        k_new = k - step
        if not lo < k_new < hi:
            k_new = 0.5 * (lo + hi)
        f_new, _ = _steady_residual(k_new, nu)
        if f_new * f_lo < 0:
            hi = k_new
        else:
            lo, f_lo = k_new, f_new
        k = k_new
    f, _ = _steady_residual(k, nu)
    if abs(f) > 1e-12:
        raise RuntimeError(f"steady-state constant did not converge for nu = {nu}")
    return k


class SteadyShockSolution:
    """Time-independent shock profile sqrt(2k) tanh(sqrt(k / (2 nu^2)) (1/2 - x))."""

    def __init__(self, nu: float):
        self.nu = float(nu)
        self.k = solve_steady_k(nu)
        self._amp = math.sqrt(2.0 * self.k)
        self._scale = math.sqrt(self.k / 2.0) / nu

    def __call__(self, x, t=None):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        s = np.tanh(self._scale * (0.5 - x))
        u = self._amp * s
        du = -self._amp * self._scale * (1.0 - s * s)
        return u, du

    def as_reference(self) -> ReferenceSolution:
        return ReferenceSolution(
            "steady_shock", lambda x, t: self(x), {"nu": self.nu, "k": self.k}
        )


def steady_state_shock(nu: float, x: float) -> float:
    u, _ = SteadyShockSolution(nu)(np.asarray([x]))
    return float(u[0])


# ---------------------------------------------------------------------------
# stability estimate


def stability_h_limit(nu: float, u_ic, lo: float = 0.0, hi: float = 1.0,
                      n_scan: int = 10001) -> float:
    """Largest element size free of advective oscillations: 2 nu / max|u_ic|."""
    x = np.linspace(lo, hi, n_scan)
    peak = float(np.max(np.abs(np.asarray(u_ic(x), dtype=float))))
    if peak == 0.0:
        raise ValueError("initial condition is identically zero")
    return 2.0 * nu / peak


# ---------------------------------------------------------------------------
# fine-grid FEM reference


def fine_fem_reference(problem: BurgersProblem, n_elements: int = 1000,
                       dt: float = 1e-3, snapshot_times=(),
                       newton: NewtonConfig | None = None,
                       linear: LinearSolveConfig | None = None,
                       quadrature_points="auto") -> ReferenceSolution:
    """Plain-FEM reference run, evaluated by linear interpolation in x.

    Refuses nu = 0: a linear FEM reference cannot converge there; use the
    characteristics solution instead.
    """
    if problem.nu == 0:
        raise ValueError(
            "no fine-grid FEM reference for nu = 0; use the characteristics solution"
        )
    t_end = max(snapshot_times) if snapshot_times else dt
    mesh = build_uniform_mesh(n_elements, problem.lo, problem.hi)
    dof_map = build_dof_map(mesh, ())
    time = TimeConfig(dt, t_end, tuple(snapshot_times))
    history = run_simulation(
        problem, mesh, dof_map, time, newton=newton, linear=linear,
        quadrature_points=quadrature_points,
    )
    return history_reference(history, kind="fine_fem",
                             metadata={"n_elements": n_elements, "dt": dt})


def history_reference(history: SolutionHistory, kind: str = "fine_fem",
                      metadata: dict | None = None) -> ReferenceSolution:
    """Wrap a pure-FEM history as a piecewise-linear (x, t) evaluator."""
    mesh = history.mesh
    coords = mesh.node_coords
    n_nodes = mesh.n_nodes

    def evaluate(x, t):
        k = history.snapshot_index(t)
        c = history.coefficients[k][:n_nodes]
        u = np.interp(x, coords, c)
        slopes = np.diff(c) / np.diff(coords)
        du = slopes[mesh.locate(x)]
        return u, du

    meta = dict(metadata or {})
    meta["times"] = [float(t) for t in history.times]
    return ReferenceSolution(kind, evaluate, meta)
