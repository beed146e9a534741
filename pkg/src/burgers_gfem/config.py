"""Study configuration: dataclasses, TOML/JSON loading, and validation."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib  # py311+
except ModuleNotFoundError:  # pragma: no cover - py310 path
    import tomli as tomllib


# ---------------------------------------------------------------------------
# named initial conditions (value, derivative, description)


def _sin_pi(x):
    return np.sin(np.pi * np.asarray(x, dtype=float))


def _sin_pi_prime(x):
    return np.pi * np.cos(np.pi * np.asarray(x, dtype=float))


def _cos_pi(x):
    return np.cos(np.pi * np.asarray(x, dtype=float))


def _cos_pi_prime(x):
    return -np.pi * np.sin(np.pi * np.asarray(x, dtype=float))


def resolve_ic(name: str):
    """Named initial condition -> (u, u', description)."""
    if name == "sin_pi_x":
        return _sin_pi, _sin_pi_prime, "sin(pi x)"
    if name == "cos_pi_x":
        return _cos_pi, _cos_pi_prime, "cos(pi x)"
    if name.startswith("riemann:"):
        from .reference import riemann_ic, riemann_ic_prime

        b = float(name.split(":", 1)[1])
        return (
            lambda x: riemann_ic(b, x),
            lambda x: riemann_ic_prime(b, x),
            f"translated ramp (b = {b})",
        )
    if name.startswith("constant:"):
        v = float(name.split(":", 1)[1])
        return (
            lambda x: np.full_like(np.asarray(x, dtype=float), v),
            lambda x: np.zeros_like(np.asarray(x, dtype=float)),
            f"constant {v}",
        )
    raise ValueError(f"unknown initial condition {name!r}")


# ---------------------------------------------------------------------------
# configuration dataclasses


@dataclass(frozen=True)
class EnrichmentSpec:
    """Declarative enrichment rule; resolved per (nu, grid) cell.

    kind: "exponential" (rate: number or "auto" = max|u_ic| / nu),
    "tanh_shock" (thickness: number or "nu"; local: [lo, hi] or "auto"), or
    "boundary_heaviside" (side: "left" | "right").
    """

    kind: str
    rate: object = "auto"
    conditioned: bool = True
    center: float = 0.5
    thickness: object = "nu"
    local: object = "auto"
    side: str = "right"


@dataclass(frozen=True)
class ReferenceSpec:
    kind: str = "auto"  # auto | fine_fem | characteristics | fourier | steady_state
    elements: int = 1000
    dt: float = 1e-3


@dataclass(frozen=True)
class NewtonSpec:
    tol: float = 1e-10
    max_iters: int = 25


@dataclass(frozen=True)
class LinearSpec:
    eps1: float = 1e-10
    eps2: float = 1e-10
    max_refinements: int = 100


@dataclass(frozen=True)
class StudyConfig:
    name: str
    ic: str
    nus: tuple
    grids: tuple
    dirichlet: tuple = ()
    neumann: tuple = ()
    lo: float = 0.0
    hi: float = 1.0
    dt: float = 1e-3
    t_end: float = 1.0
    snapshot_times: tuple = ()
    error_times: object = "snapshots"
    enrichments: tuple = ()
    enrich_boundary_nodes: bool = True
    reference: ReferenceSpec = field(default_factory=ReferenceSpec)
    newton: NewtonSpec = field(default_factory=NewtonSpec)
    linear: LinearSpec = field(default_factory=LinearSpec)
    penalty_beta_scale: float = 1e8
    quadrature_points: object = "auto"
    solution_points: int = 401
    out_dir: str = "out"
    description: str = ""

    def resolved_error_times(self):
        if self.error_times == "snapshots":
            return tuple(self.snapshot_times)
        return tuple(self.error_times)


@dataclass
class ValidationReport:
    ok: bool
    errors: list
    warnings: list

    def __str__(self):
        lines = ["ok" if self.ok else "invalid"]
        lines += [f"error: {e}" for e in self.errors]
        lines += [f"warning: {w}" for w in self.warnings]
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# loading


def _build(data: dict) -> StudyConfig:
    known = {f.name for f in dataclasses.fields(StudyConfig)}
    extra = set(data) - known
    if extra:
        raise ValueError(f"unknown config keys: {sorted(extra)}")
    kwargs = dict(data)
    if "enrichments" in kwargs:
        kwargs["enrichments"] = tuple(
            EnrichmentSpec(**e) for e in kwargs["enrichments"]
        )
    if "reference" in kwargs:
        kwargs["reference"] = ReferenceSpec(**kwargs["reference"])
    if "newton" in kwargs:
        kwargs["newton"] = NewtonSpec(**kwargs["newton"])
    if "linear" in kwargs:
        kwargs["linear"] = LinearSpec(**kwargs["linear"])
    for key in ("nus", "grids", "snapshot_times"):
        if key in kwargs:
            kwargs[key] = tuple(kwargs[key])
    if "dirichlet" in kwargs:
        kwargs["dirichlet"] = tuple((float(x), float(g)) for x, g in kwargs["dirichlet"])
    if "neumann" in kwargs:
        kwargs["neumann"] = tuple((float(x), float(g)) for x, g in kwargs["neumann"])
    if isinstance(kwargs.get("error_times"), (list, tuple)):
        kwargs["error_times"] = tuple(kwargs["error_times"])
    return StudyConfig(**kwargs)


def load_config(path) -> StudyConfig:
    """Load a study config from a .toml or .json file."""
    path = Path(path)
    if path.suffix == ".toml":
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    elif path.suffix == ".json":
        with open(path) as fh:
            data = json.load(fh)
    else:
        raise ValueError(f"config must be .toml or .json, got {path.suffix!r}")
    return _build(data)


# ---------------------------------------------------------------------------
# validation (never runs numerics)


def validate_config(config: StudyConfig) -> ValidationReport:
    errors: list[str] = []
    warns: list[str] = []

    try:
        resolve_ic(config.ic)
    except ValueError as err:
        errors.append(str(err))

    if not config.nus:
        errors.append("at least one viscosity is required")
    if any(nu < 0 for nu in config.nus):
        errors.append("viscosities must be non-negative")
    if not config.grids or any(g < 1 for g in config.grids):
        errors.append("grids must be positive element counts")
    if not config.lo < config.hi:
        errors.append(f"domain [{config.lo}, {config.hi}] is empty")

    d_coords = {x for x, _ in config.dirichlet}
    n_coords = {x for x, _ in config.neumann}
    overlap = d_coords & n_coords
    if overlap:
        errors.append(
            "Dirichlet and Neumann boundaries must be disjoint; both claim "
            f"{sorted(overlap)}"
        )

    n = round(config.t_end / config.dt) if config.dt > 0 else 0
    if config.dt <= 0 or n < 1 or abs(n * config.dt - config.t_end) > 1e-12:
        errors.append(f"dt = {config.dt} does not divide t_end = {config.t_end}")
    for t in config.snapshot_times:
        if t < 0 or t > config.t_end + 1e-12:
            errors.append(f"snapshot time {t} outside [0, {config.t_end}]")
    if config.error_times != "snapshots":
        for t in config.resolved_error_times():
            if t < 0 or t > config.t_end + 1e-12:
                errors.append(f"error time {t} outside [0, {config.t_end}]")

    if config.reference.kind not in ("auto", "fine_fem", "characteristics",
                                     "fourier", "steady_state"):
        errors.append(f"unknown reference kind {config.reference.kind!r}")
    for nu in config.nus:
        if nu == 0 and config.reference.kind == "fourier":
            errors.append("the series reference is undefined for nu = 0")
        if nu == 0 and config.reference.kind == "fine_fem":
            errors.append("a linear FEM reference cannot converge for nu = 0")

    for spec in config.enrichments:
        if spec.kind not in ("exponential", "tanh_shock", "boundary_heaviside"):
            errors.append(f"unknown enrichment kind {spec.kind!r}")
            continue
        if spec.kind == "exponential":
            if spec.rate != "auto" and float(spec.rate) == 0:
                errors.append("exponential enrichment needs a nonzero rate")
            if spec.rate == "auto" and any(nu == 0 for nu in config.nus):
                errors.append("auto exponential rate is undefined for nu = 0")
        if spec.kind == "tanh_shock":
            if spec.thickness != "nu" and not float(spec.thickness) > 0:
                errors.append("tanh enrichment needs thickness > 0")
            if spec.thickness == "nu" and any(nu == 0 for nu in config.nus):
                errors.append("thickness tied to nu is undefined for nu = 0")
            if spec.local != "auto":
                lo, hi = spec.local
                if not lo < hi:
                    errors.append(f"empty enrichment interval [{lo}, {hi}]")
                elif hi < config.lo or lo > config.hi:
                    errors.append(
                        f"enrichment interval [{lo}, {hi}] misses the domain"
                    )
        if spec.kind == "boundary_heaviside" and spec.side not in ("left", "right"):
            errors.append(f"heaviside side must be 'left' or 'right', got {spec.side!r}")

    if config.quadrature_points != "auto":
        q = int(config.quadrature_points)
        if not 1 <= q <= 64:
            errors.append(f"quadrature points must be in [1, 64], got {q}")
    if config.solution_points < 2:
        errors.append("solution_points must be at least 2")
    if not config.penalty_beta_scale > 0:
        errors.append("penalty_beta_scale must be positive")

    return ValidationReport(not errors, errors, warns)
