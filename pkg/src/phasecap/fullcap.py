"""Full relative p-capacity on the grid and its fibered diagnostics.

The capacity is the infimum of the p-Dirichlet energy over node fields
pinned to 0 on one plate and 1 on the other.  The discrete energy is

    E(u) = sum over cells of |grad u|^p * cell volume

with the cell gradient averaged from the node differences along each axis,
so the solver, the fibered competitors and the quadratic-identity reports
all share one energy.  Minimization runs nonlinear conjugate descent with
Armijo backtracking on the free nodes; for p < 2 the integrand is smoothed
by eps_reg inside the solver while every reported energy is unregularized.

The comparison operations realize the one-direction bound full <= reduced:
any profile composed with the phase is admissible for the level plates, so
the reduced capacity is an upper bound for the full one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .field import Grid, ScalarField, gradient, plate_masks
from .fiber import GRAD_FLOOR_REL, extract_fiber, weight_table
from .reduced import Profile, reduced_capacity, reduced_energy
from .serialize import dump_json

__all__ = [
    "ConstraintSet",
    "MinimizeOptions",
    "CapacityReport",
    "FiberedEnergy",
    "TangentialSplit",
    "PolarizationGap",
    "ComparisonViolationError",
    "cell_energy",
    "cell_gradient",
    "p_capacity",
    "compose_profile",
    "fibered_energy",
    "compare_bound",
    "transverse_average",
    "spherical_average",
    "tangential_decompose",
    "polarization_gap",
    "save_capacity_json",
]

ARMIJO_C = 1e-4
DEFAULT_TOL_REL = 1e-10
DEFAULT_MAX_ITER = 20000
DEFAULT_EPS_REG = 1e-8


class ComparisonViolationError(AssertionError):
    """Full capacity exceeded the reduced capacity beyond tolerance.

    Carries the offending report so callers can tell a converged violation
    from a solve that merely ran out of iterations.
    """

    def __init__(self, full: float, reduced: float, tol: float, report=None):
        self.full = full
        self.reduced = reduced
        self.tol = tol
        self.report = report
        super().__init__(
            f"full capacity {full} exceeds reduced capacity {reduced} "
            f"by more than {tol}")


@dataclass(frozen=True)
class ConstraintSet:
    """Node masks pinned to 0 (plate E) and 1 (plate F)."""

    zero_mask: np.ndarray
    one_mask: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.zero_mask, dtype=bool)
        o = np.asarray(self.one_mask, dtype=bool)
        if z.shape != o.shape:
            raise ValueError("plate masks must share one grid shape")
        if not z.any() or not o.any():
            raise ValueError("both plates must be nonempty")
        if np.any(z & o):
            raise ValueError("plates must be disjoint")
        object.__setattr__(self, "zero_mask", z)
        object.__setattr__(self, "one_mask", o)

    @classmethod
    def from_levels(cls, fld: ScalarField, a: float, b: float,
                    outer: float | None = None) -> "ConstraintSet":
        """Plates from the sublevel/superlevel sets of a phase; ``outer``
        truncates the one-plate to b <= theta <= outer."""
        zero, one = plate_masks(fld, a, b)
        if outer is not None:
            one = one & (fld.values <= outer)
        return cls(zero_mask=zero, one_mask=one)

    @property
    def fixed(self) -> np.ndarray:
        return self.zero_mask | self.one_mask


@dataclass(frozen=True)
class MinimizeOptions:
    p: float
    eps_reg: float | None = None
    tol_rel: float = DEFAULT_TOL_REL
    max_iter: int = DEFAULT_MAX_ITER

    def __post_init__(self):
        if self.p <= 1.0:
            raise ValueError("p must exceed 1")
        if self.tol_rel <= 0.0:
            raise ValueError("tol_rel must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")
        if self.eps_reg is not None and self.eps_reg < 0.0:
            raise ValueError("eps_reg must be nonnegative")

    @property
    def effective_eps(self) -> float:
        if self.eps_reg is not None:
            return self.eps_reg
        return DEFAULT_EPS_REG if self.p < 2.0 else 0.0


@dataclass(frozen=True)
class CapacityReport:
    p: float
    capacity_full: float
    iterations: int
    converged: bool
    tol: float
    grid: tuple[int, ...]
    final_decrease: float
    minimizer: ScalarField
    capacity_reduced: float | None = None
    gap: float | None = None
    bound_ok: bool | None = None

    def as_dict(self) -> dict:
        out = {
            "p": self.p,
            "capacity_full": self.capacity_full,
            "capacity_reduced": self.capacity_reduced,
            "gap": self.gap,
            "iterations": self.iterations,
            "converged": self.converged,
            "tol": self.tol,
            "grid": list(self.grid),
        }
        if self.bound_ok is not None:
            out["bound_ok"] = self.bound_ok
        return out


@dataclass(frozen=True)
class FiberedEnergy:
    grid_energy: float
    reduced_energy: float
    residual: float


@dataclass(frozen=True)
class TangentialSplit:
    normal_energy: float
    tangential_energy: float
    skipped_measure: float

    @property
    def total(self) -> float:
        return self.normal_energy + self.tangential_energy


@dataclass(frozen=True)
class PolarizationGap:
    difference: float
    quadratic: float
    residual: float


# ---------------------------------------------------------------------------
# discrete energy
# ---------------------------------------------------------------------------

def cell_gradient(values: np.ndarray, grid: Grid) -> list[np.ndarray]:
    """Cell-centered gradient: per axis, the mean of the node differences
    along the 2 (or 4) parallel cell edges."""
    v = values
    h = grid.spacing
    if grid.ndim == 2:
        dx = (v[1:, :-1] - v[:-1, :-1] + v[1:, 1:] - v[:-1, 1:]) / (2.0 * h[0])
        dy = (v[:-1, 1:] - v[:-1, :-1] + v[1:, 1:] - v[1:, :-1]) / (2.0 * h[1])
        return [dx, dy]
    dx = (v[1:, :-1, :-1] - v[:-1, :-1, :-1] + v[1:, 1:, :-1] - v[:-1, 1:, :-1]
          + v[1:, :-1, 1:] - v[:-1, :-1, 1:] + v[1:, 1:, 1:] - v[:-1, 1:, 1:]
          ) / (4.0 * h[0])
    dy = (v[:-1, 1:, :-1] - v[:-1, :-1, :-1] + v[1:, 1:, :-1] - v[1:, :-1, :-1]
          + v[:-1, 1:, 1:] - v[:-1, :-1, 1:] + v[1:, 1:, 1:] - v[1:, :-1, 1:]
          ) / (4.0 * h[1])
    dz = (v[:-1, :-1, 1:] - v[:-1, :-1, :-1] + v[1:, :-1, 1:] - v[1:, :-1, :-1]
          + v[:-1, 1:, 1:] - v[:-1, 1:, :-1] + v[1:, 1:, 1:] - v[1:, 1:, :-1]
          ) / (4.0 * h[2])
    return [dx, dy, dz]


def _grad_sq(values: np.ndarray, grid: Grid) -> np.ndarray:
    comps = cell_gradient(values, grid)
    out = comps[0] ** 2
    for c in comps[1:]:
        out = out + c ** 2
    return out


def cell_energy(values: np.ndarray, grid: Grid, p: float,
                eps_reg: float = 0.0) -> float:
    """Discrete p-Dirichlet energy; eps_reg smooths the integrand as
    (|grad u|^2 + eps^2)^(p/2)."""
    gsq = _grad_sq(values, grid)
    if eps_reg > 0.0:
        gsq = gsq + eps_reg * eps_reg
    return float(np.sum(gsq ** (p / 2.0))) * grid.cell_volume


def _energy_and_grad(values: np.ndarray, grid: Grid, p: float,
                     eps_reg: float) -> tuple[float, np.ndarray]:
    comps = cell_gradient(values, grid)
    gsq = comps[0] ** 2
    for c in comps[1:]:
        gsq = gsq + c ** 2
    if eps_reg > 0.0:
        gsq = gsq + eps_reg * eps_reg
    vol = grid.cell_volume
    energy = float(np.sum(gsq ** (p / 2.0))) * vol
    if p >= 2.0:
        w = p * gsq ** ((p - 2.0) / 2.0)
    else:
        with np.errstate(divide="ignore"):
            w = np.where(gsq > 0.0, p * gsq ** ((p - 2.0) / 2.0), 0.0)
    grad = np.zeros_like(values)
    h = grid.spacing
    if grid.ndim == 2:
        share = vol / (2.0 * h[0])
        gx = w * comps[0] * share
        grad[1:, :-1] += gx
        grad[:-1, :-1] -= gx
        grad[1:, 1:] += gx
        grad[:-1, 1:] -= gx
        share = vol / (2.0 * h[1])
        gy = w * comps[1] * share
        grad[:-1, 1:] += gy
        grad[:-1, :-1] -= gy
        grad[1:, 1:] += gy
        grad[1:, :-1] -= gy
    else:
        share = vol / (4.0 * h[0])
        gx = w * comps[0] * share
        for j, k in ((slice(None, -1), slice(None, -1)),
                     (slice(1, None), slice(None, -1)),
                     (slice(None, -1), slice(1, None)),
                     (slice(1, None), slice(1, None))):
            grad[1:, j, k] += gx
            grad[:-1, j, k] -= gx
        share = vol / (4.0 * h[1])
        gy = w * comps[1] * share
        for i, k in ((slice(None, -1), slice(None, -1)),
                     (slice(1, None), slice(None, -1)),
                     (slice(None, -1), slice(1, None)),
                     (slice(1, None), slice(1, None))):
            grad[i, 1:, k] += gy
            grad[i, :-1, k] -= gy
        share = vol / (4.0 * h[2])
        gz = w * comps[2] * share
        for i, j in ((slice(None, -1), slice(None, -1)),
                     (slice(1, None), slice(None, -1)),
                     (slice(None, -1), slice(1, None)),
                     (slice(1, None), slice(1, None))):
            grad[i, j, 1:] += gz
            grad[i, j, :-1] -= gz
    return energy, grad


# ---------------------------------------------------------------------------
# constrained minimization
# ---------------------------------------------------------------------------

def _initial_values(grid: Grid, constraints: ConstraintSet,
                    phase: ScalarField | None,
                    levels: tuple[float, float] | None) -> np.ndarray:
    if phase is not None and levels is not None:
        a, b = levels
        x = np.clip((phase.values - a) / (b - a), 0.0, 1.0)
    else:
        x = np.full(grid.dims, 0.5)
    x = np.array(x, dtype=np.float64)
    x[constraints.zero_mask] = 0.0
    x[constraints.one_mask] = 1.0
    return x


def p_capacity(grid: Grid, constraints: ConstraintSet,
               opts: MinimizeOptions, phase: ScalarField | None = None,
               levels: tuple[float, float] | None = None) -> CapacityReport:
    """Minimize the discrete p-energy over the free nodes.

    Free nodes start from the truncated linear interpolant of the phase
    levels when a phase is supplied, else from 0.5.  The converged iterate
    is clamped to [0, 1] and the reported capacity is its unregularized
    energy.  Non-convergence is reported via the ``converged`` flag, not
    raised.
    """
    if constraints.zero_mask.shape != grid.dims:
        raise ValueError("constraint masks do not match the grid")
    p = opts.p
    eps = opts.effective_eps
    x = _initial_values(grid, constraints, phase, levels)
    fixed = constraints.fixed
    n_free = int(np.count_nonzero(~fixed))

    def energy(v: np.ndarray) -> float:
        return cell_energy(v, grid, p, eps)

    if n_free == 0:
        cap = cell_energy(x, grid, p, 0.0)
        return CapacityReport(p=p, capacity_full=cap, iterations=0,
                              converged=True, tol=opts.tol_rel,
                              grid=grid.dims, final_decrease=0.0,
                              minimizer=ScalarField(grid, x))

    restart_every = max(1, math.ceil(math.sqrt(n_free)))
    e_cur, g_cur = _energy_and_grad(x, grid, p, eps)
    g_cur[fixed] = 0.0
    d = -g_cur
    step = 1.0
    quadratic = (p == 2.0 and eps == 0.0)
    iterations = 0
    rel_dec = math.inf
    converged = False

    while iterations < opts.max_iter:
        iterations += 1
        gd = float(np.sum(g_cur * d))
        if gd >= 0.0:
            d = -g_cur
            gd = -float(np.sum(g_cur * g_cur))
            if gd == 0.0:
                rel_dec = 0.0
                converged = True
                break
        if quadratic:
            e_probe = energy(x + d)
            q = e_probe - e_cur - gd
            t = -gd / (2.0 * q) if q > 0.0 else 1.0
        else:
            t = min(step * 2.0, 1e8)
        e_new = energy(x + t * d)
        halvings = 0
        while e_new > e_cur + ARMIJO_C * t * gd and halvings < 80:
            t *= 0.5
            e_new = energy(x + t * d)
            halvings += 1
        if e_new >= e_cur:
            rel_dec = 0.0
            converged = True
            break
        step = t
        x_new = x + t * d
        clamped = False
        if float(x_new.min()) < 0.0 or float(x_new.max()) > 1.0:
            x_clip = np.clip(x_new, 0.0, 1.0)
            e_clip = energy(x_clip)
            if e_clip <= e_new:
                x_new, e_new = x_clip, e_clip
                clamped = True
        e_next, g_next = _energy_and_grad(x_new, grid, p, eps)
        g_next[fixed] = 0.0
        rel_dec = (e_cur - e_new) / max(abs(e_cur), 1e-300)
        if clamped or iterations % restart_every == 0:
            d = -g_next
        else:
            beta = float(np.sum(g_next * (g_next - g_cur)))
            denom = float(np.sum(g_cur * g_cur))
            beta = max(0.0, beta / denom) if denom > 0.0 else 0.0
            d = -g_next + beta * d
        x, e_cur, g_cur = x_new, e_next, g_next
        if rel_dec < opts.tol_rel:
            converged = True
            break

    x = np.clip(x, 0.0, 1.0)
    cap = cell_energy(x, grid, p, 0.0)
    return CapacityReport(p=p, capacity_full=cap, iterations=iterations,
                          converged=converged, tol=opts.tol_rel,
                          grid=grid.dims, final_decrease=float(rel_dec),
                          minimizer=ScalarField(grid, x))


# ---------------------------------------------------------------------------
# fibered competitors and the comparison bound
# ---------------------------------------------------------------------------

def compose_profile(theta: ScalarField, profile: Profile) -> ScalarField:
    """u = v(theta) with v extended by 0 below its span and 1 above it."""
    vals = np.interp(theta.values, profile.t, profile.v)
    return ScalarField(theta.grid, vals)


def fibered_energy(theta: ScalarField, profile: Profile,
                   p: float) -> FiberedEnergy:
    """Grid energy of the composed competitor against the reduced energy of
    the profile on the weight table sampled at the profile knots."""
    u = compose_profile(theta, profile)
    grid_e = cell_energy(u.values, theta.grid, p, 0.0)
    table = weight_table(theta, p, profile.t)
    red_e = reduced_energy(profile, table)
    denom = max(abs(grid_e), abs(red_e), 1e-300)
    return FiberedEnergy(grid_energy=grid_e, reduced_energy=red_e,
                         residual=abs(grid_e - red_e) / denom)


def compare_bound(theta: ScalarField, a: float, b: float,
                  opts: MinimizeOptions, levels: int = 256,
                  outer: float | None = None) -> CapacityReport:
    """Full capacity of the level plates against the reduced capacity.

    Raises ComparisonViolationError when full > reduced + tol_compare with
    tol_compare = 1e-6 + 2 * tol_rel; otherwise the report carries both
    capacities, the gap, and bound_ok = True.  ``outer`` truncates the
    outer plate to b <= theta <= outer for phases whose superlevel set
    meets the boundary.
    """
    if levels < 2:
        raise ValueError("need at least two levels")
    constraints = ConstraintSet.from_levels(theta, a, b, outer=outer)
    table = weight_table(theta, opts.p, np.linspace(a, b, levels))
    red = reduced_capacity(table, a, b).capacity
    report = p_capacity(theta.grid, constraints, opts, phase=theta,
                        levels=(a, b))
    tol_compare = 1e-6 + 2.0 * opts.tol_rel
    full = report.capacity_full
    violated = full > red + tol_compare
    out = CapacityReport(p=report.p, capacity_full=full,
                         iterations=report.iterations,
                         converged=report.converged, tol=report.tol,
                         grid=report.grid,
                         final_decrease=report.final_decrease,
                         minimizer=report.minimizer,
                         capacity_reduced=red, gap=red - full,
                         bound_ok=not violated)
    if violated:
        raise ComparisonViolationError(full, red, tol_compare, report=out)
    return out


# ---------------------------------------------------------------------------
# averaging and quadratic-identity diagnostics
# ---------------------------------------------------------------------------

def transverse_average(u: ScalarField, axis: int) -> np.ndarray:
    """Mean of u over each node plane orthogonal to the axis."""
    if not 0 <= axis < u.grid.ndim:
        raise ValueError("axis out of range")
    other = tuple(ax for ax in range(u.grid.ndim) if ax != axis)
    return np.mean(u.values, axis=other)


def spherical_average(u: ScalarField, center, radii) -> np.ndarray:
    """Mean of u over the circle/sphere of each radius around the center.

    Averages interpolated node values against the fiber mesh of the radial
    phase, so the same extraction drives both weights and averages.
    """
    from .field import PhaseModel, sample_phase, interpolate_values

    g = u.grid
    c = tuple(float(v) for v in center)
    if len(c) != g.ndim:
        raise ValueError("center dimensionality does not match the grid")
    radii = np.asarray(radii, dtype=np.float64)
    for r in radii:
        if r <= 0.0:
            raise ValueError("radii must be positive")
        for ax in range(g.ndim):
            if c[ax] - r < g.lo[ax] or c[ax] + r > g.hi[ax]:
                raise ValueError(f"radius {r} leaves the grid box")
    rad = sample_phase(PhaseModel.radial(c), g)
    grad = gradient(rad)
    out = np.empty(len(radii))
    for k, r in enumerate(radii):
        mesh = extract_fiber(rad, float(r), grad=grad)
        if mesh.element_count == 0:
            raise ValueError(f"radius {r} produced an empty fiber")
        uv = interpolate_values(g, u.values, mesh.barycenters)
        out[k] = float(np.sum(uv * mesh.measures) / np.sum(mesh.measures))
    return out


def tangential_decompose(u_star: ScalarField, theta: ScalarField,
                         floor_grad: float | None = None) -> TangentialSplit:
    """Split the minimizer's cell gradient into components along and across
    the phase gradient; cells where |grad theta| is at or below the floor
    are skipped and their total measure reported."""
    if u_star.grid != theta.grid:
        raise ValueError("fields must share one grid")
    g = u_star.grid
    du = cell_gradient(u_star.values, g)
    dth = cell_gradient(theta.values, g)
    gsq_th = dth[0] ** 2
    for c in dth[1:]:
        gsq_th = gsq_th + c ** 2
    if floor_grad is None:
        floor_grad = GRAD_FLOOR_REL * float(np.sqrt(gsq_th.max()))
    active = np.sqrt(gsq_th) > floor_grad
    dot = du[0] * dth[0]
    usq = du[0] ** 2
    for cu, ct in zip(du[1:], dth[1:]):
        dot = dot + cu * ct
        usq = usq + cu ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        normal_sq = np.where(active, dot * dot / gsq_th, 0.0)
    tangential_sq = np.where(active, np.maximum(usq - normal_sq, 0.0), 0.0)
    vol = g.cell_volume
    return TangentialSplit(
        normal_energy=float(np.sum(normal_sq)) * vol,
        tangential_energy=float(np.sum(tangential_sq)) * vol,
        skipped_measure=float(np.count_nonzero(~active)) * vol,
    )


def polarization_gap(u_f: ScalarField, u_star: ScalarField,
                     constraints: ConstraintSet) -> PolarizationGap:
    """E(u_f) - E(u_*) against the quadratic energy of the difference.

    The two agree exactly when u_* solves the discrete Euler-Lagrange
    system, so the residual measures the solver's optimality error.  Both
    fields must satisfy the plate constraints nodewise.
    """
    if u_f.grid != u_star.grid:
        raise ValueError("fields must share one grid")
    for fld in (u_f, u_star):
        if (np.max(np.abs(fld.values[constraints.zero_mask])) > 1e-12
                or np.max(np.abs(fld.values[constraints.one_mask] - 1.0))
                > 1e-12):
            raise ValueError("a field violates the plate constraints")
    g = u_f.grid
    e_f = cell_energy(u_f.values, g, 2.0, 0.0)
    e_s = cell_energy(u_star.values, g, 2.0, 0.0)
    diff = e_f - e_s
    quad = cell_energy(u_f.values - u_star.values, g, 2.0, 0.0)
    denom = max(abs(diff), abs(quad))
    if denom < 1e-14 * max(1.0, abs(e_s)):
        residual = 0.0
    else:
        residual = abs(diff - quad) / denom
    return PolarizationGap(difference=diff, quadratic=quad, residual=residual)


def save_capacity_json(report: CapacityReport, path_or_handle) -> None:
    dump_json(path_or_handle, report.as_dict())
