"""Local analysis near a degenerate level of the phase.

Near a critical level t0 the energy weight behaves like a power of the
offset t - t0.  This module fits that exponent from a weight table,
evaluates the transmissibility criterion alpha + nu/(p-1) < 1, computes the
one-sided local resistance through the same quadrature as the reduced
problem, and checks the pointwise gradient lower bound
|grad theta| >= c0 |theta - t0|^alpha on a region of nodes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .field import ScalarField, gradient
from .fiber import Region, WeightTable
from .reduced import FLOOR_A, reduced_capacity, resistance
from .serialize import dump_json

__all__ = [
    "LocalProfileFit",
    "RegimeReport",
    "LojasiewiczReport",
    "fit_exponent",
    "classify",
    "local_resistance",
    "lojasiewicz_check",
    "supercritical_vanishing",
    "save_regime_json",
]

MIN_FIT_ROWS = 8

VERDICT_TRANSMISSIVE = "Transmissive"
VERDICT_SUPERCRITICAL = "Supercritical"


@dataclass(frozen=True)
class LocalProfileFit:
    """Log-log least-squares fit of a table column against t - t0."""

    t0: float
    delta: float
    slope: float
    intercept: float
    r_squared: float
    rows: int
    column: str

    @property
    def prefactor(self) -> float:
        return math.exp(self.intercept)


@dataclass(frozen=True)
class RegimeReport:
    """Verdict of the local transmissibility criterion."""

    alpha: float
    nu: float
    p: float
    criterion: float
    verdict: str
    local_resistance: float | None = None
    t0: float | None = None
    delta: float | None = None

    @property
    def transmissive(self) -> bool:
        return self.verdict == VERDICT_TRANSMISSIVE

    def as_dict(self) -> dict:
        return {
            "t0": self.t0,
            "delta": self.delta,
            "alpha": self.alpha,
            "nu": self.nu,
            "p": self.p,
            "criterion": self.criterion,
            "verdict": self.verdict,
            "local_resistance": self.local_resistance,
        }


@dataclass(frozen=True)
class LojasiewiczReport:
    holds: bool
    margin: float
    witness: tuple[float, ...]


def fit_exponent(table: WeightTable, t0: float, delta: float,
                 column: str = "A") -> LocalProfileFit:
    """Fit the growth exponent of a column over the window (t0, t0+delta).

    Least-squares slope of log(column) against log(t - t0) using rows with
    positive offset and column value above FLOOR_A.  At least MIN_FIT_ROWS
    usable rows are required.
    """
    if delta <= 0.0:
        raise ValueError("delta must be positive")
    if column not in ("A", "S"):
        raise ValueError("column must be 'A' or 'S'")
    vals = table.A if column == "A" else table.S
    off = table.t - t0
    tol = 1e-12 * (table.t[-1] - table.t[0])
    use = (off > tol) & (off <= delta + tol) & (vals > FLOOR_A)
    n = int(np.count_nonzero(use))
    if n < MIN_FIT_ROWS:
        raise ValueError(f"only {n} usable rows in (t0, t0+delta); "
                         f"need at least {MIN_FIT_ROWS}")
    x = np.log(off[use])
    y = np.log(vals[use])
    design = np.stack([x, np.ones(n)], axis=1)
    (slope, intercept), res, _, _ = np.linalg.lstsq(design, y, rcond=None)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        r2 = 1.0
    else:
        ss_res = float(res[0]) if len(res) else float(
            np.sum((y - design @ np.array([slope, intercept])) ** 2))
        r2 = min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    return LocalProfileFit(t0=float(t0), delta=float(delta),
                           slope=float(slope), intercept=float(intercept),
                           r_squared=r2, rows=n, column=column)


def classify(alpha: float, nu: float, p: float,
             local_resistance_value: float | None = None,
             t0: float | None = None,
             delta: float | None = None) -> RegimeReport:
    """Apply the threshold alpha + nu/(p-1) < 1.

    Below the threshold the level window transmits capacity; at or above it
    the one-sided reduced capacity vanishes.
    """
    if not 0.0 <= alpha < 1.0:
        raise ValueError("alpha must lie in [0, 1)")
    if nu < 0.0:
        raise ValueError("nu must be nonnegative")
    if p <= 1.0:
        raise ValueError("p must exceed 1")
    criterion = alpha + nu / (p - 1.0)
    verdict = (VERDICT_TRANSMISSIVE if criterion < 1.0
               else VERDICT_SUPERCRITICAL)
    return RegimeReport(alpha=float(alpha), nu=float(nu), p=float(p),
                        criterion=float(criterion), verdict=verdict,
                        local_resistance=local_resistance_value,
                        t0=t0, delta=delta)


def local_resistance(table: WeightTable, t0: float, delta: float) -> float:
    """Resistance of the one-sided window [t0, t0+delta].

    Uses the reduced quadrature, so a vanishing weight at t0 itself is
    handled by the endpoint power-law rule: the result is +inf exactly when
    the local growth reaches p-1.
    """
    if delta <= 0.0:
        raise ValueError("delta must be positive")
    return resistance(table, t0, t0 + delta)


def lojasiewicz_check(fld: ScalarField, region: Region, t0: float,
                      alpha: float, c0: float) -> LojasiewiczReport:
    """Verify |grad theta| >= c0 |theta - t0|^alpha on the region's nodes.

    Returns the minimal margin over the region and the node coordinates
    attaining it.
    """
    if not 0.0 <= alpha < 1.0:
        raise ValueError("alpha must lie in [0, 1)")
    if c0 <= 0.0:
        raise ValueError("c0 must be positive")
    if len(region.lo) != fld.grid.ndim:
        raise ValueError("region dimensionality does not match the grid")
    g = fld.grid
    inside = np.ones(g.dims, dtype=bool)
    for ax in range(g.ndim):
        x = g.axis_coords(ax)
        axis_ok = (x >= region.lo[ax]) & (x <= region.hi[ax])
        shape = [1] * g.ndim
        shape[ax] = g.dims[ax]
        inside &= axis_ok.reshape(shape)
    if not inside.any():
        raise ValueError("region contains no grid nodes")
    gnorm = gradient(fld).norm()
    margins = gnorm - c0 * np.abs(fld.values - t0) ** alpha
    masked = np.where(inside, margins, np.inf)
    flat = int(np.argmin(masked))
    idx = np.unravel_index(flat, g.dims)
    witness = tuple(float(g.axis_coords(ax)[idx[ax]]) for ax in range(g.ndim))
    worst = float(masked.flat[flat])
    return LojasiewiczReport(holds=bool(worst >= 0.0), margin=worst,
                             witness=witness)


def supercritical_vanishing(table: WeightTable, t0: float,
                            deltas: Sequence[float]) -> list[float]:
    """Reduced capacities of the shrinking windows [t0, t0+delta].

    In the supercritical regime every entry is exactly 0 (divergence
    branch); in the subcritical regime the entries grow as the window
    shrinks.
    """
    out = []
    for d in deltas:
        if d <= 0.0:
            raise ValueError("deltas must be positive")
        out.append(reduced_capacity(table, t0, t0 + float(d)).capacity)
    return out


def save_regime_json(report: RegimeReport, path_or_handle) -> None:
    dump_json(path_or_handle, report.as_dict())
