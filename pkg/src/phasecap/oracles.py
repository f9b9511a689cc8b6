"""Closed-form capacities and weights for the exactly solvable geometries.

These are the reference values the numeric pipeline is tested against:
slab condensers of a planar phase, concentric balls of a radial phase, and
the degenerate single-axis power phase.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "ModelSpec",
    "sphere_area",
    "planar_capacity",
    "radial_capacity",
    "monomial_weight",
    "monomial_capacity",
]

# p = n and p != n use different antiderivatives; treat the strip between
# them as the logarithmic branch to keep the formula continuous.
_BRANCH_TOL = 1e-12


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere in R^n (2π in 2-D, 4π in 3-D)."""
    if n < 2:
        raise ValueError("dimension must be at least 2")
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def planar_capacity(area: float, a: float, b: float, p: float) -> float:
    """Capacity of two parallel plates at heights a < b with cross-section
    measure ``area``: area * (b-a)**(1-p)."""
    if not a < b:
        raise ValueError("need a < b")
    if area <= 0:
        raise ValueError("cross-section measure must be positive")
    if p <= 1:
        raise ValueError("exponent p must exceed 1")
    return area * (b - a) ** (1.0 - p)


def radial_capacity(n: int, r_inner: float, r_outer: float, p: float) -> float:
    """Capacity between concentric spheres of radii r_inner < r_outer in R^n.

    The conformal case p = n is logarithmic; otherwise the radial profile is
    a power and the capacity is
    ``ω_{n-1} * [ (p-1)/(p-n) * (r_outer^e - r_inner^e) ]^{1-p}`` with
    ``e = (p-n)/(p-1)``.
    """
    if not 0 < r_inner < r_outer:
        raise ValueError("need 0 < r_inner < r_outer")
    if p <= 1:
        raise ValueError("exponent p must exceed 1")
    omega = sphere_area(n)
    if abs(p - n) < _BRANCH_TOL:
        return omega * math.log(r_outer / r_inner) ** (1.0 - p)
    e = (p - n) / (p - 1.0)
    resist = ((p - 1.0) / (p - n)) * (r_outer ** e - r_inner ** e)
    return omega * resist ** (1.0 - p)


def monomial_weight(gamma: float, area: float, p: float, t: float) -> float:
    """Energy weight of the phase |x1|**gamma at level t > 0.

    The level set has two sections of measure ``area`` each, where the
    gradient has magnitude gamma * t**((gamma-1)/gamma), hence
    ``2 * area * gamma**(p-1) * t**((gamma-1)*(p-1)/gamma)``.
    """
    if gamma <= 1:
        raise ValueError("exponent gamma must exceed 1")
    if t <= 0:
        raise ValueError("level must be positive")
    if area <= 0 or p <= 1:
        raise ValueError("need positive section measure and p > 1")
    expo = (gamma - 1.0) * (p - 1.0) / gamma
    return 2.0 * area * gamma ** (p - 1.0) * t ** expo


def monomial_capacity(gamma: float, area: float, a: float, b: float, p: float) -> float:
    """Capacity between the levels 0 < a < b of the |x1|**gamma phase.

    Integrating the inverse-power transform of :func:`monomial_weight` gives
    resistance (2*area)^{-1/(p-1)} (b^{1/γ} - a^{1/γ}), i.e. the two slabs of
    width b^{1/γ} - a^{1/γ} conduct in parallel.
    """
    if not 0 < a < b:
        raise ValueError("need 0 < a < b")
    if gamma <= 1 or area <= 0 or p <= 1:
        raise ValueError("invalid model parameters")
    width = b ** (1.0 / gamma) - a ** (1.0 / gamma)
    return 2.0 * area * width ** (1.0 - p)


@dataclass(frozen=True)
class ModelSpec:
    """Bundle of one exactly solvable geometry, used by the CLI.

    kind      "planar" | "radial" | "monomial"
    p         energy exponent, > 1
    area      cross-section measure (planar, monomial)
    n         ambient dimension (radial)
    r_inner, r_outer   plate radii (radial)
    a, b      level window (planar, monomial)
    gamma     degeneracy exponent (monomial)
    """

    kind: str
    p: float
    area: float = 1.0
    n: int = 2
    r_inner: float = 1.0
    r_outer: float = 2.0
    a: float = 0.0
    b: float = 1.0
    gamma: float = 2.0

    def __post_init__(self):
        if self.kind not in ("planar", "radial", "monomial"):
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.p <= 1:
            raise ValueError("exponent p must exceed 1")
        if self.kind == "planar" and not self.a < self.b:
            raise ValueError("need a < b")
        if self.kind == "radial" and not 0 < self.r_inner < self.r_outer:
            raise ValueError("need 0 < r_inner < r_outer")
        if self.kind == "monomial":
            if self.gamma <= 1:
                raise ValueError("exponent gamma must exceed 1")
            if not 0 < self.a < self.b:
                raise ValueError("need 0 < a < b")

    def capacity(self) -> float:
        if self.kind == "planar":
            return planar_capacity(self.area, self.a, self.b, self.p)
        if self.kind == "radial":
            return radial_capacity(self.n, self.r_inner, self.r_outer, self.p)
        return monomial_capacity(self.gamma, self.area, self.a, self.b, self.p)

    def weight_at(self, t: float) -> float:
        if self.kind != "monomial":
            raise ValueError("analytic weight is exposed for the monomial model only")
        return monomial_weight(self.gamma, self.area, self.p, t)
