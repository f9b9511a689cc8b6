"""One-dimensional condenser problem driven by a tabulated energy weight.

Given a weight table A(t) on levels a <= t <= b, the reduced resistance is

    R(a, b) = integral of A(t)^(-1/(p-1)) dt

and the reduced capacity is R^(1-p), with capacity 0 when R diverges.  The
integrand B = A^(-1/(p-1)) is integrated by the composite trapezoid rule on
the tabulated knots.  A row with A at or below ``FLOOR_A`` marks a
degenerate level: in the interior of a window it forces R = +inf, while at
a window endpoint the local growth exponent is fitted from the two nearest
regular rows and the first cell is integrated under that power law,
diverging exactly when the fitted exponent reaches p-1.  This keeps the
divergence branch sharp on tables that tabulate a vanishing weight at the
endpoint itself.

Energies of discrete profiles use the weight at cell midpoints, where the
midpoint value interpolates B (not A) linearly.  Under this convention the
cumulative-mass profile attains R^(1-p) identically and no admissible
profile can do better, so the discrete problem inherits the sharp
optimality of the continuum one instead of approximating it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fiber import WeightTable
from .serialize import dump_json, fmt_float

__all__ = [
    "FLOOR_A",
    "EQ_TOL",
    "Profile",
    "ReducedReport",
    "EnvelopeBounds",
    "LinearComparison",
    "TruncatedProfile",
    "resistance",
    "reduced_capacity",
    "optimal_profile",
    "reduced_energy",
    "truncated_profile",
    "linear_profile_comparison",
    "series_residual",
    "reparametrize_table",
    "two_sided_bounds",
    "eikonal_check",
    "save_profile_csv",
    "load_profile_csv",
    "save_reduced_json",
]

# Weight rows at or below FLOOR_A count as vanishing; fitted endpoint
# exponents within a relative 1e-9 of p-1 count as divergent.
FLOOR_A = 1e-30
_DIVERGENCE_GUARD = 1.0 - 1e-9

# Excess below EQ_TOL (relative to the capacity) flags the constant-weight
# equality case of the linear comparison.
EQ_TOL = 1e-10

# Cap on B so that vanishing-weight rows stay arithmetically usable in
# energy quadrature (their cells then contribute essentially zero).
_B_CAP = 1e300


@dataclass(frozen=True)
class Profile:
    """Piecewise-linear admissible profile: nondecreasing from 0 to 1."""

    t: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        t = np.ascontiguousarray(self.t, dtype=np.float64)
        v = np.ascontiguousarray(self.v, dtype=np.float64)
        if t.ndim != 1 or t.shape != v.shape or len(t) < 2:
            raise ValueError("profile needs matching 1-D knot and value arrays "
                             "with at least two entries")
        if not np.all(np.diff(t) > 0):
            raise ValueError("profile knots must be strictly increasing")
        if not np.all(np.isfinite(v)):
            raise ValueError("profile values must be finite")
        if v[0] != 0.0 or v[-1] != 1.0:
            raise ValueError("profile must run from exactly 0 to exactly 1")
        if np.any(np.diff(v) < 0):
            raise ValueError("profile values must be nondecreasing")
        t.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "v", v)

    def __len__(self) -> int:
        return len(self.t)

    @property
    def span(self) -> tuple[float, float]:
        return float(self.t[0]), float(self.t[-1])


@dataclass(frozen=True)
class ReducedReport:
    p: float
    a: float
    b: float
    resistance: float
    capacity: float
    branch: str
    levels: int
    profile: Profile | None = None

    def as_dict(self) -> dict:
        return {
            "p": self.p,
            "a": self.a,
            "b": self.b,
            "resistance": self.resistance,
            "capacity": self.capacity,
            "branch": self.branch,
            "levels": self.levels,
        }


@dataclass(frozen=True)
class EnvelopeBounds:
    lower: float
    upper: float


@dataclass(frozen=True)
class LinearComparison:
    energy_linear: float
    capacity: float
    excess: float
    constant_weight: bool


@dataclass(frozen=True)
class TruncatedProfile:
    profile: Profile
    cutoff: float
    mass: float
    energy_bound: float


# ---------------------------------------------------------------------------
# windowing and cell masses
# ---------------------------------------------------------------------------

def _knot_index(table: WeightTable, value: float, name: str) -> int:
    t = table.t
    idx = int(np.argmin(np.abs(t - value)))
    tol = 1e-9 * (t[-1] - t[0])
    if abs(float(t[idx]) - value) > tol:
        raise ValueError(
            f"{name}={value} is not on the tabulated level grid spanning "
            f"[{t[0]}, {t[-1]}]")
    return idx


def _window(table: WeightTable, a: float, b: float):
    if not a < b:
        raise ValueError("need a < b")
    ia = _knot_index(table, a, "a")
    ib = _knot_index(table, b, "b")
    if ib - ia < 1:
        raise ValueError("window must span at least two tabulated levels")
    return table.t[ia:ib + 1].copy(), table.A[ia:ib + 1].copy()


def _endpoint_cell(d1: float, d2: float, a1: float, a2: float,
                   p: float) -> float:
    """Closed-form mass of the cell next to a vanishing-weight endpoint.

    The two nearest regular rows fix a local power law A ~ d^s in the
    distance d to the endpoint; integrating B under that law gives a finite
    mass exactly when s < p-1.
    """
    s = math.log(a2 / a1) / math.log(d2 / d1)
    if s >= (p - 1.0) * _DIVERGENCE_GUARD:
        return math.inf
    b1 = a1 ** (-1.0 / (p - 1.0))
    return b1 * d1 * (p - 1.0) / (p - 1.0 - s)


def _cell_masses(tw: np.ndarray, Aw: np.ndarray, p: float) -> np.ndarray:
    """Per-cell resistance masses over a window, +inf where divergent."""
    marked = Aw <= FLOOR_A
    n = len(tw)
    if marked[1:-1].any():
        return np.full(n - 1, math.inf)
    with np.errstate(divide="ignore"):
        B = np.where(marked, math.inf, Aw ** (-1.0 / (p - 1.0)))
    masses = 0.5 * (B[:-1] + B[1:]) * np.diff(tw)
    if marked[0]:
        if n < 3 or marked[1] or marked[2]:
            masses[0] = math.inf
        else:
            masses[0] = _endpoint_cell(tw[1] - tw[0], tw[2] - tw[0],
                                       Aw[1], Aw[2], p)
    if marked[-1]:
        if n < 3 or marked[-2] or marked[-3]:
            masses[-1] = math.inf
        else:
            masses[-1] = _endpoint_cell(tw[-1] - tw[-2], tw[-1] - tw[-3],
                                        Aw[-2], Aw[-3], p)
    return masses


def resistance(table: WeightTable, a: float, b: float) -> float:
    """Reduced resistance of the window [a, b]; a and b must be knots."""
    tw, Aw = _window(table, a, b)
    masses = _cell_masses(tw, Aw, table.p)
    if not np.all(np.isfinite(masses)):
        return math.inf
    return math.fsum(masses.tolist())


def reduced_capacity(table: WeightTable, a: float, b: float) -> ReducedReport:
    """Reduced capacity R^(1-p) with its branch and optimal profile.

    On the divergent branch the capacity is exactly 0 and no profile is
    attached (there is no minimizer there).
    """
    tw, Aw = _window(table, a, b)
    masses = _cell_masses(tw, Aw, table.p)
    if not np.all(np.isfinite(masses)):
        return ReducedReport(p=table.p, a=float(a), b=float(b),
                             resistance=math.inf, capacity=0.0,
                             branch="divergent", levels=len(tw), profile=None)
    r = math.fsum(masses.tolist())
    cum = np.concatenate([[0.0], np.cumsum(masses)])
    prof = Profile(t=tw, v=cum / cum[-1]) if cum[-1] > 0.0 else None
    return ReducedReport(p=table.p, a=float(a), b=float(b), resistance=r,
                         capacity=r ** (1.0 - table.p), branch="finite",
                         levels=len(tw), profile=prof)


def series_residual(table: WeightTable, a: float, c: float, b: float) -> float:
    """|R(a,b) - R(a,c) - R(c,b)| with c required to be a knot."""
    if not a < c < b:
        raise ValueError("need a < c < b")
    _knot_index(table, c, "c")
    whole = resistance(table, a, b)
    left = resistance(table, a, c)
    right = resistance(table, c, b)
    if math.isinf(whole) or math.isinf(left) or math.isinf(right):
        if math.isinf(whole) and (math.isinf(left) or math.isinf(right)):
            return 0.0
        return math.inf
    return abs(whole - (left + right))


# ---------------------------------------------------------------------------
# profiles and energies
# ---------------------------------------------------------------------------

def optimal_profile(table: WeightTable, a: float, b: float) -> Profile:
    """Cumulative-mass profile v(t) = R(a,t) / R(a,b) on the window knots.

    Attains the reduced capacity under ``reduced_energy``.  Raises when the
    resistance diverges or vanishes, where no minimizer exists.
    """
    tw, Aw = _window(table, a, b)
    masses = _cell_masses(tw, Aw, table.p)
    if not np.all(np.isfinite(masses)):
        raise ValueError("optimal profile undefined: resistance diverges")
    cum = np.concatenate([[0.0], np.cumsum(masses)])
    if cum[-1] <= 0.0:
        raise ValueError("optimal profile undefined: zero resistance window")
    return Profile(t=tw, v=cum / cum[-1])


def _b_of(A: np.ndarray, p: float) -> np.ndarray:
    with np.errstate(divide="ignore", over="ignore"):
        B = np.where(A > 0.0, A ** (-1.0 / (p - 1.0)), np.inf)
    return np.minimum(B, _B_CAP)


def reduced_energy(profile: Profile, table: WeightTable) -> float:
    """Discrete energy sum |dv/dt|^p A dt over the profile cells.

    A is evaluated at cell midpoints by linear interpolation of
    B = A^(-1/(p-1)); cells over vanishing-weight rows contribute
    essentially nothing, matching the continuum integrand.
    """
    p = table.p
    lo, hi = profile.span
    tol = 1e-9 * (table.t[-1] - table.t[0])
    if lo < table.t[0] - tol or hi > table.t[-1] + tol:
        raise ValueError("profile knots leave the table span")
    B = _b_of(table.A, p)
    mids = 0.5 * (profile.t[:-1] + profile.t[1:])
    b_mid = np.interp(mids, table.t, B)
    with np.errstate(under="ignore"):
        a_mid = b_mid ** (1.0 - p)
    dt = np.diff(profile.t)
    dv = np.diff(profile.v)
    cells = np.abs(dv) ** p * dt ** (1.0 - p) * a_mid
    return math.fsum(cells.tolist())


def truncated_profile(table: WeightTable, a: float, b: float,
                      cutoff: float) -> TruncatedProfile:
    """Profile built from the truncated integrand min(B, cutoff).

    Its mass c = integral of min(B, cutoff) is finite even when R diverges,
    the profile is Lipschitz with slope at most cutoff/c, and its energy
    never exceeds c^(1-p).
    """
    if cutoff <= 0.0:
        raise ValueError("cutoff must be positive")
    tw, Aw = _window(table, a, b)
    Bk = np.minimum(_b_of(Aw, table.p), cutoff)
    masses = 0.5 * (Bk[:-1] + Bk[1:]) * np.diff(tw)
    cum = np.concatenate([[0.0], np.cumsum(masses)])
    total = cum[-1]
    if total <= 0.0:
        raise ValueError("truncated profile undefined: zero truncated mass")
    prof = Profile(t=tw, v=cum / total)
    return TruncatedProfile(profile=prof, cutoff=float(cutoff),
                            mass=float(total),
                            energy_bound=float(total ** (1.0 - table.p)))


def linear_profile_comparison(table: WeightTable, a: float,
                              b: float) -> LinearComparison:
    """Energy of the straight-line profile against the reduced capacity.

    The excess is nonnegative; an excess below EQ_TOL (relative) flags the
    constant-weight equality case.
    """
    tw, _ = _window(table, a, b)
    lin = Profile(t=tw, v=(tw - tw[0]) / (tw[-1] - tw[0]))
    energy = reduced_energy(lin, table)
    cap = reduced_capacity(table, a, b).capacity
    excess = energy - cap
    constant = excess <= EQ_TOL * max(abs(cap), abs(energy), 1e-300)
    return LinearComparison(energy_linear=energy, capacity=cap,
                            excess=excess, constant_weight=constant)


# ---------------------------------------------------------------------------
# transformations and bounds
# ---------------------------------------------------------------------------

def reparametrize_table(table: WeightTable, phi, dphi=None) -> WeightTable:
    """Push the table through a strictly increasing level change s = phi(t).

    The weight transforms as A -> (phi')^(p-1) A and the pushforward as
    w -> w / phi', which leaves resistance and capacity of corresponding
    windows invariant.  phi' defaults to second-order centered difference
    quotients of the sampled values (one-sided at the ends).
    """
    s = np.asarray(phi(table.t), dtype=np.float64)
    if s.shape != table.t.shape or not np.all(np.diff(s) > 0):
        raise ValueError("phi must map the knots to strictly increasing "
                         "values")
    if dphi is not None:
        dp = np.asarray(dphi(table.t), dtype=np.float64)
    else:
        dp = np.gradient(s, table.t, edge_order=2)
    if dp.shape != table.t.shape or not np.all(dp > 0):
        raise ValueError("phi must have positive slope on the knots")
    return WeightTable(p=table.p, t=s, S=table.S.copy(),
                       A=dp ** (table.p - 1.0) * table.A,
                       w=table.w / dp)


def two_sided_bounds(gamma_lo, gamma_hi, m, M, a: float, b: float,
                     p: float) -> EnvelopeBounds:
    """Capacity bounds from sampled gradient and fiber-size envelopes.

    The four arrays are read as samples on the uniform level grid over
    [a, b]; gamma_lo^(p-1) m and gamma_hi^(p-1) M bracket any energy weight
    compatible with the envelopes, so the induced capacities bracket its
    reduced capacity.
    """
    g_lo = np.asarray(gamma_lo, dtype=np.float64)
    g_hi = np.asarray(gamma_hi, dtype=np.float64)
    s_lo = np.asarray(m, dtype=np.float64)
    s_hi = np.asarray(M, dtype=np.float64)
    n = len(g_lo)
    if n < 2 or any(arr.shape != (n,) for arr in (g_hi, s_lo, s_hi)):
        raise ValueError("envelopes must be 1-D arrays of one shared length "
                         ">= 2")
    if not a < b:
        raise ValueError("need a < b")
    if np.any(g_lo < 0) or np.any(g_hi < g_lo):
        raise ValueError("need 0 <= gamma_lo <= gamma_hi samplewise")
    if np.any(s_lo < 0) or np.any(s_hi < s_lo):
        raise ValueError("need 0 <= m <= M samplewise")
    t = np.linspace(a, b, n)
    ones = np.ones(n)

    def cap_of(A: np.ndarray) -> float:
        tab = WeightTable(p=p, t=t, S=ones, A=A, w=ones)
        return reduced_capacity(tab, a, b).capacity

    lower = cap_of(g_lo ** (p - 1.0) * s_lo)
    upper = cap_of(g_hi ** (p - 1.0) * s_hi)
    return EnvelopeBounds(lower=lower, upper=upper)


def eikonal_check(table: WeightTable, gamma) -> float:
    """Worst rowwise relative residual of A = gamma^(p-1) S.

    Small residuals certify that the gradient magnitude is a function of
    the level alone, in which case the envelope bounds collapse to the
    capacity itself.
    """
    g = np.asarray(gamma, dtype=np.float64)
    if g.shape != table.t.shape:
        raise ValueError("gamma must align with the table knots")
    if np.any(g < 0):
        raise ValueError("gamma must be nonnegative")
    model = g ** (table.p - 1.0) * table.S
    denom = np.maximum(table.A, FLOOR_A)
    return float(np.max(np.abs(table.A - model) / denom))


# ---------------------------------------------------------------------------
# i/o
# ---------------------------------------------------------------------------

def save_profile_csv(profile: Profile, path_or_handle) -> None:
    """CSV with header ``t,v``."""
    lines = ["t,v"]
    for k in range(len(profile)):
        lines.append(f"{fmt_float(profile.t[k])},{fmt_float(profile.v[k])}")
    text = "\n".join(lines) + "\n"
    if hasattr(path_or_handle, "write"):
        path_or_handle.write(text)
    else:
        with open(path_or_handle, "w", encoding="ascii") as fh:
            fh.write(text)


def load_profile_csv(path: str) -> Profile:
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln for ln in fh.read().split("\n") if ln.strip()]
    if not lines or lines[0].strip() != "t,v":
        raise ValueError("profile file must start with header t,v")
    rows = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != 2:
            raise ValueError(f"malformed profile row: {ln!r}")
        rows.append((float(parts[0]), float(parts[1])))
    arr = np.array(rows, dtype=np.float64)
    return Profile(t=arr[:, 0], v=arr[:, 1])


def save_reduced_json(report: ReducedReport, path_or_handle) -> None:
    dump_json(path_or_handle, report.as_dict())
