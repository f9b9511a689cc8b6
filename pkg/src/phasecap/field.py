"""Scalar phase fields on uniform Cartesian grids.

A phase field θ is a scalar function sampled at the nodes of a uniform grid
over an axis-aligned box.  Everything downstream (fiber extraction, energy
weights, capacity solves) consumes the types defined here: ``Grid``,
``ScalarField``, ``VectorField`` and the built-in analytic phase models.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "Grid",
    "ScalarField",
    "VectorField",
    "PhaseModel",
    "AdmissibilityReport",
    "sample_phase",
    "gradient",
    "plate_masks",
    "band_mask",
    "check_admissible_levels",
    "boundary_mask",
    "interpolate_values",
    "save_field",
    "load_field",
]

FIELD_MAGIC = "PHASEFIELD v1"


def _as_tuple(x, n: int | None = None, cast=float) -> tuple:
    t = tuple(cast(v) for v in x)
    if n is not None and len(t) != n:
        raise ValueError(f"expected {n} entries, got {len(t)}")
    return t


@dataclass(frozen=True)
class Grid:
    """Uniform node-centred grid on an axis-aligned box (2 or 3 axes).

    Node coordinates along axis i are ``origin[i] + k*spacing[i]`` for
    ``k = 0 .. dims[i]-1``.  Values attached to a grid are stored row-major
    with the last axis fastest.
    """

    dims: tuple[int, ...]
    spacing: tuple[float, ...]
    origin: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "dims", _as_tuple(self.dims, cast=int))
        nd = len(self.dims)
        if nd not in (2, 3):
            raise ValueError("grid must have 2 or 3 axes")
        object.__setattr__(self, "spacing", _as_tuple(self.spacing, nd))
        object.__setattr__(self, "origin", _as_tuple(self.origin, nd))
        if any(d < 2 for d in self.dims):
            raise ValueError("each axis needs at least 2 nodes")
        if any(h <= 0 for h in self.spacing):
            raise ValueError("grid spacing must be positive")

    @property
    def ndim(self) -> int:
        return len(self.dims)

    @property
    def node_count(self) -> int:
        return int(np.prod(self.dims))

    @property
    def cell_count(self) -> int:
        return int(np.prod([d - 1 for d in self.dims]))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def axis_coords(self, axis: int) -> np.ndarray:
        return self.origin[axis] + self.spacing[axis] * np.arange(self.dims[axis])

    @property
    def lo(self) -> tuple[float, ...]:
        return self.origin

    @property
    def hi(self) -> tuple[float, ...]:
        return tuple(o + h * (d - 1) for o, h, d in zip(self.origin, self.spacing, self.dims))

    @classmethod
    def from_extent(cls, dims: Sequence[int], lo: Sequence[float], hi: Sequence[float]) -> "Grid":
        dims = _as_tuple(dims, cast=int)
        if any(d < 2 for d in dims):
            raise ValueError("each axis needs at least 2 nodes")
        lo = _as_tuple(lo, len(dims))
        hi = _as_tuple(hi, len(dims))
        if any(b <= a for a, b in zip(lo, hi)):
            raise ValueError("extent must have lo < hi on every axis")
        spacing = tuple((b - a) / (d - 1) for a, b, d in zip(lo, hi, dims))
        return cls(dims, spacing, lo)

    def meshgrid(self) -> list[np.ndarray]:
        return np.meshgrid(*[self.axis_coords(i) for i in range(self.ndim)], indexing="ij")


def _frozen_array(a: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(a, dtype=np.float64)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class ScalarField:
    """Node values of a scalar function on a :class:`Grid`.  Immutable."""

    grid: Grid
    values: np.ndarray
    name: str = ""

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != self.grid.dims:
            raise ValueError(f"value shape {v.shape} does not match grid dims {self.grid.dims}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", _frozen_array(v))

    @property
    def value_range(self) -> tuple[float, float]:
        return float(self.values.min()), float(self.values.max())


@dataclass(frozen=True)
class VectorField:
    """One array per axis, each shaped like the grid."""

    grid: Grid
    components: tuple[np.ndarray, ...]

    def __post_init__(self):
        comps = tuple(_frozen_array(c) for c in self.components)
        if len(comps) != self.grid.ndim:
            raise ValueError("need one component per axis")
        for c in comps:
            if c.shape != self.grid.dims:
                raise ValueError("component shape does not match grid dims")
        object.__setattr__(self, "components", comps)

    def norm(self) -> np.ndarray:
        sq = sum(c * c for c in self.components)
        return np.sqrt(sq)


@dataclass(frozen=True)
class PhaseModel:
    """Analytic or file-backed phase.

    Kinds
    -----
    planar    θ(x) = x[axis]
    radial    θ(x) = |x - center|
    monomial  θ(x) = |x[axis]|**gamma with gamma > 1
    file      values loaded from the delimited field format
    """

    kind: str
    axis: int = 0
    center: tuple[float, ...] | None = None
    gamma: float | None = None
    path: str | None = None

    def __post_init__(self):
        if self.kind not in ("planar", "radial", "monomial", "file"):
            raise ValueError(f"unknown phase kind {self.kind!r}")
        if self.axis < 0:
            raise ValueError("phase axis must be nonnegative")
        if self.kind == "monomial":
            if self.gamma is None or not self.gamma > 1.0:
                raise ValueError("monomial phase needs exponent gamma > 1")
        if self.kind == "radial" and self.center is None:
            raise ValueError("radial phase needs a center")
        if self.kind == "file" and not self.path:
            raise ValueError("file phase needs a path")

    @classmethod
    def planar(cls, axis: int = 0) -> "PhaseModel":
        return cls("planar", axis=axis)

    @classmethod
    def radial(cls, center: Sequence[float]) -> "PhaseModel":
        return cls("radial", center=tuple(float(c) for c in center))

    @classmethod
    def monomial(cls, gamma: float, axis: int = 0) -> "PhaseModel":
        return cls("monomial", axis=axis, gamma=float(gamma))

    @classmethod
    def from_file(cls, path: str) -> "PhaseModel":
        return cls("file", path=str(path))


def sample_phase(model: PhaseModel, grid: Grid | None = None) -> ScalarField:
    """Evaluate a phase model at every grid node.

    For the ``file`` kind the stored grid is authoritative; passing a grid
    that disagrees with it is an error.
    """
    if model.kind == "file":
        loaded = load_field(model.path)
        if grid is not None and grid != loaded.grid:
            raise ValueError("file-backed phase has a different grid than requested")
        return loaded
    if grid is None:
        raise ValueError("analytic phase models need a grid")
    if model.kind == "planar":
        if not 0 <= model.axis < grid.ndim:
            raise ValueError("planar axis out of range for grid")
        x = grid.axis_coords(model.axis)
        shape = [1] * grid.ndim
        shape[model.axis] = grid.dims[model.axis]
        vals = np.broadcast_to(x.reshape(shape), grid.dims).copy()
        return ScalarField(grid, vals, name="planar")
    if model.kind == "radial":
        if len(model.center) != grid.ndim:
            raise ValueError("radial center length must equal the number of axes")
        mesh = grid.meshgrid()
        sq = sum((m - c) ** 2 for m, c in zip(mesh, model.center))
        return ScalarField(grid, np.sqrt(sq), name="radial")
    if model.kind == "monomial":
        if not 0 <= model.axis < grid.ndim:
            raise ValueError("monomial axis out of range for grid")
        x = np.abs(grid.axis_coords(model.axis)) ** model.gamma
        shape = [1] * grid.ndim
        shape[model.axis] = grid.dims[model.axis]
        vals = np.broadcast_to(x.reshape(shape), grid.dims).copy()
        return ScalarField(grid, vals, name="monomial")
    raise AssertionError("unreachable")


def gradient(fld: ScalarField) -> VectorField:
    """Node gradient: central differences inside, one-sided second-order on
    the boundary layers.  Exact for affine node data (and for quadratics,
    which keeps pure power phases clean near their critical point)."""
    comps = np.gradient(fld.values, *fld.grid.spacing, edge_order=2)
    if fld.grid.ndim == 1:  # np.gradient returns a bare array in 1-D
        comps = [comps]
    return VectorField(fld.grid, tuple(comps))


def plate_masks(fld: ScalarField, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    """Sublevel plate ``θ <= a`` and superlevel plate ``θ >= b``.

    Disjoint for every a < b.  Masks may be empty; emptiness is reported by
    :func:`check_admissible_levels` and is a hard error only where a solve
    actually needs both plates.
    """
    if not a < b:
        raise ValueError("levels must satisfy a < b")
    return fld.values <= a, fld.values >= b


def band_mask(fld: ScalarField, lo: float, hi: float) -> np.ndarray:
    """Nodes with lo <= θ <= hi (used for truncated outer plates)."""
    if not lo < hi:
        raise ValueError("band needs lo < hi")
    return (fld.values >= lo) & (fld.values <= hi)


def boundary_mask(grid: Grid) -> np.ndarray:
    m = np.zeros(grid.dims, dtype=bool)
    for ax in range(grid.ndim):
        sl = [slice(None)] * grid.ndim
        sl[ax] = 0
        m[tuple(sl)] = True
        sl[ax] = -1
        m[tuple(sl)] = True
    return m


@dataclass(frozen=True)
class AdmissibilityReport:
    a: float
    b: float
    admissible: bool
    boundary_inside: bool
    e_nonempty: bool
    f_nonempty: bool
    boundary_min: float
    boundary_max: float

    def as_dict(self) -> dict:
        return {
            "a": self.a,
            "b": self.b,
            "admissible": self.admissible,
            "boundary_inside": self.boundary_inside,
            "e_nonempty": self.e_nonempty,
            "f_nonempty": self.f_nonempty,
            "boundary_min": self.boundary_min,
            "boundary_max": self.boundary_max,
        }


def check_admissible_levels(fld: ScalarField, a: float, b: float) -> AdmissibilityReport:
    """Scan the outermost node layer and both plates.

    Admissible means: every boundary node satisfies a < θ < b and both
    plates are nonempty, i.e. the condenser sits strictly inside the box.
    """
    if not a < b:
        raise ValueError("levels must satisfy a < b")
    bvals = fld.values[boundary_mask(fld.grid)]
    bmin = float(bvals.min())
    bmax = float(bvals.max())
    inside = bool(a < bmin) and bool(bmax < b)
    e_mask, f_mask = plate_masks(fld, a, b)
    e_ok = bool(e_mask.any())
    f_ok = bool(f_mask.any())
    return AdmissibilityReport(
        a=float(a),
        b=float(b),
        admissible=inside and e_ok and f_ok,
        boundary_inside=inside,
        e_nonempty=e_ok,
        f_nonempty=f_ok,
        boundary_min=bmin,
        boundary_max=bmax,
    )


def interpolate_values(grid: Grid, values: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Multilinear interpolation of node values at arbitrary points.

    Points are clamped to the grid box, so callers sampling on the closed
    boundary get the boundary value.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if pts.shape[1] != grid.ndim:
        raise ValueError("point dimensionality does not match grid")
    frac = (pts - np.asarray(grid.origin)) / np.asarray(grid.spacing)
    upper = np.asarray(grid.dims) - 1
    frac = np.clip(frac, 0.0, upper)
    i0 = np.minimum(frac.astype(np.int64), upper - 1)
    w = frac - i0
    if grid.ndim == 2:
        ix, iy = i0[:, 0], i0[:, 1]
        wx, wy = w[:, 0], w[:, 1]
        v00 = values[ix, iy]
        v10 = values[ix + 1, iy]
        v01 = values[ix, iy + 1]
        v11 = values[ix + 1, iy + 1]
        return ((1 - wx) * (1 - wy) * v00 + wx * (1 - wy) * v10
                + (1 - wx) * wy * v01 + wx * wy * v11)
    ix, iy, iz = i0[:, 0], i0[:, 1], i0[:, 2]
    wx, wy, wz = w[:, 0], w[:, 1], w[:, 2]
    out = np.zeros(len(pts))
    for dx in (0, 1):
        for dy in (0, 1):
            for dz in (0, 1):
                corner = values[ix + dx, iy + dy, iz + dz]
                weight = ((wx if dx else 1 - wx)
                          * (wy if dy else 1 - wy)
                          * (wz if dz else 1 - wz))
                out += weight * corner
    return out


def _fmt(x: float) -> str:
    """Shortest decimal that round-trips the double exactly."""
    return repr(float(x))


def save_field(fld: ScalarField, path: str) -> None:
    """Write the delimited field format.

    Layout: magic line, axis count, dims, spacing, origin, then one node
    value per line in row-major order (last axis fastest).  Values use
    shortest round-trip decimal formatting, so save/load is bit-exact.
    """
    g = fld.grid
    lines = [
        FIELD_MAGIC,
        str(g.ndim),
        " ".join(str(d) for d in g.dims),
        " ".join(_fmt(h) for h in g.spacing),
        " ".join(_fmt(o) for o in g.origin),
    ]
    lines.extend(_fmt(v) for v in fld.values.ravel(order="C"))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")


def load_field(path: str) -> ScalarField:
    try:
        with open(path, "r", encoding="ascii") as fh:
            lines = fh.read().split("\n")
    except OSError as exc:
        raise ValueError(f"cannot read field file: {exc}") from exc
    if not lines or lines[0].strip() != FIELD_MAGIC:
        raise ValueError("not a field file (bad magic line)")
    try:
        nd = int(lines[1])
        dims = tuple(int(s) for s in lines[2].split())
        spacing = tuple(float(s) for s in lines[3].split())
        origin = tuple(float(s) for s in lines[4].split())
    except (IndexError, ValueError) as exc:
        raise ValueError(f"malformed field header: {exc}") from exc
    if len(dims) != nd or len(spacing) != nd or len(origin) != nd:
        raise ValueError("field header is inconsistent with its axis count")
    grid = Grid(dims, spacing, origin)
    body = [s for s in lines[5:] if s.strip()]
    if len(body) != grid.node_count:
        raise ValueError(
            f"field body has {len(body)} values, expected {grid.node_count}")
    try:
        vals = np.array([float(s) for s in body], dtype=np.float64)
    except ValueError as exc:
        raise ValueError(f"malformed field value: {exc}") from exc
    return ScalarField(grid, vals.reshape(grid.dims, order="C"))
