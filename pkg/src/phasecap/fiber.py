"""Level-set fibers and their integral weights.

``extract_fiber`` meshes one level set of a node-sampled phase: marching
squares in 2-D (segments), marching tetrahedra on a Freudenthal cube split
in 3-D (planar polygons).  Each element carries its measure, the gradient
magnitude interpolated at its barycenter, its cell index and a connected
component label.  The per-level integrals built on top of the mesh are

    S(t)  fiber size            Σ measure
    A(t)  energy weight         Σ |∇θ|^(p-1) · measure
    w(t)  pushforward weight    Σ measure / |∇θ|

and ``weight_table`` tabulates them over a level grid.  All summations run
in ascending cell-index order (within components, then across components in
first-appearance order), so results are deterministic and the component
split adds up to the total bitwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Sequence

import numpy as np

from .field import (
    Grid,
    ScalarField,
    VectorField,
    gradient,
    interpolate_values,
)

__all__ = [
    "Region",
    "FiberMesh",
    "WeightTable",
    "CoareaCheck",
    "extract_fiber",
    "fiber_size",
    "energy_weight",
    "pushforward_weight",
    "fiber_mean_energy",
    "component_weights",
    "weight_table",
    "coarea_check",
    "save_weight_csv",
    "load_weight_csv",
]

# Levels landing on a node value are shifted by this fraction of the value
# range before extraction; gradient magnitudes below GRAD_FLOOR_REL times the
# field's Lipschitz scale flag the pushforward weight as infinite.
LEVEL_NUDGE_REL = 1e-9
GRAD_FLOOR_REL = 1e-12


@dataclass(frozen=True)
class Region:
    """Axis-aligned box used to localize fiber integrals."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != len(hi):
            raise ValueError("region lo/hi dimensionality mismatch")
        if any(b <= a for a, b in zip(lo, hi)):
            raise ValueError("region must have lo < hi on every axis")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def clipped_to(self, grid: Grid) -> "Region":
        lo = tuple(max(a, g) for a, g in zip(self.lo, grid.lo))
        hi = tuple(min(b, g) for b, g in zip(self.hi, grid.hi))
        if any(b <= a for a, b in zip(lo, hi)):
            raise ValueError("region does not intersect the grid box")
        return Region(lo, hi)


@dataclass(frozen=True)
class FiberMesh:
    """Piecewise-linear mesh of one level set.

    ``level`` is the level actually used (after any nudge).  Elements are
    sorted by ascending cell index; ``segments`` keeps 2-D endpoints for
    plotting and is None in 3-D.
    """

    level: float
    requested_level: float
    nudged: bool
    measures: np.ndarray
    grad_norms: np.ndarray
    cell_indices: np.ndarray
    labels: np.ndarray
    barycenters: np.ndarray
    floor_grad: float
    segments: np.ndarray | None = None

    @property
    def element_count(self) -> int:
        return len(self.measures)

    @property
    def component_count(self) -> int:
        return int(self.labels.max()) + 1 if len(self.labels) else 0


# ---------------------------------------------------------------------------
# 2-D marching squares
# ---------------------------------------------------------------------------

# Corner bits: a=(i,j), b=(i+1,j), c=(i+1,j+1), d=(i,j+1).
# Edges: 0 bottom a-b, 1 right b-c, 2 top d-c, 3 left a-d.
_SEGMENT_CASES = {
    1: (0, 3), 2: (0, 1), 3: (1, 3), 4: (1, 2), 6: (0, 2), 7: (2, 3),
    8: (2, 3), 9: (0, 2), 11: (1, 2), 12: (1, 3), 13: (0, 1), 14: (0, 3),
}
_SADDLE_CASES = (5, 10)


def _edge_data(edge, i0, i1, fa, fb, fc, fd, t, x0, x1, h0, h1, n1):
    """Crossing point and lattice-edge key for one cell edge.

    The interpolation always runs from the lower-index node, so shared edges
    of neighboring cells produce bit-identical points.
    """
    if edge == 0:
        lam = (t - fa) / (fb - fa)
        px = x0[i0] + lam * h0
        py = x1[i1]
        key = 2 * (i0 * n1 + i1)
    elif edge == 1:
        lam = (t - fb) / (fc - fb)
        px = x0[i0 + 1]
        py = x1[i1] + lam * h1
        key = 2 * ((i0 + 1) * n1 + i1) + 1
    elif edge == 2:
        lam = (t - fd) / (fc - fd)
        px = x0[i0] + lam * h0
        py = x1[i1 + 1]
        key = 2 * (i0 * n1 + (i1 + 1))
    else:
        lam = (t - fa) / (fd - fa)
        px = x0[i0]
        py = x1[i1] + lam * h1
        key = 2 * (i0 * n1 + i1) + 1
    return np.stack([px, py], axis=-1), key


def _march_squares(values: np.ndarray, t: float, grid: Grid,
                   cell_mask: np.ndarray | None):
    n0, n1 = values.shape
    above = values > t
    a = above[:-1, :-1]
    b = above[1:, :-1]
    c = above[1:, 1:]
    d = above[:-1, 1:]
    code = (a.astype(np.int8) + 2 * b.astype(np.int8)
            + 4 * c.astype(np.int8) + 8 * d.astype(np.int8))
    active = (code != 0) & (code != 15)
    if cell_mask is not None:
        active &= cell_mask
    ii, jj = np.nonzero(active)
    if len(ii) == 0:
        return (np.empty((0, 2, 2)), np.empty(0, dtype=np.int64),
                np.empty((0, 2), dtype=np.int64), np.empty(0, dtype=np.int64))
    x0 = grid.axis_coords(0)
    x1 = grid.axis_coords(1)
    h0, h1 = grid.spacing
    fa = values[ii, jj]
    fb = values[ii + 1, jj]
    fc = values[ii + 1, jj + 1]
    fd = values[ii, jj + 1]
    codes = code[ii, jj]

    segs, cells, keys, slots = [], [], [], []

    def emit(sel, e_first, e_second, slot):
        p_first, k_first = _edge_data(e_first, ii[sel], jj[sel], fa[sel], fb[sel],
                                      fc[sel], fd[sel], t, x0, x1, h0, h1, n1)
        p_second, k_second = _edge_data(e_second, ii[sel], jj[sel], fa[sel], fb[sel],
                                        fc[sel], fd[sel], t, x0, x1, h0, h1, n1)
        segs.append(np.stack([p_first, p_second], axis=1))
        cells.append(ii[sel] * (n1 - 1) + jj[sel])
        keys.append(np.stack([k_first, k_second], axis=1))
        slots.append(np.full(int(np.count_nonzero(sel)), slot, dtype=np.int64))

    for case, (e1, e2) in _SEGMENT_CASES.items():
        sel = codes == case
        if sel.any():
            emit(sel, e1, e2, 0)
    for case in _SADDLE_CASES:
        sel = codes == case
        if not sel.any():
            continue
        center_above = 0.25 * (fa[sel] + fb[sel] + fc[sel] + fd[sel]) > t
        a_above = fa[sel] > t
        same = center_above == a_above
        idx = np.nonzero(sel)[0]
        for pairing, sub in (( ((0, 1), (2, 3)), same), (((0, 3), (1, 2)), ~same)):
            if not sub.any():
                continue
            mask = np.zeros(len(codes), dtype=bool)
            mask[idx[sub]] = True
            emit(mask, *pairing[0], 0)
            emit(mask, *pairing[1], 1)

    seg = np.concatenate(segs, axis=0)
    cell = np.concatenate(cells)
    key = np.concatenate(keys, axis=0)
    slot = np.concatenate(slots)
    order = np.lexsort((slot, cell))
    return seg[order], cell[order], key[order], slot[order]


def _clip_segments_to_box(seg: np.ndarray, lo, hi):
    """Liang-Barsky clip of each segment to a closed box; returns the kept
    index mask and the clipped endpoints."""
    p0 = seg[:, 0, :]
    p1 = seg[:, 1, :]
    d = p1 - p0
    t_lo = np.zeros(len(seg))
    t_hi = np.ones(len(seg))
    keep = np.ones(len(seg), dtype=bool)
    for ax in range(seg.shape[2]):
        dax = d[:, ax]
        par = dax == 0.0
        inside_par = (p0[:, ax] >= lo[ax]) & (p0[:, ax] <= hi[ax])
        keep &= ~par | inside_par
        with np.errstate(divide="ignore", invalid="ignore"):
            ta = (lo[ax] - p0[:, ax]) / dax
            tb = (hi[ax] - p0[:, ax]) / dax
        ta = np.where(par, -np.inf, ta)
        tb = np.where(par, np.inf, tb)
        t_lo = np.maximum(t_lo, np.minimum(ta, tb))
        t_hi = np.minimum(t_hi, np.maximum(ta, tb))
    keep &= t_hi > t_lo
    q0 = p0 + t_lo[:, None] * d
    q1 = p0 + t_hi[:, None] * d
    return keep, np.stack([q0, q1], axis=1)


# ---------------------------------------------------------------------------
# 3-D marching tetrahedra
# ---------------------------------------------------------------------------

# Cube corners indexed by bits x + 2y + 4z; the six path tetrahedra of the
# Freudenthal split share the main diagonal 0-7 and tile space conformingly.
_CUBE_OFF = np.array([
    (0, 0, 0), (1, 0, 0), (0, 1, 0), (1, 1, 0),
    (0, 0, 1), (1, 0, 1), (0, 1, 1), (1, 1, 1),
], dtype=np.int64)
_TETS = ((0, 1, 3, 7), (0, 1, 5, 7), (0, 2, 3, 7),
         (0, 2, 6, 7), (0, 4, 5, 7), (0, 4, 6, 7))


def _poly_area_centroid(pts: np.ndarray) -> tuple[float, np.ndarray]:
    """Area and centroid of a planar polygon in 3-D (fan triangulation)."""
    if len(pts) < 3:
        return 0.0, pts.mean(axis=0) if len(pts) else np.zeros(3)
    total = 0.0
    cent = np.zeros(3)
    for k in range(1, len(pts) - 1):
        tri_area = 0.5 * np.linalg.norm(
            np.cross(pts[k] - pts[0], pts[k + 1] - pts[0]))
        total += tri_area
        cent += tri_area * (pts[0] + pts[k] + pts[k + 1]) / 3.0
    if total == 0.0:
        return 0.0, pts.mean(axis=0)
    return total, cent / total


def _clip_poly_to_box(pts: np.ndarray, lo, hi) -> np.ndarray:
    """Sutherland-Hodgman clip against the six box half-spaces."""
    poly = list(pts)
    for ax in range(3):
        for bound, keep_ge in ((lo[ax], True), (hi[ax], False)):
            if not poly:
                return np.empty((0, 3))
            out = []
            m = len(poly)
            for k in range(m):
                cur = poly[k]
                nxt = poly[(k + 1) % m]
                cur_in = cur[ax] >= bound if keep_ge else cur[ax] <= bound
                nxt_in = nxt[ax] >= bound if keep_ge else nxt[ax] <= bound
                if cur_in:
                    out.append(cur)
                if cur_in != nxt_in:
                    lam = (bound - cur[ax]) / (nxt[ax] - cur[ax])
                    out.append(cur + lam * (nxt - cur))
            poly = out
    return np.array(poly) if poly else np.empty((0, 3))


def _march_tets(values: np.ndarray, t: float, grid: Grid,
                cell_mask: np.ndarray | None, region: Region | None):
    n0, n1, n2 = values.shape
    above = values > t
    sub = above[:-1, :-1, :-1]
    mixed = np.zeros(sub.shape, dtype=bool)
    for off in _CUBE_OFF[1:]:
        mixed |= above[off[0]:off[0] + n0 - 1,
                       off[1]:off[1] + n1 - 1,
                       off[2]:off[2] + n2 - 1] != sub
    if cell_mask is not None:
        mixed &= cell_mask
    cubes = np.argwhere(mixed)
    coords = [grid.axis_coords(ax) for ax in range(3)]

    measures, grads_pts, cells, slots = [], [], [], []
    key_lists = []

    def corner_gid(idx3):
        return (idx3[0] * n1 + idx3[1]) * n2 + idx3[2]

    for (ci, cj, ck) in cubes:
        base = np.array([ci, cj, ck], dtype=np.int64)
        corner_idx = base[None, :] + _CUBE_OFF
        vals = values[corner_idx[:, 0], corner_idx[:, 1], corner_idx[:, 2]]
        pos = np.stack([coords[0][corner_idx[:, 0]],
                        coords[1][corner_idx[:, 1]],
                        coords[2][corner_idx[:, 2]]], axis=1)
        gids = (corner_idx[:, 0] * n1 + corner_idx[:, 1]) * n2 + corner_idx[:, 2]
        cell_id = (ci * (n1 - 1) + cj) * (n2 - 1) + ck
        slot = 0
        for tet in _TETS:
            tvals = vals[list(tet)]
            tabove = tvals > t
            n_above = int(tabove.sum())
            if n_above in (0, 4):
                continue

            def crossing(u, v):
                gu, gv = gids[tet[u]], gids[tet[v]]
                if gu > gv:
                    u, v = v, u
                    gu, gv = gv, gu
                fu, fv = vals[tet[u]], vals[tet[v]]
                lam = (t - fu) / (fv - fu)
                return pos[tet[u]] + lam * (pos[tet[v]] - pos[tet[u]]), (gu, gv)

            if n_above in (1, 3):
                iso = int(np.nonzero(tabove if n_above == 1 else ~tabove)[0][0])
                others = [k for k in range(4) if k != iso]
                pts, keys = zip(*(crossing(iso, o) for o in others))
                tris = [(np.array(pts), tuple(keys))]
            else:
                hi_side = list(np.nonzero(tabove)[0])
                lo_side = [k for k in range(4) if k not in hi_side]
                i1, i2 = hi_side
                j1, j2 = lo_side
                seq = [(i1, j1), (i1, j2), (i2, j2), (i2, j1)]
                pts, keys = zip(*(crossing(u, v) for u, v in seq))
                quad = np.array(pts)
                tris = [(quad[[0, 1, 2]], (keys[0], keys[1], keys[2])),
                        (quad[[0, 2, 3]], (keys[0], keys[2], keys[3]))]
            for poly, tri_keys in tris:
                if region is not None:
                    poly = _clip_poly_to_box(poly, region.lo, region.hi)
                    if len(poly) < 3:
                        continue
                area, cent = _poly_area_centroid(poly)
                if area <= 0.0:
                    continue
                measures.append(area)
                grads_pts.append(cent)
                cells.append(cell_id)
                slots.append(slot)
                key_lists.append(tri_keys)
                slot += 1

    if not measures:
        return (np.empty(0), np.empty((0, 3)), np.empty(0, dtype=np.int64),
                np.empty(0, dtype=np.int64), [])
    measures = np.array(measures)
    pts = np.array(grads_pts)
    cells = np.array(cells, dtype=np.int64)
    slots = np.array(slots, dtype=np.int64)
    order = np.lexsort((slots, cells))
    key_lists = [key_lists[k] for k in order]
    return measures[order], pts[order], cells[order], slots[order], key_lists


# ---------------------------------------------------------------------------
# component labeling
# ---------------------------------------------------------------------------

def _label_from_keys(key_groups) -> np.ndarray:
    """Union-find over lattice-edge keys; elements sharing a crossing edge
    are connected.  Labels follow first appearance in element order."""
    parent: dict = {}

    def find(x):
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    def union(x, y):
        for k in (x, y):
            if k not in parent:
                parent[k] = k
        rx, ry = find(x), find(y)
        if rx != ry:
            parent[ry] = rx

    for keys in key_groups:
        first = keys[0]
        if first not in parent:
            parent[first] = first
        for other in keys[1:]:
            union(first, other)

    labels = np.empty(len(key_groups), dtype=np.int64)
    seen: dict = {}
    for idx, keys in enumerate(key_groups):
        root = find(keys[0])
        if root not in seen:
            seen[root] = len(seen)
        labels[idx] = seen[root]
    return labels


# ---------------------------------------------------------------------------
# extraction
# ---------------------------------------------------------------------------

def _cells_touching_region(grid: Grid, region: Region) -> np.ndarray:
    masks = []
    for ax in range(grid.ndim):
        x = grid.axis_coords(ax)
        cell_lo = x[:-1]
        cell_hi = x[1:]
        masks.append((cell_hi >= region.lo[ax]) & (cell_lo <= region.hi[ax]))
    if grid.ndim == 2:
        return masks[0][:, None] & masks[1][None, :]
    return masks[0][:, None, None] & masks[1][None, :, None] & masks[2][None, None, :]


def extract_fiber(fld: ScalarField, t: float, region: Region | None = None,
                  grad: VectorField | None = None) -> FiberMesh:
    """Mesh the level set {θ = t} clipped to the open grid box.

    The level must lie strictly inside the field's value range.  If it
    coincides with a node value to within the nudge tolerance it is shifted
    upward by that tolerance and the mesh records the shift.  Gradient
    magnitudes are multilinear interpolations of the node gradient at the
    element barycenters.
    """
    vmin, vmax = fld.value_range
    if not vmin < t < vmax:
        raise ValueError(f"level {t} is not strictly inside the value range "
                         f"({vmin}, {vmax})")
    eps = LEVEL_NUDGE_REL * (vmax - vmin)
    nudged = bool(np.min(np.abs(fld.values - t)) < eps)
    t_used = t + eps if nudged else t

    if grad is None:
        grad = gradient(fld)
    gnorm_nodes = grad.norm()
    floor_grad = GRAD_FLOOR_REL * float(gnorm_nodes.max())

    if region is not None:
        region = region.clipped_to(fld.grid)
        cell_mask = _cells_touching_region(fld.grid, region)
    else:
        cell_mask = None

    if fld.grid.ndim == 2:
        seg, cell, key, slot = _march_squares(fld.values, t_used, fld.grid, cell_mask)
        if region is not None and len(seg):
            keep, seg_clipped = _clip_segments_to_box(seg, region.lo, region.hi)
            seg = seg_clipped[keep]
            cell = cell[keep]
            key = key[keep]
        measures = np.linalg.norm(seg[:, 1, :] - seg[:, 0, :], axis=1)
        positive = measures > 0.0
        seg, cell, key, measures = seg[positive], cell[positive], key[positive], measures[positive]
        bary = 0.5 * (seg[:, 0, :] + seg[:, 1, :])
        key_groups = [tuple(row) for row in key]
        labels = _label_from_keys(key_groups)
        segments = seg
    else:
        measures, bary, cell, slot, key_groups = _march_tets(
            fld.values, t_used, fld.grid, cell_mask, region)
        labels = _label_from_keys(key_groups)
        segments = None

    if len(measures):
        comps = np.stack([interpolate_values(fld.grid, c, bary)
                          for c in grad.components], axis=1)
        gnorm = np.linalg.norm(comps, axis=1)
    else:
        gnorm = np.empty(0)
        bary = np.empty((0, fld.grid.ndim))

    return FiberMesh(
        level=float(t_used),
        requested_level=float(t),
        nudged=nudged,
        measures=np.ascontiguousarray(measures),
        grad_norms=np.ascontiguousarray(gnorm),
        cell_indices=np.ascontiguousarray(cell),
        labels=np.ascontiguousarray(labels),
        barycenters=np.ascontiguousarray(bary),
        floor_grad=floor_grad,
        segments=segments,
    )


# ---------------------------------------------------------------------------
# per-level integrals
# ---------------------------------------------------------------------------

def _component_sums(mesh: FiberMesh, terms: np.ndarray) -> np.ndarray:
    """Per-component ordered sums.  Elements are already in ascending cell
    order, and np.add.at accumulates sequentially, so each subtotal and the
    grand total are reproducible bit for bit."""
    n = mesh.component_count
    sums = np.zeros(n)
    if n:
        np.add.at(sums, mesh.labels, terms)
    return sums


def fiber_size(mesh: FiberMesh) -> float:
    """Total measure of the fiber (0 for an empty mesh)."""
    return float(np.sum(_component_sums(mesh, mesh.measures)))


def energy_weight(mesh: FiberMesh, p: float) -> float:
    """Σ |∇θ|^(p-1) · measure over the mesh."""
    if p <= 1:
        raise ValueError("exponent p must exceed 1")
    terms = mesh.grad_norms ** (p - 1.0) * mesh.measures
    return float(np.sum(_component_sums(mesh, terms)))


def component_weights(mesh: FiberMesh, p: float) -> np.ndarray:
    """Energy weight per connected component; sums to
    ``energy_weight(mesh, p)`` exactly because the total is defined as the
    ordered sum of these subtotals."""
    if p <= 1:
        raise ValueError("exponent p must exceed 1")
    terms = mesh.grad_norms ** (p - 1.0) * mesh.measures
    return _component_sums(mesh, terms)


def pushforward_weight(mesh: FiberMesh) -> float:
    """Σ measure / |∇θ|, or +inf when any element sits at or below the
    gradient floor (the level pushforward degenerates there)."""
    if mesh.element_count == 0:
        return 0.0
    if np.any(mesh.grad_norms < mesh.floor_grad):
        return math.inf
    terms = mesh.measures / mesh.grad_norms
    return float(np.sum(_component_sums(mesh, terms)))


def fiber_mean_energy(mesh: FiberMesh, p: float) -> float:
    """Mean of |∇θ|^p against the fiber probability measure, i.e. the ratio
    A/w.  The decomposition A = w · ρ then holds by construction."""
    w = pushforward_weight(mesh)
    if not math.isfinite(w) or w <= 0.0:
        raise ValueError("fiber mean energy undefined: pushforward weight "
                         f"is {w}")
    return energy_weight(mesh, p) / w


# ---------------------------------------------------------------------------
# weight tables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WeightTable:
    """Rows (t, S, A, w) over a strictly increasing level grid."""

    p: float
    t: np.ndarray
    S: np.ndarray
    A: np.ndarray
    w: np.ndarray
    nudges: tuple = ()

    def __post_init__(self):
        t = np.asarray(self.t, dtype=np.float64)
        if t.ndim != 1 or len(t) < 2:
            raise ValueError("weight table needs at least two levels")
        if not np.all(np.diff(t) > 0):
            raise ValueError("levels must be strictly increasing")
        for name in ("S", "A", "w"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.shape != t.shape:
                raise ValueError(f"column {name} has wrong length")
            object.__setattr__(self, name, _read_only(arr))
        if self.p <= 1:
            raise ValueError("exponent p must exceed 1")
        if np.any(self.S < 0) or np.any(self.A < 0):
            raise ValueError("S and A must be nonnegative")
        if not np.all(np.isfinite(self.A)):
            raise ValueError("A must be finite rowwise")
        object.__setattr__(self, "t", _read_only(t))

    def __len__(self) -> int:
        return len(self.t)

    @property
    def span(self) -> tuple[float, float]:
        return float(self.t[0]), float(self.t[-1])


def _read_only(a: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(a, dtype=np.float64)
    out.flags.writeable = False
    return out


def weight_table(fld: ScalarField, p: float, levels: Sequence[float],
                 region: Region | None = None) -> WeightTable:
    """Tabulate S, A, w at each level (ascending, strictly inside the value
    range).  Rowwise the sandwich min|∇θ|^(p-1)·S <= A <= max|∇θ|^(p-1)·S is
    verified as a consistency guard."""
    lv = np.asarray(levels, dtype=np.float64)
    if lv.ndim != 1 or len(lv) < 2:
        raise ValueError("need at least two levels")
    if not np.all(np.diff(lv) > 0):
        raise ValueError("levels must be strictly increasing")
    grad = gradient(fld)
    S = np.empty(len(lv))
    A = np.empty(len(lv))
    w = np.empty(len(lv))
    nudges = []
    for k, t in enumerate(lv):
        mesh = extract_fiber(fld, float(t), region=region, grad=grad)
        if mesh.nudged:
            nudges.append((k, float(t), mesh.level))
        S[k] = fiber_size(mesh)
        A[k] = energy_weight(mesh, p)
        w[k] = pushforward_weight(mesh)
        if mesh.element_count:
            g_lo = float(mesh.grad_norms.min()) ** (p - 1.0)
            g_hi = float(mesh.grad_norms.max()) ** (p - 1.0)
            slack = 1e-9 * max(1.0, A[k])
            if not (g_lo * S[k] <= A[k] + slack and A[k] <= g_hi * S[k] + slack):
                raise AssertionError(
                    f"weight sandwich violated at level {t}: "
                    f"{g_lo * S[k]} <= {A[k]} <= {g_hi * S[k]}")
    return WeightTable(p=float(p), t=lv, S=S, A=A, w=w, nudges=tuple(nudges))


@dataclass(frozen=True)
class CoareaCheck:
    volume_side: float
    level_side: float
    residual: float


def coarea_check(fld: ScalarField, p: float,
                 probe: Callable[[np.ndarray], np.ndarray],
                 levels: Sequence[float] | None = None) -> CoareaCheck:
    """Compare the box quadrature of |probe(θ)|^p |∇θ|^p with the level
    quadrature of |probe(t)|^p A(t).

    The two agree in the limit by the coarea formula; the residual is the
    relative mismatch at the given resolutions.  The default level grid is
    512 uniform levels pulled a hair inside the value range.
    """
    g = fld.grid
    if levels is None:
        vmin, vmax = fld.value_range
        margin = 2e-9 * (vmax - vmin)
        levels = np.linspace(vmin + margin, vmax - margin, 512)
    gnorm = gradient(fld).norm()
    integrand = np.abs(probe(fld.values)) ** p * gnorm ** p
    weights = 1.0
    for ax in range(g.ndim):
        wax = np.full(g.dims[ax], g.spacing[ax])
        wax[0] *= 0.5
        wax[-1] *= 0.5
        shape = [1] * g.ndim
        shape[ax] = g.dims[ax]
        weights = weights * wax.reshape(shape)
    volume_side = float(np.sum(integrand * weights))

    table = weight_table(fld, p, levels)
    fvals = np.abs(probe(table.t)) ** p * table.A
    level_side = float(np.trapezoid(fvals, table.t))
    denom = max(abs(volume_side), abs(level_side), 1e-300)
    return CoareaCheck(volume_side, level_side, abs(volume_side - level_side) / denom)


# ---------------------------------------------------------------------------
# delimited table i/o
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return repr(float(x))


def save_weight_csv(table: WeightTable, path_or_handle) -> None:
    """CSV with header ``t,S,A,w``; infinities spelled ``inf``."""
    lines = ["t,S,A,w"]
    for k in range(len(table)):
        lines.append(",".join(_fmt(v) for v in
                              (table.t[k], table.S[k], table.A[k], table.w[k])))
    text = "\n".join(lines) + "\n"
    if hasattr(path_or_handle, "write"):
        path_or_handle.write(text)
    else:
        with open(path_or_handle, "w", encoding="ascii") as fh:
            fh.write(text)


def load_weight_csv(path: str, p: float) -> WeightTable:
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln for ln in fh.read().split("\n") if ln.strip()]
    if not lines or lines[0].strip() != "t,S,A,w":
        raise ValueError("weight table file must start with header t,S,A,w")
    rows = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != 4:
            raise ValueError(f"malformed weight table row: {ln!r}")
        rows.append([float(s) for s in parts])
    arr = np.array(rows, dtype=np.float64)
    return WeightTable(p=float(p), t=arr[:, 0], S=arr[:, 1], A=arr[:, 2], w=arr[:, 3])
