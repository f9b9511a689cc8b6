import io
import json
import math

import numpy as np
import pytest

from phasecap import (
    CapacityReport,
    ComparisonViolationError,
    ConstraintSet,
    Grid,
    MinimizeOptions,
    Profile,
    ScalarField,
    cell_energy,
    cell_gradient,
    compare_bound,
    compose_profile,
    fibered_energy,
    p_capacity,
    polarization_gap,
    sample_phase,
    save_capacity_json,
    spherical_average,
    tangential_decompose,
    transverse_average,
)
from phasecap.field import PhaseModel


def unit_square(n=17, m=17):
    return Grid.from_extent((n, m), (0.0, 0.0), (1.0, 1.0))


def coords(grid):
    axes = [grid.axis_coords(ax) for ax in range(grid.ndim)]
    return np.meshgrid(*axes, indexing="ij")


def test_cell_gradient_exact_on_affine_2d():
    grid = unit_square(9, 13)
    X, Y = coords(grid)
    gx, gy = cell_gradient(2.0 * X + 3.0 * Y, grid)
    assert gx.shape == (8, 12)
    assert np.allclose(gx, 2.0, atol=1e-13)
    assert np.allclose(gy, 3.0, atol=1e-13)


def test_cell_gradient_exact_on_affine_3d():
    grid = Grid.from_extent((5, 7, 9), (0.0, 0.0, 0.0), (1.0, 2.0, 1.0))
    X, Y, Z = coords(grid)
    gx, gy, gz = cell_gradient(X + 2.0 * Y - Z, grid)
    assert gx.shape == (4, 6, 8)
    assert np.allclose(gx, 1.0, atol=1e-13)
    assert np.allclose(gy, 2.0, atol=1e-13)
    assert np.allclose(gz, -1.0, atol=1e-13)


def test_cell_energy_of_unit_ramp():
    grid = unit_square(33, 9)
    X, _ = coords(grid)
    for p in (1.5, 2.0, 3.0):
        assert cell_energy(X, grid, p) == pytest.approx(1.0, rel=1e-13)
    # regularization only ever increases the energy
    assert cell_energy(X, grid, 2.0, eps_reg=1e-2) > 1.0


def test_constraint_set_validation():
    z = np.zeros((4, 4), dtype=bool)
    o = np.zeros((4, 4), dtype=bool)
    z[0, :] = True
    o[-1, :] = True
    cs = ConstraintSet(zero_mask=z, one_mask=o)
    assert cs.fixed.sum() == 8
    with pytest.raises(ValueError):
        ConstraintSet(zero_mask=z, one_mask=np.zeros((4, 5), dtype=bool))
    with pytest.raises(ValueError):
        ConstraintSet(zero_mask=z, one_mask=np.zeros_like(o))
    with pytest.raises(ValueError):
        ConstraintSet(zero_mask=z, one_mask=z)


def test_constraint_set_from_levels(planar_field):
    cs = ConstraintSet.from_levels(planar_field, 0.0, 1.0)
    assert np.array_equal(cs.zero_mask, planar_field.values <= 0.0)
    assert np.array_equal(cs.one_mask, planar_field.values >= 1.0)
    capped = ConstraintSet.from_levels(planar_field, 0.0, 1.0, outer=1.1)
    assert capped.one_mask.sum() < cs.one_mask.sum()


def test_minimize_options_defaults():
    assert MinimizeOptions(p=1.5).effective_eps == 1e-8
    assert MinimizeOptions(p=2.0).effective_eps == 0.0
    assert MinimizeOptions(p=3.0, eps_reg=1e-6).effective_eps == 1e-6
    with pytest.raises(ValueError):
        MinimizeOptions(p=1.0)
    with pytest.raises(ValueError):
        MinimizeOptions(p=2.0, tol_rel=0.0)
    with pytest.raises(ValueError):
        MinimizeOptions(p=2.0, max_iter=0)
    with pytest.raises(ValueError):
        MinimizeOptions(p=2.0, eps_reg=-1.0)


def test_planar_capacity_matches_plate_separation():
    # plates at x <= 0 and x >= 1 on nodes spaced 1.5/32: the discrete
    # separation is slightly above 1 and fixes the exact answer
    grid = Grid.from_extent((33, 9), (-0.25, 0.0), (1.25, 1.0))
    fld = sample_phase(PhaseModel(kind="planar"), grid)
    cs = ConstraintSet.from_levels(fld, 0.0, 1.0)
    x = grid.axis_coords(0)
    sep = x[x >= 1.0].min() - x[x <= 0.0].max()
    for p in (1.5, 2.0, 3.0):
        rep = p_capacity(grid, cs, MinimizeOptions(p=p),
                         phase=fld, levels=(0.0, 1.0))
        assert rep.converged
        assert rep.capacity_full == pytest.approx(sep ** (1.0 - p), rel=1e-7)
        vals = rep.minimizer.values
        assert np.all(vals[cs.zero_mask] == 0.0)
        assert np.all(vals[cs.one_mask] == 1.0)
        assert vals.min() >= 0.0 and vals.max() <= 1.0


def test_all_nodes_fixed_short_circuits():
    grid = unit_square(5, 5)
    z = np.zeros((5, 5), dtype=bool)
    z[:3] = True
    o = ~z
    rep = p_capacity(grid, ConstraintSet(zero_mask=z, one_mask=o),
                     MinimizeOptions(p=2.0))
    assert rep.iterations == 0
    assert rep.converged
    assert rep.capacity_full > 0.0


def test_iteration_budget_reports_nonconvergence():
    grid = Grid.from_extent((33, 33), (-0.25, 0.0), (1.25, 1.0))
    fld = sample_phase(PhaseModel(kind="planar"), grid)
    cs = ConstraintSet.from_levels(fld, 0.0, 1.0)
    rep = p_capacity(grid, cs, MinimizeOptions(p=2.0, max_iter=2))
    assert not rep.converged
    assert rep.iterations == 2


def test_constraint_grid_mismatch_rejected():
    grid = unit_square(5, 5)
    z = np.zeros((6, 6), dtype=bool)
    z[0] = True
    o = np.zeros((6, 6), dtype=bool)
    o[-1] = True
    with pytest.raises(ValueError):
        p_capacity(grid, ConstraintSet(zero_mask=z, one_mask=o),
                   MinimizeOptions(p=2.0))


def test_compose_profile_extends_by_truncation(planar_field):
    prof = Profile(t=np.array([0.2, 0.5, 0.8]), v=np.array([0.0, 0.5, 1.0]))
    u = compose_profile(planar_field, prof)
    assert u.values.min() == 0.0
    assert u.values.max() == 1.0
    assert np.all(u.values[planar_field.values <= 0.2] == 0.0)
    assert np.all(u.values[planar_field.values >= 0.8] == 1.0)


def test_fibered_energy_planar_identity(planar_field):
    # window ends on node coordinates so the composed ramp kinks on nodes
    # and every cell sees one linear piece
    assert 0.125 in planar_field.grid.axis_coords(0)
    t = np.linspace(0.125, 0.875, 257)
    prof = Profile(t=t, v=(t - 0.125) / 0.75)
    for p in (2.0, 3.0):
        fe = fibered_energy(planar_field, prof, p)
        assert fe.grid_energy == pytest.approx(0.75 ** (1.0 - p), rel=1e-12)
        assert fe.residual < 1e-10


def test_compare_bound_holds_on_planar(planar_field):
    rep = compare_bound(planar_field, 0.0, 1.0, MinimizeOptions(p=2.0),
                        levels=128)
    assert rep.bound_ok
    assert rep.gap >= 0.0
    assert rep.capacity_full <= rep.capacity_reduced + 1e-6
    assert rep.capacity_reduced == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(ValueError):
        compare_bound(planar_field, 0.0, 1.0, MinimizeOptions(p=2.0),
                      levels=1)


def test_comparison_violation_carries_numbers():
    err = ComparisonViolationError(2.0, 1.0, 1e-6)
    assert err.full == 2.0
    assert err.reduced == 1.0
    assert err.tol == 1e-6
    assert isinstance(err, AssertionError)
    assert "2.0" in str(err)


def test_transverse_average_planar(planar_field):
    prof = transverse_average(planar_field, 0)
    x = planar_field.grid.axis_coords(0)
    assert prof.shape == x.shape
    assert np.allclose(prof, x, atol=1e-13)
    with pytest.raises(ValueError):
        transverse_average(planar_field, 2)


def test_spherical_average_radial(radial_field):
    radii = np.array([1.2, 1.8, 2.4])
    means = spherical_average(radial_field, (0.0, 0.0), radii)
    assert means == pytest.approx(radii, rel=5e-3)
    with pytest.raises(ValueError):
        spherical_average(radial_field, (0.0, 0.0), [5.0])


def test_tangential_split_vanishes_for_aligned_fields(planar_field):
    prof_t = np.linspace(0.0, 1.0, 65)
    u = compose_profile(planar_field, Profile(t=prof_t, v=prof_t ** 2))
    split = tangential_decompose(u, planar_field)
    assert split.tangential_energy <= 1e-20
    assert split.normal_energy > 0.0
    assert split.skipped_measure == 0.0
    assert split.total == pytest.approx(split.normal_energy)


def test_tangential_split_skips_flat_phase():
    grid = unit_square(9, 9)
    theta = ScalarField(grid, np.full((9, 9), 0.3))
    X, _ = coords(grid)
    split = tangential_decompose(ScalarField(grid, X), theta)
    assert split.normal_energy == 0.0
    assert split.tangential_energy == 0.0
    assert split.skipped_measure == pytest.approx(1.0, rel=1e-12)


def test_polarization_identity_planar():
    grid = Grid.from_extent((33, 17), (-0.25, 0.0), (1.25, 1.0))
    fld = sample_phase(PhaseModel(kind="planar"), grid)
    cs = ConstraintSet.from_levels(fld, 0.0, 1.0)
    star = p_capacity(grid, cs, MinimizeOptions(p=2.0),
                      phase=fld, levels=(0.0, 1.0))
    # an admissible perturbation that respects both plates
    bump = np.sin(np.pi * np.clip(fld.values, 0.0, 1.0)) ** 2
    u_f = ScalarField(grid, np.clip(star.minimizer.values + 0.1 * bump,
                                    0.0, 1.0))
    gap = polarization_gap(u_f, star.minimizer, cs)
    assert gap.difference >= -1e-12
    assert gap.residual < 1e-8


def test_polarization_rejects_constraint_breakers():
    grid = unit_square(9, 9)
    z = np.zeros((9, 9), dtype=bool)
    o = np.zeros((9, 9), dtype=bool)
    z[0] = True
    o[-1] = True
    cs = ConstraintSet(zero_mask=z, one_mask=o)
    X, _ = coords(grid)
    good = ScalarField(grid, X.copy())
    bad = ScalarField(grid, 0.5 * X)
    with pytest.raises(ValueError):
        polarization_gap(bad, good, cs)


def test_capacity_json_fields():
    grid = unit_square(5, 5)
    rep = CapacityReport(p=2.0, capacity_full=1.25, iterations=10,
                         converged=True, tol=1e-10, grid=grid.dims,
                         final_decrease=0.0,
                         minimizer=ScalarField(grid, np.zeros((5, 5))),
                         capacity_reduced=1.3, gap=0.05, bound_ok=True)
    buf = io.StringIO()
    save_capacity_json(rep, buf)
    payload = json.loads(buf.getvalue())
    assert set(payload) == {"p", "capacity_full", "capacity_reduced", "gap",
                            "iterations", "converged", "tol", "grid",
                            "bound_ok"}
    assert payload["grid"] == [5, 5]
    assert payload["bound_ok"] is True
