import io
import math

import numpy as np
import pytest

from phasecap import (
    Grid,
    PhaseModel,
    Region,
    ScalarField,
    coarea_check,
    component_weights,
    energy_weight,
    extract_fiber,
    fiber_mean_energy,
    fiber_size,
    gradient,
    load_weight_csv,
    pushforward_weight,
    sample_phase,
    save_weight_csv,
    weight_table,
)
from phasecap.fiber import WeightTable


def test_planar_fiber_exact(planar_field):
    mesh = extract_fiber(planar_field, 0.37)
    assert mesh.element_count > 0
    assert fiber_size(mesh) == pytest.approx(1.0, rel=1e-12)
    assert energy_weight(mesh, 2.0) == pytest.approx(1.0, rel=1e-12)
    assert pushforward_weight(mesh) == pytest.approx(1.0, rel=1e-12)
    assert fiber_mean_energy(mesh, 2.0) == pytest.approx(1.0, rel=1e-12)
    assert mesh.component_count == 1


def test_circle_fiber_size(radial_field):
    for r in (1.0, 1.7, 2.4):
        mesh = extract_fiber(radial_field, r)
        assert fiber_size(mesh) == pytest.approx(2.0 * math.pi * r, rel=2e-3)
        assert mesh.component_count == 1
        # unit gradient: the two weights coincide at p = 2 up to the
        # interpolation wiggle of |grad| near the sampled circle
        assert energy_weight(mesh, 2.0) == pytest.approx(
            pushforward_weight(mesh), rel=5e-3)


def test_monomial_fiber_has_two_components(monomial_field):
    mesh = extract_fiber(monomial_field, 0.16)
    assert mesh.component_count == 2
    comps = component_weights(mesh, 2.0)
    assert len(comps) == 2
    # x -> -x symmetry: the two branches carry equal weight
    assert comps[0] == pytest.approx(comps[1], rel=1e-12)
    assert math.fsum(comps) == pytest.approx(energy_weight(mesh, 2.0), abs=1e-15)


def test_region_restricts_extraction(monomial_field):
    full = extract_fiber(monomial_field, 0.16)
    half = extract_fiber(monomial_field, 0.16, region=Region((0.0, 0.0), (1.0, 1.0)))
    assert half.component_count == 1
    assert fiber_size(half) == pytest.approx(fiber_size(full) / 2.0, rel=1e-12)


def test_level_on_node_value_is_nudged(planar_field):
    # 0.5 is a node coordinate, hence a node value of the planar phase
    assert 0.5 in planar_field.grid.axis_coords(0)
    mesh = extract_fiber(planar_field, 0.5)
    assert mesh.nudged
    assert mesh.requested_level == 0.5
    assert mesh.level != 0.5
    assert fiber_size(mesh) == pytest.approx(1.0, rel=1e-9)


def test_level_outside_range_rejected(planar_field):
    with pytest.raises(ValueError):
        extract_fiber(planar_field, -0.25)
    with pytest.raises(ValueError):
        extract_fiber(planar_field, 2.0)


def test_saddle_cells_split_consistently():
    # checkerboard: every cell of the 3x3 grid is a saddle at level 0.5
    g = Grid.from_extent((3, 3), (0.0, 0.0), (1.0, 1.0))
    checker = np.indices((3, 3)).sum(axis=0) % 2
    for vals in (checker.astype(float), 1.0 - checker):
        fld = ScalarField(g, vals)
        mesh = extract_fiber(fld, 0.5)
        assert mesh.element_count == 8
        assert np.all(mesh.measures > 0.0)


def test_weight_table_rows_and_nudges(planar_field):
    levels = np.linspace(0.1, 0.9, 33)
    tab = weight_table(planar_field, 2.0, levels)
    assert len(tab.t) == 33
    assert np.allclose(tab.A, 1.0)
    assert np.allclose(tab.S, 1.0)
    assert tab.span == (0.1, 0.9)
    # every level hit a node value on this aligned grid's x-coordinates
    nudged_levels = {k for k, _, _ in tab.nudges}
    for k, requested, used in tab.nudges:
        assert requested == levels[k]
        assert used != requested
    assert nudged_levels <= set(range(33))


def test_weight_table_determinism(radial_field):
    lv = np.linspace(1.0, 2.5, 17)
    t1 = weight_table(radial_field, 2.0, lv)
    t2 = weight_table(radial_field, 2.0, lv)
    for a, b in ((t1.S, t2.S), (t1.A, t2.A), (t1.w, t2.w)):
        assert np.array_equal(a, b)


def test_weight_table_monotone_level_validation(planar_field):
    with pytest.raises(ValueError):
        weight_table(planar_field, 2.0, [0.5, 0.5, 0.6])
    with pytest.raises(ValueError):
        weight_table(planar_field, 2.0, [0.5])


def test_three_dimensional_sphere_weights():
    g = Grid.from_extent((49, 49, 49), (-2.4, -2.4, -2.4), (2.4, 2.4, 2.4))
    fld = sample_phase(PhaseModel.radial((0.0, 0.0, 0.0)), g)
    mesh = extract_fiber(fld, 1.5)
    area = 4.0 * math.pi * 1.5 ** 2
    assert fiber_size(mesh) == pytest.approx(area, rel=5e-3)
    assert energy_weight(mesh, 2.0) == pytest.approx(area, rel=5e-3)
    assert mesh.component_count == 1
    # half-space region keeps half the sphere
    half = extract_fiber(fld, 1.5, region=Region((-2.4, -2.4, 0.0),
                                                 (2.4, 2.4, 2.4)))
    assert fiber_size(half) == pytest.approx(area / 2.0, rel=1e-2)


def test_coarea_identity_planar(planar_field):
    chk = coarea_check(planar_field, 2.0, lambda t: np.ones_like(t))
    assert chk.volume_side == pytest.approx(1.5, rel=1e-9)
    assert chk.residual < 1e-8


def test_coarea_identity_weighted_probe(radial_field):
    chk = coarea_check(radial_field, 2.0, lambda t: np.cos(t))
    assert chk.residual < 5e-4


def test_weight_csv_round_trip(tmp_path):
    t = np.linspace(0.1, 0.9, 9)
    w = np.ones_like(t)
    w[4] = math.inf
    tab = WeightTable(p=2.5, t=t, S=np.full_like(t, 0.5), A=t ** 2, w=w)
    path = tmp_path / "table.csv"
    save_weight_csv(tab, str(path))
    text = path.read_text()
    assert text.splitlines()[0] == "t,S,A,w"
    assert ",inf" in text
    back = load_weight_csv(str(path), 2.5)
    assert np.array_equal(back.t, tab.t)
    assert np.array_equal(back.A, tab.A)
    assert np.array_equal(back.w, tab.w)


def test_weight_csv_handle_output():
    t = np.linspace(0.0, 1.0, 3)
    tab = WeightTable(p=2.0, t=t, S=np.ones_like(t), A=np.ones_like(t),
                      w=np.ones_like(t))
    buf = io.StringIO()
    save_weight_csv(tab, buf)
    assert buf.getvalue().startswith("t,S,A,w\n")


def test_weight_table_validation():
    t = np.linspace(0.0, 1.0, 5)
    ones = np.ones_like(t)
    with pytest.raises(ValueError):
        WeightTable(p=1.0, t=t, S=ones, A=ones, w=ones)
    with pytest.raises(ValueError):
        WeightTable(p=2.0, t=t[::-1].copy(), S=ones, A=ones, w=ones)
    with pytest.raises(ValueError):
        WeightTable(p=2.0, t=t, S=ones, A=-ones, w=ones)
    with pytest.raises(ValueError):
        WeightTable(p=2.0, t=t, S=ones, A=np.full_like(t, math.inf), w=ones)


def test_gradient_interpolation_on_fiber(monomial_field):
    # the interpolated gradient of |x|^2 at level t is close to 2 sqrt(t)
    mesh = extract_fiber(monomial_field, 0.25)
    expect = 2.0 * math.sqrt(0.25)
    assert np.allclose(mesh.grad_norms, expect, rtol=5e-3)


def test_fiber_mean_energy_guards():
    g = Grid.from_extent((5, 5), (0.0, 0.0), (1.0, 1.0))
    fld = sample_phase(PhaseModel.planar(0), g)
    grad = gradient(fld)
    mesh = extract_fiber(fld, 0.51, grad=grad)
    assert fiber_mean_energy(mesh, 2.0) == pytest.approx(1.0)
