import math

import numpy as np
import pytest

from phasecap import Grid, PhaseModel, sample_phase, weight_table


@pytest.fixture(scope="session")
def planar_field():
    grid = Grid.from_extent((129, 65), (-0.25, 0.0), (1.25, 1.0))
    return sample_phase(PhaseModel.planar(axis=0), grid)


@pytest.fixture(scope="session")
def radial_field():
    grid = Grid.from_extent((129, 129), (-3.2, -3.2), (3.2, 3.2))
    return sample_phase(PhaseModel.radial((0.0, 0.0)), grid)


@pytest.fixture(scope="session")
def radial_field_fine():
    grid = Grid.from_extent((257, 257), (-3.2, -3.2), (3.2, 3.2))
    return sample_phase(PhaseModel.radial((0.0, 0.0)), grid)


@pytest.fixture(scope="session")
def monomial_field():
    grid = Grid.from_extent((129, 65), (-1.0, 0.0), (1.0, 1.0))
    return sample_phase(PhaseModel.monomial(2.0), grid)


@pytest.fixture(scope="session")
def monomial_field_fine():
    grid = Grid.from_extent((257, 129), (-1.0, 0.0), (1.0, 1.0))
    return sample_phase(PhaseModel.monomial(2.0), grid)


@pytest.fixture(scope="session")
def radial_table_2048(radial_field_fine):
    return weight_table(radial_field_fine, 2.0,
                        np.linspace(1.0, math.e, 2048))
