import math
import warnings

import pytest

from bsv_tpa.dispersion import coherent_grid
from bsv_tpa.pdc import CrystalParams, GatedPulseParams, ValidityWarning, width_low
from bsv_tpa.tpa import GM, MoleculeParams

OMEGA0 = 2 * math.pi * 299792458.0 / 532e-9
KAPPA = 2.5e-26
Z = 0.01


def make_crystal(gamma_z=1e-4, xi=1, z=Z, kappa=KAPPA, omega0=OMEGA0):
    return CrystalParams(omega0, gamma_z / z, z, kappa, xi)


@pytest.fixture(autouse=True)
def _quiet_validity():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ValidityWarning)
        yield


@pytest.fixture(scope="session")
def crystal():
    return make_crystal()


@pytest.fixture(scope="session")
def w(crystal):
    return width_low(crystal)


@pytest.fixture(scope="session")
def grid(crystal):
    return coherent_grid(crystal)


@pytest.fixture(scope="session")
def molecule():
    return MoleculeParams(9 * GM, 1e12, 2 * OMEGA0, math.pi * (10e-6) ** 2)


@pytest.fixture(scope="session")
def gate():
    return GatedPulseParams(4.67e-12)
