import numpy as np
import pytest

from contactlab.contact_diffeo import ContactDiffeo
from contactlab.grid import Grid
from contactlab.hodge import Hodge
from contactlab.model import ContactModel
from contactlab.rumin import RuminComplex


@pytest.fixture(scope="session")
def grid16():
    return Grid(16)


@pytest.fixture(scope="session")
def model16():
    return ContactModel(16)


@pytest.fixture(scope="session")
def model8():
    return ContactModel(8)


@pytest.fixture(scope="session")
def aniso8():
    return ContactModel(8, "anisotropic")


@pytest.fixture(scope="session")
def cx16(model16):
    return RuminComplex(model16)


@pytest.fixture(scope="session")
def hodge8(model8):
    return Hodge(model8)


@pytest.fixture(scope="session")
def hodge16(model16):
    return Hodge(model16)


@pytest.fixture(scope="session")
def diffeo16(hodge16):
    return ContactDiffeo(hodge16)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
