import numpy as np
import pytest
from hypothesis import settings

from xvem.discretization import Discretization
from xvem.enrichment import EnrichmentPlan, fracture_singularity, lshape_singularity_topright
from xvem.mesh import build_cartesian_fractured_mesh, build_cartesian_lshape_mesh, build_hexagonal_lshape_mesh

settings.register_profile("repo", max_examples=25, deadline=None, derandomize=True)
settings.load_profile("repo")


@pytest.fixture
def rng():
    return np.random.default_rng(20240531)


@pytest.fixture(scope="session")
def fracture8():
    return build_cartesian_fractured_mesh(8)


@pytest.fixture(scope="session")
def fracture4():
    return build_cartesian_fractured_mesh(4)


@pytest.fixture(scope="session")
def lshape_br4():
    return build_cartesian_lshape_mesh(4, "br")


@pytest.fixture(scope="session")
def hex2():
    return build_hexagonal_lshape_mesh(2, "tr")


@pytest.fixture(scope="session")
def frac_space():
    return fracture_singularity()


@pytest.fixture(scope="session")
def tr_space():
    return lshape_singularity_topright()


@pytest.fixture(scope="session")
def disc_factory():
    cache = {}

    def make(mesh, k, space=None, mode="none", gamma=None):
        key = (id(mesh), k, id(space), mode, gamma)
        if key not in cache:
            plan = EnrichmentPlan(mode, gamma if mode == "local" else None)
            cache[key] = Discretization(mesh, k, space, plan)
        return cache[key]

    return make
