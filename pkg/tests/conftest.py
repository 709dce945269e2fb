"""Shared fixtures: the default catalog and cached energy profiles.

Profiles at 50 radii are the expensive objects in this suite; they are
computed once per mapping per session and shared by the integral, regularity
and acceptance tests.
"""
import numpy as np
import pytest

from qrlab import catalog_lookup, energy_profile

SEED = 7

CATALOG_PARAMS = {
    "identity": {},
    "translate": {"b1": 0.2, "b2": -0.1},
    "linear": {"a11": 2.0, "a12": 0.5, "a21": 0.0, "a22": 1.0},
    "radial_stretch": {"alpha": 0.5},
    "winding": {"k": 2},
    "rank_deficient": {},
}


def build_mapping(name):
    return catalog_lookup(name, CATALOG_PARAMS[name])


@pytest.fixture(scope="session")
def catalog_maps():
    return {name: build_mapping(name) for name in CATALOG_PARAMS}


@pytest.fixture(scope="session")
def profile_for(catalog_maps):
    """profile_for(name, radii_count=50) -> (mapping, profile), memoized."""
    cache = {}

    def get(name, radii_count=50):
        key = (name, radii_count)
        if key not in cache:
            mapping = catalog_maps[name]
            center = mapping.domain.centroid
            gap = mapping.domain.boundary_distance(center) / 2.0
            radii = np.geomspace(1e-3 * gap, (2.0 / 3.0) * gap * (1.0 - 1e-6), radii_count)
            cache[key] = (mapping, energy_profile(mapping, center, radii, seed=SEED))
        return cache[key]

    return get
