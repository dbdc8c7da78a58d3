"""Shared fixtures: built densities and flow runs are cached per session
because construction dominates test runtime."""

import pytest

from epi_lab import FamilySpec, build_density, run_cepi_flow

_DENSITY_CACHE = {}
_FLOW_CACHE = {}


def make_gaussian(r, vX=1.0, vY=1.0, meanX=0.0, meanY=0.0, grid=None):
    key = ("bivariate-gaussian", r, vX, vY, meanX, meanY, grid)
    if key not in _DENSITY_CACHE:
        spec = FamilySpec(
            "bivariate-gaussian",
            {"r": r, "vX": vX, "vY": vY, "meanX": meanX, "meanY": meanY},
            grid,
        )
        _DENSITY_CACHE[key] = build_density(spec)
    return _DENSITY_CACHE[key]


def make_quartic(b, standardize=0.0):
    key = ("quartic-fkg", b, standardize)
    if key not in _DENSITY_CACHE:
        _DENSITY_CACHE[key] = build_density(
            FamilySpec("quartic-fkg", {"b": b, "standardize": standardize})
        )
    return _DENSITY_CACHE[key]


def make_mixture(**params):
    key = ("gaussian-mixture",) + tuple(sorted(params.items()))
    if key not in _DENSITY_CACHE:
        _DENSITY_CACHE[key] = build_density(FamilySpec("gaussian-mixture", params))
    return _DENSITY_CACHE[key]


def flow_for(family, param, t_max=0.6, steps=96, stop=100.0):
    """Cached conditional-EPI flow run for (family, parameter)."""
    key = (family, param, t_max, steps, stop)
    if key not in _FLOW_CACHE:
        if family == "bivariate-gaussian":
            joint = make_gaussian(param)
        else:
            joint = make_quartic(param)
        _FLOW_CACHE[key] = run_cepi_flow(
            joint, t_max, steps, stop_noise_multiple=stop
        )
    return _FLOW_CACHE[key]


@pytest.fixture(scope="session")
def gaussian_half():
    return make_gaussian(0.5)


@pytest.fixture(scope="session")
def gaussian_neg_half():
    return make_gaussian(-0.5)


@pytest.fixture(scope="session")
def gaussian_product():
    return make_gaussian(0.0)


@pytest.fixture(scope="session")
def quartic_half():
    return make_quartic(0.5)


@pytest.fixture(scope="session")
def mixture_product():
    # bimodal in x, standard normal in y, independent
    return make_mixture(d=1.5, e=0.0)


@pytest.fixture(scope="session")
def mixture_dependent():
    return make_mixture(d=1.2, e=0.8)
