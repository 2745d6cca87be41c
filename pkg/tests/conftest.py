import numpy as np
import pytest

from inverseset import diffmap as dm
from inverseset.config import fixture_config, load_config
from inverseset.problem import ActivationBand, ConstraintSpec, InverseSetProblem

FIXTURES = ("linear_logistic", "annulus", "mlp", "intersection")


def fixture_run(name):
    """(config, problem) for one of the shipped fixture configs."""
    cfg = load_config(fixture_config(name))
    return cfg, cfg.build_problem()


def simple_problem(f, z1, z2, dim=2, mode="paper_one_sided"):
    I = dm.Identity(dim)
    return InverseSetProblem(I, I, [ConstraintSpec(f, ActivationBand(z1, z2))], mode)


def central_diff(fun, X, h=1e-5):
    """Central-difference gradient of a scalar function of an array."""
    X = np.asarray(X, dtype=np.float64)
    g = np.zeros_like(X)
    for idx in np.ndindex(X.shape):
        Xp = X.copy()
        Xm = X.copy()
        Xp[idx] += h
        Xm[idx] -= h
        g[idx] = (fun(Xp) - fun(Xm)) / (2 * h)
    return g


def max_rel_error(a, n):
    a, n = np.asarray(a), np.asarray(n)
    return float(np.max(np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-12)))


@pytest.fixture(scope="session")
def annulus():
    return fixture_run("annulus")


@pytest.fixture(scope="session")
def mlp():
    return fixture_run("mlp")


@pytest.fixture(scope="session")
def linear_logistic():
    return fixture_run("linear_logistic")


@pytest.fixture(scope="session")
def intersection():
    return fixture_run("intersection")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
