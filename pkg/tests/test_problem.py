import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from inverseset import diffmap as dm
from inverseset.errors import BandOutsideLogisticRange, DegenerateBand, DimensionMismatch
from inverseset.problem import (PAPER_ONE_SIDED, STRICT_TWO_SIDED, ActivationBand,
                                ConstraintSpec, InverseSetProblem,
                                analytic_inverse_set_linear_logistic, band_new, feasible_mask,
                                is_feasible)

from conftest import simple_problem


def test_band_widths():
    b = band_new(50, 60)
    assert (b.epsilon, b.epsilon0) == (10.0, 5.0)
    b = band_new(0, 1)
    assert (b.epsilon, b.epsilon0) == (1.0, 0.5)


def test_degenerate_band():
    with pytest.raises(DegenerateBand):
        band_new(5, 5)
    with pytest.raises(DegenerateBand):
        band_new(6, 5)


@pytest.mark.parametrize("act, one_sided, strict", [(55, True, True), (61, True, False),
                                                     (49, False, False)])
def test_feasibility_modes(act, one_sided, strict):
    bands = (band_new(50, 60),)
    assert feasible_mask([[act]], bands, PAPER_ONE_SIDED)[0, 0] == one_sided
    assert feasible_mask([[act]], bands, STRICT_TWO_SIDED)[0, 0] == strict


@given(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3), st.floats(1e-3, 1e3))
def test_strict_implies_one_sided(a, z1, width):
    bands = (band_new(z1, z1 + width),)
    if feasible_mask([[a]], bands, STRICT_TWO_SIDED)[0, 0]:
        assert feasible_mask([[a]], bands, PAPER_ONE_SIDED)[0, 0]


def test_is_feasible_verdict():
    P = simple_problem(dm.Quadratic(np.eye(2)), 1.0, 4.0)
    v = is_feasible(P, np.array([1.0, 1.0]))
    assert v.all_feasible and v.per_constraint == (True,) and v.activations == (2.0,)
    assert not is_feasible(P, np.array([0.1, 0.1])).all_feasible
    with pytest.raises(DimensionMismatch):
        is_feasible(P, np.array([1.0, 1.0, 1.0]))


def test_problem_dimension_checks():
    I2 = dm.Identity(2)
    with pytest.raises(DimensionMismatch):
        InverseSetProblem(I2, dm.Identity(3), [ConstraintSpec(dm.Quadratic(np.eye(2)),
                                                              band_new(0, 1))])
    with pytest.raises(DimensionMismatch):
        ConstraintSpec(I2, band_new(0, 1))


def test_fingerprint_tracks_bands_and_mode():
    f = dm.Quadratic(np.eye(2))
    a = simple_problem(f, 1.0, 4.0)
    assert a.fingerprint() == simple_problem(f, 1.0, 4.0).fingerprint()
    assert a.fingerprint() != simple_problem(f, 1.0, 5.0).fingerprint()
    assert a.fingerprint() != a.with_mode(STRICT_TWO_SIDED).fingerprint()


def test_analytic_half_space_unit_normal():
    s = analytic_inverse_set_linear_logistic([1.0, 0.0], 0.0, band_new(0.5, 1.0))
    assert s.lower_offset == 0.0 and np.isinf(s.upper_offset)
    assert s.contains(np.array([0.0, 0.5]))
    assert not s.contains(np.array([-0.01, 0.5]))
    assert not s.contains(np.array([0.5, 1.2]))


def test_analytic_diagonal_half_space():
    s = analytic_inverse_set_linear_logistic([1.0, 1.0], 0.0, band_new(0.7310585786, 1.0))
    assert s.lower_offset == pytest.approx(1.0, abs=1e-9)
    assert s.contains(np.array([0.6, 0.6])) and not s.contains(np.array([0.4, 0.5]))


def test_analytic_band_outside_range():
    with pytest.raises(BandOutsideLogisticRange):
        analytic_inverse_set_linear_logistic([1.0, 0.0], 0.0, band_new(0.0, 1.0))


def test_analytic_matches_logistic_predicate(rng):
    w, c = np.array([4.0, 4.0]), -4.0
    band = ActivationBand(0.5, 0.9)
    s = analytic_inverse_set_linear_logistic(w, c, band)
    X = rng.uniform(0, 1, size=(2000, 2))
    P = simple_problem(dm.LinearLogistic(w, c), band.z1, band.z2, mode=STRICT_TWO_SIDED)
    # away from the faces the two descriptions must agree
    keep = s.boundary_distance(X) > 1e-9
    np.testing.assert_array_equal(s.contains(X)[keep], P.feasible(X)[keep])
