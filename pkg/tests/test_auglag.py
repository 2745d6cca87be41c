import numpy as np
import pytest

from inverseset import diffmap as dm
from inverseset.auglag import (AugLagSchedule, AugLagState, apply_symmetry_jitter,
                               diversity_objective, find_seeds, lagrangian_terms,
                               lagrangian_value_and_grad, multiplier_update, penalty_update,
                               slack_closed_form, slack_update)
from inverseset.errors import MaxOuterIterationsExceeded
from inverseset.problem import band_new

from conftest import central_diff, max_rel_error, simple_problem

BAND = band_new(50, 60)


def scalar_problem():
    """f(c) = c on 1-D codes: activations equal the codes themselves."""
    return simple_problem(dm.Identity(1), 50.0, 60.0, dim=1)


def state(f, lam=0.0, mu=10.0, slack=0.0):
    return AugLagState(np.array([[f]], dtype=float), np.array([[slack]]), np.array([[lam]]), mu)


# diversity

def test_diversity_single_code_is_zero():
    P = simple_problem(dm.Quadratic(np.eye(2)), 1, 4)
    v, g = diversity_objective(np.array([[0.3, 0.2]]), P)
    assert v == 0.0 and not g.any()


def test_diversity_ordered_pairs():
    P = simple_problem(dm.Quadratic(np.eye(2)), 1, 4)
    v, _ = diversity_objective(np.array([[0.0, 0.0], [3.0, 4.0]]), P)
    assert v == 50.0


def test_diversity_identical_codes():
    P = simple_problem(dm.Quadratic(np.eye(2)), 1, 4)
    v, g = diversity_objective(np.tile([0.5, -0.5], (5, 1)), P)
    assert v == 0.0 and not g.any()


def test_diversity_none_objective():
    P = simple_problem(dm.Quadratic(np.eye(2)), 1, 4)
    v, g = diversity_objective(np.array([[0.0, 0.0], [3.0, 4.0]]), P, "none")
    assert v == 0.0 and not g.any()


# slack

@pytest.mark.parametrize("f, lam, expected", [(55.0, 0.0, 0.0), (58.0, 0.0, 3.0),
                                              (58.0, 60.0, 0.0)])
def test_slack_closed_form(f, lam, expected):
    s = slack_closed_form(np.array([[f]]), (BAND,), np.array([[lam]]), 10.0)
    assert s[0, 0] == expected


def test_slack_update_uses_state():
    assert slack_update(state(58.0), scalar_problem())[0, 0] == 3.0


# Lagrangian

def test_lagrangian_zero_residual_is_minus_diversity(mlp):
    _, P = mlp
    C = np.random.default_rng(0).normal(size=(4, 4))
    A = P.activations(C)
    S = A + (P.bands[0].epsilon0 - P.bands[0].z2)  # makes every residual exactly zero
    value, _ = lagrangian_terms(C, S, np.zeros((4, 1)), 10.0, P)
    div, _ = diversity_objective(C, P)
    assert value == pytest.approx(-div, rel=1e-13)


def test_lagrangian_single_code():
    P = scalar_problem()
    st_ = state(52.0, mu=10.0)
    value, grad = lagrangian_value_and_grad(st_, P)
    r = 5 - 60 + 52
    assert value == 0.5 * 10 * r * r
    assert grad[0, 0] == 10 * r


def test_lagrangian_gradient_mlp(mlp, rng):
    _, P = mlp
    for _ in range(5):
        C = rng.normal(size=(3, 4))
        S, L = rng.uniform(0, 1, (3, 1)), rng.uniform(0, 5, (3, 1))
        _, g = lagrangian_terms(C, S, L, 100.0, P)
        n = central_diff(lambda X: lagrangian_terms(X, S, L, 100.0, P)[0], C)
        assert max_rel_error(g, n) <= 1e-5


# multiplier and penalty

@pytest.mark.parametrize("lam, f, expected", [(0.0, 45.0, 100.0), (0.0, 58.0, 0.0),
                                              (30.0, 55.0, 30.0)])
def test_multiplier_update(lam, f, expected):
    assert multiplier_update(state(f, lam), scalar_problem())[0, 0] == expected


def test_multiplier_update_with_slack_flag():
    st_ = state(58.0, lam=10.0, slack=3.0)
    assert multiplier_update(st_, scalar_problem())[0, 0] == 0.0
    # residual minus slack is zero, so the multiplier stays
    assert multiplier_update(st_, scalar_problem(), with_slack=True)[0, 0] == 10.0


@pytest.mark.parametrize("mu, alpha, expected", [(10, 10, 100), (100, 10, 1000), (10, 2, 20)])
def test_penalty_update(mu, alpha, expected):
    assert penalty_update(state(0.0, mu=mu), AugLagSchedule(alpha=alpha)) == expected


def test_schedule_validation():
    with pytest.raises(ValueError):
        AugLagSchedule(alpha=1.0)
    with pytest.raises(ValueError):
        AugLagSchedule(step_length_beta=0.0)


# seeds

def test_seeds_linear_logistic_band():
    w, c = np.array([4.0, 4.0]), -4.0
    P = simple_problem(dm.LinearLogistic(w, c), 0.6, 0.8)
    # With identity G and E the diversity term is unbounded: a code pushed
    # along -w saturates the sigmoid and can never be pulled back.  Starting
    # on a line orthogonal to w keeps the repulsion parallel to the boundary.
    init = np.array([[-1.0, 1.0], [0.0, 0.0], [1.0, -1.0]])
    res = find_seeds(P, 3, init, schedule=AugLagSchedule(step_length_beta=1e-3))
    direct = 1.0 / (1.0 + np.exp(-(res.seeds @ w + c)))
    assert np.all(direct >= 0.6)
    assert res.feasible_count == 3


def test_seeds_quadratic_one_sided():
    P = simple_problem(dm.Quadratic(np.eye(2)), 1.0, 4.0)
    res = find_seeds(P, 10, init=3, schedule=AugLagSchedule(step_length_beta=1e-3))
    assert np.all(np.sum(res.seeds ** 2, axis=1) >= 1.0)


def test_seeds_empty_band_raises():
    P = simple_problem(dm.LinearLogistic([1.0, 1.0], 0.0), 2.0, 3.0)
    with pytest.raises(MaxOuterIterationsExceeded) as info:
        find_seeds(P, 2, schedule=AugLagSchedule(inner_steps=5, max_outer_iters=3))
    assert info.value.result is not None
    assert len(info.value.result.trace) == 3


def test_seeds_feasible_init_returns_immediately():
    P = simple_problem(dm.Quadratic(np.eye(2)), 1.0, 4.0)
    init = np.array([[1.5, 0.0], [0.0, 1.5]])
    res = find_seeds(P, 2, init)
    assert res.grad_steps == 0
    np.testing.assert_array_equal(res.seeds, init)


def test_trace_is_monotone_in_steps(annulus):
    cfg, P = annulus
    res = find_seeds(P, 10, 0, cfg.schedule)
    steps = [t.cumulative_grad_steps for t in res.trace]
    assert steps == sorted(steps) and steps[-1] == res.grad_steps


def test_symmetry_jitter_only_for_identical_codes():
    C = np.zeros((4, 2))
    J, amount = apply_symmetry_jitter(C, None, 0)
    assert amount == 1e-6 and np.all(np.abs(J) <= 1e-6) and len(np.unique(J[:, 0])) == 4
    D = np.arange(8.0).reshape(4, 2)
    same, amount = apply_symmetry_jitter(D, None, 0)
    assert amount == 0.0 and np.array_equal(same, D)


def test_seeds_deterministic(mlp):
    cfg, P = mlp
    a = find_seeds(P, 5, 7, cfg.schedule)
    b = find_seeds(P, 5, 7, cfg.schedule)
    np.testing.assert_array_equal(a.seeds, b.seeds)


def test_outer_stop_rule_never_cheaper(mlp):
    cfg, P = mlp
    a = find_seeds(P, 10, 0, cfg.schedule)
    b = find_seeds(P, 10, 0, cfg.schedule, stop="outer")
    assert b.grad_steps >= a.grad_steps
    assert b.grad_steps % cfg.schedule.inner_steps == 0
    assert P.feasible(b.seeds).all()
