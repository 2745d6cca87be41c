"""Seed solver: bound-constrained augmented Lagrangian with slack variables.

Each band constraint ``z1 <= f(G(c))`` is written as ``z2 - f(G(c)) <= eps``
and shifted by ``eps0 = eps/2`` so that seeds land inside the band:

    L(C; s, lam, mu) = -D(C) + sum_ik [ -lam_ik r_ik + mu/2 r_ik^2 ],
    r_ik = eps0_k - z2_k + f_k(G(c_i)) - s_ik,     s_ik >= 0

where ``D`` is the diversity objective.  Coordinate descent alternates a
closed-form slack update with ``inner_steps`` plain gradient steps on the
codes, then updates multipliers and grows the penalty geometrically.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import (DimensionMismatch, MaxOuterIterationsExceeded, NonFiniteInput,
                     NonFiniteValue)

log = logging.getLogger(__name__)

OBJECTIVES = ("encoding", "code", "none")
RNG_ALGORITHM = "numpy.random.Generator(PCG64)"
STOP_RULES = ("first_feasible", "outer")


@dataclass(frozen=True)
class AugLagSchedule:
    mu0: float = 10.0
    alpha: float = 10.0
    inner_steps: int = 100
    step_length_beta: float = 1e-2
    max_outer_iters: int = 50
    multiplier_residual_with_slack: bool = False

    def __post_init__(self):
        if not self.mu0 > 0:
            raise ValueError("mu0 must be positive")
        if not self.alpha > 1:
            raise ValueError("alpha must exceed 1")
        if self.inner_steps < 1 or self.max_outer_iters < 1:
            raise ValueError("step counts must be positive")
        if not self.step_length_beta > 0:
            raise ValueError("step length must be positive")

    def as_dict(self):
        return {
            "mu0": self.mu0,
            "alpha": self.alpha,
            "inner_steps": self.inner_steps,
            "step_length_beta": self.step_length_beta,
            "max_outer_iters": self.max_outer_iters,
            "multiplier_residual_with_slack": self.multiplier_residual_with_slack,
        }


@dataclass
class AugLagState:
    codes: np.ndarray
    slacks: np.ndarray
    multipliers: np.ndarray
    mu: float
    outer_iter: int = 0
    grad_step_count: int = 0

    @classmethod
    def initial(cls, codes, p, mu0):
        codes = np.array(codes, dtype=np.float64)
        K = codes.shape[0]
        return cls(codes, np.zeros((K, p)), np.zeros((K, p)), float(mu0))

    def copy(self):
        return AugLagState(self.codes.copy(), self.slacks.copy(), self.multipliers.copy(),
                           self.mu, self.outer_iter, self.grad_step_count)


@dataclass(frozen=True)
class TraceRecord:
    outer_iter: int
    inner_step: int
    mu: float
    objective: float
    min_activation: tuple
    feasible_count: int
    cumulative_grad_steps: int


@dataclass
class SeedResult:
    seeds: np.ndarray
    lambda_star: np.ndarray
    mu_star: float
    trace: list
    activations: np.ndarray
    grad_steps: int
    outer_iters: int
    objective: str = "encoding"
    jitter: float = 0.0
    rng_seed: int | None = None
    initial_codes: np.ndarray | None = field(default=None, repr=False)

    @property
    def feasible_count(self):
        return self.trace[-1].feasible_count if self.trace else 0


# -- objective pieces ------------------------------------------------------

def pairwise_sq_sum(V):
    """Sum over ordered pairs of ||v_i - v_j||^2 and its gradient in V."""
    D = V[:, None, :] - V[None, :, :]
    return float(np.sum(D * D)), 4.0 * np.sum(D, axis=1)


def cross_sq_sum(V, W):
    """Sum over (i, y) of ||v_i - w_y||^2 and its gradient in V (W fixed)."""
    D = V[:, None, :] - W[None, :, :]
    return float(np.sum(D * D)), 2.0 * np.sum(D, axis=1)


def _check_objective(objective):
    if objective not in OBJECTIVES:
        raise ValueError(f"unknown diversity objective {objective!r}")


def diversity_objective(C, problem, objective="encoding"):
    """Value and code-gradient of the sum of squared pairwise distances.

    ``objective`` picks the space distances live in: ``"encoding"`` (E o G),
    ``"code"`` (raw codes) or ``"none"`` (identically zero).
    """
    _check_objective(objective)
    C = problem.check_codes(C)
    if C.shape[0] < 1:
        raise DimensionMismatch("need at least one code")
    if objective == "none":
        return 0.0, np.zeros_like(C)
    if objective == "code":
        return pairwise_sq_sum(C)
    X = problem.G.forward(C)
    value, dV = pairwise_sq_sum(problem.E.forward(X))
    return value, problem.G.vjp(C, problem.E.vjp(X, dV))


def shifted_residuals(A, bands):
    """eps0 - z2 + f, per code (rows) and constraint (columns)."""
    shift = np.array([b.epsilon0 - b.z2 for b in bands])
    return shift + A


def slack_closed_form(A, bands, multipliers, mu):
    if not mu > 0:
        raise ValueError("penalty must be positive")
    return np.maximum(0.0, shifted_residuals(A, bands) - multipliers / mu)


def slack_update(state, problem):
    """Minimise the Lagrangian over s >= 0 (separable convex quadratic)."""
    A = problem.activations(state.codes)
    return slack_closed_form(A, problem.bands, state.multipliers, state.mu)


def lagrangian_terms(C, slacks, multipliers, mu, problem, objective="encoding",
                     anchors=None):
    """Value and code-gradient of the (seed or sample) Lagrangian.

    With ``anchors`` given, the repulsion against that fixed batch is added
    (the sampling Lagrangian); anchors are constants.
    """
    _check_objective(objective)
    C = problem.check_codes(C)
    K, p = C.shape[0], problem.p
    if slacks.shape != (K, p) or multipliers.shape != (K, p):
        raise DimensionMismatch(f"slacks and multipliers must have shape {(K, p)}")

    try:
        with np.errstate(over="ignore", invalid="ignore"):
            return _lagrangian_terms(C, slacks, multipliers, mu, problem, objective, anchors)
    except NonFiniteInput as exc:
        raise NonFiniteValue(f"non-finite intermediate value: {exc}") from exc


def _lagrangian_terms(C, slacks, multipliers, mu, problem, objective, anchors):
    X = problem.G.forward(C)
    A = problem.activations_of_inputs(X)
    r = shifted_residuals(A, problem.bands) - slacks
    coeff = -multipliers + mu * r
    value = float(np.sum(-multipliers * r + 0.5 * mu * r * r))

    dX = np.zeros_like(X)
    for k, con in enumerate(problem.constraints):
        dX = dX + con.f.vjp(X, coeff[:, k:k + 1])
    dC_extra = None
    if objective == "encoding":
        V = problem.E.forward(X)
        div, dV = pairwise_sq_sum(V)
        value -= div
        dV = -dV
        if anchors is not None and len(anchors):
            cross, dW = cross_sq_sum(V, problem.encode(anchors))
            value -= cross
            dV = dV - dW
        dX = dX + problem.E.vjp(X, dV)
    elif objective == "code":
        div, dCd = pairwise_sq_sum(C)
        value -= div
        dC_extra = -dCd
        if anchors is not None and len(anchors):
            cross, dW = cross_sq_sum(C, np.asarray(anchors, dtype=np.float64))
            value -= cross
            dC_extra = dC_extra - dW
    grad = problem.G.vjp(C, dX)
    if dC_extra is not None:
        grad = grad + dC_extra
    if not (np.isfinite(value) and np.all(np.isfinite(grad))):
        raise NonFiniteValue("Lagrangian or its gradient is not finite")
    return value, grad


def lagrangian_value_and_grad(state, problem, objective="encoding"):
    return lagrangian_terms(state.codes, state.slacks, state.multipliers, state.mu,
                            problem, objective)


def multiplier_update(state, problem, with_slack=False):
    """lam <- max(lam - mu * (eps0 - z2 + f), 0).

    The default drops the slack from the residual; ``with_slack=True`` uses
    ``eps0 - z2 + f - s`` instead.
    """
    A = problem.activations(state.codes)
    r = shifted_residuals(A, problem.bands)
    if with_slack:
        r = r - state.slacks
    return np.maximum(state.multipliers - state.mu * r, 0.0)


def penalty_update(state, schedule):
    return schedule.alpha * state.mu


# -- driver ----------------------------------------------------------------

def initial_codes(problem, K, init, init_scale=1.0):
    """Resolve ``init`` (an RNG seed or a K x d array) to a code matrix."""
    if isinstance(init, (int, np.integer)):
        rng = np.random.default_rng(int(init))
        return init_scale * rng.standard_normal((K, problem.code_dim)), int(init)
    C = np.array(init, dtype=np.float64)
    if C.ndim == 1:
        C = np.repeat(C[None, :], K, axis=0)
    if C.shape != (K, problem.code_dim):
        raise DimensionMismatch(
            f"initial codes must have shape {(K, problem.code_dim)}, got {C.shape}")
    return C, None


def apply_symmetry_jitter(C, symmetry_jitter, seed):
    """Break exact ties between codes.

    ``symmetry_jitter=None`` means automatic: 1e-6 when every initial code
    is identical (and K > 1), otherwise nothing.
    """
    if symmetry_jitter is None:
        identical = C.shape[0] > 1 and bool(np.all(C == C[0]))
        symmetry_jitter = 1e-6 if identical else 0.0
    if symmetry_jitter > 0:
        rng = np.random.default_rng([0 if seed is None else seed, 1])
        C = C + rng.uniform(-symmetry_jitter, symmetry_jitter, size=C.shape)
        log.info("symmetry jitter %g applied to %d codes (seed %s)",
                 symmetry_jitter, C.shape[0], seed)
    return C, float(symmetry_jitter)


def _record(state, problem, value, inner_step, A=None):
    if A is None:
        A = problem.activations(state.codes)
    count = int(np.sum(problem.feasible(state.codes)))
    return TraceRecord(
        outer_iter=state.outer_iter,
        inner_step=inner_step,
        mu=state.mu,
        objective=value,
        min_activation=tuple(float(v) for v in A.min(axis=0)),
        feasible_count=count,
        cumulative_grad_steps=state.grad_step_count,
    )


def find_seeds(problem, K, init=0, schedule=None, objective="encoding",
               symmetry_jitter=None, rng_seed=None, init_scale=1.0, stop="first_feasible"):
    """Find K feasible, mutually distant codes.

    ``init`` is an integer RNG seed (codes ~ init_scale * N(0, I)) or a K x d
    array (a single d-vector is broadcast to all K codes).  The loop stops
    the first time every code is feasible, checking before the first step
    and after every gradient step.  Raises
    :class:`MaxOuterIterationsExceeded` if that never happens.

    ``stop="outer"`` checks feasibility only at the end of each complete
    inner solve instead, so the diversity term is optimised for the full
    ``inner_steps`` of every outer iteration.
    """
    if stop not in STOP_RULES:
        raise ValueError(f"unknown stop rule {stop!r}")
    schedule = schedule or AugLagSchedule()
    _check_objective(objective)
    if K < 1:
        raise ValueError("K must be at least 1")
    C0, seed_used = initial_codes(problem, K, init, init_scale)
    if rng_seed is None:
        rng_seed = seed_used
    C0, jitter = apply_symmetry_jitter(C0, symmetry_jitter, rng_seed)

    state = AugLagState.initial(C0, problem.p, schedule.mu0)
    beta = schedule.step_length_beta
    trace = []
    best = None

    def result(st):
        return SeedResult(
            seeds=st.codes.copy(),
            lambda_star=st.multipliers.copy(),
            mu_star=st.mu,
            trace=list(trace),
            activations=problem.activations(st.codes),
            grad_steps=st.grad_step_count,
            outer_iters=st.outer_iter,
            objective=objective,
            jitter=jitter,
            rng_seed=rng_seed,
            initial_codes=C0.copy(),
        )

    if problem.feasible(state.codes).all():
        value, _ = lagrangian_value_and_grad(state, problem, objective)
        trace.append(_record(state, problem, value, 0))
        return result(state)

    for outer in range(schedule.max_outer_iters):
        state.outer_iter = outer
        state.slacks = slack_update(state, problem)
        value = np.nan
        for step in range(1, schedule.inner_steps + 1):
            value, grad = lagrangian_value_and_grad(state, problem, objective)
            state.codes = state.codes - beta * grad
            state.grad_step_count += 1
            if stop == "outer" and step < schedule.inner_steps:
                continue
            feas = problem.feasible(state.codes)
            if feas.all():
                trace.append(_record(state, problem, value, step))
                log.debug("seeds feasible after %d gradient steps", state.grad_step_count)
                return result(state)
        rec = _record(state, problem, value, schedule.inner_steps)
        trace.append(rec)
        if best is None or rec.feasible_count > best[0]:
            best = (rec.feasible_count, state.copy())
        state.multipliers = multiplier_update(
            state, problem, schedule.multiplier_residual_with_slack)
        state.mu = penalty_update(state, schedule)
        log.debug("outer %d: mu=%g feasible=%d/%d", outer, state.mu, rec.feasible_count, K)

    best_state = best[1] if best else state
    raise MaxOuterIterationsExceeded(
        f"no feasible batch of {K} codes after {schedule.max_outer_iters} outer iterations "
        f"(best: {best[0] if best else 0} feasible)",
        best=best_state, result=result(best_state))
