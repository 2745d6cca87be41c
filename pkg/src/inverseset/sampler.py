"""Incremental sampling inside the feasible region.

After seeding, the walk repeatedly takes a *single* gradient step of the
sampling Lagrangian (seed Lagrangian plus repulsion from the anchor batch)
with the seed solver's terminal multipliers and penalty frozen.  Every code
that lands in the feasible region becomes a sample and replaces its anchor
slot; infeasible codes keep walking and are pulled back by the penalty.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import auglag
from .auglag import AugLagSchedule, find_seeds, lagrangian_terms, slack_closed_form
from .errors import NonFiniteInput, NonFiniteValue, WalkBudgetExhausted

log = logging.getLogger(__name__)

REPULSE_MODES = ("anchors", "all")
DUPLICATE_DISTANCE = 1e-9


@dataclass
class WalkState:
    codes: np.ndarray
    anchors: np.ndarray
    lambda_star: np.ndarray
    mu_star: float
    samples: list = field(default_factory=list)
    step_index: int = 0
    grad_step_count: int = 0
    slacks: np.ndarray | None = None
    duplicates: int = 0

    @classmethod
    def from_seeds(cls, seed_result):
        """Step 1: C = C0 = seeds; the seeds are the first K samples."""
        seeds = seed_result.seeds
        st = cls(
            codes=seeds.copy(),
            anchors=seeds.copy(),
            lambda_star=seed_result.lambda_star.copy(),
            mu_star=seed_result.mu_star,
            grad_step_count=seed_result.grad_steps,
        )
        for c, a in zip(seeds, seed_result.activations):
            st.samples.append((c.copy(), a.copy(), 0))
        return st

    def accepted_codes(self):
        return np.array([s[0] for s in self.samples])


@dataclass
class SampleSet:
    codes: np.ndarray
    activations: np.ndarray
    acceptance_step: np.ndarray
    fingerprint: str
    metadata: dict = field(default_factory=dict)
    duplicate: np.ndarray | None = None
    trace: list = field(default_factory=list, repr=False)

    def __len__(self):
        return self.codes.shape[0]

    def head(self, m):
        dup = None if self.duplicate is None else self.duplicate[:m].copy()
        return SampleSet(self.codes[:m].copy(), self.activations[:m].copy(),
                         self.acceptance_step[:m].copy(), self.fingerprint,
                         dict(self.metadata), dup, list(self.trace))


def _repulsion_batch(state, repulse_history):
    if repulse_history == "all":
        return state.accepted_codes()
    return state.anchors


def sample_objective_terms(state, problem, objective="encoding", repulse_history="anchors"):
    """Value and gradient of the sampling Lagrangian at ``state.codes``.

    Uses ``state.slacks``; anchors are treated as constants.
    """
    if state.slacks is None:
        raise ValueError("slacks must be refreshed before taking the gradient")
    anchors = _repulsion_batch(state, repulse_history)
    return lagrangian_terms(state.codes, state.slacks, state.lambda_star, state.mu_star,
                            problem, objective, anchors=anchors)


def sample_objective_grad(state, problem, objective="encoding", repulse_history="anchors"):
    return sample_objective_terms(state, problem, objective, repulse_history)[1]


def refresh_slacks(state, problem):
    A = problem.activations(state.codes)
    state.slacks = slack_closed_form(A, problem.bands, state.lambda_star, state.mu_star)
    return state.slacks


def walk_step(state, problem, beta, objective="encoding", repulse_history="anchors"):
    """One walk iteration (slack refresh, one gradient step, acceptance).

    Mutates and returns ``state``.
    """
    refresh_slacks(state, problem)
    grad = sample_objective_grad(state, problem, objective, repulse_history)
    new_codes = state.codes - beta * grad
    if not np.all(np.isfinite(new_codes)):
        raise NonFiniteValue("walk step produced non-finite codes")
    A = problem.activations(new_codes)
    feasible = problem.feasible(new_codes)
    state.step_index += 1
    state.grad_step_count += 1
    for i in np.flatnonzero(feasible):
        c = new_codes[i].copy()
        if np.linalg.norm(c - state.anchors[i]) < DUPLICATE_DISTANCE:
            state.duplicates += 1
        state.samples.append((c, A[i].copy(), state.step_index))
        state.anchors[i] = c
    state.codes = new_codes
    return state


def _sample_set(problem, samples, n, metadata, trace=()):
    rows = samples[:n]
    d = problem.code_dim
    codes = np.array([r[0] for r in rows]).reshape(-1, d)
    acts = np.array([r[1] for r in rows]).reshape(-1, problem.p)
    steps = np.array([r[2] for r in rows], dtype=int)
    dup = np.zeros(len(rows), dtype=bool)
    for i in range(1, len(rows)):
        dist = np.linalg.norm(codes[:i] - codes[i], axis=1)
        dup[i] = bool(np.any(dist < DUPLICATE_DISTANCE))
    metadata = dict(metadata)
    metadata["duplicate_count"] = int(dup.sum())
    return SampleSet(codes, acts, steps, problem.fingerprint(), metadata, dup, list(trace))


def _metadata(problem, K, n, schedule, seed_result, algorithm, objective, beta,
              repulse_history, walk_steps, total_steps):
    return {
        "algorithm": algorithm,
        "objective": objective,
        "K": int(K),
        "n": int(n),
        "schedule": schedule.as_dict(),
        "walk_beta": None if beta is None else float(beta),
        "repulse_history": repulse_history,
        "rng_seed": seed_result.rng_seed,
        "rng_algorithm": auglag.RNG_ALGORITHM,
        "symmetry_jitter": seed_result.jitter,
        "feasibility_mode": problem.feasibility_mode,
        "seed_grad_steps": int(seed_result.grad_steps),
        "seed_outer_iters": int(seed_result.outer_iters),
        "walk_steps": int(walk_steps),
        "total_grad_steps": int(total_steps),
        "seed_codes": seed_result.seeds.tolist(),
        "lambda_star": seed_result.lambda_star.tolist(),
        "mu_star": float(seed_result.mu_star),
    }


def default_walk_budget(n, K):
    return int(math.ceil(50 * n / K))


def run_sampler(problem, n, K, init=0, schedule=None, beta=1e-2, max_walk_steps=None,
                objective="encoding", repulse_history="anchors", symmetry_jitter=None,
                init_scale=1.0, algorithm="sample", seed_result=None, rng_seed=None):
    """Seed K codes, then walk until n samples are accepted.

    The seeds count as the first K samples.  Returns exactly the first n
    accepted samples; raises :class:`WalkBudgetExhausted` (with the partial
    set attached) if ``max_walk_steps`` walk steps are not enough.
    """
    if not n >= K >= 1:
        raise ValueError("need n >= K >= 1")
    if repulse_history not in REPULSE_MODES:
        raise ValueError(f"unknown repulsion mode {repulse_history!r}")
    schedule = schedule or AugLagSchedule()
    if max_walk_steps is None:
        max_walk_steps = default_walk_budget(n, K)
    if seed_result is None:
        seed_result = find_seeds(problem, K, init, schedule, objective,
                                 symmetry_jitter=symmetry_jitter, rng_seed=rng_seed,
                                 init_scale=init_scale)
    state = WalkState.from_seeds(seed_result)
    while len(state.samples) < n:
        if state.step_index >= max_walk_steps:
            meta = _metadata(problem, K, n, schedule, seed_result, algorithm, objective,
                             beta, repulse_history, state.step_index, state.grad_step_count)
            meta["complete"] = False
            partial = _sample_set(problem, state.samples, n, meta, seed_result.trace)
            raise WalkBudgetExhausted(
                f"walk accepted {len(state.samples)}/{n} samples in {max_walk_steps} steps",
                partial=partial)
        walk_step(state, problem, beta, objective, repulse_history)
    meta = _metadata(problem, K, n, schedule, seed_result, algorithm, objective, beta,
                     repulse_history, state.step_index, state.grad_step_count)
    meta["complete"] = True
    meta["walk_duplicate_moves"] = state.duplicates
    out = _sample_set(problem, state.samples, n, meta, seed_result.trace)
    log.info("%s: %d samples, %d walk steps, %d gradient steps", algorithm, n,
             state.step_index, state.grad_step_count)
    return out


def full_batch_solve(problem, n, init=0, schedule=None, objective="encoding",
                     symmetry_jitter=None, init_scale=1.0, rng_seed=None,
                     stop="first_feasible"):
    """Optimise all n codes jointly with the seed solver (reference route).

    Cost per gradient step is quadratic in n.  ``stop`` is passed to
    :func:`find_seeds`.
    """
    schedule = schedule or AugLagSchedule()
    res = find_seeds(problem, n, init, schedule, objective,
                     symmetry_jitter=symmetry_jitter, rng_seed=rng_seed,
                     init_scale=init_scale, stop=stop)
    meta = _metadata(problem, n, n, schedule, res, "full_batch", objective, None,
                     "anchors", 0, res.grad_steps)
    meta["stop"] = stop
    meta["complete"] = True
    samples = [(c, a, 0) for c, a in zip(res.seeds, res.activations)]
    return _sample_set(problem, samples, n, meta, res.trace)


def maximize_activation(problem, init, steps=100, beta=1e-2, regularizer_weight=0.0,
                        constraint_index=0, return_history=False):
    """Gradient ascent on f(G(c)) - r ||c||^2 (activation-maximisation baseline)."""
    c = np.array(init, dtype=np.float64).ravel()
    problem.check_codes(c[None, :])
    f = problem.constraints[constraint_index].f
    history = []
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            for _ in range(int(steps)):
                x = problem.G.forward(c)
                history.append(float(f.forward(x)[0]))
                g = problem.G.vjp(c, f.vjp(x, np.ones(1))) - 2.0 * regularizer_weight * c
                c = c + beta * g
                if not np.all(np.isfinite(c)):
                    raise NonFiniteValue("activation maximisation diverged")
            history.append(float(f.forward(problem.G.forward(c))[0]))
    except NonFiniteInput as exc:
        raise NonFiniteValue(f"activation maximisation diverged: {exc}") from exc
    if not np.isfinite(history[-1]):
        raise NonFiniteValue("activation maximisation diverged")
    return (c, history) if return_history else c


def ablate_code_space(problem, n, K, init=0, schedule=None, beta=1e-2, **kw):
    """Same pipeline with diversity measured on raw codes."""
    out = run_sampler(problem, n, K, init, schedule, beta, objective="code",
                      algorithm="ablate_codespace", **kw)
    out.metadata["max_abs_code"] = float(np.max(np.abs(out.codes)))
    return out


def ablate_feasibility_only(problem, n, K, shared_init=0, schedule=None, beta=1e-2, **kw):
    """Same pipeline with the diversity objective replaced by a constant."""
    return run_sampler(problem, n, K, shared_init, schedule, beta, objective="none",
                       algorithm="ablate_feasibility", **kw)
