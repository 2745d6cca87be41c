"""Activation bands, feasibility predicates and the inverse-set problem."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import BandOutsideLogisticRange, DegenerateBand, DimensionMismatch

PAPER_ONE_SIDED = "paper_one_sided"
STRICT_TWO_SIDED = "strict_two_sided"
MODES = (PAPER_ONE_SIDED, STRICT_TWO_SIDED)


@dataclass(frozen=True)
class ActivationBand:
    z1: float
    z2: float
    epsilon: float = field(init=False)
    epsilon0: float = field(init=False)

    def __post_init__(self):
        z1, z2 = float(self.z1), float(self.z2)
        if not (np.isfinite(z1) and np.isfinite(z2)):
            raise DegenerateBand("band limits must be finite")
        if not z2 > z1:
            raise DegenerateBand(f"band [{z1}, {z2}] has no interior (need z2 > z1)")
        object.__setattr__(self, "z1", z1)
        object.__setattr__(self, "z2", z2)
        object.__setattr__(self, "epsilon", z2 - z1)
        object.__setattr__(self, "epsilon0", (z2 - z1) / 2.0)

    @property
    def target(self):
        """Activation the shifted constraint aims for: z2 - epsilon0."""
        return self.z2 - self.epsilon0


def band_new(z1, z2):
    return ActivationBand(z1, z2)


@dataclass(frozen=True)
class ConstraintSpec:
    f: object
    band: ActivationBand

    def __post_init__(self):
        if self.f.output_dim != 1:
            raise DimensionMismatch("constraint functions must be scalar-valued")


@dataclass(frozen=True)
class FeasibilityVerdict:
    per_constraint: tuple
    all_feasible: bool
    activations: tuple


def feasible_mask(activations, bands, mode=PAPER_ONE_SIDED):
    """Elementwise feasibility of an (N, p) activation array.

    The one-sided test is written as ``z2 - f <= epsilon`` literally; since
    float subtraction is monotone this is implied by ``z1 <= f <= z2``.
    """
    A = np.atleast_2d(np.asarray(activations, dtype=np.float64))
    z1 = np.array([b.z1 for b in bands])
    z2 = np.array([b.z2 for b in bands])
    eps = np.array([b.epsilon for b in bands])
    if mode == PAPER_ONE_SIDED:
        return (z2 - A) <= eps
    if mode == STRICT_TWO_SIDED:
        return (z1 <= A) & (A <= z2)
    raise ValueError(f"unknown feasibility mode {mode!r}")


class InverseSetProblem:
    """Generator G, encoder E and p >= 1 banded constraints f_k o G."""

    def __init__(self, G, E, constraints, feasibility_mode=PAPER_ONE_SIDED):
        constraints = tuple(constraints)
        if not constraints:
            raise ValueError("an inverse-set problem needs at least one constraint")
        if feasibility_mode not in MODES:
            raise ValueError(f"unknown feasibility mode {feasibility_mode!r}")
        if E.input_dim != G.output_dim:
            raise DimensionMismatch(
                f"encoder expects {E.input_dim} inputs, generator emits {G.output_dim}")
        for k, con in enumerate(constraints):
            if con.f.input_dim != G.output_dim:
                raise DimensionMismatch(
                    f"constraint {k} expects {con.f.input_dim} inputs, "
                    f"generator emits {G.output_dim}")
        self.G = G
        self.E = E
        self.constraints = constraints
        self.feasibility_mode = feasibility_mode

    def __repr__(self):
        return (f"InverseSetProblem(code_dim={self.code_dim}, p={self.p}, "
                f"mode={self.feasibility_mode!r})")

    @property
    def code_dim(self):
        return self.G.input_dim

    @property
    def p(self):
        return len(self.constraints)

    @property
    def bands(self):
        return tuple(c.band for c in self.constraints)

    def with_mode(self, mode):
        return InverseSetProblem(self.G, self.E, self.constraints, mode)

    def check_codes(self, C):
        C = np.asarray(C, dtype=np.float64)
        if C.ndim != 2 or C.shape[1] != self.code_dim:
            raise DimensionMismatch(
                f"codes must have shape (K, {self.code_dim}), got {C.shape}")
        return C

    def activations(self, C):
        """(N, p) array of f_k(G(c_i))."""
        C = self.check_codes(C)
        X = self.G.forward(C)
        return self.activations_of_inputs(X)

    def activations_of_inputs(self, X):
        cols = [con.f.forward(X) for con in self.constraints]
        return np.concatenate(cols, axis=1)

    def feasible(self, C, mode=None):
        """Boolean vector: which rows of C lie in the inverse set."""
        A = self.activations(C)
        return feasible_mask(A, self.bands, mode or self.feasibility_mode).all(axis=1)

    def encode(self, C):
        return self.E.forward(self.G.forward(self.check_codes(C)))

    def fingerprint(self):
        """sha256 over map kinds, dims, parameters, bands and mode."""
        h = hashlib.sha256()

        def add_map(m):
            h.update(f"{m.kind}:{m.input_dim}:{m.output_dim};".encode())
            h.update(np.ascontiguousarray(m.parameters, dtype="<f8").tobytes())
            for sub in ("outer", "inner"):
                if hasattr(m, sub):
                    add_map(getattr(m, sub))
            for attr in ("activation", "output_activation"):
                if hasattr(m, attr):
                    h.update(getattr(m, attr).encode())

        add_map(self.G)
        add_map(self.E)
        for con in self.constraints:
            add_map(con.f)
            h.update(f"[{con.band.z1!r},{con.band.z2!r}]".encode())
        h.update(self.feasibility_mode.encode())
        return h.hexdigest()


def is_feasible(problem, c, mode=None):
    c = np.asarray(c, dtype=np.float64)
    if c.shape != (problem.code_dim,):
        raise DimensionMismatch(
            f"code must have length {problem.code_dim}, got shape {c.shape}")
    A = problem.activations(c[None, :])
    mask = feasible_mask(A, problem.bands, mode or problem.feasibility_mode)[0]
    return FeasibilityVerdict(
        per_constraint=tuple(bool(v) for v in mask),
        all_feasible=bool(mask.all()),
        activations=tuple(float(a) for a in A[0]),
    )


def logit(z):
    return float(np.log(z / (1.0 - z)))


@dataclass(frozen=True)
class LogisticInverseSet:
    """Inverse set of sigma(w^T x + c) over the unit hypercube.

    ``{x in [0,1]^d : lower_offset <= w^T x + c <= upper_offset}``; the upper
    half-space is absent (``upper_offset = inf``) when z2 = 1.
    """

    normal: np.ndarray
    offset: float
    lower_offset: float
    upper_offset: float

    def contains(self, x, tol=0.0):
        x = np.asarray(x, dtype=np.float64)
        s = x @ self.normal + self.offset
        in_cube = np.all((x >= -tol) & (x <= 1.0 + tol), axis=-1)
        return in_cube & (s >= self.lower_offset - tol) & (s <= self.upper_offset + tol)

    def boundary_distance(self, x):
        """Distance (in w^T x + c units / |w|) to the nearest face."""
        x = np.asarray(x, dtype=np.float64)
        s = x @ self.normal + self.offset
        norm = np.linalg.norm(self.normal)
        d = np.abs(s - self.lower_offset) / norm
        if np.isfinite(self.upper_offset):
            d = np.minimum(d, np.abs(s - self.upper_offset) / norm)
        return np.minimum(d, np.min(np.minimum(np.abs(x), np.abs(1.0 - x)), axis=-1))


def analytic_inverse_set_linear_logistic(w, c, band):
    if not (0.0 < band.z1 < band.z2 <= 1.0):
        raise BandOutsideLogisticRange(
            f"band [{band.z1}, {band.z2}] is outside the logistic range (0, 1]")
    upper = np.inf if band.z2 == 1.0 else logit(band.z2)
    return LogisticInverseSet(
        normal=np.asarray(w, dtype=np.float64).ravel(),
        offset=float(c),
        lower_offset=logit(band.z1),
        upper_offset=upper,
    )
