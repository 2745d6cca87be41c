"""Differentiable maps with hand-derived vector-Jacobian products.

Every map accepts either a single point (1-D array) or a batch of points
(2-D array, one point per row).  Batched evaluation is row-wise exact: row
``i`` of a batched forward pass is bit-identical to the forward pass of that
row alone, so feasibility re-checks on stored codes never disagree with the
solver that produced them.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import DimensionMismatch, NonFiniteInput, UnsupportedKind

KINDS = (
    "linear_logistic",
    "mlp",
    "quadratic",
    "affine",
    "identity",
    "composition",
    "coordinate_projection",
)
ACTIVATIONS = ("sigmoid", "tanh", "relu", "identity")


def _rows_dot(X, W):
    # Elementwise product + last-axis reduction instead of BLAS: keeps each
    # row's arithmetic independent of the batch size.
    return np.sum(X[:, None, :] * W[None, :, :], axis=-1)


def _activate(name, z):
    if name == "sigmoid":
        return expit(z)
    if name == "tanh":
        return np.tanh(z)
    if name == "relu":
        return np.maximum(z, 0.0)
    return z


def _activate_grad(name, z, a):
    if name == "sigmoid":
        return a * (1.0 - a)
    if name == "tanh":
        return 1.0 - a * a
    if name == "relu":
        # one-sided derivative at the kink; finite_diff_check flags it
        return (z > 0.0).astype(float)
    return np.ones_like(z)


class DifferentiableMap:
    """A pure function R^input_dim -> R^output_dim with an exact VJP."""

    kind = None

    def __init__(self, input_dim, output_dim, parameters=()):
        input_dim, output_dim = int(input_dim), int(output_dim)
        if input_dim < 1 or output_dim < 1:
            raise DimensionMismatch("map dimensions must be positive")
        self.input_dim = input_dim
        self.output_dim = output_dim
        params = np.array(parameters, dtype=np.float64).ravel()
        params.setflags(write=False)
        self.parameters = params

    def __repr__(self):
        return f"<{type(self).__name__} {self.input_dim}->{self.output_dim}>"

    # -- validation --------------------------------------------------------
    def _batch(self, x, dim, what="input"):
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        X = x[None, :] if single else x
        if X.ndim != 2 or X.shape[1] != dim:
            raise DimensionMismatch(
                f"{self.kind}: expected {what} of length {dim}, got shape {x.shape}")
        if not np.all(np.isfinite(X)):
            raise NonFiniteInput(f"{self.kind}: non-finite {what}")
        return X, single

    # -- public API --------------------------------------------------------
    def forward(self, x):
        X, single = self._batch(x, self.input_dim)
        Y = self._forward(X)
        return Y[0] if single else Y

    def __call__(self, x):
        return self.forward(x)

    def vjp(self, x, u):
        """Return u^T J(x); for scalar maps with u=(1,) this is the gradient."""
        X, single = self._batch(x, self.input_dim)
        U, single_u = self._batch(u, self.output_dim, "cotangent")
        if U.shape[0] != X.shape[0]:
            raise DimensionMismatch("x and u batch sizes differ")
        G = self._vjp(X, U)
        return G[0] if single else G

    def jacobian(self, x):
        x = np.asarray(x, dtype=np.float64)
        X = np.repeat(x[None, :], self.output_dim, axis=0)
        return self.vjp(X, np.eye(self.output_dim))

    def kink_pattern(self, x):
        """Sign pattern of piecewise-linear pre-activations (empty if smooth)."""
        X, _ = self._batch(x, self.input_dim)
        return self._kinks(X)[0]

    def kink_margin(self, x):
        """Smallest |pre-activation| over piecewise-linear units (inf if smooth)."""
        X, _ = self._batch(x, self.input_dim)
        return self._margin(X)[0]

    # -- per-kind hooks ----------------------------------------------------
    def _forward(self, X):
        raise NotImplementedError

    def _vjp(self, X, U):
        raise NotImplementedError

    def _kinks(self, X):
        return np.zeros((X.shape[0], 0), dtype=bool)

    def _margin(self, X):
        return np.full(X.shape[0], np.inf)

    def describe(self):
        """Header fields written to a model file (besides params)."""
        return {}


class Identity(DifferentiableMap):
    kind = "identity"

    def __init__(self, dim):
        super().__init__(dim, dim)

    def _forward(self, X):
        return X.copy()

    def _vjp(self, X, U):
        return U.copy()


class Affine(DifferentiableMap):
    """y = A x + b, parameters A (row-major) then b."""

    kind = "affine"

    def __init__(self, A, b=None):
        A = np.atleast_2d(np.asarray(A, dtype=np.float64))
        out, inp = A.shape
        b = np.zeros(out) if b is None else np.asarray(b, dtype=np.float64).ravel()
        if b.shape != (out,):
            raise DimensionMismatch("affine bias length must equal rows of A")
        super().__init__(inp, out, np.concatenate([A.ravel(), b]))
        self.A = A.copy()
        self.b = b.copy()
        self._AT = np.ascontiguousarray(self.A.T)

    def _forward(self, X):
        return _rows_dot(X, self.A) + self.b

    def _vjp(self, X, U):
        return _rows_dot(U, self._AT)


class LinearLogistic(DifferentiableMap):
    """sigma(w^T x + c); parameters w then c."""

    kind = "linear_logistic"

    def __init__(self, w, c=0.0):
        w = np.asarray(w, dtype=np.float64).ravel()
        super().__init__(w.size, 1, np.concatenate([w, [float(c)]]))
        self.w = w.copy()
        self.c = float(c)

    def _forward(self, X):
        return expit(_rows_dot(X, self.w[None, :]) + self.c)

    def _vjp(self, X, U):
        a = self._forward(X)
        return (U * a * (1.0 - a)) * self.w[None, :]


class Quadratic(DifferentiableMap):
    """x^T Q x + b^T x + c; parameters Q (row-major), b, c."""

    kind = "quadratic"

    def __init__(self, Q, b=None, c=0.0):
        Q = np.atleast_2d(np.asarray(Q, dtype=np.float64))
        if Q.shape[0] != Q.shape[1]:
            raise DimensionMismatch("quadratic form matrix must be square")
        n = Q.shape[0]
        b = np.zeros(n) if b is None else np.asarray(b, dtype=np.float64).ravel()
        if b.shape != (n,):
            raise DimensionMismatch("linear term length must match Q")
        super().__init__(n, 1, np.concatenate([Q.ravel(), b, [float(c)]]))
        self.Q = Q.copy()
        self.b = b.copy()
        self.c = float(c)
        self._S = self.Q + self.Q.T

    def _forward(self, X):
        QX = _rows_dot(X, self.Q)
        return np.sum(X * QX, axis=-1, keepdims=True) + _rows_dot(X, self.b[None, :]) + self.c

    def _vjp(self, X, U):
        return U * (_rows_dot(X, self._S) + self.b)


class CoordinateProjection(DifferentiableMap):
    """Selects coordinates; parameters are the (integer-valued) indices."""

    kind = "coordinate_projection"

    def __init__(self, input_dim, indices):
        idx = np.asarray(indices, dtype=np.float64).ravel()
        if idx.size == 0 or np.any(idx != np.round(idx)):
            raise DimensionMismatch("projection indices must be integers")
        ii = idx.astype(int)
        if np.any(ii < 0) or np.any(ii >= int(input_dim)):
            raise DimensionMismatch("projection index out of range")
        super().__init__(input_dim, ii.size, idx)
        self.indices = ii

    def _forward(self, X):
        return X[:, self.indices].copy()

    def _vjp(self, X, U):
        G = np.zeros_like(X)
        # np.add.at accumulates repeated indices correctly
        np.add.at(G.T, self.indices, U.T)
        return G


class MLP(DifferentiableMap):
    """Fully connected network.

    ``widths`` lists layer widths including input and output.  Hidden layers
    use ``activation``; the last layer uses ``output_activation`` (default
    identity).  Parameters: per layer, W (out x in, row-major) then b.
    """

    kind = "mlp"

    def __init__(self, widths, parameters, activation="tanh", output_activation="identity"):
        widths = [int(w) for w in widths]
        if len(widths) < 2 or min(widths) < 1:
            raise DimensionMismatch("mlp needs at least input and output widths")
        for name in (activation, output_activation):
            if name not in ACTIVATIONS:
                raise UnsupportedKind(f"unknown activation {name!r}")
        expected = sum(o * i + o for i, o in zip(widths[:-1], widths[1:]))
        params = np.asarray(parameters, dtype=np.float64).ravel()
        if params.size != expected:
            raise DimensionMismatch(
                f"mlp {widths} needs {expected} parameters, got {params.size}")
        super().__init__(widths[0], widths[-1], params)
        self.widths = tuple(widths)
        self.activation = activation
        self.output_activation = output_activation
        self.weights, self.biases = [], []
        pos = 0
        for i, o in zip(widths[:-1], widths[1:]):
            self.weights.append(params[pos:pos + o * i].reshape(o, i).copy())
            pos += o * i
            self.biases.append(params[pos:pos + o].copy())
            pos += o
        self._weights_T = [np.ascontiguousarray(W.T) for W in self.weights]

    @classmethod
    def from_layers(cls, weights, biases, activation="tanh", output_activation="identity"):
        widths = [np.shape(weights[0])[1]] + [np.shape(W)[0] for W in weights]
        flat = []
        for W, b in zip(weights, biases):
            flat.extend(np.asarray(W, dtype=float).ravel())
            flat.extend(np.asarray(b, dtype=float).ravel())
        return cls(widths, flat, activation, output_activation)

    def _layer_act(self, layer):
        last = layer == len(self.weights) - 1
        return self.output_activation if last else self.activation

    def _run(self, X):
        pre, post = [], [X]
        a = X
        for k, (W, b) in enumerate(zip(self.weights, self.biases)):
            z = _rows_dot(a, W) + b
            a = _activate(self._layer_act(k), z)
            pre.append(z)
            post.append(a)
        return pre, post

    def _forward(self, X):
        return self._run(X)[1][-1]

    def _vjp(self, X, U):
        pre, post = self._run(X)
        g = U
        for k in range(len(self.weights) - 1, -1, -1):
            g = g * _activate_grad(self._layer_act(k), pre[k], post[k + 1])
            g = _rows_dot(g, self._weights_T[k])
        return g

    def _relu_pre(self, X):
        pre, _ = self._run(X)
        return [z for k, z in enumerate(pre) if self._layer_act(k) == "relu"]

    def _kinks(self, X):
        zs = self._relu_pre(X)
        if not zs:
            return np.zeros((X.shape[0], 0), dtype=bool)
        return np.concatenate([z > 0.0 for z in zs], axis=1)

    def _margin(self, X):
        zs = self._relu_pre(X)
        if not zs:
            return np.full(X.shape[0], np.inf)
        return np.min(np.abs(np.concatenate(zs, axis=1)), axis=1)

    def describe(self):
        d = {"layers": ",".join(str(w) for w in self.widths), "activation": self.activation}
        if self.output_activation != "identity":
            d["output_activation"] = self.output_activation
        return d


class Composition(DifferentiableMap):
    """outer(inner(x))."""

    kind = "composition"

    def __init__(self, outer, inner):
        if outer.input_dim != inner.output_dim:
            raise DimensionMismatch(
                f"cannot compose {outer!r} after {inner!r}: "
                f"{outer.input_dim} != {inner.output_dim}")
        super().__init__(inner.input_dim, outer.output_dim,
                         np.concatenate([outer.parameters, inner.parameters]))
        self.outer = outer
        self.inner = inner

    def __repr__(self):
        return f"<Composition {self.outer!r} o {self.inner!r}>"

    def _forward(self, X):
        return self.outer._forward(self.inner._forward(X))

    def _vjp(self, X, U):
        Y = self.inner._forward(X)
        return self.inner._vjp(X, self.outer._vjp(Y, U))

    def _kinks(self, X):
        Y = self.inner._forward(X)
        return np.concatenate([self.inner._kinks(X), self.outer._kinks(Y)], axis=1)

    def _margin(self, X):
        Y = self.inner._forward(X)
        return np.minimum(self.inner._margin(X), self.outer._margin(Y))


def forward(map_, x):
    return map_.forward(x)


def vjp(map_, x, u):
    return map_.vjp(x, u)


def compose(outer, inner):
    """Chain two maps; composing with an identity is still a Composition."""
    return Composition(outer, inner)


def compose_chain(*maps):
    """compose_chain(a, b, c) == a o b o c."""
    if not maps:
        raise ValueError("need at least one map")
    out = maps[-1]
    for m in reversed(maps[:-1]):
        out = Composition(m, out)
    return out


@dataclass(frozen=True)
class GradCheckReport:
    max_rel_error: float
    worst_coordinate: int
    step_size: float
    nondifferentiable_flag: bool
    tol: float = float("inf")
    worst_output: int = 0

    @property
    def passed(self):
        return self.nondifferentiable_flag or self.max_rel_error <= self.tol


def finite_diff_check(map_, x, h=1e-5, tol=1e-5):
    """Compare the analytic Jacobian (through ``vjp``) with central
    differences, coordinate by coordinate.

    Relative error per entry uses ``max(|analytic|, |numeric|, 1e-12)`` as
    denominator.  The probe is flagged non-differentiable when a
    piecewise-linear unit changes sign within ``h`` of ``x`` along any
    coordinate, or sits exactly on its kink.
    """
    if not h > 0:
        raise ValueError("step size must be positive")
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (map_.input_dim,):
        raise DimensionMismatch("probe has wrong length")
    if not np.all(np.isfinite(x)):
        raise NonFiniteInput("non-finite probe point")

    analytic = map_.jacobian(x)  # (out, in)
    numeric = np.empty_like(analytic)
    flagged = map_.kink_margin(x) == 0.0
    for k in range(map_.input_dim):
        xp, xm = x.copy(), x.copy()
        xp[k] += h
        xm[k] -= h
        numeric[:, k] = (map_.forward(xp) - map_.forward(xm)) / (2.0 * h)
        if not flagged and not np.array_equal(map_.kink_pattern(xp), map_.kink_pattern(xm)):
            flagged = True
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-12)
    rel = np.abs(analytic - numeric) / denom
    worst = np.unravel_index(int(np.argmax(rel)), rel.shape)
    return GradCheckReport(
        max_rel_error=float(rel[worst]),
        worst_coordinate=int(worst[1]),
        step_size=float(h),
        nondifferentiable_flag=bool(flagged),
        tol=float(tol),
        worst_output=int(worst[0]),
    )
