"""Textual model files.

Format::

    inverseset-model v1
    kind: mlp
    input_dim: 2
    output_dim: 1
    layers: 2,4,1
    activation: tanh
    params:
    0.25
    -1.5
    ...

``layers`` and ``activation`` (and the optional ``output_activation``)
only appear for ``kind: mlp``.  ``layers`` may also be written as explicit
per-layer shapes ``2x4,4x1``, which lets a file state inconsistent
neighbouring layers (rejected with :class:`DimensionMismatch`).  Parameters
are written one per line in shortest round-trip decimal form (``repr``), so
``save_model(load_model(p))`` reproduces a saved file byte for byte.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from . import diffmap as dm
from .errors import DimensionMismatch, SchemaViolation, UnsupportedKind

HEADER = "inverseset-model v1"
_SERIALIZABLE = ("linear_logistic", "mlp", "quadratic", "affine", "identity",
                 "coordinate_projection")


def _fmt(v):
    return repr(float(v))


def dumps_model(map_):
    if map_.kind not in _SERIALIZABLE:
        raise UnsupportedKind(f"kind {map_.kind!r} cannot be written to a model file")
    lines = [HEADER,
             f"kind: {map_.kind}",
             f"input_dim: {map_.input_dim}",
             f"output_dim: {map_.output_dim}"]
    for key, value in map_.describe().items():
        lines.append(f"{key}: {value}")
    lines.append("params:")
    lines.extend(_fmt(p) for p in map_.parameters)
    return "\n".join(lines) + "\n"


def save_model(map_, path):
    Path(path).write_text(dumps_model(map_), encoding="utf-8")


def _parse_layers(text):
    tokens = [t.strip() for t in text.split(",") if t.strip()]
    if not tokens:
        raise SchemaViolation("empty layers field")
    try:
        if any("x" in t for t in tokens):
            shapes = [tuple(int(v) for v in t.split("x")) for t in tokens]
            if any(len(s) != 2 for s in shapes):
                raise SchemaViolation(f"bad layer shape in {text!r}")
            for (_, out), (inp, _) in zip(shapes[:-1], shapes[1:]):
                if out != inp:
                    raise DimensionMismatch(
                        f"layer emits {out} values but next layer expects {inp}")
            return [shapes[0][0]] + [s[1] for s in shapes]
        return [int(t) for t in tokens]
    except ValueError as exc:
        if isinstance(exc, (SchemaViolation, DimensionMismatch)):
            raise
        raise SchemaViolation(f"bad layers field {text!r}") from exc


def loads_model(text):
    lines = text.splitlines()
    if not lines or lines[0].strip() != HEADER:
        raise SchemaViolation(f"missing header line {HEADER!r}")
    fields = {}
    params = None
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if params is not None:
            if not line:
                continue
            try:
                params.append(float(line))
            except ValueError:
                raise SchemaViolation(f"line {lineno}: not a number: {line!r}") from None
            continue
        if not line or line.startswith("#"):
            continue
        if line == "params:":
            params = []
            continue
        key, sep, value = line.partition(":")
        if not sep:
            raise SchemaViolation(f"line {lineno}: expected 'key: value'")
        fields[key.strip()] = value.strip()
    if params is None:
        raise SchemaViolation("missing 'params:' section")
    for key in ("kind", "input_dim", "output_dim"):
        if key not in fields:
            raise SchemaViolation(f"missing field {key!r}")
    kind = fields["kind"]
    if kind not in dm.KINDS:
        raise UnsupportedKind(f"unsupported kind {kind!r}")
    if kind not in _SERIALIZABLE:
        raise UnsupportedKind(f"kind {kind!r} has no file representation")
    try:
        n_in, n_out = int(fields["input_dim"]), int(fields["output_dim"])
    except ValueError:
        raise SchemaViolation("input_dim/output_dim must be integers") from None
    p = np.array(params, dtype=np.float64)
    if not np.all(np.isfinite(p)):
        raise SchemaViolation("parameters must be finite")

    if kind == "mlp":
        if "layers" not in fields:
            raise SchemaViolation("mlp needs a layers field")
        widths = _parse_layers(fields["layers"])
        model = dm.MLP(widths, p, fields.get("activation", "tanh"),
                       fields.get("output_activation", "identity"))
    elif kind == "identity":
        if p.size:
            raise SchemaViolation("identity takes no parameters")
        model = dm.Identity(n_in)
    elif kind == "affine":
        if p.size != n_out * n_in + n_out:
            raise SchemaViolation("affine parameter count mismatch")
        model = dm.Affine(p[:n_out * n_in].reshape(n_out, n_in), p[n_out * n_in:])
    elif kind == "linear_logistic":
        if p.size != n_in + 1:
            raise SchemaViolation("linear_logistic parameter count mismatch")
        model = dm.LinearLogistic(p[:n_in], p[n_in])
    elif kind == "quadratic":
        if p.size != n_in * n_in + n_in + 1:
            raise SchemaViolation("quadratic parameter count mismatch")
        model = dm.Quadratic(p[:n_in * n_in].reshape(n_in, n_in),
                             p[n_in * n_in:n_in * n_in + n_in], p[-1])
    else:
        model = dm.CoordinateProjection(n_in, p)

    if (model.input_dim, model.output_dim) != (n_in, n_out):
        raise DimensionMismatch(
            f"declared dims {n_in}->{n_out} disagree with {kind} body "
            f"{model.input_dim}->{model.output_dim}")
    return model


def load_model(path):
    return loads_model(Path(path).read_text(encoding="utf-8"))
