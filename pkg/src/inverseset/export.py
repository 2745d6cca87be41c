"""Artifact files: samples CSV, metadata and metrics JSON, trace CSV.

Every file starts by naming the tool version and the sha256 of the config
that produced it.  Floats are written with ``repr`` (shortest round-trip
form) and JSON keys are sorted, so equal runs give equal bytes.
"""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .errors import MissingArtifacts, SchemaViolation

TOOL = "inverseset"


def tool_version():
    from . import __version__
    return f"{TOOL} {__version__}"


def provenance_line(config_sha256=None):
    return f"# {tool_version()} config_sha256={config_sha256 or 'none'}"


def _num(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else repr(v)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def dumps_json(doc, config_sha256=None):
    body = dict(_jsonable(doc))
    body["tool"] = tool_version()
    body["config_sha256"] = config_sha256
    return json.dumps(body, sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(doc, path, config_sha256=None):
    Path(path).write_text(dumps_json(doc, config_sha256), encoding="utf-8")


def _write_csv(path, header, rows, config_sha256):
    buf = io.StringIO()
    buf.write(provenance_line(config_sha256) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def samples_header(code_dim, p):
    return (["index", "acceptance_step"]
            + [f"code_{j}" for j in range(code_dim)]
            + [f"activation_{k + 1}" for k in range(p)])


def write_samples_csv(sample_set, path, config_sha256=None, code_dim=None, p=None):
    C = np.asarray(sample_set.codes, dtype=np.float64)
    A = np.asarray(sample_set.activations, dtype=np.float64)
    code_dim = C.shape[1] if C.ndim == 2 and C.shape[0] else code_dim
    p = A.shape[1] if A.ndim == 2 and A.shape[0] else p
    rows = []
    for i in range(C.shape[0]):
        rows.append([str(i), str(int(sample_set.acceptance_step[i]))]
                    + [_num(v) for v in C[i]] + [_num(v) for v in A[i]])
    _write_csv(path, samples_header(code_dim or 0, p or 0), rows, config_sha256)


def _read_csv(path):
    path = Path(path)
    if not path.is_file():
        raise MissingArtifacts(f"{path} not found")
    lines = path.read_text(encoding="utf-8").splitlines()
    provenance = lines[0] if lines and lines[0].startswith("#") else None
    body = lines[1:] if provenance else lines
    rows = list(csv.reader(body))
    if not rows:
        raise SchemaViolation(f"{path}: no header row")
    return provenance, rows[0], rows[1:]


def read_samples_csv(path):
    """Read a samples CSV back as ``(codes, activations, acceptance_step)``."""
    _, header, rows = _read_csv(path)
    code_cols = [i for i, h in enumerate(header) if h.startswith("code_")]
    act_cols = [i for i, h in enumerate(header) if h.startswith("activation_")]
    if header[:2] != ["index", "acceptance_step"]:
        raise SchemaViolation(f"{path}: unexpected samples header {header[:2]}")
    data = np.array([[float(v) for v in r] for r in rows], dtype=np.float64)
    if data.size == 0:
        data = np.zeros((0, len(header)))
    return (data[:, code_cols], data[:, act_cols], data[:, 1].astype(int))


def trace_header(p):
    return (["outer_iter", "inner_step", "mu", "objective"]
            + [f"min_activation_{k + 1}" for k in range(p)]
            + ["feasible_count", "cumulative_grad_steps"])


def write_trace_csv(trace, path, p, config_sha256=None):
    rows = [[str(r.outer_iter), str(r.inner_step), _num(r.mu), _num(r.objective)]
            + [_num(v) for v in r.min_activation]
            + [str(r.feasible_count), str(r.cumulative_grad_steps)]
            for r in trace]
    _write_csv(path, trace_header(p), rows, config_sha256)


def read_trace_csv(path):
    _, header, rows = _read_csv(path)
    return [dict(zip(header, r)) for r in rows]


def read_json(path):
    path = Path(path)
    if not path.is_file():
        raise MissingArtifacts(f"{path} not found")
    return json.loads(path.read_text(encoding="utf-8"))
