"""Evaluation: diversity, feasibility rate, grid coverage, step accounting.

Two distance conventions coexist on purpose.  The optimisation objective
sums *squared* distances over *ordered* pairs; the reported diversity
metric is the *mean* (unsquared) Euclidean distance over *unordered* pairs.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist

from .errors import EmptySet, TooFewSamples, UnsupportedDimension
from .problem import STRICT_TWO_SIDED


def _codes(samples):
    return np.asarray(getattr(samples, "codes", samples), dtype=np.float64)


def mean_pairwise_distance(vectors):
    V = np.asarray(vectors, dtype=np.float64)
    if V.ndim != 2 or V.shape[0] < 2:
        raise TooFewSamples("mean pairwise distance needs at least two vectors")
    return float(np.mean(pdist(V)))


def diversity(samples, problem):
    """Mean pairwise distance of the samples in code and in encoding space."""
    C = _codes(samples)
    return {
        "code_space": mean_pairwise_distance(C),
        "encoding_space": mean_pairwise_distance(problem.encode(C)),
    }


def feasibility_rate(samples, problem, mode=None):
    """Fraction of samples (re-evaluated from their codes) that are feasible."""
    C = _codes(samples)
    if C.size == 0 or C.shape[0] == 0:
        raise EmptySet("no samples to check")
    return float(np.mean(problem.feasible(C, mode)))


@dataclass
class CoverageGrid:
    bounds: tuple
    resolution: int
    feasible_cell_mask: np.ndarray
    covered_cell_mask: np.ndarray

    @property
    def ratio(self):
        n_feasible = int(self.feasible_cell_mask.sum())
        if n_feasible == 0:
            return 0.0
        return float((self.feasible_cell_mask & self.covered_cell_mask).sum() / n_feasible)

    def cell_centers(self):
        x0, x1, y0, y1 = self.bounds
        r = self.resolution
        xs = x0 + (np.arange(r) + 0.5) * (x1 - x0) / r
        ys = y0 + (np.arange(r) + 0.5) * (y1 - y0) / r
        return xs, ys

    def to_pgm(self, path):
        write_pgm(self, path)


def feasible_cells(problem, resolution, bounds, mode=None):
    """Brute-force oracle: evaluate every constraint at every cell centre.

    Row index = first code coordinate, column index = second.
    """
    if problem.code_dim != 2:
        raise UnsupportedDimension(f"grid oracle needs 2-D codes, got {problem.code_dim}")
    x0, x1, y0, y1 = (float(b) for b in bounds)
    if not (np.all(np.isfinite([x0, x1, y0, y1])) and x1 > x0 and y1 > y0):
        raise ValueError("bounds must be finite with lo < hi")
    r = int(resolution)
    xs = x0 + (np.arange(r) + 0.5) * (x1 - x0) / r
    ys = y0 + (np.arange(r) + 0.5) * (y1 - y0) / r
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    centers = np.stack([X.ravel(), Y.ravel()], axis=1)
    return problem.feasible(centers, mode).reshape(r, r)


def cell_index(codes, resolution, bounds):
    """Integer cell indices of each code and a mask of codes inside bounds."""
    x0, x1, y0, y1 = (float(b) for b in bounds)
    C = np.asarray(codes, dtype=np.float64).reshape(-1, 2)
    r = int(resolution)
    ix = np.floor((C[:, 0] - x0) / (x1 - x0) * r).astype(int)
    iy = np.floor((C[:, 1] - y0) / (y1 - y0) * r).astype(int)
    inside = (ix >= 0) & (ix < r) & (iy >= 0) & (iy < r)
    return ix, iy, inside


def grid_coverage(samples, problem, resolution=50, bounds=(-1.0, 1.0, -1.0, 1.0), mode=None,
                  feasible_mask=None):
    """Fraction of feasible grid cells that contain at least one sample.

    ``bounds`` is ``(x_lo, x_hi, y_lo, y_hi)`` in code space.  Pass a
    precomputed ``feasible_mask`` to skip the oracle when scoring prefixes.
    """
    C = _codes(samples)
    if problem.code_dim != 2 or (C.size and C.shape[-1] != 2):
        raise UnsupportedDimension("grid coverage is defined for 2-D codes only")
    r = int(resolution)
    if feasible_mask is None:
        feasible_mask = feasible_cells(problem, r, bounds, mode)
    covered = np.zeros((r, r), dtype=bool)
    if C.size:
        ix, iy, inside = cell_index(C, r, bounds)
        covered[ix[inside], iy[inside]] = True
    grid = CoverageGrid(tuple(float(b) for b in bounds), r, feasible_mask, covered)
    return grid.ratio, grid


def coverage_curve(samples, problem, prefixes, resolution=50, bounds=(-1.0, 1.0, -1.0, 1.0),
                   mode=None):
    C = _codes(samples)
    mask = feasible_cells(problem, resolution, bounds, mode)
    return [grid_coverage(C[:m], problem, resolution, bounds, feasible_mask=mask)[0]
            for m in prefixes]


def nearest_sample_distance_quantiles(vectors, quantiles=(0.1, 0.5, 0.9)):
    """Quantiles of each sample's distance to its nearest other sample.

    The coverage summary used when codes are not 2-D.
    """
    V = np.asarray(vectors, dtype=np.float64)
    if V.shape[0] < 2:
        raise TooFewSamples("need at least two samples")
    dist, _ = cKDTree(V).query(V, k=2)
    q = np.quantile(dist[:, 1], quantiles)
    return {f"q{int(round(100 * p)):02d}": float(v) for p, v in zip(quantiles, q)}


def _steps_of(record):
    meta = getattr(record, "metadata", record)
    return {
        "label": meta.get("label", meta.get("algorithm", "run")),
        "algorithm": meta.get("algorithm", "unknown"),
        "total_grad_steps": int(meta["total_grad_steps"]),
        "samples": int(meta.get("n", len(record) if hasattr(record, "codes") else 0)),
    }


def step_accounting(records):
    """Gradient-step totals per run, and each run's ratio to the reference.

    The reference is the first ``full_batch`` run if there is one, else the
    last record.  With a single record only totals are reported.
    """
    runs = [_steps_of(r) for r in records]
    if not runs:
        raise EmptySet("no run records")
    for run in runs:
        run["steps_per_sample"] = (run["total_grad_steps"] / run["samples"]
                                   if run["samples"] else None)
    out = {"runs": runs}
    if len(runs) >= 2:
        ref = next((i for i, r in enumerate(runs) if r["algorithm"] == "full_batch"),
                   len(runs) - 1)
        ref_steps = runs[ref]["total_grad_steps"]
        out["reference"] = runs[ref]["label"]
        out["ratios"] = [
            (r["total_grad_steps"] / ref_steps) if ref_steps else None
            for r in runs
        ]
    return out


def write_pgm(grid, path):
    """ASCII PGM: 0 infeasible, 128 feasible, 255 feasible and covered.

    Image rows run top to bottom along decreasing second code coordinate.
    """
    feas = grid.feasible_cell_mask
    cov = grid.covered_cell_mask
    img = np.where(feas, 128, 0)
    img = np.where(feas & cov, 255, img)
    img = np.where(~feas & cov, 64, img)
    img = img.T[::-1]
    lines = ["P2", f"{img.shape[1]} {img.shape[0]}", "255"]
    lines.extend(" ".join(str(int(v)) for v in row) for row in img)
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def metrics_report(samples, problem, bounds=None, resolution=50):
    """JSON-ready dict of every metric applicable to the run."""
    C = _codes(samples)
    report = {
        "n_samples": int(C.shape[0]),
        "feasibility_rate": {
            problem.feasibility_mode: feasibility_rate(C, problem),
            STRICT_TWO_SIDED: feasibility_rate(C, problem, STRICT_TWO_SIDED),
        },
    }
    if C.shape[0] >= 2:
        report["mean_pairwise_distance"] = diversity(C, problem)
        report["nearest_sample_distance"] = {
            "code_space": nearest_sample_distance_quantiles(C),
            "encoding_space": nearest_sample_distance_quantiles(problem.encode(C)),
        }
    if problem.code_dim == 2 and bounds is not None:
        ratio, grid = grid_coverage(C, problem, resolution, bounds)
        report["grid_coverage"] = {
            "ratio": ratio,
            "resolution": int(resolution),
            "bounds": list(grid.bounds),
            "feasible_cells": int(grid.feasible_cell_mask.sum()),
        }
    meta = getattr(samples, "metadata", None)
    if meta and "total_grad_steps" in meta:
        report["steps"] = step_accounting([samples])["runs"][0]
    return report
