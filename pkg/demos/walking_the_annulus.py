"""The incremental walk on a ring-shaped inverse set.

Seeds are found once, then each walk step moves all K walkers by one
gradient step of the sampling Lagrangian and keeps every feasible move.
We report how many walk steps 500 samples took (49 is the floor for
K = 10), how much of the ring the samples reach, and write an SVG.
"""
import argparse
from pathlib import Path

import numpy as np

from inverseset import coverage_curve, fixture_config, load_config, run_sampler
from inverseset.metrics import feasible_cells
from inverseset.plot import render_svg


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=500)
    ap.add_argument("--out", type=Path, default=Path("annulus_walk.svg"))
    args = ap.parse_args()

    cfg = load_config(fixture_config("annulus"))
    problem = cfg.build_problem()
    s = run_sampler(problem, args.n, cfg.K, cfg.initial(), cfg.schedule, cfg.beta)
    meta = s.metadata
    print(f"{len(s)} samples: {meta['seed_grad_steps']} seeding steps, "
          f"{meta['walk_steps']} walk steps (floor {(args.n - cfg.K) // cfg.K})")

    r = np.linalg.norm(s.codes, axis=1)
    print(f"radius range {r.min():.3f} .. {r.max():.3f} (the set is 1 <= r <= 2)")
    bounds = cfg.plot_bounds
    prefixes = [m for m in (50, 100, 250, 500) if m <= args.n]
    for m, c in zip(prefixes, coverage_curve(s, problem, prefixes, 50, bounds)):
        print(f"  coverage after {m:4d} samples: {c:.3f}")

    mask = feasible_cells(problem, 50, bounds)
    args.out.write_text(render_svg(s.codes, s.acceptance_step, problem.bands, bounds, mask,
                                   title="annulus walk"))
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
