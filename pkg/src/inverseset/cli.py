"""Command-line experiment runner.

    inverseset run CONFIG [CONFIG ...] [--jobs N]
    inverseset plot RUN_DIR [--out FILE]
    inverseset compare RUN_DIR RUN_DIR [...] [--out FILE]
    inverseset check-model MODEL [--points N] [--step H] [--tol T]

Exit codes: 0 success; 1 configuration, model or other errors; 2 when the
seed solver runs out of outer iterations or the walk runs out of steps
(partial artifacts are still written).
"""
from __future__ import annotations

import argparse
import logging
import shutil
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import load_config, loads_config
from .diffmap import finite_diff_check
from .errors import (FingerprintMismatch, InverseSetError, MaxOuterIterationsExceeded,
                     MissingArtifacts, ModelLoadError, WalkBudgetExhausted)
from .export import (read_json, write_json, write_samples_csv, write_trace_csv)
from .metrics import grid_coverage, metrics_report, step_accounting
from .model_io import load_model
from .plot import emit_plot
from .sampler import (SampleSet, _sample_set, ablate_code_space, ablate_feasibility_only,
                      full_batch_solve, maximize_activation, run_sampler)
from .auglag import RNG_ALGORITHM, TraceRecord

log = logging.getLogger("inverseset")

EXIT_OK, EXIT_ERROR, EXIT_BUDGET = 0, 1, 2
SAMPLES, METADATA, TRACE, METRICS, PLOT, CONFIG_COPY, COVERAGE = (
    "samples.csv", "metadata.json", "trace.csv", "metrics.json", "plot.svg", "config.ini",
    "coverage.pgm")


def _dispatch(cfg, problem):
    kw = dict(schedule=cfg.schedule, symmetry_jitter=cfg.symmetry_jitter,
              init_scale=cfg.init_scale)
    init = cfg.initial()
    walk = dict(beta=cfg.beta, max_walk_steps=cfg.max_walk_steps,
                repulse_history=cfg.repulse_history, rng_seed=cfg.rng_seed, **kw)
    if cfg.algorithm == "sample":
        return run_sampler(problem, cfg.n, cfg.K, init, **walk)
    if cfg.algorithm == "full_batch":
        return full_batch_solve(problem, cfg.n, init, rng_seed=cfg.rng_seed,
                                stop=cfg.full_batch_stop, **kw)
    if cfg.algorithm == "ablate_codespace":
        return ablate_code_space(problem, cfg.n, cfg.K, init, **walk)
    if cfg.algorithm == "ablate_feasibility":
        return ablate_feasibility_only(problem, cfg.n, cfg.K, init, **walk)
    return _maximize(cfg, problem)


def _maximize(cfg, problem):
    if cfg.init == "random":
        rng = np.random.default_rng(cfg.rng_seed)
        init = cfg.init_scale * rng.standard_normal(problem.code_dim)
    else:
        init = np.array(cfg.init, dtype=np.float64)
    code, history = maximize_activation(problem, init, cfg.maximize_steps, cfg.beta,
                                        cfg.regularizer_weight, return_history=True)
    acts = problem.activations(code[None, :])
    trace = [TraceRecord(0, t, 0.0, h, (h,), int(t == len(history) - 1
                                                 and problem.feasible(code[None, :])[0]), t)
             for t, h in enumerate(history)]
    meta = {
        "algorithm": "maximize",
        "n": 1,
        "K": 1,
        "walk_beta": cfg.beta,
        "regularizer_weight": cfg.regularizer_weight,
        "rng_seed": cfg.rng_seed,
        "rng_algorithm": RNG_ALGORITHM,
        "feasibility_mode": problem.feasibility_mode,
        "total_grad_steps": int(cfg.maximize_steps),
        "complete": True,
    }
    return SampleSet(code[None, :], acts, np.array([cfg.maximize_steps]), problem.fingerprint(),
                     meta, np.zeros(1, dtype=bool), trace)


def _write_artifacts(cfg, problem, samples, out_dir, status):
    out_dir.mkdir(parents=True, exist_ok=True)
    h = cfg.sha256
    shutil.copyfile(cfg.path, out_dir / CONFIG_COPY)
    write_samples_csv(samples, out_dir / SAMPLES, h, problem.code_dim, problem.p)
    write_trace_csv(samples.trace, out_dir / TRACE, problem.p, h)
    meta = dict(samples.metadata)
    meta.update({
        "config": cfg.name,
        "config_source": str(cfg.path),
        "fingerprint": samples.fingerprint,
        "status": status,
        "samples_written": int(len(samples)),
        "step_accounting": step_accounting([samples]) if "total_grad_steps" in meta else None,
    })
    write_json(meta, out_dir / METADATA, h)
    if len(samples):
        report = metrics_report(samples, problem, cfg.plot_bounds, cfg.plot_resolution)
        if problem.code_dim == 2 and cfg.plot_bounds is not None:
            _, grid = grid_coverage(samples, problem, cfg.plot_resolution, cfg.plot_bounds)
            grid.to_pgm(out_dir / COVERAGE)
    else:
        report = {"n_samples": 0}
    report["status"] = status
    write_json(report, out_dir / METRICS, h)
    if problem.code_dim == 2 or cfg.projection is not None:
        emit_plot(out_dir / SAMPLES, cfg, out_dir / PLOT, problem)


def run_experiment(config_path):
    """Run one config end to end; returns the process exit code."""
    try:
        cfg = load_config(config_path)
        problem = cfg.build_problem()
    except (InverseSetError, ModelLoadError, ValueError) as exc:
        log.error("%s: %s", config_path, exc)
        return EXIT_ERROR
    out_dir = cfg.output_dir
    log.info("%s: %s, writing to %s", cfg.name, cfg.algorithm, out_dir)
    try:
        samples = _dispatch(cfg, problem)
        status, code = "complete", EXIT_OK
    except MaxOuterIterationsExceeded as exc:
        log.error("%s: %s", cfg.name, exc)
        res = exc.result
        feasible = [(c, a, 0) for c, a, ok in
                    zip(res.seeds, res.activations, problem.feasible(res.seeds)) if ok]
        meta = {"algorithm": cfg.algorithm, "n": cfg.n, "K": cfg.K,
                "schedule": cfg.schedule.as_dict(), "rng_seed": cfg.rng_seed,
                "rng_algorithm": RNG_ALGORITHM, "feasibility_mode": problem.feasibility_mode,
                "total_grad_steps": int(res.grad_steps), "complete": False,
                "lambda_star": res.lambda_star.tolist(), "mu_star": float(res.mu_star),
                "error": str(exc)}
        samples = _sample_set(problem, feasible, len(feasible), meta, res.trace)
        status, code = "max_outer_iterations_exceeded", EXIT_BUDGET
    except WalkBudgetExhausted as exc:
        log.error("%s: %s", cfg.name, exc)
        samples = exc.partial
        samples.metadata["error"] = str(exc)
        status, code = "walk_budget_exhausted", EXIT_BUDGET
    except (InverseSetError, ArithmeticError, ValueError) as exc:
        log.error("%s: run failed: %s", cfg.name, exc)
        return EXIT_ERROR
    try:
        _write_artifacts(cfg, problem, samples, out_dir, status)
    except OSError as exc:
        log.error("%s: cannot write artifacts: %s", cfg.name, exc)
        return EXIT_ERROR
    return code


def _run_dir_config(run_dir):
    run_dir = Path(run_dir)
    meta = read_json(run_dir / METADATA)
    copy = run_dir / CONFIG_COPY
    if not copy.is_file():
        raise MissingArtifacts(f"{copy} not found")
    source = Path(meta.get("config_source", copy))
    # Resolve model paths as the original config did; fall back to the copy.
    anchor = source if source.parent.is_dir() else copy
    return loads_config(copy.read_text(encoding="utf-8"), anchor), meta


def plot_run(run_dir, out=None):
    cfg, _ = _run_dir_config(run_dir)
    return emit_plot(Path(run_dir) / SAMPLES, cfg, out or Path(run_dir) / PLOT)


def compare_runs(run_dirs, step_ratio_max=0.1):
    """Merge the metrics of finished runs and evaluate ordering claims.

    Raises :class:`FingerprintMismatch` unless every run solved the same
    problem.
    """
    if len(run_dirs) < 2:
        raise ValueError("compare needs at least two run directories")
    rows = []
    for d in run_dirs:
        d = Path(d)
        meta = read_json(d / METADATA)
        metrics = read_json(d / METRICS)
        div = metrics.get("mean_pairwise_distance", {})
        rows.append({
            "label": d.name,
            "algorithm": meta.get("algorithm"),
            "objective": meta.get("objective"),
            "fingerprint": meta.get("fingerprint"),
            "n": meta.get("n"),
            "status": meta.get("status"),
            "diversity_encoding": div.get("encoding_space"),
            "diversity_code": div.get("code_space"),
            "coverage": metrics.get("grid_coverage", {}).get("ratio"),
            "total_grad_steps": meta.get("total_grad_steps"),
        })
    prints = {r["fingerprint"] for r in rows}
    if len(prints) != 1:
        raise FingerprintMismatch(
            "runs solved different problems: "
            + ", ".join(f"{r['label']}={str(r['fingerprint'])[:12]}" for r in rows))

    checks = []
    by_alg = {}
    for r in rows:
        by_alg.setdefault(r["algorithm"], r)
    ablated = by_alg.get("ablate_feasibility")
    for r in rows:
        if ablated and r["objective"] == "encoding" and r["diversity_encoding"] is not None \
                and ablated["diversity_encoding"] is not None:
            checks.append({
                "check": "diversity_exceeds_feasibility_only",
                "runs": [r["label"], ablated["label"]],
                "values": [r["diversity_encoding"], ablated["diversity_encoding"]],
                "passed": r["diversity_encoding"] > ablated["diversity_encoding"],
            })
    full = by_alg.get("full_batch")
    inc = by_alg.get("sample")
    if full and inc and full["total_grad_steps"]:
        ratio = inc["total_grad_steps"] / full["total_grad_steps"]
        checks.append({
            "check": "step_ratio",
            "runs": [inc["label"], full["label"]],
            "values": [ratio, step_ratio_max],
            "passed": ratio <= step_ratio_max,
        })
    ranked = sorted((r for r in rows if r["diversity_encoding"] is not None),
                    key=lambda r: -r["diversity_encoding"])
    return {
        "fingerprint": rows[0]["fingerprint"],
        "runs": rows,
        "most_diverse": ranked[0]["label"] if ranked else None,
        "checks": checks,
    }


def check_model(path, points=5, h=1e-5, tol=1e-5, seed=0):
    """Finite-difference check of a model file at random points."""
    model = load_model(path)
    rng = np.random.default_rng(seed)
    reports = [finite_diff_check(model, rng.standard_normal(model.input_dim), h, tol)
               for _ in range(points)]
    return model, reports


def _cmd_run(args):
    configs = args.configs
    if args.jobs > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            codes = list(pool.map(_run_isolated, configs, [args.verbose] * len(configs)))
    else:
        codes = [run_experiment(c) for c in configs]
    for c, code in zip(configs, codes):
        print(f"{c}: exit {code}")
    return max(codes)


def _run_isolated(config, verbose):
    _setup_logging(verbose)
    return run_experiment(config)


def _cmd_plot(args):
    try:
        out = plot_run(args.run_dir, args.out)
    except (InverseSetError, FileNotFoundError) as exc:
        log.error("plot: %s", exc)
        return EXIT_ERROR
    print(out)
    return EXIT_OK


def _cmd_compare(args):
    try:
        report = compare_runs(args.run_dirs)
    except (InverseSetError, FileNotFoundError, ValueError) as exc:
        log.error("compare: %s", exc)
        return EXIT_ERROR
    if args.out:
        write_json(report, args.out)
    for r in report["runs"]:
        print(f"{r['label']:<32} {r['algorithm']:<20} steps={r['total_grad_steps']} "
              f"div_enc={r['diversity_encoding']} coverage={r['coverage']}")
    for c in report["checks"]:
        print(f"{'PASS' if c['passed'] else 'FAIL'} {c['check']} {c['runs']} {c['values']}")
    return EXIT_OK


def _cmd_check_model(args):
    try:
        model, reports = check_model(args.model, args.points, args.step, args.tol)
    except (InverseSetError, OSError) as exc:
        log.error("check-model: %s", exc)
        return EXIT_ERROR
    print(f"{args.model}: {model.kind} {model.input_dim}->{model.output_dim}")
    ok = True
    for i, rep in enumerate(reports):
        flag = " (near a kink)" if rep.nondifferentiable_flag else ""
        print(f"  point {i}: max_rel_error={rep.max_rel_error:.3e} "
              f"worst={rep.worst_coordinate}{flag} {'ok' if rep.passed else 'FAIL'}")
        ok &= rep.passed or rep.nondifferentiable_flag
    return EXIT_OK if ok else EXIT_ERROR


def _setup_logging(verbose):
    level = logging.DEBUG if verbose > 1 else logging.INFO if verbose else logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s",
                        stream=sys.stderr, force=True)


def build_parser():
    ap = argparse.ArgumentParser(prog="inverseset", description=__doc__.split("\n\n")[0])
    ap.add_argument("--version", action="version", version=f"inverseset {__version__}")
    ap.add_argument("-v", "--verbose", action="count", default=0,
                    help="log progress (repeat for debug output)")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run experiment configs")
    p.add_argument("configs", nargs="+")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for several configs")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("plot", help="render plot.svg for a finished run")
    p.add_argument("run_dir")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_plot)

    p = sub.add_parser("compare", help="compare runs on the same problem")
    p.add_argument("run_dirs", nargs="+")
    p.add_argument("--out", help="write the report as JSON")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("check-model", help="finite-difference check of a model file")
    p.add_argument("model")
    p.add_argument("--points", type=int, default=5)
    p.add_argument("--step", type=float, default=1e-5)
    p.add_argument("--tol", type=float, default=1e-5)
    p.set_defaults(func=_cmd_check_model)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    _setup_logging(args.verbose)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
