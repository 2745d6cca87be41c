"""Experiment configuration files.

Grammar (INI, parsed with :mod:`configparser`; ``#`` and ``;`` start
comments, keys are case-insensitive)::

    [problem]
    generator = mlp_G_4_16_2.model        ; code -> input
    encoder = mlp_E_2_8_3.model           ; input -> diversity space
    feasibility_mode = paper_one_sided    ; or strict_two_sided

    [constraint.1]                        ; one section per constraint
    model = ring_1d.model, quadratic_2d.model   ; outer first, composed
    z1 = -2.25
    z2 = 0.0

    [run]
    algorithm = sample    ; sample | full_batch | ablate_codespace
                          ; | ablate_feasibility | maximize
    K = 10
    n = 100
    beta = 0.001          ; walk step length
    rng_seed = 0
    init = random         ; random, or a comma-separated shared code vector
    init_scale = 1.0
    symmetry_jitter = auto
    repulse_history = anchors
    max_walk_steps = auto
    full_batch_stop = first_feasible
    output_dir = runs/annulus

    [schedule]
    mu0 = 10
    alpha = 10
    inner_steps = 100
    step_length_beta = 0.01
    max_outer_iters = 50
    multiplier_residual_with_slack = false

    [maximize]
    steps = 100
    regularizer_weight = 0.0

    [plot]
    bounds = -2.5, 2.5, -2.5, 2.5
    resolution = 50
    projection = 0, 1     ; encoding coordinates used when codes are not 2-D

Model paths are resolved relative to the config file, then against the
models shipped with the package.  A relative ``output_dir`` is resolved
against the working directory (default ``runs/<config file stem>``).  The
environment variable ``INVERSESET_OUTPUT_DIR``, if set, replaces the
output root and each run writes to ``$INVERSESET_OUTPUT_DIR/<stem>``.
"""
from __future__ import annotations

import configparser
import hashlib
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from . import diffmap as dm
from .auglag import AugLagSchedule
from .errors import ConfigInvalid, DegenerateBand, DimensionMismatch, ModelLoadError
from .model_io import load_model
from .problem import MODES, PAPER_ONE_SIDED, ActivationBand, ConstraintSpec, InverseSetProblem
from .sampler import REPULSE_MODES

ALGORITHMS = ("sample", "full_batch", "ablate_codespace", "ablate_feasibility", "maximize")
OUTPUT_ENV = "INVERSESET_OUTPUT_DIR"


def models_dir():
    return Path(str(resources.files("inverseset") / "data" / "models"))


def configs_dir():
    return Path(str(resources.files("inverseset") / "data" / "configs"))


@dataclass
class ConstraintConfig:
    name: str
    models: tuple
    z1: float
    z2: float


@dataclass
class ExperimentConfig:
    path: Path
    sha256: str
    generator: str
    encoder: str
    constraints: list
    feasibility_mode: str = PAPER_ONE_SIDED
    algorithm: str = "sample"
    K: int = 10
    n: int = 100
    beta: float = 1e-2
    rng_seed: int = 0
    init: object = "random"
    init_scale: float = 1.0
    symmetry_jitter: object = None
    repulse_history: str = "anchors"
    max_walk_steps: object = None
    full_batch_stop: str = "first_feasible"
    schedule: AugLagSchedule = field(default_factory=AugLagSchedule)
    maximize_steps: int = 100
    regularizer_weight: float = 0.0
    plot_bounds: object = None
    plot_resolution: int = 50
    projection: object = None
    output_dir: Path = None

    @property
    def name(self):
        return self.path.stem

    def resolve_model(self, ref):
        for base in (self.path.parent, models_dir()):
            cand = (base / ref).resolve()
            if cand.is_file():
                return cand
        raise ModelLoadError(f"model file {ref!r} not found (config {self.path.name})")

    def _load(self, ref):
        path = self.resolve_model(ref)
        try:
            return load_model(path)
        except OSError as exc:
            raise ModelLoadError(f"cannot read {path}: {exc}") from exc

    def build_problem(self):
        """Load every referenced model and assemble the problem."""
        G = self._load(self.generator)
        E = self._load(self.encoder)
        specs = []
        for con in self.constraints:
            try:
                f = dm.compose_chain(*(self._load(m) for m in con.models))
            except DimensionMismatch as exc:
                raise ConfigInvalid(f"[{con.name}] models do not compose: {exc}") from exc
            specs.append(ConstraintSpec(f, ActivationBand(con.z1, con.z2)))
        try:
            return InverseSetProblem(G, E, specs, self.feasibility_mode)
        except DimensionMismatch as exc:
            raise ConfigInvalid(f"{self.path.name}: {exc}") from exc

    def initial(self):
        """The ``init`` argument for the solvers: an RNG seed or a shared code."""
        if self.init == "random":
            return self.rng_seed
        return list(self.init)


def _floats(text, what):
    try:
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise ConfigInvalid(f"{what}: expected comma-separated numbers, got {text!r}") from None


def _get(section, key, conv, default, what):
    if key not in section:
        return default
    raw = section[key].strip()
    try:
        return conv(raw)
    except ValueError:
        raise ConfigInvalid(f"{what}.{key}: cannot parse {raw!r}") from None


def _auto(conv):
    def parse(raw):
        return None if raw.lower() == "auto" else conv(raw)
    return parse


def _bool(raw):
    low = raw.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(raw)


def output_root(cfg_path, configured):
    env = os.environ.get(OUTPUT_ENV)
    if env:
        return Path(env) / cfg_path.stem
    out = Path(configured) if configured else Path("runs") / cfg_path.stem
    return out if out.is_absolute() else Path.cwd() / out


def loads_config(text, path):
    """Parse and validate config ``text`` that lives at ``path``."""
    path = Path(path).resolve()
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigInvalid(f"{path.name}: {exc}") from exc
    if "problem" not in cp:
        raise ConfigInvalid(f"{path.name}: missing [problem] section")
    prob = cp["problem"]
    for key in ("generator", "encoder"):
        if key not in prob:
            raise ConfigInvalid(f"[problem] needs '{key}'")
    mode = prob.get("feasibility_mode", PAPER_ONE_SIDED).strip()
    if mode not in MODES:
        raise ConfigInvalid(f"[problem] feasibility_mode must be one of {MODES}, got {mode!r}")

    constraints = []
    for sec in sorted((s for s in cp.sections() if s.startswith("constraint")),
                      key=lambda s: (len(s), s)):
        body = cp[sec]
        for key in ("model", "z1", "z2"):
            if key not in body:
                raise ConfigInvalid(f"[{sec}] needs '{key}'")
        models = tuple(m.strip() for m in body["model"].split(",") if m.strip())
        z1 = _get(body, "z1", float, None, sec)
        z2 = _get(body, "z2", float, None, sec)
        try:
            ActivationBand(z1, z2)
        except DegenerateBand as exc:
            raise ConfigInvalid(f"[{sec}] band z1={z1!r}, z2={z2!r}: {exc}") from exc
        constraints.append(ConstraintConfig(sec, models, z1, z2))
    if not constraints:
        raise ConfigInvalid(f"{path.name}: no [constraint.*] section")

    run = cp["run"] if "run" in cp else {}
    algorithm = run.get("algorithm", "sample").strip()
    if algorithm not in ALGORITHMS:
        raise ConfigInvalid(f"[run] algorithm must be one of {ALGORITHMS}, got {algorithm!r}")
    K = _get(run, "k", int, 10, "run")
    n = _get(run, "n", int, 100, "run")
    if K < 1 or n < K:
        raise ConfigInvalid(f"[run] need n >= K >= 1, got n={n}, K={K}")
    init_raw = run.get("init", "random").strip()
    init = "random" if init_raw == "random" else _floats(init_raw, "run.init")
    repulse = run.get("repulse_history", "anchors").strip()
    if repulse not in REPULSE_MODES:
        raise ConfigInvalid(f"[run] repulse_history must be one of {REPULSE_MODES}")
    stop = run.get("full_batch_stop", "first_feasible").strip()

    sched = cp["schedule"] if "schedule" in cp else {}
    defaults = AugLagSchedule()
    try:
        schedule = AugLagSchedule(
            mu0=_get(sched, "mu0", float, defaults.mu0, "schedule"),
            alpha=_get(sched, "alpha", float, defaults.alpha, "schedule"),
            inner_steps=_get(sched, "inner_steps", int, defaults.inner_steps, "schedule"),
            step_length_beta=_get(sched, "step_length_beta", float,
                                  defaults.step_length_beta, "schedule"),
            max_outer_iters=_get(sched, "max_outer_iters", int,
                                 defaults.max_outer_iters, "schedule"),
            multiplier_residual_with_slack=_get(
                sched, "multiplier_residual_with_slack", _bool,
                defaults.multiplier_residual_with_slack, "schedule"),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigInvalid):
            raise
        raise ConfigInvalid(f"[schedule] {exc}") from exc

    mx = cp["maximize"] if "maximize" in cp else {}
    plot = cp["plot"] if "plot" in cp else {}
    bounds = _floats(plot["bounds"], "plot.bounds") if "bounds" in plot else None
    if bounds is not None and len(bounds) != 4:
        raise ConfigInvalid("[plot] bounds needs four numbers: x_lo, x_hi, y_lo, y_hi")
    projection = None
    if "projection" in plot:
        projection = tuple(int(v) for v in _floats(plot["projection"], "plot.projection"))
        if len(projection) != 2:
            raise ConfigInvalid("[plot] projection needs exactly two coordinates")

    return ExperimentConfig(
        path=path,
        sha256=hashlib.sha256(text.encode("utf-8")).hexdigest(),
        generator=prob["generator"].strip(),
        encoder=prob["encoder"].strip(),
        constraints=constraints,
        feasibility_mode=mode,
        algorithm=algorithm,
        K=K,
        n=n,
        beta=_get(run, "beta", float, 1e-2, "run"),
        rng_seed=_get(run, "rng_seed", int, 0, "run"),
        init=init,
        init_scale=_get(run, "init_scale", float, 1.0, "run"),
        symmetry_jitter=_get(run, "symmetry_jitter", _auto(float), None, "run"),
        repulse_history=repulse,
        max_walk_steps=_get(run, "max_walk_steps", _auto(int), None, "run"),
        full_batch_stop=stop,
        schedule=schedule,
        maximize_steps=_get(mx, "steps", int, 100, "maximize"),
        regularizer_weight=_get(mx, "regularizer_weight", float, 0.0, "maximize"),
        plot_bounds=bounds,
        plot_resolution=_get(plot, "resolution", int, 50, "plot"),
        projection=projection,
        output_dir=output_root(path, run.get("output_dir", "").strip()),
    )


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise ConfigInvalid(f"config file {str(path)!r} not found") from exc
    return loads_config(text, path)


def fixture_config(name):
    """Path of a config shipped with the package, e.g. ``fixture_config("annulus")``."""
    path = configs_dir() / f"{name}.ini"
    if not path.is_file():
        raise ConfigInvalid(f"no shipped config named {name!r}")
    return path
