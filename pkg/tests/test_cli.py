import json
import re

import numpy as np
import pytest

from inverseset.cli import check_model, compare_runs, main, run_experiment
from inverseset.config import fixture_config, load_config, loads_config, models_dir
from inverseset.errors import ConfigInvalid, FingerprintMismatch, MissingArtifacts, UnsupportedDimension
from inverseset.export import read_samples_csv, read_trace_csv
from inverseset.plot import emit_plot, render_svg
from inverseset.problem import band_new

VERSION_LINE = re.compile(r"^# inverseset \d+\.\d+\.\d+ config_sha256=[0-9a-f]{64}$")


@pytest.fixture
def out_root(tmp_path, monkeypatch):
    monkeypatch.setenv("INVERSESET_OUTPUT_DIR", str(tmp_path / "out"))
    return tmp_path / "out"


def write_config(tmp_path, text, name="exp.ini"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_annulus_run_end_to_end(out_root):
    assert run_experiment(fixture_config("annulus")) == 0
    run = out_root / "annulus"
    codes, acts, steps = read_samples_csv(run / "samples.csv")
    assert codes.shape == (100, 2) and acts.shape == (100, 1)
    metrics = json.loads((run / "metrics.json").read_text())
    assert metrics["feasibility_rate"]["paper_one_sided"] == 1.0
    # independent re-evaluation of the written codes
    r2 = np.sum(codes ** 2, axis=1)
    assert np.all((r2 >= 1.0) & (r2 <= 4.0))
    for name in ("samples.csv", "trace.csv"):
        assert VERSION_LINE.match((run / name).read_text().splitlines()[0])
    meta = json.loads((run / "metadata.json").read_text())
    assert meta["tool"].startswith("inverseset ") and len(meta["config_sha256"]) == 64
    assert meta["config_sha256"] == load_config(fixture_config("annulus")).sha256
    assert "config_sha256=" in (run / "plot.svg").read_text()


def test_degenerate_band_exits_1_naming_band(tmp_path, out_root, caplog):
    text = fixture_config("annulus").read_text().replace("z1 = -2.25", "z1 = 0.0")
    path = write_config(tmp_path, text)
    assert run_experiment(path) == 1
    assert "constraint.1" in caplog.text and "z1=0.0" in caplog.text
    with pytest.raises(ConfigInvalid, match=r"\[constraint.1\] band"):
        load_config(path)


def test_empty_band_exits_2_with_partial_trace(out_root):
    assert run_experiment(fixture_config("empty_band")) == 2
    run = out_root / "empty_band"
    trace = read_trace_csv(run / "trace.csv")
    assert len(trace) == 3 and all(r["feasible_count"] == "0" for r in trace)
    meta = json.loads((run / "metadata.json").read_text())
    assert meta["status"] == "max_outer_iterations_exceeded" and meta["complete"] is False


def test_walk_budget_exits_2(tmp_path, out_root):
    text = fixture_config("annulus").read_text().replace("init = random",
                                                         "init = random\nmax_walk_steps = 2")
    path = write_config(tmp_path, text, "short.ini")
    assert run_experiment(path) == 2
    meta = json.loads((out_root / "short" / "metadata.json").read_text())
    assert meta["status"] == "walk_budget_exhausted"
    assert 10 <= meta["samples_written"] < 100


def test_missing_model_exits_1(tmp_path, out_root):
    text = fixture_config("annulus").read_text().replace("ring_1d.model", "nope.model")
    assert run_experiment(write_config(tmp_path, text)) == 1


def test_config_validation(tmp_path):
    base = fixture_config("annulus").read_text()
    with pytest.raises(ConfigInvalid, match="n >= K"):
        loads_config(base.replace("n = 100", "n = 5"), tmp_path / "a.ini")
    with pytest.raises(ConfigInvalid, match="algorithm"):
        loads_config(base.replace("algorithm = sample", "algorithm = magic"), tmp_path / "a.ini")
    with pytest.raises(ConfigInvalid):
        loads_config("[run]\nK = 2\n", tmp_path / "a.ini")
    # a generator with 3-D output cannot feed the 2-D quadratic constraint
    bad_dims = base.replace("generator = identity_2d.model", "generator = mlp_E_2_8_3.model")
    with pytest.raises(ConfigInvalid):
        loads_config(bad_dims, tmp_path / "a.ini").build_problem()
    with pytest.raises(ConfigInvalid):
        load_config(tmp_path / "missing.ini")


def test_config_paths_and_env(tmp_path, monkeypatch):
    cfg_path = fixture_config("mlp")
    monkeypatch.delenv("INVERSESET_OUTPUT_DIR", raising=False)
    monkeypatch.chdir(tmp_path)
    assert load_config(cfg_path).output_dir == tmp_path / "runs" / "mlp"
    monkeypatch.setenv("INVERSESET_OUTPUT_DIR", str(tmp_path / "x"))
    assert load_config(cfg_path).output_dir == tmp_path / "x" / "mlp"
    cfg = load_config(cfg_path)
    assert cfg.resolve_model("mlp_2_4_1.model") == (models_dir() / "mlp_2_4_1.model").resolve()


def test_reproducible_bytes(tmp_path, monkeypatch):
    cfgs = [fixture_config(n) for n in ("annulus", "mlp", "intersection")]
    trees = []
    for label in ("a", "b"):
        monkeypatch.setenv("INVERSESET_OUTPUT_DIR", str(tmp_path / label))
        assert main(["run", *map(str, cfgs)]) == 0
        trees.append({p.relative_to(tmp_path / label): p.read_bytes()
                      for p in sorted((tmp_path / label).rglob("*")) if p.is_file()})
    assert trees[0] == trees[1] and len(trees[0]) >= 15


def test_jobs_flag_matches_serial(tmp_path, monkeypatch):
    cfgs = [str(fixture_config(n)) for n in ("annulus", "linear_logistic")]
    monkeypatch.setenv("INVERSESET_OUTPUT_DIR", str(tmp_path / "serial"))
    assert main(["run", *cfgs]) == 0
    monkeypatch.setenv("INVERSESET_OUTPUT_DIR", str(tmp_path / "par"))
    assert main(["run", "--jobs", "2", *cfgs]) == 0
    for name in ("annulus", "linear_logistic"):
        for f in ("samples.csv", "metadata.json", "metrics.json", "trace.csv", "plot.svg"):
            assert (tmp_path / "serial" / name / f).read_bytes() == \
                (tmp_path / "par" / name / f).read_bytes()


def test_jobs_exit_code_is_worst(out_root):
    assert main(["run", "--jobs", "2", str(fixture_config("annulus")),
                 str(fixture_config("empty_band"))]) == 2


def test_plot_structure(out_root):
    run_experiment(fixture_config("annulus"))
    svg = (out_root / "annulus" / "plot.svg").read_text()
    assert 'width="800" height="800"' in svg
    assert svg.count('<circle class="sample"') == 100
    assert "constraint 1: [-2.25, 0.0]" in svg
    # ring-shaped shading: no feasible rectangle covers the centre of the plot
    # (code (0, 0) maps to pixel (400, 400)) but some cover the ring radius
    rects = [tuple(float(v) for v in m) for m in re.findall(
        r'class="feasible" x="([\d.]+)" y="([\d.]+)" width="([\d.]+)" height="([\d.]+)"', svg)]
    covers = [x <= 400 <= x + w and y <= 400 <= y + h for x, y, w, h in rects]
    assert rects and not any(covers)
    assert any(x <= 400 + 1.5 * 165 <= x + w and y <= 400 <= y + h for x, y, w, h in rects)
    # every sample lies on, or within one grid cell of, a shaded rectangle
    # (the region is shaded by evaluating cell centres)
    cell = 660 / 50
    for cx, cy in re.findall(r'<circle class="sample" cx="([\d.]+)" cy="([\d.]+)"', svg):
        cx, cy = float(cx), float(cy)
        assert any(x - cell <= cx <= x + w + cell and y - cell <= cy <= y + h + cell
                   for x, y, w, h in rects)


def test_plot_empty_sample_file(tmp_path):
    cfg = load_config(fixture_config("annulus"))
    samples = tmp_path / "samples.csv"
    samples.write_text("# inverseset 0.1.0 config_sha256=none\n"
                       "index,acceptance_step,code_0,code_1,activation_1\n")
    emit_plot(samples, cfg, tmp_path / "p.svg")
    svg = (tmp_path / "p.svg").read_text()
    assert "<circle" not in svg and 'class="feasible"' in svg


def test_plot_needs_projection_for_4d(tmp_path, out_root):
    run_experiment(fixture_config("mlp"))
    cfg = load_config(fixture_config("mlp"))
    cfg.projection = None
    with pytest.raises(UnsupportedDimension):
        emit_plot(out_root / "mlp" / "samples.csv", cfg, tmp_path / "p.svg")
    with pytest.raises(MissingArtifacts):
        emit_plot(tmp_path / "none.csv", cfg, tmp_path / "p.svg")


def test_plot_subcommand(out_root):
    run_experiment(fixture_config("mlp"))
    target = out_root / "mlp" / "again.svg"
    assert main(["plot", str(out_root / "mlp"), "--out", str(target)]) == 0
    assert target.read_bytes() == (out_root / "mlp" / "plot.svg").read_bytes()
    assert main(["plot", str(out_root / "nothing")]) == 1


def test_render_is_pure():
    a = render_svg([[0.5, 0.5]], [3], [band_new(0, 1)], (0, 1, 0, 1))
    assert a == render_svg([[0.5, 0.5]], [3], [band_new(0, 1)], (0, 1, 0, 1))
    assert 'cx="400.000" cy="400.000"' in a


def test_compare_orderings(out_root):
    for name in ("annulus", "annulus_feasibility_only", "mlp_n60", "mlp_full_batch"):
        assert run_experiment(fixture_config(name)) == 0
    rep = compare_runs([out_root / "annulus", out_root / "annulus_feasibility_only"])
    (check,) = rep["checks"]
    assert check["check"] == "diversity_exceeds_feasibility_only" and check["passed"]
    assert rep["most_diverse"] == "annulus"
    rep = compare_runs([out_root / "mlp_n60", out_root / "mlp_full_batch"])
    (check,) = rep["checks"]
    assert check["check"] == "step_ratio"
    assert check["passed"] == (check["values"][0] <= 0.1)
    with pytest.raises(FingerprintMismatch):
        compare_runs([out_root / "annulus", out_root / "mlp_n60"])
    assert main(["compare", str(out_root / "annulus"), str(out_root / "mlp_n60")]) == 1


def test_check_model(capsys):
    _, reports = check_model(models_dir() / "mlp_2_4_1.model")
    assert all(r.passed for r in reports)
    assert main(["check-model", str(models_dir() / "mlp_G_4_16_2.model")]) == 0
    assert "max_rel_error" in capsys.readouterr().out
    assert main(["check-model", "/nonexistent.model"]) == 1


def test_maximize_config(tmp_path, out_root):
    text = fixture_config("linear_logistic").read_text().replace(
        "algorithm = sample", "algorithm = maximize")
    assert run_experiment(write_config(tmp_path, text, "max.ini")) == 0
    codes, acts, steps = read_samples_csv(out_root / "max" / "samples.csv")
    assert codes.shape == (1, 2) and steps[0] == 100
    trace = read_trace_csv(out_root / "max" / "trace.csv")
    values = [float(r["objective"]) for r in trace]
    assert values == sorted(values)


def test_version_flag(capsys):
    with pytest.raises(SystemExit):
        main(["--version"])
    assert capsys.readouterr().out.startswith("inverseset ")
