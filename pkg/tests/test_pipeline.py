import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from metid import ConfigurationError, Domain, ParseError
from metid.cli import main
from metid.pipeline import (
    PipelineError,
    fit_met_stage,
    load_config,
    load_observations,
    parse_config,
    run_identify,
    run_mc_met,
    simulate_observations,
)

from conftest import D

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def cfg_for(name, tmp_path, *extra):
    return load_config(CONFIGS / f"{name}.cfg", [f"output.dir={tmp_path}", *extra])


def write(tmp_path, text, name="obs.csv"):
    p = tmp_path / name
    p.write_bytes(text.encode())
    return p


def test_load_two_points(tmp_path):
    obs = load_observations(write(tmp_path, "x,u\n0.0,1.0\n0.5,0.75\n"), D)
    assert len(obs) == 2
    np.testing.assert_array_equal(obs.u, [1.0, 0.75])


def test_load_sorts_and_skips_comments(tmp_path):
    obs = load_observations(write(tmp_path, "# note\nx,u\n0.5,0.75\n\n-0.5,0.7\n"), D)
    np.testing.assert_array_equal(obs.x, [-0.5, 0.5])


@pytest.mark.parametrize(
    "text, line, match",
    [
        ("x\n0.0\n", 1, "header"),
        ("x,u\n0.0\n", 2, "columns"),
        ("x,u\n1.0,0.0\n", 2, "strictly inside"),
        ("x,u\n0.1,0.2\n0.3,abc\n", 3, "non-numeric"),
        ("x,u\n0.1,nan\n", 2, "non-finite"),
        ("x,u\n0.1,-0.2\n", 2, "negative"),
        ("x,u\n0.1,0.2\n0.1,0.3\n", 3, "duplicate"),
        ("", 1, "header"),
    ],
)
def test_load_errors_name_the_line(tmp_path, text, line, match):
    with pytest.raises(ParseError, match=match) as info:
        load_observations(write(tmp_path, text), D)
    assert info.value.line == line
    assert str(info.value).startswith(f"line {line}:")


def test_load_rejects_header_only(tmp_path):
    with pytest.raises(ParseError):
        load_observations(write(tmp_path, "x,u\n"), D)


def test_parse_config():
    vals = parse_config("# c\ndomain.a = -2  # left end\ngrid.J=10\n")
    assert vals == {"domain.a": "-2", "grid.J": "10"}
    with pytest.raises(ParseError, match="unknown key") as info:
        parse_config("grid.J = 3\nbogus = 1\n")
    assert info.value.line == 2
    with pytest.raises(ParseError):
        parse_config("grid.J 3\n")


def test_config_defaults_and_overrides(tmp_path):
    cfg = load_config(None, ["grid.J=40", f"output.dir={tmp_path}"])
    assert cfg.J == 40 and cfg.domain == Domain(-1, 1) and cfg.met_K == 16
    assert cfg.search.sigma_range == (0.01, 2.0, 0.01)
    assert cfg.true_drift is None
    assert "grid.J=40" in cfg.echo()
    with pytest.raises(ParseError):
        load_config(None, ["nope=1"])
    with pytest.raises(ParseError):
        load_config(None, ["grid.J"])
    with pytest.raises(ConfigurationError):
        load_config(None, ["search.sigma=1, 2"])
    with pytest.raises(ConfigurationError):
        load_config(None, ["domain.a=1", "domain.b=0"])
    with pytest.raises(ConfigurationError):
        load_config(None, ["true.drift.poly=0, 1", "true.drift.hill=1, 2, 3, 4"])


def test_example_configs_parse():
    one = load_config(CONFIGS / "example1.cfg")
    np.testing.assert_array_equal(one.true_drift.coefficients, [0, 1, 0, -4, 0, 3.5])
    two = load_config(CONFIGS / "example2.cfg")
    assert two.true_drift(0.0) == pytest.approx(0.4)
    three = load_config(CONFIGS / "example3.cfg")
    assert three.true_noise.alpha == 0.6 and three.epsilon == 1.0 and three.search.trim == 0.05


def test_simulate_example1(tmp_path):
    cfg = cfg_for("example1", tmp_path)
    obs, path = simulate_observations(cfg)
    text = path.read_text()
    rows = [l for l in text.splitlines() if l and not l.startswith("#")]
    assert rows[0] == "x,u" and len(rows) == 240
    assert "# 239 interior points" in text
    assert "# true.sigma=1" in text
    back = load_observations(path, cfg.domain)
    np.testing.assert_array_equal(back.x, obs.x)
    np.testing.assert_array_equal(back.u, obs.u)


def test_simulate_brownian_parabola(tmp_path):
    cfg = load_config(None, [f"output.dir={tmp_path}", "true.sigma=1", "true.drift.poly=0"])
    obs, _ = simulate_observations(cfg)
    assert np.max(np.abs(obs.u - (1 - obs.x**2))) <= 1e-3


def test_simulate_needs_true_model(tmp_path):
    with pytest.raises(ConfigurationError):
        simulate_observations(load_config(None, [f"output.dir={tmp_path}"]))


def test_fit_stage_writes_json(tmp_path):
    fit_met_stage(cfg_for("example1", tmp_path))
    data = json.loads((tmp_path / "met_fit.json").read_text())
    assert data["support"] == [1, 3, 5, 7, 9, 11, 13]
    assert data["config"]["met.K"] == "16"


def test_run_identify_example1(tmp_path):
    out = run_identify(cfg_for("example1", tmp_path))
    model = json.loads((tmp_path / "learned_model.json").read_text())
    assert model["sigma_L"] == 1.0 and model["epsilon"] == 0.0 and "alpha_L" not in model
    assert [t["power"] for t in model["drift"]] == [1, 3, 5]
    assert model["objective"] == out["model"].objective
    surface = (tmp_path / "error_surface.csv").read_text().splitlines()
    body = [l for l in surface if not l.startswith("#")]
    assert body[0] == "sigma,alpha,G" and len(body) == 201
    met = [l for l in (tmp_path / "met_comparison.csv").read_text().splitlines() if not l.startswith("#")]
    assert met[0] == "x,u_observed,u_learned" and len(met) == 240
    drift = [l for l in (tmp_path / "drift_comparison.csv").read_text().splitlines() if not l.startswith("#")]
    assert drift[0] == "x,f_true,f_learned"


def test_run_identify_from_observation_file(tmp_path):
    cfg = cfg_for("example1", tmp_path / "sim")
    _, path = simulate_observations(cfg)
    blind = load_config(None, [f"output.dir={tmp_path / 'blind'}", f"observations={path}", "search.sigma=0.9, 1.1, 0.01"])
    out = run_identify(blind)
    assert out["model"].sigma == 1.0
    row = [l for l in (tmp_path / "blind" / "drift_comparison.csv").read_text().splitlines() if not l.startswith("#")][1]
    assert row.split(",")[1] == ""


def test_identify_is_deterministic(tmp_path):
    files = ("learned_model.json", "error_surface.csv", "met_comparison.csv", "drift_comparison.csv", "met_fit.json")
    snapshots = []
    for _ in range(2):
        run_identify(cfg_for("example1", tmp_path, "search.sigma=0.9, 1.1, 0.01"))
        snapshots.append({f: (tmp_path / f).read_bytes() for f in files})
    assert snapshots[0] == snapshots[1]


def test_failed_search_keeps_earlier_artifacts(tmp_path):
    cfg = cfg_for("example1", tmp_path, "search.sigma=0, 0, 0.01")
    with pytest.raises(PipelineError) as info:
        run_identify(cfg)
    assert info.value.stage == "search"
    assert (tmp_path / "observations.csv").exists() and (tmp_path / "met_fit.json").exists()
    assert not (tmp_path / "learned_model.json").exists()


def test_mc_stage(tmp_path):
    cfg = load_config(
        None,
        [f"output.dir={tmp_path}", "true.sigma=1", "true.drift.poly=0", "mc.dt=1e-3", "mc.n_paths=2000", "seed=5"],
    )
    est = run_mc_met(cfg)
    data = json.loads((tmp_path / "mc_met.json").read_text())
    assert data["mean"] == est.mean and data["solver_met"] == pytest.approx(1.0, abs=1e-3)
    assert {"stderr", "censored_fraction", "config"} <= set(data)


def test_cli_success(tmp_path, capsys):
    assert main(["identify", "-c", str(CONFIGS / "example1.cfg"), "-o", str(tmp_path), "--set", "search.sigma=0.95, 1.05, 0.01"]) == 0
    assert "sigma_L=1" in capsys.readouterr().out


def test_cli_parse_error(tmp_path, capsys):
    bad = write(tmp_path, "x,u\n0.1,0.2\n2.0,0.1\n")
    code = main(["fit-met", "-o", str(tmp_path), "--observations", str(bad)])
    assert code == 2
    assert "line 3" in capsys.readouterr().err
    assert main(["fit-met", "-c", str(tmp_path / "missing.cfg")]) == 2
    assert main(["fit-met", "--set", "grid.J=1"]) == 2


def test_cli_numerical_error(tmp_path):
    code = main(["simulate-met", "-o", str(tmp_path), "--set", "true.sigma=0", "--set", "true.drift.poly=0, 1"])
    assert code == 3


def test_cli_identification_error(tmp_path):
    code = main(["identify", "-c", str(CONFIGS / "example1.cfg"), "-o", str(tmp_path), "--set", "search.sigma=0, 0, 0.01"])
    assert code == 4


def test_cli_module_entry_point(tmp_path):
    res = subprocess.run(
        [sys.executable, "-m", "metid", "simulate-met", "-c", str(CONFIGS / "example3.cfg"), "--output", str(tmp_path / "o.csv")],
        capture_output=True,
        text=True,
    )
    assert res.returncode == 0, res.stderr
    assert "239 observations" in res.stdout
