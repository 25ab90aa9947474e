import json

import numpy as np
import pandas as pd
import pytest

from diffeoreg.cli.config import RunConfig, load_config, locate_key
from diffeoreg.cli.main import EXIT_NUMERICAL, EXIT_OK, EXIT_VALIDATION, main
from diffeoreg.errors import ConfigError
from diffeoreg.io.artifacts import read_point_set, write_vector
from tests.helpers import write_config

SMALL_VF = {
    "family": "vf",
    "domain": {"mesh_resolution": 4},
    "basis": {"degree": 0},
    "target": {"kind": "distributed", "z_space": "zero"},
    "optimizer": {"max_iters": 4, "steps": 10},
    "output": {"grid_density": 5},
}

SMALL_CM = {
    "family": "cm",
    "domain": {"mesh_resolution": 4},
    "basis": {"degree": 1},
    "target": {"kind": "pointwise", "synthetic_points": 12, "synthetic_amplitude": 0.1, "em_outer_iters": 2},
    "optimizer": {"max_iters": 10},
    "output": {"grid_density": 5},
}


def _run(command: str, config_path, out, *extra: str) -> int:
    return main([command, "--config", str(config_path), "--out", str(out), "--log-level", "WARNING", *extra])


def test_default_config_round_trips() -> None:
    config = RunConfig()
    assert RunConfig.from_mapping(json.loads(json.dumps(config.to_dict()))) == config
    assert config.optimizer.max_iters == 100
    assert config.optimizer.step_rule == "bb"
    assert config.modal.forms == ("H1semi", "elasticity(1,1/3)", "H2semi")


def test_unknown_key_reports_its_line(tmp_path) -> None:
    path = write_config(tmp_path, {"family": "vf", "optimizer": {"max_itrs": 5}})
    with pytest.raises(ConfigError) as info:
        load_config(path)
    assert info.value.line == 4
    assert "optimizer.max_itrs" in str(info.value)


@pytest.mark.parametrize(
    ("data", "fragment"),
    [
        ({"seed": "zero"}, "seed"),
        ({"family": "spline"}, "family"),
        ({"optimizer": {"rho": 1.5}}, "optimizer.rho"),
        ({"domain": {"bounds": [0.0, 1.0, 0.0]}}, "domain.bounds"),
        ({"domain": {"kind": "mesh"}}, "mesh_file"),
        ({"target": {"source_file": "missing.csv", "target_file": "missing.csv"}}, "does not exist"),
        ({"basis": {"normalize": 1}}, "basis.normalize"),
        ({"target": {"em_sigma0": 0.0}}, "target.em_sigma0"),
    ],
)
def test_invalid_configs(tmp_path, data: dict, fragment: str) -> None:
    with pytest.raises(ConfigError, match=fragment):
        load_config(write_config(tmp_path, data))


def test_invalid_json_and_missing_file(tmp_path) -> None:
    path = tmp_path / "broken.json"
    path.write_text('{\n  "family": "vf",\n  "seed": \n}\n')
    with pytest.raises(ConfigError) as info:
        load_config(path)
    assert info.value.line is not None
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nowhere.json")


def test_toml_config(tmp_path) -> None:
    path = tmp_path / "run.toml"
    path.write_text('family = "cm"\nseed = 3\n\n[basis]\ndegree = 2\n\n[optimizer]\nscheme = "RK2"\nbogus = 1\n')
    with pytest.raises(ConfigError) as info:
        load_config(path)
    assert info.value.line == 9
    path.write_text('family = "cm"\nseed = 3\n\n[basis]\ndegree = 2\n\n[optimizer]\nscheme = "RK2"\n')
    config = load_config(path)
    assert config.family == "cm"
    assert config.seed == 3
    assert config.basis.degree == 2
    assert config.optimizer.scheme == "RK2"


def test_overrides() -> None:
    config = RunConfig().with_overrides(out="elsewhere", seed=7, threads=2)
    assert (config.output.directory, config.seed, config.threads) == ("elsewhere", 7, 2)
    with pytest.raises(ConfigError):
        RunConfig().with_overrides(threads=0)


def test_locate_key() -> None:
    text = '{\n  "family": "vf",\n  "optimizer": {\n    "steps": 3\n  }\n}'
    assert locate_key(text, "steps") == 4
    assert locate_key(text, "absent") is None
    assert locate_key("", "steps") is None


def test_register_vector_flow(tmp_path) -> None:
    out = tmp_path / "out"
    assert _run("register", write_config(tmp_path, SMALL_VF), out) == EXIT_OK
    for name in ("report.csv", "coefficients.txt", "deformed_grid.csv", "summary.json"):
        assert (out / name).exists(), name
    report = pd.read_csv(out / "report.csv")
    assert report["iter"].iloc[0] == 0
    assert report["objective"].is_monotonic_decreasing
    summary = json.loads((out / "summary.json").read_text())
    assert summary["family"] == "vf"
    assert summary["final_objective"] <= summary["initial_objective"]
    assert summary["bijectivity_verdict"] == "bijective"
    assert len(np.loadtxt(out / "coefficients.txt")) == 2
    grid = pd.read_csv(out / "deformed_grid.csv")
    assert list(grid.columns) == ["x1", "x2", "y1", "y2"]
    assert len(grid) == 25
    assert not (out / "source_points.csv").exists()


def test_register_compositional_with_em(tmp_path) -> None:
    out = tmp_path / "out"
    assert _run("register", write_config(tmp_path, SMALL_CM), out, "--seed", "4") == EXIT_OK
    summary = json.loads((out / "summary.json").read_text())
    assert summary["family"] == "cm"
    assert summary["bijectivity_verdict"] in ("bijective", "inconclusive", "violated")
    assert len(np.loadtxt(out / "coefficients.txt")) == 8
    sources = read_point_set(out / "source_points.csv")
    targets = read_point_set(out / "target_points.csv")
    assert sources.shape == targets.shape == (12, 2)


def test_register_warm_start_and_parameter_sweep(tmp_path) -> None:
    config_path = write_config(tmp_path, SMALL_VF)
    warm = write_vector(np.array([0.05, -0.05]), tmp_path / "warm.txt")
    out = tmp_path / "sweep"
    assert _run("register", config_path, out, "--param-sweep", "0.1,0.3", "--coefficients", str(warm)) == EXIT_OK
    assert (out / "mu_00" / "summary.json").exists()
    second = json.loads((out / "mu_01" / "summary.json").read_text())
    assert second["mu"] == pytest.approx(0.3)

    pointwise = write_config(tmp_path, SMALL_CM, name="cm.json")
    assert _run("register", pointwise, tmp_path / "bad", "--param-sweep", "0.1") == EXIT_VALIDATION


def test_exit_codes_for_bad_input(tmp_path) -> None:
    unknown = write_config(tmp_path, {"famly": "vf"}, name="unknown.json")
    assert _run("register", unknown, tmp_path / "a") == EXIT_VALIDATION
    # two identical snapshots make the projection space singular
    singular = dict(SMALL_VF, target={"kind": "distributed", "z_space": "snapshots", "z_mu": [0.1, 0.1]})
    assert _run("register", write_config(tmp_path, singular, name="singular.json"), tmp_path / "b") == EXIT_NUMERICAL
    with pytest.raises(SystemExit):
        main(["register"])


def test_check_fails_with_too_few_steps(tmp_path) -> None:
    data = dict(SMALL_VF, check={"steps": 5, "seeds_per_side": 3, "random_fields": 2})
    out = tmp_path / "out"
    assert _run("check", write_config(tmp_path, data), out) == 3
    report = json.loads((out / "check_report.json").read_text())
    assert report["passed"] is False
    names = {check["name"] for check in report["checks"]}
    assert {"vf_identity", "vf_round_trip", "vf_direct_vs_adjoint"} <= names
    identity = next(check for check in report["checks"] if check["name"] == "vf_identity")
    assert identity["passed"] is True


def test_compositional_checks(tmp_path) -> None:
    data = dict(SMALL_CM, check={"seeds_per_side": 5, "random_fields": 1})
    out = tmp_path / "out"
    assert _run("check", write_config(tmp_path, data), out) in (EXIT_OK, 3)
    checks = {check["name"]: check for check in json.loads((out / "check_report.json").read_text())["checks"]}
    assert checks["cm_identity"]["passed"]
    assert checks["cm_facet_preservation"]["passed"]
    assert checks["cm_target_gradient"]["passed"]


@pytest.mark.parametrize("kind", ["eigen", "gfem"])
def test_modal_command(tmp_path, kind: str) -> None:
    data = dict(
        SMALL_CM,
        basis={"degree": 1},
        modal={"forms": ["H1semi"], "basis_kind": kind, "gfem_degree": 1, "mu_values": [0.0, 0.5, 1.0]},
    )
    out = tmp_path / "out"
    assert _run("modal", write_config(tmp_path, data), out) == EXIT_OK
    sweep = pd.read_csv(out / "sweep_H1semi.csv")
    assert list(sweep.columns) == ["m", "E_proj", "E_obj"]
    assert sweep["m"].iloc[0] == 0
    assert sweep["E_proj"].iloc[0] == pytest.approx(1.0)
    assert sweep["E_proj"].is_monotonic_decreasing
    assert (out / "basis_H1semi.txt").exists()
    assert np.loadtxt(out / "snapshots.txt").shape == (3, 8)


def test_flow_eval(tmp_path) -> None:
    config_path = write_config(tmp_path, SMALL_VF)
    coefficients = write_vector(np.array([0.2, -0.1]), tmp_path / "a.txt")
    out = tmp_path / "out"
    assert _run("flow-eval", config_path, out, "--coefficients", str(coefficients)) == EXIT_OK
    flow = pd.read_csv(out / "flow.csv")
    assert len(flow) == 25 * 11
    assert flow.groupby("seed_id")["t"].max().eq(1.0).all()

    cm_path = write_config(tmp_path, SMALL_CM, name="cm.json")
    assert _run("flow-eval", cm_path, out, "--coefficients", str(coefficients)) == EXIT_VALIDATION
