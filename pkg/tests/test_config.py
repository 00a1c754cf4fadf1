import json
import math
from pathlib import Path

import pytest

from flow.energy import FlowParams
from utils.config import ExperimentConfig, SurfaceSpec, load_config, output_root, save_config
from utils.data_loader import initial_surface
from utils.errors import ConfigError

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def test_defaults_are_valid_in_theorem_mode_only_with_lambda1():
    with pytest.raises(ConfigError, match="lambda1 must be > 0"):
        ExperimentConfig()
    config = ExperimentConfig(theorem_mode=False)
    assert config.params.lambda1 == 0.0


def test_round_trip_through_json(tmp_path):
    config = ExperimentConfig.from_dict({
        "name": "round_trip",
        "surface": {"kind": "perturbed_sphere", "resolution": 2, "epsilon": 0.1},
        "params": {"lambda1": 1.0, "lambda2": 0.5},
        "policy": {"cfl": 0.005, "remesh": {"min_angle_deg": 20.0}},
        "stop": {"t_max": None, "max_steps": 100},
        "diagnostics": {"radii": [0.5]},
    })
    path = save_config(config, tmp_path / "config.json")
    again = load_config(path)
    assert again == config
    assert math.isinf(again.stop.t_max)
    assert again.policy.remesh.min_angle_deg == 20.0
    assert json.loads(Path(path).read_text())["stop"]["t_max"] is None


@pytest.mark.parametrize("data, message", [
    ({"params": {"lambda1": 1.0}, "colour": "red"}, "unknown top-level"),
    ({"params": {"lambda1": 1.0, "kappa": 2.0}}, "unknown field"),
    ({"params": {"lambda1": 1.0}, "surface": {"kind": "cube"}}, "surface.kind"),
    ({"params": {"lambda1": -1.0}}, "lambda1 must be > 0"),
    ({"params": {"lambda1": 1.0}, "policy": {"cfl": 2.0}}, "policy.cfl"),
    ({"params": {"lambda1": 1.0}, "diagnostics": {"radii": [0.0]}}, "radii"),
    ({"params": {"lambda1": 1.0}, "seed": -3}, "seed"),
])
def test_invalid_configs_are_rejected(data, message):
    with pytest.raises(ConfigError, match=message):
        ExperimentConfig.from_dict(data)


def test_negative_lambda1_allowed_outside_theorem_mode():
    config = ExperimentConfig.from_dict({"params": {"lambda1": -1.0}, "theorem_mode": False})
    assert config.params.lambda1 == -1.0


def test_obj_surface_needs_an_existing_file(tmp_path):
    with pytest.raises(ConfigError):
        SurfaceSpec(kind="obj")
    with pytest.raises(ConfigError):
        SurfaceSpec(kind="obj", path=str(tmp_path / "missing.obj"))
    mesh = tmp_path / "mesh.obj"
    mesh.write_text("v 0 0 0\n")
    assert SurfaceSpec(kind="obj", path=str(mesh)).path == str(mesh)


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.json")
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(broken)


def test_output_root_from_environment(monkeypatch, tmp_path):
    monkeypatch.delenv("WILLMORE_OUTPUT_ROOT", raising=False)
    assert output_root() == Path("outputs")
    monkeypatch.setenv("WILLMORE_OUTPUT_ROOT", str(tmp_path))
    config = ExperimentConfig(name="runs", params=FlowParams(lambda1=1.0))
    assert config.resolved_output_dir() == tmp_path / "runs"


@pytest.mark.parametrize("path", sorted(CONFIG_DIR.glob("*.json")), ids=lambda p: p.stem)
def test_shipped_configs_load(path):
    config = load_config(path)
    assert config.theorem_mode
    assert config.params.lambda1 > 0


@pytest.mark.parametrize("path", sorted(CONFIG_DIR.glob("*.json")), ids=lambda p: p.stem)
def test_shipped_configs_coarsen_and_step_below_the_stability_limit(path):
    config = load_config(path)
    # explicit biharmonic steps on an equilateral mesh are stable below about 0.055·h⁴
    assert config.policy.cfl <= 0.055
    assert config.policy.remesh.min_vertices < initial_surface(config.surface, config.seed).n_vertices
    assert config.stop.area_floor_fraction <= 0.01
