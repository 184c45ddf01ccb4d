import json
from pathlib import Path

import jsonschema
import pytest

from mmfl_sim.batch_adapt import IterationRule
from mmfl_sim.config import (CONFIG_SCHEMA, ArmConfig, Selector, SimulationConfig,
                             load_config, validate_config_dict)
from mmfl_sim.domain import ConfigurationError

DOCS = Path(__file__).resolve().parent.parent / "docs"


def test_defaults():
    cfg = SimulationConfig()
    assert cfg.clients.count == 200
    assert (cfg.batch.m0, cfg.batch.k0, cfg.selection.alpha) == (10, 20, 1.0)
    assert cfg.selection.per_model_clients == 10 and len(cfg.models) == 3
    assert cfg.batch.iteration_rule is IterationRule.PROGRESS_MATCHING
    assert cfg.dynamic_deadline
    assert not cfg.replace(**{"selection.selector": "greedy"}).dynamic_deadline
    assert cfg.replace(**{"selection.selector": "greedy", "deadline.dynamic": True}).dynamic_deadline


def test_round_trip_through_dict():
    cfg = SimulationConfig().replace(**{"seed": 4, "selection.alpha": 0.1})
    data = cfg.to_dict()
    again = SimulationConfig.from_dict(data)
    assert again == cfg
    assert again.to_dict() == data
    assert isinstance(again.experiment.arms[0], ArmConfig)
    assert again.experiment.arms[1].selector is Selector.RANDOM


def test_default_config_satisfies_schema():
    jsonschema.Draft7Validator.check_schema(CONFIG_SCHEMA)
    validate_config_dict(SimulationConfig().to_dict())
    validate_config_dict({})


def test_published_schema_matches_code():
    published = json.loads((DOCS / "config.schema.json").read_text())
    published.pop("$schema")
    published.pop("title")
    assert published == json.loads(json.dumps(CONFIG_SCHEMA))


def test_published_default_config_loads():
    assert load_config(DOCS / "default_config.json") == SimulationConfig()


@pytest.mark.parametrize("data, where", [
    ({"bogus": 1}, "<root>"),
    ({"selection": {"alpah": 1.0}}, "selection"),
    ({"selection": {"selector": "oort"}}, "selection.selector"),
    ({"clients": {"count": 0}}, "clients.count"),
    ({"learning": {"beta": 1.0}}, "learning.beta"),
    ({"models": []}, "models"),
    ({"models": [{"model_id": "a"}]}, "models.0"),
    ({"experiment": {"arms": [{"name": "has space"}]}}, "experiment.arms.0.name"),
    ({"seed": -1}, "seed"),
])
def test_schema_rejects_with_field_path(data, where):
    with pytest.raises(ConfigurationError) as err:
        SimulationConfig.from_dict(data)
    assert f"{where}:" in str(err.value)


@pytest.mark.parametrize("overrides", [
    {"batch": {"m0": 5}},
    {"batch": {"m_min": 50, "m_max": 40}},
    {"experiment": {"arms": [{"name": "a"}, {"name": "a"}]}},
    {"models": [{"model_id": "x", "target_accuracy": 0.5, "a_max": 0.9, "rate": 1e-5},
                {"model_id": "x", "target_accuracy": 0.5, "a_max": 0.9, "rate": 1e-5}]},
])
def test_semantic_validation(overrides):
    with pytest.raises(ConfigurationError):
        SimulationConfig.from_dict(overrides)


def test_load_config_reports_json_position(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "seed": 1,\n  "rounds": ,\n}')
    with pytest.raises(ConfigurationError) as err:
        load_config(path)
    assert "line 3" in str(err.value)


def test_load_config_partial(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"seed": 3, "selection": {"alpha": 10}}))
    cfg = load_config(path)
    assert cfg.seed == 3 and cfg.selection.alpha == 10
    assert cfg.selection.per_model_clients == 10
