import json
from pathlib import Path

import pytest
from pydantic import ValidationError

from fermi_blockade.config import RunConfig, load_config
from fermi_blockade.gas import EXPERIMENT_TRAP, SR87
from fermi_blockade.schemas import Method
from fermi_blockade.util import dget


EXPERIMENT_CONFIG = Path(__file__).parent.parent / "configs" / "experiment.json"



def test_defaults_should_be_experiment_values():
    config = RunConfig()
    assert config.trap.to_trap() == EXPERIMENT_TRAP
    assert config.species.to_species() == SR87
    assert config.trap.n_atoms_total == 180000
    assert [a.label for a in config.axes()] == ["24deg", "72deg"]
    assert config.task.sweep_temperature.grid[0] == 0.1
    assert config.task.sweep_temperature.grid[-1] == 0.7
    assert config.task.sweep_fermi.grid[-1] == 0.93
    assert config.task.suppression.method == Method.quadrature



def test_experiment_file_should_match_defaults():
    config = load_config(EXPERIMENT_CONFIG)
    defaults = RunConfig()
    assert config.trap.omega_z == pytest.approx(defaults.trap.omega_z, rel=1e-9)
    assert config.species.mass == pytest.approx(defaults.species.mass, rel=1e-9)
    assert config.task == defaults.task
    assert config.drive == defaults.drive



def test_unknown_keys_should_be_rejected():
    with pytest.raises(ValidationError):
        RunConfig.parse_obj({"trap": {"omega_w": 1.0}})
    with pytest.raises(ValidationError):
        RunConfig.parse_obj({"plotting": {}})



def test_nonphysical_values_should_be_rejected():
    with pytest.raises(ValidationError):
        RunConfig.parse_obj({"trap": {"omega_x": -754.0}})
    with pytest.raises(ValidationError):
        RunConfig.parse_obj({"detection": []})
    with pytest.raises(ValidationError):
        RunConfig.parse_obj({"detection": [{"alpha": 200.0}]})
    with pytest.raises(ValidationError):
        RunConfig.parse_obj({"task": {"budget": {"axis_index": 2}}})



def test_seed_override_should_reach_every_task():
    config = RunConfig().with_seed(42)
    assert config.task.suppression.seed == 42
    assert config.task.prepulse.seed == 42
    assert config.digest() != RunConfig().digest()
    assert RunConfig().digest() == RunConfig().digest()



def test_schema_should_flag_required_and_drop_titles():
    schema = RunConfig.schema()
    assert "required" not in schema
    trap = dget(schema, "definitions", "TrapBlock", "properties")
    assert dget(trap, "omega_x", "required") is False
    assert "title" not in trap["omega_x"]
    axis = dget(schema, "definitions", "AxisBlock", "properties")
    assert dget(axis, "alpha", "required") is True
    assert dget(axis, "label", "nullable") is True
    json.dumps(schema)
