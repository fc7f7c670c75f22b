"""
Tests for generator configuration
"""
import pytest

from certiplace.config import (
    MAX_WHITE_SPACE,
    McConfig,
    MsConfig,
    default_output_dir,
    load_mc_config,
    load_ms_config,
    parse_degrees,
    parse_macros,
)
from certiplace.core import DegreeHistogram, Region
from certiplace.errors import ConfigError


def test_load_ms_config_file_and_overrides(tmp_path):
    """Test that overrides win over config file values"""
    path = tmp_path / "ms.cfg"
    path.write_text(
        "# mixed-size run\n"
        "name = bench\n"
        "std_cells = 200\n"
        "white_space = 0.2\n"
        "region = 0,0,40,20\n"
        "degrees = 2:150,3:40,4:10\n"
        "macros = m0:0,0,8,8:fixed;m1:20,10,6,4:movable\n"
    )
    config = load_ms_config(path, {"white_space": "max", "seed": 9, "pads": None})

    assert config.name == "bench"
    assert config.std_cells == 200
    assert config.white_space == MAX_WHITE_SPACE
    assert config.seed == 9
    assert config.region == Region(0, 0, 40, 20)
    assert config.histogram().to_dict() == {2: 150, 3: 40, 4: 10}
    assert [(m.id, m.fixed) for m in config.macros] == [("m0", True), ("m1", False)]
    assert config.macros[1].xh == 26


def test_seed_from_environment(monkeypatch):
    """Test that the seed falls back to CERTIPLACE_SEED"""
    monkeypatch.setenv("CERTIPLACE_SEED", "42")
    assert load_ms_config().seed == 42
    monkeypatch.setenv("CERTIPLACE_SEED", "forty-two")
    with pytest.raises(ConfigError, match="CERTIPLACE_SEED"):
        load_mc_config()


def test_output_dir_from_environment(monkeypatch):
    """Test the output directory default"""
    monkeypatch.delenv("CERTIPLACE_OUTPUT_DIR", raising=False)
    assert default_output_dir() == "."
    monkeypatch.setenv("CERTIPLACE_OUTPUT_DIR", "/tmp/bench")
    assert default_output_dir() == "/tmp/bench"


def test_unknown_key():
    """Test that a misspelled key is rejected"""
    with pytest.raises(ConfigError, match="white_spaces"):
        MsConfig.from_mapping({"white_spaces": "0.1"})


def test_missing_config_file(tmp_path):
    """Test that a missing file is a config error"""
    with pytest.raises(ConfigError, match="not found"):
        load_ms_config(tmp_path / "nope.cfg")


@pytest.mark.parametrize("values, message", [
    ({"std_cells": "0"}, "std_cells"),
    ({"white_space": "1.5"}, r"white_space must be in \[0, 1\]"),
    ({"bfs_iteration_limit": "100"}, r"bfs_iteration_limit must be in \[200, 800\]"),
    ({"bfs_iteration_limit": "801"}, "bfs_iteration_limit"),
    ({"utilization": "0"}, "utilization"),
    ({"degrees": "1:10"}, "degree 1"),
    ({"macros": "m:90,90,20,20"}, "outside the region"),
    ({"macros": "m:0,0,1,1;m:5,5,1,1"}, "duplicate macro"),
    ({"chain_span": "0"}, "chain_span"),
    ({"std_cells": "ten"}, "integer"),
])
def test_validate(values, message):
    """Test rejection of out-of-range parameters"""
    with pytest.raises(ConfigError, match=message):
        load_ms_config(None, values)


def test_validate_bounds_accepted():
    """Test that the closed ends of the white space and BFS limit ranges are accepted"""
    config = load_ms_config(None, {"white_space": "1.0", "bfs_iteration_limit": "800"})
    assert config.white_space == MAX_WHITE_SPACE
    assert load_ms_config(None, {"bfs_iteration_limit": "200"}).bfs_iteration_limit == 200


def test_mapping_round_trip():
    """Test that a resolved config reloads to the same values"""
    config = load_ms_config(None, {
        "name": "rt", "seed": 4, "degrees": "2:10,5:2", "macros": "m:1,1,2,2", "pack": "yes",
    })
    again = MsConfig.from_mapping(config.to_mapping())
    assert again.to_mapping() == config.to_mapping()
    assert again.pack is True


def test_parse_helpers():
    """Test the degree and macro field syntaxes"""
    assert parse_degrees({"2": "3"}) == DegreeHistogram({2: 3})
    with pytest.raises(ConfigError):
        parse_degrees("2-3")
    with pytest.raises(ConfigError, match="unknown flag"):
        parse_macros("m:0,0,1,1:sticky")
    assert parse_macros("") == []


def test_mc_config():
    """Test the netlist rewriter config"""
    config = load_mc_config(None, {"seed": 1, "snap": "true", "max_chains_per_terminal": "2"})
    assert config.snap and config.max_chains_per_terminal == 2
    assert McConfig.from_mapping(config.to_mapping()) == config
    with pytest.raises(ConfigError):
        load_mc_config(None, {"max_chains_per_terminal": 0})


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
