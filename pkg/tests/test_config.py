import numpy as np
import pytest

from fohybrid.config import config_from_dict, load_config
from fohybrid.errors import ConfigError, FOHybridError, exit_code_for, ModelFileError, SolverError, DataError


def test_defaults():
    cfg = load_config(None)
    assert cfg.generate.n == 2974 and cfg.split.n_train == 120
    assert cfg.gp.restarts == 8 and cfg.uq.n_samples == 1000
    assert cfg.model_file.endswith("model.json")


def test_relative_paths_resolve_against_file(tmp_path):
    p = tmp_path / "run.toml"
    p.write_text('out_dir = "out"\n[data]\npath = "d/x.csv"\n')
    cfg = load_config(p)
    assert cfg.out_dir == str(tmp_path / "out")
    assert cfg.data_path == str(tmp_path / "d" / "x.csv")


def test_seed_fans_out_and_overrides():
    cfg = config_from_dict({"seed": 7, "gp": {"seed": 2}})
    assert (cfg.generate.seed, cfg.split.seed, cfg.gp.seed, cfg.uq.seed) == (7, 7, 2, 7)


def test_correlation_pairs():
    cfg = config_from_dict({"uq": {"correlation": {"pairs": [["eps_psl", "tau", 0.5]]}}})
    assert cfg.uq.corr[5, 6] == 0.5 and cfg.uq.corr[6, 5] == 0.5
    with pytest.raises(ConfigError):
        config_from_dict({"uq": {"correlation": {"matrix": np.full((10, 10), 2.0).tolist()}}})


@pytest.mark.parametrize("raw", [
    {"bogus": 1},
    {"gp": {"restarts": 0}},
    {"generate": {"ranges": {"cd_in": [2.0, 1.0]}}},
    {"generate": {"residual": {"amplitude": 0.5}}},
    {"split": {"mode": "random"}},
    {"uq": {"n_samples": 1}},
    {"uq": {"cv": {"nope": 0.1}}},
    {"physics": {"B": -1}},
    {"data": {"units": {"jw": "parsecs"}}},
])
def test_invalid_configs_raise_config_error(raw):
    with pytest.raises(ConfigError):
        config_from_dict(raw)


def test_bad_toml(tmp_path):
    p = tmp_path / "bad.toml"
    p.write_text("seed = = 1")
    with pytest.raises(ConfigError):
        load_config(p)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.toml")


def test_hash_is_stable_and_sensitive():
    a = config_from_dict({"seed": 1})
    assert a.sha256() == config_from_dict({"seed": 1}).sha256()
    assert a.sha256() != config_from_dict({"seed": 2}).sha256()


def test_exit_codes():
    assert exit_code_for(ConfigError("x")) == 2
    assert exit_code_for(DataError("x")) == 3
    assert exit_code_for(SolverError("x")) == 4
    assert exit_code_for(ModelFileError("x")) == 6
    assert exit_code_for(FOHybridError("x")) == 1
