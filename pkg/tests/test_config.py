import pytest

from rsscma.config import ConfigError, SimConfig, config_from_dict, load_config


def test_yaml_round_trip(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text(
        "schema_version: 1\nscenario: uncoded-rs-scma\nalpha: 0.25\nN: 4\nebn0_db: [0, 5]\n"
        "channel: awgn\nsic: hard\nseed: 7\n"
    )
    cfg = load_config(path)
    assert cfg.alpha == 0.25 and cfg.ebn0_db == (0.0, 5.0) and cfg.sic == "hard" and cfg.seed == 7
    assert config_from_dict(cfg.to_dict()) == cfg


def test_scalar_sweep_is_accepted():
    assert config_from_dict({"schema_version": 1, "ebn0_db": 3}).ebn0_db == (3.0,)


def test_digest_is_stable_and_sensitive():
    a, b = SimConfig(seed=1), SimConfig(seed=1)
    assert a.digest() == b.digest() and len(a.digest()) == 64
    assert a.digest() != a.replace(seed=2).digest()


@pytest.mark.parametrize(
    "d",
    [
        {"scenario": "uncoded-rs-scma"},
        {"schema_version": 2},
        {"schema_version": 1, "bogus": 1},
        {"schema_version": 1, "scenario": "mimo"},
        {"schema_version": 1, "channel": "rician"},
        {"schema_version": 1, "sic": "partial"},
        {"schema_version": 1, "receiver": "rx3"},
        {"schema_version": 1, "ebn0_db": []},
        {"schema_version": 1, "min_errors": 0},
        {"schema_version": 1, "alpha": 0.3, "N": 4},
        {"schema_version": 1, "alpha": 1.5},
        {"schema_version": 1, "pc": 0.0},
        {"schema_version": 1, "noise_var": -1.0},
        {"schema_version": 1, "seed": -1},
        {"schema_version": 1, "N": 2.5},
    ],
)
def test_invalid_configs(d):
    with pytest.raises(ConfigError):
        config_from_dict(d)


def test_non_mapping_rejected(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError):
        load_config(path)
    path.write_text("a: [1,\n")
    with pytest.raises(ConfigError):
        load_config(path)


def test_missing_file_is_io_error(tmp_path):
    with pytest.raises(OSError):
        load_config(tmp_path / "absent.yaml")
