import pytest

from app.core.exceptions import ConfigError
from app.entities.experiment_config import ExperimentKind
from app.use_cases.services.config_parser import parse_config


def test_valid_theta_config():
    config = parse_config("kind=theta\nseed=42\nreplicas=10000\nhorizon=32\nradius=14")
    assert config.kind == ExperimentKind.theta
    assert (config.seed, config.replicas, config.horizon, config.radius) == (42, 10000, 32.0, 14)


def test_comments_and_blank_lines():
    config = parse_config("# theta batch\n\nkind = theta   # kind\nseed=1\n")
    assert config.seed == 1


def test_range_error_names_the_key():
    with pytest.raises(ConfigError) as info:
        parse_config("kind=theta\nreplicas=-1")
    assert any("replicas" in error and "line 2" in error for error in info.value.errors)


def test_duplicate_key_cites_both_lines():
    with pytest.raises(ConfigError) as info:
        parse_config("kind=theta\nseed=1\n\nseed=2")
    assert "duplicate key 'seed' on lines 2 and 4" in info.value.errors


def test_all_errors_are_collected():
    with pytest.raises(ConfigError) as info:
        parse_config("kind=theta\ncolour=blue\nradius=big\nnot a pair")
    errors = info.value.errors
    assert len(errors) == 3
    assert any("unknown key 'colour'" in error for error in errors)
    assert any(error.startswith("radius") for error in errors)
    assert any("expected key=value" in error for error in errors)


def test_overrides_win():
    config = parse_config("kind=alpha\nseed=3", {"seed": "9", "distances": "2,4"})
    assert config.seed == 9
    assert config.distances == (2, 4)


def test_missing_kind():
    with pytest.raises(ConfigError):
        parse_config("seed=3")


@pytest.mark.parametrize("line", ["p_grid=0.2,1.5", "r_schedule=8,4", "sign=0", "epsilon=0.7", "rule=farthest",
                                  "miss_tolerance=2"])
def test_invalid_values(line):
    with pytest.raises(ConfigError):
        parse_config(f"kind=theta\n{line}")


def test_commutation_grid_defaults():
    config = parse_config("kind=commutation")
    assert config.densities == (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
    assert parse_config("kind=commutation\np=0.3").densities == (0.3,)


def test_audit_rule_selection():
    config = parse_config("kind=audit\nrule=identity\nmiss_tolerance=0.05")
    assert (config.rule, config.miss_tolerance) == ("identity", 0.05)
    assert parse_config("kind=audit").rule is None
