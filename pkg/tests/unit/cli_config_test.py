import pytest

from ballistic_lab.cli import build_parser, commands
from ballistic_lab.cli.config import RunConfig
from ballistic_lab.errors import InvalidParameterError, SchemaError
from ballistic_lab.sampler import SamplerMode


def _sample_cfg(**kw):
    data = {"command": "sample", "mode": "geometric", "value": 0.01, "out": "s.jsonl"}
    data.update(kw)
    return RunConfig(**data)


def test_valid_sample_config():
    cfg = _sample_cfg(N=20, replicas=3, seed=5).validate()
    params = cfg.sampler_params()
    assert params.mode == SamplerMode.GEOMETRIC
    assert (params.N, params.replicas, params.seed) == (20, 3, 5)
    assert cfg.sampler_params(replicas=9).replicas == 9


@pytest.mark.parametrize(
    "kw",
    [
        {"d": 0},
        {"N": -1},
        {"replicas": -1},
        {"workers": 0},
        {"window": 11},
        {"format": "xml"},
        {"checkpoint": 0},
        {"T": -1.0},
        {"mode": None},
        {"mode": "uniform"},
        {"out": None},
        {"value": 1.5},
    ],
)
def test_invalid_sample_configs(kw):
    with pytest.raises(InvalidParameterError):
        _sample_cfg(**kw).validate()


def test_simulate_needs_exactly_one_horizon():
    with pytest.raises(InvalidParameterError):
        RunConfig(command="simulate", out="o.csv").validate()
    with pytest.raises(InvalidParameterError):
        RunConfig(command="simulate", out="o.csv", steps=3, T=1.0).validate()
    with pytest.raises(InvalidParameterError):
        RunConfig(command="simulate", out="o.csv", steps=3, resume=True).validate()
    RunConfig(command="simulate", out="o.csv", steps=3).validate()


def test_suite_and_kind_checked():
    with pytest.raises(InvalidParameterError):
        RunConfig(command="test", suite="speed").validate()
    with pytest.raises(InvalidParameterError):
        RunConfig(command="stats", kind="entropy").validate()
    with pytest.raises(InvalidParameterError):
        RunConfig(command="plot", out="fig.png").validate()


def test_dict_round_trip():
    cfg = _sample_cfg(d=2, N=7, window=3, checkpoint=10)
    assert RunConfig.from_dict(cfg.to_dict()) == cfg


def test_from_dict_rejects_unknown_keys():
    data = _sample_cfg().to_dict()
    data["colour"] = "blue"
    with pytest.raises(SchemaError):
        RunConfig.from_dict(data)


def test_from_args():
    args = build_parser().parse_args(
        ["sample", "--dim", "2", "--box-n", "30", "--mean-time", "4", "--out", "x.jsonl"]
    )
    cfg = RunConfig.from_args(args)
    assert (cfg.command, cfg.d, cfg.N) == ("sample", 2, 30)
    assert (cfg.mode, cfg.value) == ("exponential", 4.0)
    assert (cfg.replicas, cfg.replica_count, cfg.quick) == (None, 1, False)


def test_sampler_flags_are_exclusive():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["sample", "--p", "0.1", "--cesaro-t", "2"])


def test_explicit_replicas_override_suite_presets():
    args = build_parser().parse_args(["test", "cluster", "--replicas", "1"])
    cfg = RunConfig.from_args(args).validate()
    assert cfg.replicas == 1
    assert commands._replicas(cfg, 10000, 2000) == 1


def test_suite_presets_follow_quick_flag():
    full = RunConfig(command="test", suite="growth").validate()
    quick = RunConfig(command="test", suite="growth", quick=True).validate()
    assert commands._replicas(full, 100000, 20000) == 100000
    assert commands._replicas(quick, 100000, 20000) == 20000
    assert commands._replicas(quick, 2000) == 2000
    args = build_parser().parse_args(["test", "growth", "--quick"])
    assert RunConfig.from_args(args).quick is True


def test_suite_help_explains_cluster_tail_constant(capsys):
    with pytest.raises(SystemExit):
        build_parser().parse_args(["test", "--help"])
    text = " ".join(capsys.readouterr().out.split())
    assert "c = 1.5" in text
    assert "c = 8" in text
    assert "--quick" in text
