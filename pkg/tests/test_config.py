import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from llgbubble.config import SCHEMA, ConfigError, ExperimentConfig


def test_defaults_validate():
    cfg = ExperimentConfig()
    cfg.validate()
    assert cfg["params.beta"] == 1.0 and cfg["stop.t_max"] is None


@given(st.floats(0.0, 1.0), st.integers(5, 500), st.floats(1e-8, 1.0), st.sampled_from(["dr", "r_dr"]))
def test_text_round_trip(alpha, n_nodes, tol, weight):
    cfg = ExperimentConfig().with_values(params__alpha=alpha, mesh__n_nodes=n_nodes, integ__tol=tol,
                                         monitor__integral_weight=weight)
    back = ExperimentConfig.from_text(cfg.to_text())
    assert back.values == cfg.values


def test_comments_and_blank_lines():
    cfg = ExperimentConfig.from_text("# header\n\nparams.alpha = 1  # trailing\nstop.t_max = 0.5\n")
    assert cfg["params.alpha"] == 1.0 and math.isclose(cfg["stop.t_max"], 0.5)


@pytest.mark.parametrize("text", ["nokey\n", "params.gamma = 1\n", "mesh.n_nodes = many\n",
                                  "params.alpha = 0\nparams.beta = 0\n", "mesh.n_nodes = 3\n",
                                  "init.kind = spiral\n", "integ.energy_check = maybe\n",
                                  "stop.grad_inf = none\nstop.max_steps = none\nstop.eq_tol = none\n"])
def test_invalid_configs(text):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_text(text)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        ExperimentConfig.load(tmp_path / "absent.cfg")


def test_unknown_override():
    with pytest.raises(ConfigError):
        ExperimentConfig().with_values(params__nope=1)


@pytest.mark.parametrize("kind", ["theta_linear", "theta_linear_3comp", "gamma_family", "degree1_north",
                                  "degree1_generic", "constant"])
def test_every_initial_kind_builds(kind):
    st_ = ExperimentConfig().with_values(init__kind=kind, mesh__n_nodes=21).initial_state()
    assert len(st_.mesh) == 21


def test_schema_is_grouped():
    assert all("." in k for k in SCHEMA)
