import numpy as np
import pytest

from magnetoframe.config import ExperimentConfig, apply_overrides, load_config, parse_angles, parse_config
from magnetoframe.errors import ConfigError

FULL = """\
[space]
kind = berger
kappa = 4
tau = 1

[integrator]
step = 5e-4
t_end = 0.5

[surface]
n_t = 33
n_s = 9
s_min = -0.5
s_max = 0.5
max_refinements = 1

[tolerances]
tau = 1e-7
h = 2e-3
k = 1e-6

[sampling]
theta0 = pi/6, pi/3
base_points = 0, 0, 0; 0.1, -0.2, 0
grid = 2
extent = 0.5
random = 3
seed = 9

[output]
dir = results
"""


def test_full_config_round_trip():
    cfg = parse_config(FULL)
    assert cfg.space.kind == "berger" and cfg.space.kappa == 4.0 and cfg.space.tau == 1.0
    assert cfg.integrator.step == 5e-4 and cfg.t_end == 0.5
    assert (cfg.n_t, cfg.n_s, cfg.s_range, cfg.max_refinements) == (33, 9, (-0.5, 0.5), 1)
    assert (cfg.tol_tau, cfg.tol_H, cfg.tol_K) == (1e-7, 2e-3, 1e-6)
    assert np.allclose(cfg.theta0, [np.pi / 6, np.pi / 3])
    assert cfg.base_points == ((0.0, 0.0, 0.0), (0.1, -0.2, 0.0))
    assert cfg.samples.random == 3 and cfg.samples.seed == 9
    assert cfg.output_dir() == "results"
    p = cfg.pipeline()
    assert p.n_t == 33 and p.tol_H == 2e-3 and p.samples.grid == 2


def test_empty_config_gives_defaults():
    assert parse_config("") == ExperimentConfig()


def test_kind_defaults_fill_missing_parameters():
    cfg = parse_config("[space]\nkind = negbase\n")
    assert cfg.space.kappa == -1.0 and cfg.space.tau == 0.5


@pytest.mark.parametrize("text, fragment", [
    ("[space]\nkind = heisenberg\ncolour = red\n", ":3: unknown key space.colour"),
    ("[spaces]\nkind = heisenberg\n", "unknown section [spaces]"),
    ("[integrator]\nstep = fast\n", ":2: integrator.step"),
    ("[integrator]\nstep = -1\n", "integrator.step must be > 0"),
    ("[sampling]\ntheta0 = 0\n", "sampling.theta0"),
    ("[sampling]\ntheta0 = 2\n", "sampling.theta0"),
    ("[sampling]\nbase_points = 0, 0\n", "needs 3 coordinates"),
    ("[surface]\nn_t = 4\n", "n_t and n_s"),
    ("[space]\nkind = klein\n", "unknown kind"),
    ("[space]\nkind = berger\nkappa = -1\n", "berger requires kappa > 0"),
    ("[tolerances]\nh = 0\n", "tol_H must be > 0"),
    ("[sampling]\ntheta0 = __import__('os')\n", "not a number"),
    ("not an ini file", "my.ini"),
])
def test_config_errors(text, fragment):
    with pytest.raises(ConfigError) as info:
        parse_config(text, source="my.ini")
    assert fragment in str(info.value)


def test_load_config(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("[space]\nkind = euclidean\n")
    assert load_config(path).space.kind == "euclidean"
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.ini")


def test_overrides():
    cfg = apply_overrides(ExperimentConfig(), space="berger", tau=0.5, theta0=(0.3,), out="x", seed=4, tol_h=1e-4)
    assert cfg.space.kind == "berger" and cfg.space.kappa == 4.0 and cfg.space.tau == 0.5
    assert cfg.theta0 == (0.3,) and cfg.out == "x" and cfg.seed == 4 and cfg.tol_H == 1e-4
    with pytest.raises(ConfigError):
        apply_overrides(ExperimentConfig(), space="berger", kappa=-2.0)


def test_output_dir_env_fallback(monkeypatch):
    monkeypatch.setenv("MAGNETOFRAME_OUT", "/tmp/elsewhere")
    assert ExperimentConfig().output_dir() == "/tmp/elsewhere"
    assert ExperimentConfig(out="here").output_dir() == "here"
    monkeypatch.delenv("MAGNETOFRAME_OUT")
    assert ExperimentConfig().output_dir() == "."


def test_parse_angles():
    assert np.allclose(parse_angles("pi/4, 0.5,2*pi/5"), [np.pi / 4, 0.5, 2 * np.pi / 5])
