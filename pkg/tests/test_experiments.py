import math

import numpy as np
import pytest

from cyberepi.errors import ParameterError
from cyberepi.experiments import (
    ExperimentConfig,
    config_from_mapping,
    default_d_grid,
    default_eps_grid,
    load_config,
    run_cycle_experiment,
    run_damage_sweep,
    run_epsilon_sweep,
)
from cyberepi.params import ModelParams


def _read_csv(path):
    comments, header, rows = [], None, []
    for line in path.read_text().splitlines():
        if line.startswith("#"):
            comments.append(line)
        elif header is None:
            header = line.split(",")
        else:
            rows.append(line.split(","))
    return comments, header, rows


def _tiny_cfg(tmp_path, **overrides) -> ExperimentConfig:
    base = dict(
        name="tiny",
        families=["er"],
        mean_degrees=[6.0],
        n=60,
        params=ModelParams(),
        thetas=[0.2],
        damage_kind="constant",
        d_values=[0.3],
        realizations=5,
        base_seed=11,
        workers=2,
        out=str(tmp_path / "out.csv"),
    )
    base.update(overrides)
    return ExperimentConfig(**base)


# ----------------------------------------------------------- grids

def test_default_grids_match_declared_shapes():
    d = default_d_grid()
    assert len(d) == 41 and d[0] == 0.0 and d[-1] == 1.0
    eps = default_eps_grid()
    assert len(eps) == 40
    assert eps[0] == pytest.approx(0.001) and eps[-1] == pytest.approx(1.0)
    assert all(b > a for a, b in zip(eps, eps[1:]))


# ----------------------------------------------------------- cycle

def test_cycle_rows_conserve_n_and_end_healed(tmp_path):
    cfg = _tiny_cfg(tmp_path, realizations=10)
    path = run_cycle_experiment(cfg)
    comments, header, rows = _read_csv(path)
    assert header == ["t", "mean_Su", "mean_Sa", "mean_Iu", "mean_Ia", "mean_Ha"]
    for row in rows:
        total = sum(float(x) for x in row[1:])
        assert total == pytest.approx(60.0, abs=1e-6)
    assert float(rows[-1][5]) == pytest.approx(60.0, abs=1e-9)
    assert any("phases_per_run" in c for c in comments)
    assert any(c.startswith("# config:") for c in comments)


def test_cycle_frozen_dynamics_single_data_row(tmp_path):
    cfg = _tiny_cfg(
        tmp_path,
        params=ModelParams(tau=0, nu=0, mu0=0, gamma=0, rho0=0.05),
        realizations=1,
    )
    path = run_cycle_experiment(cfg)
    _, _, rows = _read_csv(path)
    assert len(rows) == 1  # immediate absorption: only the t=0 row
    assert rows[0][0] == "0"


def test_cycle_requires_single_point(tmp_path):
    with pytest.raises(ParameterError):
        run_cycle_experiment(_tiny_cfg(tmp_path, thetas=[0.2, 0.4]))
    with pytest.raises(ParameterError):
        run_cycle_experiment(_tiny_cfg(tmp_path, d_values=[0.1, 0.3]))
    with pytest.raises(ParameterError):
        run_cycle_experiment(_tiny_cfg(tmp_path, damage_kind="both"))


def test_cycle_reproducible_bytes(tmp_path):
    cfg = _tiny_cfg(tmp_path)
    first = run_cycle_experiment(cfg).read_bytes()
    second = run_cycle_experiment(cfg).read_bytes()
    assert first == second


# --------------------------------------------------------- sweep-d

def test_damage_sweep_rows_and_subthreshold_identity(tmp_path):
    cfg = _tiny_cfg(tmp_path, d_values=[0.05, 0.1, 0.15, 0.5], thetas=[0.2])
    path = run_damage_sweep(cfg)
    _, header, rows = _read_csv(path)
    assert header[:5] == ["family", "n", "mean_degree", "theta", "d"]
    assert len(rows) == 4
    for row in rows[:3]:  # d < theta: the identity D/N = d holds exactly
        assert float(row[5]) == float(row[4])
        assert float(row[6]) == 0.0
        assert float(row[7]) == 1.0
    assert {row[0] for row in rows} == {"er"}
    assert all(row[8] == "5" for row in rows)


def test_damage_sweep_grid_order_and_echo(tmp_path):
    cfg = _tiny_cfg(
        tmp_path,
        families=["er", "ba"],
        mean_degrees=[4.0, 6.0],
        thetas=[0.2, 0.6],
        d_values=[0.1, 0.9],
        realizations=2,
    )
    path = run_damage_sweep(cfg)
    comments, _, rows = _read_csv(path)
    assert len(rows) == 2 * 2 * 2 * 2
    # family-major, then degree, theta, d
    assert [r[0] for r in rows[:8]] == ["er"] * 8
    assert [r[0] for r in rows[8:]] == ["ba"] * 8
    assert '"families":["er","ba"]' in comments[1]


def test_damage_sweep_rejects_non_constant(tmp_path):
    with pytest.raises(ParameterError):
        run_damage_sweep(_tiny_cfg(tmp_path, damage_kind="logistic"))


def test_damage_sweep_reproducible_bytes(tmp_path):
    cfg = _tiny_cfg(tmp_path, d_values=[0.1, 0.4], realizations=3)
    first = run_damage_sweep(cfg).read_bytes()
    second = run_damage_sweep(cfg).read_bytes()
    assert first == second


# ------------------------------------------------------- sweep-eps

def test_epsilon_sweep_single_point(tmp_path):
    cfg = _tiny_cfg(
        tmp_path,
        damage_kind="logistic",
        epsilons=[0.1],
        realizations=1,
        include_reference=False,
    )
    path = run_epsilon_sweep(cfg)
    _, header, rows = _read_csv(path)
    assert len(rows) == 1
    assert rows[0][4] == "logistic"
    assert rows[0][-1] == "nan"
    assert header[-1] == "const_max_DN"


def test_epsilon_sweep_both_kinds_share_reference(tmp_path):
    cfg = _tiny_cfg(
        tmp_path,
        damage_kind="both",
        epsilons=[0.05, 0.5],
        reference_d=[0.3, 1.0],
        realizations=3,
    )
    path = run_epsilon_sweep(cfg)
    _, _, rows = _read_csv(path)
    assert len(rows) == 4
    kinds = [r[4] for r in rows]
    assert kinds == ["logistic", "logistic", "mutating", "mutating"]
    refs = {r[-1] for r in rows}
    assert len(refs) == 1 and "nan" not in refs


def test_epsilon_sweep_rejects_constant(tmp_path):
    with pytest.raises(ParameterError):
        run_epsilon_sweep(_tiny_cfg(tmp_path, damage_kind="constant"))


# ---------------------------------------------------------- config

def test_config_from_toml_round_trip(tmp_path):
    toml = tmp_path / "exp.toml"
    toml.write_text(
        """
name = "fig3-desk"

[graph]
families = ["er", "ba"]
mean_degrees = [6, 10, 14]
n = 500

[params]
tau = 0.0055
nu = 0.011
mu0 = 0.011
gamma = 0.03
rho0 = 0.01
thetas = [0.2, 0.4, 0.6]

[damage]
kind = "constant"
d = [0.0, 0.5, 1.0]

[run]
realizations = 200
base_seed = 42
workers = 2

[output]
path = "fig3.csv"
"""
    )
    cfg = load_config(toml)
    assert cfg.name == "fig3-desk"
    assert cfg.families == ["er", "ba"]
    assert cfg.mean_degrees == [6.0, 10.0, 14.0]
    assert cfg.thetas == [0.2, 0.4, 0.6]
    assert cfg.d_values == [0.0, 0.5, 1.0]
    assert cfg.realizations == 200
    assert cfg.base_seed == 42
    assert cfg.workers == 2
    assert cfg.out == "fig3.csv"
    assert cfg.params.tau == 0.0055


def test_config_defaults_and_scalars():
    cfg = config_from_mapping({"damage": {"kind": "logistic", "epsilon": 0.25}})
    assert cfg.damage_kind == "logistic"
    assert cfg.epsilons == [0.25]
    assert cfg.n == 500 and cfg.realizations == 200
    assert cfg.d_values == default_d_grid()


def test_config_validation():
    with pytest.raises(ParameterError):
        ExperimentConfig(damage_kind="bogus")
    with pytest.raises(ValueError):
        ExperimentConfig(families=["triangle"])
    with pytest.raises(ParameterError):
        ExperimentConfig(realizations=0)


def test_float_format_six_significant_digits(tmp_path):
    cfg = _tiny_cfg(tmp_path, d_values=[1.0 / 3.0], realizations=2)
    path = run_damage_sweep(cfg)
    _, _, rows = _read_csv(path)
    assert rows[0][4] == "0.333333"
    assert float(rows[0][5]) <= 1.0
